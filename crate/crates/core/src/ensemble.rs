//! Infinite-temperature "site 1 up" ensemble and ensemble-averaged
//! polarization curves.
//!
//! The ensemble is realized either exactly, by enumerating every Ising
//! configuration of the other `2m - 1` spins, or stochastically, by random
//! phase superpositions of all those configurations. Curves are rescaled
//! polarizations `2 · mean ⟨S^z_site⟩`, so an untouched excitation reads 1.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{local_sz, site_mask, StateVector};
use crate::model::LadderSpec;
use crate::propagate::{evolve, Propagator, SpectralPropagator};

/// Cap on `2m` for exact-trace enumeration.
pub const EXACT_TRACE_SITE_CAP: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EnsembleMode {
    ExactTrace,
    RandomPhase,
}

impl FromStr for EnsembleMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "exact" | "exacttrace" | "trace" => Ok(EnsembleMode::ExactTrace),
            "random" | "randomphase" | "phase" => Ok(EnsembleMode::RandomPhase),
            other => Err(format!("unknown ensemble {other:?}; expected exact or random")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub mode: EnsembleMode,
    /// Number of random-phase states; ignored for the exact trace.
    pub n_realizations: usize,
    pub seed: u64,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        Self::exact()
    }
}

impl EnsembleSpec {
    pub fn exact() -> Self {
        Self {
            mode: EnsembleMode::ExactTrace,
            n_realizations: 1,
            seed: 0,
        }
    }

    pub fn random_phase(n_realizations: usize, seed: u64) -> Self {
        Self {
            mode: EnsembleMode::RandomPhase,
            n_realizations,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_realizations == 0 {
            return Err(Error::Config(vec![
                "ensemble.n_realizations must be at least 1".to_string(),
            ]));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Observable {
    /// Forward autocorrelation of the site-1 polarization.
    P11,
    /// Polarization recovered after the partial time reversal.
    MLE,
    /// One-body survival probability.
    SP,
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Observable::P11 => "P11",
            Observable::MLE => "MLE",
            Observable::SP => "SP",
        })
    }
}

impl FromStr for Observable {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "P11" => Ok(Observable::P11),
            "MLE" => Ok(Observable::MLE),
            "SP" => Ok(Observable::SP),
            other => Err(format!("unknown observable {other:?}")),
        }
    }
}

/// A sampled curve. Times are in units of `hbar / J_E`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub observable: Observable,
    /// Id of the run manifest this curve belongs to.
    pub meta: Option<String>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>, observable: Observable) -> Self {
        assert_eq!(times.len(), values.len(), "times and values differ in length");
        Self {
            times,
            values,
            observable,
            meta: None,
        }
    }

    pub fn with_meta(mut self, manifest_id: impl Into<String>) -> Self {
        self.meta = Some(manifest_id.into());
        self
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    /// Largest pointwise difference; both curves must share a time grid.
    pub fn max_abs_diff(&self, other: &TimeSeries) -> f64 {
        assert_eq!(self.len(), other.len(), "curves have different lengths");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Samples with `lo <= t <= hi`.
    pub fn window(&self, lo: f64, hi: f64) -> TimeSeries {
        let (times, values) = self.iter().filter(|(t, _)| *t >= lo && *t <= hi).unzip();
        TimeSeries {
            times,
            values,
            observable: self.observable,
            meta: self.meta.clone(),
        }
    }

    /// `# manifest=<id> observable=<name>`, a `t,value` header, then one row per
    /// sample. Doubles are written in shortest round-trip form.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# manifest={} observable={}",
            self.meta.as_deref().unwrap_or("none"),
            self.observable
        )?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["t", "value"])?;
        for (t, v) in self.iter() {
            csv.write_record([t.to_string(), v.to_string()])?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(mut r: R, path: &str) -> Result<Self> {
        let bad = |reason: String| Error::Series {
            path: path.to_string(),
            reason,
        };
        let mut header = String::new();
        r.read_line(&mut header)?;
        let header = header
            .trim()
            .strip_prefix('#')
            .ok_or_else(|| bad("missing '# manifest=' header line".into()))?;
        let mut meta = None;
        let mut observable = None;
        for field in header.split_whitespace() {
            match field.split_once('=') {
                Some(("manifest", id)) if id != "none" => meta = Some(id.to_string()),
                Some(("observable", name)) => observable = Some(name.parse().map_err(bad)?),
                _ => {}
            }
        }
        let observable = observable.ok_or_else(|| bad("header lacks observable=".into()))?;
        let mut rdr = csv::Reader::from_reader(r);
        let mut times = Vec::new();
        let mut values = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(bad(format!("expected 2 columns, found {}", rec.len())));
            }
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")));
            times.push(parse(&rec[0])?);
            values.push(parse(&rec[1])?);
        }
        Ok(TimeSeries {
            times,
            values,
            observable,
            meta,
        })
    }
}

/// Basis codes of every product state with site 1 up, increasing.
pub fn site1_up_codes(n_sites: usize) -> impl Iterator<Item = usize> {
    (0..1usize << (n_sites - 1)).map(|rest| (rest << 1) | 1)
}

pub(crate) fn check_trace_cap(n_sites: usize) -> Result<()> {
    if n_sites > EXACT_TRACE_SITE_CAP {
        return Err(Error::DimensionCap {
            what: "exact trace (use the random-phase ensemble instead)",
            spins: n_sites,
            cap: EXACT_TRACE_SITE_CAP,
        });
    }
    Ok(())
}

/// Every Ising product state with site 1 up: `2^(2m-1)` states.
pub fn exact_trace_states(spec: &LadderSpec) -> Result<impl Iterator<Item = StateVector>> {
    spec.validate()?;
    let n = spec.n_sites();
    check_trace_cap(n)?;
    Ok(site1_up_codes(n).map(move |code| StateVector::basis(n, code)))
}

/// Generator for one realization: keyed on `(seed, realization)` so draws do
/// not depend on evaluation order.
pub fn realization_rng(seed: u64, realization: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(realization);
    rng
}

/// `|↑₁⟩ ⊗ Σ_r e^{iφ_r} |β_r⟩ / √(2^(2m-1))` with independent uniform phases.
pub fn random_phase_state(spec: &LadderSpec, seed: u64, realization: u64) -> StateVector {
    random_phase_state_sites(spec.n_sites(), seed, realization)
}

pub fn random_phase_state_sites(n_sites: usize, seed: u64, realization: u64) -> StateVector {
    let mut rng = realization_rng(seed, realization);
    let mut state = StateVector::zeros(n_sites);
    let weight = (0.5f64).powi(n_sites as i32 - 1).sqrt();
    let amps = state.amplitudes_mut();
    for code in site1_up_codes(n_sites) {
        let phi = rng.gen_range(0.0..std::f64::consts::TAU);
        amps[code] = Complex64::from_polar(weight, phi);
    }
    state
}

/// Ensemble members for a spec.
pub fn ensemble_states(spec: &LadderSpec, ens: &EnsembleSpec) -> Result<Vec<StateVector>> {
    ens.validate()?;
    match ens.mode {
        EnsembleMode::ExactTrace => Ok(exact_trace_states(spec)?.collect()),
        EnsembleMode::RandomPhase => Ok((0..ens.n_realizations as u64)
            .map(|r| random_phase_state(spec, ens.seed, r))
            .collect()),
    }
}

/// How each ensemble member is propagated to a sample time.
#[derive(Debug, Clone, Copy)]
pub enum Recipe<'a> {
    /// `exp(-i H t)`; sample times are `t`.
    Forward(&'a Propagator),
    /// `exp(-i H_b t_R) exp(-i H_f t_R)`; sample times are the total `2 t_R`.
    Echo {
        forward: &'a Propagator,
        backward: &'a Propagator,
    },
}

impl Recipe<'_> {
    pub fn observable(&self) -> Observable {
        match self {
            Recipe::Forward(_) => Observable::P11,
            Recipe::Echo { .. } => Observable::MLE,
        }
    }
}

/// Neumaier-compensated sum, in iteration order.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::Config(vec!["sample times must be finite and non-negative".into()]));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Config(vec!["sample times must be non-decreasing".into()]));
    }
    Ok(())
}

/// `⟨S^z_site⟩` of one member at every sample time.
fn member_curve(state: &StateVector, recipe: &Recipe, times: &[f64], site: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(times.len());
    let mut current = state.clone();
    let mut t_prev = 0.0;
    match recipe {
        Recipe::Forward(prop) => {
            for &t in times {
                if t > t_prev {
                    current = evolve(prop, &current, t - t_prev)?;
                    t_prev = t;
                }
                out.push(local_sz(&current, site)?);
            }
        }
        Recipe::Echo { forward, backward } => {
            for &t in times {
                let t_r = t / 2.0;
                if t_r > t_prev {
                    current = evolve(forward, &current, t_r - t_prev)?;
                    t_prev = t_r;
                }
                let echoed = if t_r > 0.0 {
                    evolve(backward, &current, t_r)?
                } else {
                    current.clone()
                };
                out.push(local_sz(&echoed, site)?);
            }
        }
    }
    Ok(out)
}

/// `values[k] = 2 · mean_members ⟨S^z_site(times[k])⟩`, evolving each member
/// on its own. Members are processed in parallel and reduced in index order.
pub fn polarization_curve(
    states: &[StateVector],
    recipe: &Recipe,
    times: &[f64],
    site: usize,
) -> Result<TimeSeries> {
    if states.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    check_times(times)?;
    let per_member: Vec<Vec<f64>> = states
        .par_iter()
        .map(|s| member_curve(s, recipe, times, site))
        .collect::<Result<_>>()?;
    let n = states.len() as f64;
    let values = (0..times.len())
        .map(|k| 2.0 * compensated_sum(per_member.iter().map(|c| c[k])) / n)
        .collect();
    Ok(TimeSeries::new(times.to_vec(), values, recipe.observable()))
}

/// Row indices (within a sector) of codes with `site` up.
fn up_rows(codes: &[usize], site: usize) -> Vec<usize> {
    let mask = site_mask(site);
    codes
        .iter()
        .enumerate()
        .filter(|(_, &c)| c & mask != 0)
        .map(|(i, _)| i)
        .collect()
}

fn select_rows(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}

/// Per-sector data of the exact-trace kernel.
struct TraceBlock {
    /// Backward eigenvector rows restricted to site-up codes (`u × d`).
    back_up: DMatrix<f64>,
    /// Forward eigenvector rows restricted to site-up codes, transposed (`d × u`).
    fwd_up_t: DMatrix<f64>,
    /// `V_b^T V_f`, or `None` for a pure forward evolution.
    overlap: Option<DMatrix<f64>>,
    e_fwd: Vec<f64>,
    e_back: Vec<f64>,
}

/// Exact-trace curve computed from sector eigendecompositions without
/// enumerating states: the trace over site-up inputs and site-up outputs of
/// `|⟨j|W(t)|r⟩|²` is a Frobenius norm of a sub-block of `W(t)`.
///
/// Equivalent to `polarization_curve` over `exact_trace_states` for site 1.
pub fn exact_trace_curve_spectral(
    forward: &SpectralPropagator,
    backward: Option<&SpectralPropagator>,
    n_sites: usize,
    times: &[f64],
    site: usize,
) -> Result<TimeSeries> {
    check_trace_cap(n_sites)?;
    check_times(times)?;
    if site == 0 || site > n_sites {
        return Err(Error::SiteOutOfRange { site, n_sites });
    }
    let mut blocks = Vec::new();
    for (k, f) in forward.sectors().iter().enumerate() {
        let rows = up_rows(&f.codes, site);
        if rows.is_empty() {
            continue;
        }
        let fwd_up = select_rows(&f.vectors, &rows);
        let block = match backward {
            None => TraceBlock {
                back_up: fwd_up.clone(),
                fwd_up_t: fwd_up.transpose(),
                overlap: None,
                e_fwd: f.energies.iter().copied().collect(),
                e_back: Vec::new(),
            },
            Some(bw) => {
                let b = &bw.sectors()[k];
                debug_assert_eq!(b.codes, f.codes);
                TraceBlock {
                    back_up: select_rows(&b.vectors, &rows),
                    fwd_up_t: fwd_up.transpose(),
                    overlap: Some(b.vectors.tr_mul(&f.vectors)),
                    e_fwd: f.energies.iter().copied().collect(),
                    e_back: b.energies.iter().copied().collect(),
                }
            }
        };
        blocks.push(block);
    }
    let n_members = (1u64 << (n_sites - 1)) as f64;
    let values: Vec<f64> = times
        .par_iter()
        .map(|&t| {
            let parts = blocks.iter().map(|b| trace_block_weight(b, t));
            2.0 * compensated_sum(parts) / n_members - 1.0
        })
        .collect();
    let observable = if backward.is_some() {
        Observable::MLE
    } else {
        Observable::P11
    };
    Ok(TimeSeries::new(times.to_vec(), values, observable))
}

/// `Σ |W_up|²` for one sector at total time `t`.
fn trace_block_weight(b: &TraceBlock, t: f64) -> f64 {
    let d = b.e_fwd.len();
    match &b.overlap {
        None => {
            // W_up = A diag(e^{-iEt}) A^T with A = back_up
            let (c, s): (Vec<f64>, Vec<f64>) =
                b.e_fwd.iter().map(|e| { let (s, c) = (e * t).sin_cos(); (c, s) }).unzip();
            let a = &b.back_up;
            let ac = DMatrix::from_fn(a.nrows(), d, |i, k| a[(i, k)] * c[k]);
            let as_ = DMatrix::from_fn(a.nrows(), d, |i, k| a[(i, k)] * s[k]);
            let wr = &ac * &b.fwd_up_t;
            let wi = &as_ * &b.fwd_up_t;
            wr.norm_squared() + wi.norm_squared()
        }
        Some(o) => {
            let t_r = t / 2.0;
            let pf: Vec<Complex64> = b.e_fwd.iter().map(|e| Complex64::from_polar(1.0, -e * t_r)).collect();
            let pb: Vec<Complex64> = b.e_back.iter().map(|e| Complex64::from_polar(1.0, -e * t_r)).collect();
            let mut yr = DMatrix::zeros(d, d);
            let mut yi = DMatrix::zeros(d, d);
            for l in 0..d {
                for k in 0..d {
                    let z = pb[k] * pf[l] * o[(k, l)];
                    yr[(k, l)] = z.re;
                    yi[(k, l)] = z.im;
                }
            }
            let zr = &yr * &b.fwd_up_t;
            let zi = &yi * &b.fwd_up_t;
            let wr = &b.back_up * zr;
            let wi = &b.back_up * zi;
            wr.norm_squared() + wi.norm_squared()
        }
    }
}

/// Ensemble-averaged curve at `site`, choosing the exact-trace kernel when
/// both stages are spectral and the ensemble is the exact trace.
pub fn ensemble_curve(
    spec: &LadderSpec,
    ens: &EnsembleSpec,
    recipe: &Recipe,
    times: &[f64],
    site: usize,
) -> Result<TimeSeries> {
    if ens.mode == EnsembleMode::ExactTrace {
        check_trace_cap(spec.n_sites())?;
        let kernel = match recipe {
            Recipe::Forward(p) => p.spectral().map(|f| (f, None)),
            Recipe::Echo { forward, backward } => forward
                .spectral()
                .zip(backward.spectral())
                .map(|(f, b)| (f, Some(b))),
        };
        if let Some((f, b)) = kernel {
            return exact_trace_curve_spectral(f, b, spec.n_sites(), times, site);
        }
    }
    let states = ensemble_states(spec, ens)?;
    polarization_curve(&states, recipe, times, site)
}
