//! Time evolution `exp(-i H t)` (with `hbar = 1`).
//!
//! Two routes: exact spectral decomposition of every magnetization sector,
//! and symmetric Trotter-Suzuki splittings built from exact two-site gates.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{magnetization_sectors, site_mask, StateVector};
use crate::linalg::symmetric_eigen;
use crate::model::{HamiltonianTerms, Stage, TermKind};

/// Cap on `2m` for the spectral route.
pub const SPECTRAL_SITE_CAP: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    ExactSpectral,
    Trotter2,
    Trotter4,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::ExactSpectral => "exact",
            Method::Trotter2 => "trotter2",
            Method::Trotter4 => "trotter4",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "exact" | "exactspectral" | "spectral" => Ok(Method::ExactSpectral),
            "trotter2" => Ok(Method::Trotter2),
            "trotter4" => Ok(Method::Trotter4),
            other => Err(format!(
                "unknown method {other:?}; expected exact, trotter2 or trotter4"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub method: Method,
    /// Trotter step, in units of `hbar / J_E`.
    pub dt: f64,
    pub t_max: f64,
    /// Trotter steps between recorded samples.
    pub sample_stride: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            method: Method::ExactSpectral,
            dt: 0.01,
            t_max: 500.0,
            sample_stride: 100,
        }
    }
}

impl EvolutionConfig {
    pub fn exact() -> Self {
        Self::default()
    }

    pub fn trotter4(dt: f64) -> Self {
        Self {
            method: Method::Trotter4,
            dt,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            errs.push(format!("evolution.dt = {} must be positive", self.dt));
        }
        if !(self.t_max >= 0.0 && self.t_max.is_finite()) {
            errs.push(format!("evolution.t_max = {} must be non-negative", self.t_max));
        }
        if self.sample_stride == 0 {
            errs.push("evolution.sample_stride must be at least 1".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    /// Sampling interval of linear time grids.
    pub fn sample_interval(&self) -> f64 {
        self.dt * self.sample_stride as f64
    }

    /// `0, Δ, 2Δ, …` up to `t_max` with `Δ = dt · sample_stride`.
    pub fn time_grid(&self) -> Vec<f64> {
        let step = self.sample_interval();
        let n = (self.t_max / step + 1e-9).floor() as usize;
        (0..=n).map(|k| k as f64 * step).collect()
    }
}

/// Eigen-decomposition of one magnetization block.
#[derive(Debug, Clone)]
pub struct SectorSpectrum {
    /// Basis codes spanned by the block, increasing.
    pub codes: Vec<usize>,
    pub energies: DVector<f64>,
    /// Eigenvectors as columns, rows indexed like `codes`.
    pub vectors: DMatrix<f64>,
}

impl SectorSpectrum {
    pub fn dim(&self) -> usize {
        self.codes.len()
    }
}

#[derive(Debug, Clone)]
pub struct SpectralPropagator {
    n_sites: usize,
    sectors: Vec<SectorSpectrum>,
}

impl SpectralPropagator {
    pub fn new(terms: &HamiltonianTerms) -> Result<Self> {
        if terms.n_sites > SPECTRAL_SITE_CAP {
            return Err(Error::DimensionCap {
                what: "exact spectral propagation",
                spins: terms.n_sites,
                cap: SPECTRAL_SITE_CAP,
            });
        }
        let sectors = magnetization_sectors(terms.n_sites)
            .into_iter()
            .map(|codes| diagonalize_block(terms, codes))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            n_sites: terms.n_sites,
            sectors,
        })
    }

    pub fn sectors(&self) -> &[SectorSpectrum] {
        &self.sectors
    }

    pub fn energies(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self
            .sectors
            .iter()
            .flat_map(|s| s.energies.iter().copied())
            .collect();
        e.sort_by(f64::total_cmp);
        e
    }

    fn evolve(&self, state: &StateVector, t: f64) -> StateVector {
        let mut out = StateVector::zeros(self.n_sites);
        let src = state.amplitudes();
        let dst = out.amplitudes_mut();
        for s in &self.sectors {
            let d = s.dim();
            let re = DVector::from_iterator(d, s.codes.iter().map(|&c| src[c].re));
            let im = DVector::from_iterator(d, s.codes.iter().map(|&c| src[c].im));
            if re.iter().chain(im.iter()).all(|x| *x == 0.0) {
                continue;
            }
            let cr = s.vectors.tr_mul(&re);
            let ci = s.vectors.tr_mul(&im);
            let mut pr = DVector::zeros(d);
            let mut pi = DVector::zeros(d);
            for k in 0..d {
                let (sin, cos) = (s.energies[k] * t).sin_cos();
                // (cr + i ci) e^{-iEt}
                pr[k] = cr[k] * cos + ci[k] * sin;
                pi[k] = ci[k] * cos - cr[k] * sin;
            }
            let nr = &s.vectors * pr;
            let ni = &s.vectors * pi;
            for (k, &c) in s.codes.iter().enumerate() {
                dst[c] = Complex64::new(nr[k], ni[k]);
            }
        }
        out
    }
}

fn diagonalize_block(terms: &HamiltonianTerms, codes: Vec<usize>) -> Result<SectorSpectrum> {
    let d = codes.len();
    let index: HashMap<usize, usize> = codes.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut h = DMatrix::<f64>::zeros(d, d);
    for t in &terms.terms {
        let (ma, mb) = (site_mask(t.site_a), site_mask(t.site_b));
        for (col, &code) in codes.iter().enumerate() {
            let aligned = ((code & ma) == 0) == ((code & mb) == 0);
            match t.kind {
                TermKind::XYBond if !aligned => {
                    let row = index[&(code ^ (ma | mb))];
                    h[(row, col)] += t.amplitude;
                }
                TermKind::XYBond => {}
                TermKind::ZZBond => {
                    h[(col, col)] += t.amplitude * if aligned { 0.25 } else { -0.25 };
                }
            }
        }
    }
    let (energies, vectors) = symmetric_eigen(&h)?;
    Ok(SectorSpectrum {
        codes,
        energies,
        vectors,
    })
}

/// Exact two-site gate `exp(-i τ h)` for `h = xy (S+S- + S-S+) + zz S^z S^z`.
#[derive(Debug, Clone, Copy)]
struct Gate {
    mask_a: usize,
    mask_b: usize,
    aligned: Complex64,
    anti_cos: Complex64,
    anti_sin: Complex64,
}

impl Gate {
    fn new(mask_a: usize, mask_b: usize, xy: f64, zz: f64, tau: f64) -> Self {
        let aligned = Complex64::from_polar(1.0, -tau * zz / 4.0);
        let anti = Complex64::from_polar(1.0, tau * zz / 4.0);
        let (sin, cos) = (tau * xy).sin_cos();
        Self {
            mask_a,
            mask_b,
            aligned,
            anti_cos: anti * cos,
            anti_sin: anti * Complex64::new(0.0, -sin),
        }
    }

    fn apply(&self, psi: &mut [Complex64]) {
        let both = self.mask_a | self.mask_b;
        for code in 0..psi.len() {
            let a = code & self.mask_a != 0;
            let b = code & self.mask_b != 0;
            if a == b {
                psi[code] *= self.aligned;
            } else if a {
                let partner = code ^ both;
                let (x, y) = (psi[code], psi[partner]);
                psi[code] = self.anti_cos * x + self.anti_sin * y;
                psi[partner] = self.anti_sin * x + self.anti_cos * y;
            }
        }
    }
}

/// Combined coefficients of one site pair.
#[derive(Debug, Clone, Copy)]
struct PairTerm {
    mask_a: usize,
    mask_b: usize,
    xy: f64,
    zz: f64,
}

#[derive(Debug, Clone)]
struct TrotterPropagator {
    method: Method,
    dt: f64,
    /// Mutually commuting pair terms.
    groups: Vec<Vec<PairTerm>>,
    /// Gate layers for one step of length `dt`.
    step_layers: Vec<Vec<Gate>>,
}

/// Weight of the outer stages in the fourth-order composition.
pub fn suzuki_w() -> f64 {
    1.0 / (2.0 - 2f64.powf(1.0 / 3.0))
}

impl TrotterPropagator {
    fn new(terms: &HamiltonianTerms, method: Method, dt: f64) -> Self {
        let groups = trotter_groups(terms);
        let step_layers = layers_for_step(&groups, method, dt);
        Self {
            method,
            dt,
            groups,
            step_layers,
        }
    }

    fn evolve(&self, state: &StateVector, t: f64) -> StateVector {
        let mut out = state.clone();
        if t == 0.0 {
            return out;
        }
        let n = ((t.abs() / self.dt).round() as usize).max(1);
        let step = t / n as f64;
        let fresh;
        let layers = if (step - self.dt).abs() <= 1e-12 * self.dt {
            &self.step_layers
        } else {
            if ((step.abs() - self.dt).abs() > 1e-9 * self.dt) && t > 0.0 {
                log::warn!(
                    "t = {t} is not a multiple of dt = {}; using {n} steps of {step}",
                    self.dt
                );
            }
            fresh = layers_for_step(&self.groups, self.method, step);
            &fresh
        };
        let psi = out.amplitudes_mut();
        for _ in 0..n {
            for layer in layers {
                for g in layer {
                    g.apply(psi);
                }
            }
        }
        out
    }
}

/// Partition pair terms into groups of site-disjoint pairs.
///
/// Groups never mix stages. Within a stage pairs are placed greedily in the
/// first group they fit, which yields even/odd bond groups for open chains
/// and an extra group for the closing bond of odd rings.
fn trotter_groups(terms: &HamiltonianTerms) -> Vec<Vec<PairTerm>> {
    let mut groups = Vec::new();
    for stage in [Stage::SystemLeg, Stage::EnvironmentLeg, Stage::Rung] {
        let mut pairs: Vec<((usize, usize), PairTerm)> = Vec::new();
        for t in terms.terms.iter().filter(|t| t.stage == stage) {
            let key = (t.site_a.min(t.site_b), t.site_a.max(t.site_b));
            let idx = match pairs.iter().position(|(k, _)| *k == key) {
                Some(i) => i,
                None => {
                    pairs.push((
                        key,
                        PairTerm {
                            mask_a: site_mask(key.0),
                            mask_b: site_mask(key.1),
                            xy: 0.0,
                            zz: 0.0,
                        },
                    ));
                    pairs.len() - 1
                }
            };
            match t.kind {
                TermKind::XYBond => pairs[idx].1.xy += t.amplitude,
                TermKind::ZZBond => pairs[idx].1.zz += t.amplitude,
            }
        }
        let mut stage_groups: Vec<(usize, Vec<PairTerm>)> = Vec::new();
        for (_, p) in pairs {
            let sites = p.mask_a | p.mask_b;
            match stage_groups.iter_mut().find(|(used, _)| used & sites == 0) {
                Some((used, g)) => {
                    *used |= sites;
                    g.push(p);
                }
                None => stage_groups.push((sites, vec![p])),
            }
        }
        groups.extend(stage_groups.into_iter().map(|(_, g)| g));
    }
    groups
}

fn gates(group: &[PairTerm], tau: f64) -> Vec<Gate> {
    group
        .iter()
        .map(|p| Gate::new(p.mask_a, p.mask_b, p.xy, p.zz, tau))
        .collect()
}

/// Symmetric second-order step: half steps out, full step on the last group, half steps back.
fn strang_layers(groups: &[Vec<PairTerm>], tau: f64) -> Vec<Vec<Gate>> {
    let Some((last, rest)) = groups.split_last() else {
        return Vec::new();
    };
    let mut layers: Vec<Vec<Gate>> = rest.iter().map(|g| gates(g, tau / 2.0)).collect();
    layers.push(gates(last, tau));
    layers.extend(rest.iter().rev().map(|g| gates(g, tau / 2.0)));
    layers
}

fn layers_for_step(groups: &[Vec<PairTerm>], method: Method, tau: f64) -> Vec<Vec<Gate>> {
    match method {
        Method::Trotter2 => strang_layers(groups, tau),
        Method::Trotter4 => {
            let w = suzuki_w();
            let mut layers = strang_layers(groups, w * tau);
            layers.extend(strang_layers(groups, (1.0 - 2.0 * w) * tau));
            layers.extend(strang_layers(groups, w * tau));
            layers
        }
        Method::ExactSpectral => unreachable!("spectral route has no gate layers"),
    }
}

#[derive(Debug, Clone)]
enum Route {
    Spectral(SpectralPropagator),
    Trotter(TrotterPropagator),
}

/// Prepared evolution for a fixed Hamiltonian; immutable and shareable.
#[derive(Debug, Clone)]
pub struct Propagator {
    n_sites: usize,
    route: Route,
}

impl Propagator {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn method(&self) -> Method {
        match &self.route {
            Route::Spectral(_) => Method::ExactSpectral,
            Route::Trotter(t) => t.method,
        }
    }

    pub fn spectral(&self) -> Option<&SpectralPropagator> {
        match &self.route {
            Route::Spectral(s) => Some(s),
            Route::Trotter(_) => None,
        }
    }

    /// Number of commuting gate groups (Trotter routes only).
    pub fn trotter_group_sizes(&self) -> Option<Vec<usize>> {
        match &self.route {
            Route::Trotter(t) => Some(t.groups.iter().map(Vec::len).collect()),
            Route::Spectral(_) => None,
        }
    }
}

pub fn prepare(terms: &HamiltonianTerms, config: &EvolutionConfig) -> Result<Propagator> {
    config.validate()?;
    let route = match config.method {
        Method::ExactSpectral => Route::Spectral(SpectralPropagator::new(terms)?),
        m => Route::Trotter(TrotterPropagator::new(terms, m, config.dt)),
    };
    Ok(Propagator {
        n_sites: terms.n_sites,
        route,
    })
}

/// `exp(-i H t) |ψ⟩`.
pub fn evolve(prop: &Propagator, state: &StateVector, t: f64) -> Result<StateVector> {
    if state.n_sites() != prop.n_sites {
        return Err(Error::DimensionMismatch {
            expected: 1 << prop.n_sites,
            found: state.dim(),
        });
    }
    Ok(match &prop.route {
        Route::Spectral(s) => s.evolve(state, t),
        Route::Trotter(tr) => tr.evolve(state, t),
    })
}
