//! Single-excitation (Jordan–Wigner) picture of the ladder legs.
//!
//! In the one-excitation sector an XY chain is a tight-binding hopping
//! matrix. A frozen environment coupled through Ising rungs only adds random
//! site energies `±α J_SE`, which gives the binary-alloy disorder model.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{compensated_sum, realization_rng, Observable, TimeSeries};
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;
use crate::model::LadderSpec;

/// Default prominence for echo detection.
pub const DEFAULT_PROMINENCE: f64 = 0.1;

/// Real symmetric one-body Hamiltonian on `size` sites (indices 0-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoppingMatrix {
    pub size: usize,
    /// `(i, j, amplitude)` with `i != j`; each entry contributes to both
    /// `(i, j)` and `(j, i)`.
    pub hoppings: Vec<(usize, usize, f64)>,
    pub site_energies: Vec<f64>,
}

impl HoppingMatrix {
    /// XY leg with coupling `j`: hopping `j/2` between neighbours, plus the
    /// corner element for a ring.
    pub fn leg(spec: &LadderSpec, j: f64) -> Result<Self> {
        spec.validate()?;
        let hoppings = spec
            .leg_bonds()
            .into_iter()
            .map(|(a, b)| (a - 1, b - 1, j / 2.0))
            .collect();
        Ok(Self {
            size: spec.m,
            hoppings,
            site_energies: vec![0.0; spec.m],
        })
    }

    /// Open chain with explicit nearest-neighbour hoppings.
    pub fn chain(hoppings: &[f64]) -> Self {
        let size = hoppings.len() + 1;
        Self {
            size,
            hoppings: hoppings.iter().enumerate().map(|(i, &h)| (i, i + 1, h)).collect(),
            site_energies: vec![0.0; size],
        }
    }

    pub fn with_site_energies(mut self, energies: Vec<f64>) -> Result<Self> {
        if energies.len() != self.size {
            return Err(Error::DimensionMismatch {
                expected: self.size,
                found: energies.len(),
            });
        }
        self.site_energies = energies;
        Ok(self)
    }

    /// Negate every hopping, keeping site energies.
    pub fn negated_hoppings(&self) -> Self {
        let mut h = self.clone();
        h.hoppings.iter_mut().for_each(|e| e.2 = -e.2);
        h
    }

    pub fn validate(&self) -> Result<()> {
        if self.size == 0 {
            return Err(Error::InvalidSpec("hopping matrix needs at least one site".into()));
        }
        if self.site_energies.len() != self.size {
            return Err(Error::DimensionMismatch {
                expected: self.size,
                found: self.site_energies.len(),
            });
        }
        for &(i, j, a) in &self.hoppings {
            if i == j || i >= self.size || j >= self.size {
                return Err(Error::InvalidSpec(format!("bad hopping ({i}, {j})")));
            }
            if !a.is_finite() {
                return Err(Error::InvalidSpec(format!("non-finite hopping on ({i}, {j})")));
            }
        }
        if self.site_energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::InvalidSpec("non-finite site energy".into()));
        }
        Ok(())
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut h = DMatrix::from_diagonal(&DVector::from_column_slice(&self.site_energies));
        for &(i, j, a) in &self.hoppings {
            h[(i, j)] += a;
            h[(j, i)] += a;
        }
        h
    }

    pub fn eigen(&self) -> Result<(DVector<f64>, DMatrix<f64>)> {
        self.validate()?;
        symmetric_eigen(&self.to_dense())
    }
}

/// `|Σ_k w_k e^{-i E_k t}|²` for each `t`, with `w_k = |⟨1|k⟩|²`.
pub fn return_probability(energies: &[f64], weights: &[f64], times: &[f64]) -> Vec<f64> {
    times
        .iter()
        .map(|&t| {
            let a: Complex64 = energies
                .iter()
                .zip(weights)
                .map(|(e, w)| Complex64::from_polar(*w, -e * t))
                .sum();
            a.norm_sqr()
        })
        .collect()
}

/// Return probability at site 1, `|⟨1|e^{-iht}|1⟩|²`.
pub fn onebody_return(h: &HoppingMatrix, times: &[f64]) -> Result<TimeSeries> {
    let (vals, vecs) = h.eigen()?;
    let weights: Vec<f64> = (0..h.size).map(|k| vecs[(0, k)].powi(2)).collect();
    let values = return_probability(vals.as_slice(), &weights, times);
    Ok(TimeSeries::new(times.to_vec(), values, Observable::P11))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MesoEchoResult {
    pub t_peak: f64,
    pub peak_value: f64,
    pub prominence: f64,
    /// `ħ/Δ` with mean level spacing `Δ = J_E/m`.
    pub t_heisenberg_estimate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MesoEcho {
    Found(MesoEchoResult),
    NotFound { t_heisenberg_estimate: f64 },
}

impl MesoEcho {
    pub fn found(&self) -> Option<&MesoEchoResult> {
        match self {
            MesoEcho::Found(r) => Some(r),
            MesoEcho::NotFound { .. } => None,
        }
    }

    pub fn t_heisenberg_estimate(&self) -> f64 {
        match self {
            MesoEcho::Found(r) => r.t_heisenberg_estimate,
            MesoEcho::NotFound { t_heisenberg_estimate } => *t_heisenberg_estimate,
        }
    }
}

/// Topographic prominence of the sample at `i`.
fn prominence(v: &[f64], i: usize) -> f64 {
    let peak = v[i];
    let mut left_min = peak;
    for &x in v[..i].iter().rev() {
        if x > peak {
            break;
        }
        left_min = left_min.min(x);
    }
    let mut right_min = peak;
    for &x in &v[i + 1..] {
        if x > peak {
            break;
        }
        right_min = right_min.min(x);
    }
    peak - left_min.max(right_min)
}

/// First revival after the initial decay whose prominence reaches
/// `min_prominence`. Plateaus count as one peak (first sample).
pub fn detect_meso_echo(series: &TimeSeries, m: usize, j_e: f64, min_prominence: f64) -> MesoEcho {
    let t_h = m as f64 / j_e.abs();
    let v = &series.values;
    let n = v.len();
    for i in 1..n.saturating_sub(1) {
        let rising = v[i] > v[i - 1];
        let not_falling_after = v[i] >= v[i + 1];
        if !(rising && not_falling_after) {
            continue;
        }
        // flat top: extend to where it ends and require a fall afterwards
        let mut j = i;
        while j + 1 < n && v[j + 1] == v[i] {
            j += 1;
        }
        if j + 1 >= n {
            continue;
        }
        let p = prominence(v, i);
        if p >= min_prominence {
            return MesoEcho::Found(MesoEchoResult {
                t_peak: series.times[i],
                peak_value: v[i],
                prominence: p,
                t_heisenberg_estimate: t_h,
            });
        }
    }
    MesoEcho::NotFound {
        t_heisenberg_estimate: t_h,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DisorderSampling {
    /// All `2^m` sign patterns, equally weighted (matches the exact trace).
    Exhaustive,
    Random { n: usize, seed: u64 },
}

/// Cap on `m` for exhaustive disorder enumeration.
pub const EXHAUSTIVE_DISORDER_CAP: usize = 20;

fn disorder_patterns(m: usize, sampling: DisorderSampling) -> Result<Vec<Vec<bool>>> {
    match sampling {
        DisorderSampling::Exhaustive => {
            if m > EXHAUSTIVE_DISORDER_CAP {
                return Err(Error::DimensionCap {
                    what: "exhaustive disorder enumeration",
                    spins: m,
                    cap: EXHAUSTIVE_DISORDER_CAP,
                });
            }
            Ok((0..1usize << m)
                .map(|code| (0..m).map(|k| code >> k & 1 == 1).collect())
                .collect())
        }
        DisorderSampling::Random { n, seed } => {
            if n == 0 {
                return Err(Error::EmptyEnsemble);
            }
            Ok((0..n as u64)
                .map(|r| {
                    let mut rng = realization_rng(seed, r);
                    (0..m).map(|_| rng.gen::<bool>()).collect()
                })
                .collect())
        }
    }
}

struct Spectrum {
    energies: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl Spectrum {
    fn of(h: &HoppingMatrix) -> Result<Self> {
        let (vals, vecs) = h.eigen()?;
        Ok(Self {
            energies: vals.iter().copied().collect(),
            vectors: vecs,
        })
    }

    fn apply(&self, psi: &[Complex64], t: f64) -> Vec<Complex64> {
        let v = &self.vectors;
        let n = psi.len();
        let coeffs: Vec<Complex64> = (0..n)
            .map(|k| {
                let c: Complex64 = (0..n).map(|i| psi[i] * v[(i, k)]).sum();
                c * Complex64::from_polar(1.0, -self.energies[k] * t)
            })
            .collect();
        (0..n)
            .map(|i| (0..n).map(|k| coeffs[k] * v[(i, k)]).sum())
            .collect()
    }
}

/// Disorder-averaged one-body echo at total times `T = 2 t_R`:
/// `mean |⟨1| e^{-i(−h_S+ε) t_R} e^{-i(h_S+ε) t_R} |1⟩|²` over site energies
/// `ε_n = ±amplitude`.
///
/// With `Exhaustive` sampling this equals the many-body echo of a ladder with
/// a frozen environment (`J_E = 0`) and Ising-only rungs on open legs and on
/// odd rings. On even rings the fermionic boundary bond changes sign with the
/// particle-number parity, and no single one-body amplitude reproduces the
/// many-body curve.
pub fn quenched_le(
    spec: &LadderSpec,
    j_s: f64,
    amplitude: f64,
    sampling: DisorderSampling,
    times: &[f64],
) -> Result<TimeSeries> {
    let leg = HoppingMatrix::leg(spec, j_s)?;
    let patterns = disorder_patterns(spec.m, sampling)?;
    let curves: Vec<Vec<f64>> = patterns
        .par_iter()
        .map(|signs| {
            let eps: Vec<f64> = signs.iter().map(|&s| if s { amplitude } else { -amplitude }).collect();
            let fwd = Spectrum::of(&leg.clone().with_site_energies(eps.clone())?)?;
            let bwd = Spectrum::of(&leg.negated_hoppings().with_site_energies(eps)?)?;
            let mut e1 = vec![Complex64::new(0.0, 0.0); spec.m];
            e1[0] = Complex64::new(1.0, 0.0);
            Ok(times
                .iter()
                .map(|&t| {
                    let t_r = t / 2.0;
                    bwd.apply(&fwd.apply(&e1, t_r), t_r)[0].norm_sqr()
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let n = curves.len() as f64;
    let values = (0..times.len())
        .map(|k| compensated_sum(curves.iter().map(|c| c[k])) / n)
        .collect();
    Ok(TimeSeries::new(times.to_vec(), values, Observable::MLE))
}
