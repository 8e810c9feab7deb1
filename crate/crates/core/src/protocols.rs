//! The experiments: forward autocorrelation, the Loschmidt echo with a
//! partial time reversal, and the one-body survival-probability chain.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{check_trace_cap, ensemble_curve, EnsembleMode, EnsembleSpec, Observable, Recipe, TimeSeries};
use crate::error::{Error, Result};
use crate::linalg::tridiagonal_first_components;
use crate::model::{stage_hamiltonians, total_hamiltonian, Couplings, HamiltonianTerms, LadderSpec, Stage, TermKind};
use crate::onebody::return_probability;
use crate::propagate::{prepare, EvolutionConfig};

/// Which interchain channels are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RungChannels {
    /// Flip-flop plus Ising parts.
    #[default]
    Full,
    /// Only the Ising part of the rungs.
    IsingOnly,
}

/// A ladder with its couplings: everything needed to build the Hamiltonians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderModel {
    pub spec: LadderSpec,
    pub couplings: Couplings,
    #[serde(default)]
    pub rungs: RungChannels,
}

impl LadderModel {
    pub fn new(spec: LadderSpec, couplings: Couplings) -> Self {
        Self {
            spec,
            couplings,
            rungs: RungChannels::Full,
        }
    }

    pub fn ising_rungs_only(mut self) -> Self {
        self.rungs = RungChannels::IsingOnly;
        self
    }

    pub fn with_coupling(mut self, alpha: f64, j_se: f64) -> Self {
        self.couplings.alpha = alpha;
        self.couplings.j_se = j_se;
        self
    }

    fn trim(&self, h: HamiltonianTerms) -> HamiltonianTerms {
        match self.rungs {
            RungChannels::Full => h,
            RungChannels::IsingOnly => h.without(Stage::Rung, TermKind::XYBond),
        }
    }

    pub fn hamiltonian(&self) -> Result<HamiltonianTerms> {
        Ok(self.trim(total_hamiltonian(&self.spec, &self.couplings)?))
    }

    /// `(H_S + Σ, −H_S + Σ)`.
    pub fn stages(&self) -> Result<(HamiltonianTerms, HamiltonianTerms)> {
        let (f, b) = stage_hamiltonians(&self.spec, &self.couplings)?;
        Ok((self.trim(f), self.trim(b)))
    }
}

/// Reversal times `t_R`. Curves built from a schedule are indexed by the total
/// time `2 t_R`, with an extra leading sample at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeSchedule {
    t_r_values: Vec<f64>,
}

impl LeSchedule {
    pub fn new(t_r_values: Vec<f64>) -> Result<Self> {
        let mut problems = Vec::new();
        if t_r_values.is_empty() {
            problems.push("schedule needs at least one reversal time".to_string());
        }
        if t_r_values.iter().any(|t| !t.is_finite() || *t <= 0.0) {
            problems.push("reversal times must be positive and finite".to_string());
        }
        if t_r_values.windows(2).any(|w| w[1] <= w[0]) {
            problems.push("reversal times must be strictly increasing".to_string());
        }
        if !problems.is_empty() {
            return Err(Error::Config(problems));
        }
        Ok(Self { t_r_values })
    }

    /// `n` total times log-spaced over `[t_min, t_max]`.
    pub fn log_spaced(t_min: f64, t_max: f64, n: usize) -> Result<Self> {
        if !(t_min > 0.0 && t_max > t_min && n >= 2) {
            return Err(Error::Config(vec![format!(
                "log spacing needs 0 < t_min < t_max and n >= 2 (got {t_min}, {t_max}, {n})"
            )]));
        }
        let ratio = (t_max / t_min).ln();
        Self::new(
            (0..n)
                .map(|k| 0.5 * t_min * (ratio * k as f64 / (n - 1) as f64).exp())
                .collect(),
        )
    }

    /// Total times `step, 2 step, …` up to `t_max`.
    pub fn linear(step: f64, t_max: f64) -> Result<Self> {
        if !(step > 0.0 && t_max >= step) {
            return Err(Error::Config(vec![format!(
                "linear spacing needs 0 < step <= t_max (got {step}, {t_max})"
            )]));
        }
        let n = (t_max / step + 1e-9).floor() as usize;
        Self::new((1..=n).map(|k| 0.5 * step * k as f64).collect())
    }

    pub fn t_r_values(&self) -> &[f64] {
        &self.t_r_values
    }

    /// `[0, 2 t_R1, 2 t_R2, …]`.
    pub fn total_times(&self) -> Vec<f64> {
        std::iter::once(0.0)
            .chain(self.t_r_values.iter().map(|t| 2.0 * t))
            .collect()
    }
}

impl Default for LeSchedule {
    fn default() -> Self {
        Self::log_spaced(0.05, 500.0, 120).expect("valid default schedule")
    }
}

/// Fails early, before any diagonalization, when the exact trace is too big.
fn check_ensemble_size(model: &LadderModel, ens: &EnsembleSpec) -> Result<()> {
    if ens.mode == EnsembleMode::ExactTrace {
        check_trace_cap(model.spec.n_sites())?;
    }
    Ok(())
}

/// Polarization autocorrelation of site 1 under the full Hamiltonian on an
/// explicit time grid.
pub fn forward_p11_on(
    model: &LadderModel,
    ens: &EnsembleSpec,
    config: &EvolutionConfig,
    times: &[f64],
) -> Result<TimeSeries> {
    check_ensemble_size(model, ens)?;
    let prop = prepare(&model.hamiltonian()?, config)?;
    ensemble_curve(&model.spec, ens, &Recipe::Forward(&prop), times, 1)
}

/// [`forward_p11_on`] sampled on the config's own time grid.
pub fn forward_p11(model: &LadderModel, ens: &EnsembleSpec, config: &EvolutionConfig) -> Result<TimeSeries> {
    config.validate()?;
    forward_p11_on(model, ens, config, &config.time_grid())
}

/// Local echo `M_LE(2 t_R)` for every reversal time in the schedule.
pub fn loschmidt_echo(
    model: &LadderModel,
    ens: &EnsembleSpec,
    schedule: &LeSchedule,
    config: &EvolutionConfig,
) -> Result<TimeSeries> {
    check_ensemble_size(model, ens)?;
    let (fh, bh) = model.stages()?;
    let forward = prepare(&fh, config)?;
    let backward = prepare(&bh, config)?;
    let recipe = Recipe::Echo {
        forward: &forward,
        backward: &backward,
    };
    ensemble_curve(&model.spec, ens, &recipe, &schedule.total_times(), 1)
}

/// Survival probability at the end of a semi-infinite-like chain: edge bond
/// `j_se/2`, then a homogeneous chain with bonds `j_e/2`.
pub fn sp_paradigm(j_se: f64, j_e: f64, chain_length: usize, times: &[f64]) -> Result<TimeSeries> {
    if chain_length < 2 {
        return Err(Error::InvalidSpec("chain needs at least two sites".into()));
    }
    let t_max = times.iter().copied().fold(0.0, f64::max);
    if (chain_length as f64) < 2.0 * t_max * j_e.abs() {
        log::warn!(
            "chain of {chain_length} sites may revive before t = {t_max}; \
             need at least {:.0} sites",
            (2.0 * t_max * j_e.abs()).ceil()
        );
    }
    let diag = vec![0.0; chain_length];
    let mut off = vec![j_e / 2.0; chain_length - 1];
    off[0] = j_se / 2.0;
    let (energies, first) = tridiagonal_first_components(&diag, &off)?;
    let weights: Vec<f64> = first.iter().map(|c| c * c).collect();
    let values = return_probability(&energies, &weights, times);
    Ok(TimeSeries::new(times.to_vec(), values, Observable::SP))
}

/// One grid point of a sweep.
#[derive(Debug)]
pub struct SweepPoint {
    pub alpha: f64,
    pub j_se: f64,
    pub result: Result<TimeSeries>,
}

/// Echo curves over the `alphas × j_ses` grid, in row-major `(alpha, j_se)`
/// order. A failing point is reported in place; the rest still run.
pub fn le_sweep(
    base: &LadderModel,
    alphas: &[f64],
    j_ses: &[f64],
    schedule: &LeSchedule,
    ens: &EnsembleSpec,
    config: &EvolutionConfig,
) -> Vec<SweepPoint> {
    let grid: Vec<(f64, f64)> = alphas
        .iter()
        .flat_map(|&a| j_ses.iter().map(move |&j| (a, j)))
        .collect();
    grid.par_iter()
        .map(|&(alpha, j_se)| {
            let model = base.with_coupling(alpha, j_se);
            let result = loschmidt_echo(&model, ens, schedule, config);
            if let Err(e) = &result {
                log::error!("sweep point alpha={alpha} j_se={j_se} failed: {e}");
            }
            SweepPoint { alpha, j_se, result }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::onebody::{onebody_return, HoppingMatrix};

    fn model(m: usize, j_se: f64, alpha: f64) -> LadderModel {
        LadderModel::new(LadderSpec::ring(m).unwrap(), Couplings::weak(j_se, alpha))
    }

    fn bessel_j1(x: f64) -> f64 {
        // power series; fine for the moderate arguments used here
        let mut term = x / 2.0;
        let mut sum = term;
        for k in 1..200 {
            term *= -(x * x / 4.0) / (k as f64 * (k as f64 + 1.0));
            sum += term;
            if term.abs() < 1e-18 * sum.abs().max(1e-300) {
                break;
            }
        }
        sum
    }

    #[test]
    fn schedule_rules() {
        assert!(LeSchedule::new(vec![]).is_err());
        assert!(LeSchedule::new(vec![1.0, 1.0]).is_err());
        assert!(LeSchedule::new(vec![-1.0]).is_err());
        let s = LeSchedule::log_spaced(0.05, 500.0, 5).unwrap();
        let t = s.total_times();
        assert_eq!(t.len(), 6);
        assert_eq!(t[0], 0.0);
        assert!((t[1] - 0.05).abs() < 1e-15 && (t[5] - 500.0).abs() < 1e-9);
        let l = LeSchedule::linear(1.0, 4.0).unwrap();
        assert_eq!(l.total_times(), vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn decoupled_echo_is_perfect() {
        let m = model(3, 0.0, 1.0);
        let s = loschmidt_echo(
            &m,
            &EnsembleSpec::exact(),
            &LeSchedule::linear(5.0, 50.0).unwrap(),
            &EvolutionConfig::exact(),
        )
        .unwrap();
        assert!(s.values.iter().all(|v| (v - 1.0).abs() < 1e-10));
        assert_eq!(s.observable, Observable::MLE);
    }

    #[test]
    fn frozen_ladder_has_constant_autocorrelation() {
        let m = LadderModel::new(LadderSpec::ring(3).unwrap(), Couplings::new(0.0, 1.0, 0.0, 0.0));
        let cfg = EvolutionConfig {
            t_max: 20.0,
            ..EvolutionConfig::exact()
        };
        let s = forward_p11(&m, &EnsembleSpec::exact(), &cfg).unwrap();
        assert_eq!(s.len(), 21);
        assert!(s.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn uncoupled_autocorrelation_is_one_body_return() {
        for spec in [LadderSpec::ring(3).unwrap(), LadderSpec::open(4).unwrap()] {
            let m = LadderModel::new(spec, Couplings::weak(0.0, 0.0));
            let times: Vec<f64> = (0..=40).map(|k| k as f64 * 0.5).collect();
            let many = forward_p11_on(&m, &EnsembleSpec::exact(), &EvolutionConfig::exact(), &times).unwrap();
            let one = onebody_return(&HoppingMatrix::leg(&spec, 1.0).unwrap(), &times).unwrap();
            assert!(many.max_abs_diff(&one) < 1e-10);
        }
    }

    #[test]
    fn homogeneous_sp_chain_is_bessel() {
        let times: Vec<f64> = (0..=60).map(|k| k as f64 * 0.25).collect();
        let s = sp_paradigm(1.0, 1.0, 400, &times).unwrap();
        assert!((s.values[0] - 1.0).abs() < 1e-12);
        for (t, v) in s.iter().skip(1) {
            let exact = (2.0 * bessel_j1(t) / t).powi(2);
            assert!((v - exact).abs() < 1e-10, "t={t}: {v} vs {exact}");
        }
    }

    #[test]
    fn sweep_orders_points_and_isolates_failures() {
        let base = model(2, 0.1, 0.0);
        let sched = LeSchedule::linear(2.0, 6.0).unwrap();
        let pts = le_sweep(
            &base,
            &[0.0, 1.0],
            &[0.05, f64::NAN, 0.2],
            &sched,
            &EnsembleSpec::exact(),
            &EvolutionConfig::exact(),
        );
        let keys: Vec<(f64, bool)> = pts.iter().map(|p| (p.alpha, p.result.is_ok())).collect();
        assert_eq!(keys, vec![(0.0, true), (0.0, false), (0.0, true), (1.0, true), (1.0, false), (1.0, true)]);
        let single = loschmidt_echo(&base.with_coupling(1.0, 0.2), &EnsembleSpec::exact(), &sched, &EvolutionConfig::exact())
            .unwrap();
        assert_eq!(pts[5].result.as_ref().unwrap(), &single);
    }

    #[test]
    fn echo_weakens_with_coupling() {
        let sched = LeSchedule::linear(2.0, 20.0).unwrap();
        let mut prev: Option<TimeSeries> = None;
        for j_se in [0.01, 0.05, 0.1, 0.25, 0.5] {
            let s = loschmidt_echo(&model(3, j_se, 0.0), &EnsembleSpec::exact(), &sched, &EvolutionConfig::exact()).unwrap();
            if let Some(p) = &prev {
                for (a, b) in p.values.iter().zip(&s.values).take(6) {
                    assert!(*b <= a + 1e-3);
                }
            }
            prev = Some(s);
        }
    }
}
