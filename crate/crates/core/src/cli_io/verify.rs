//! Oracle cross-checks behind the `verify` subcommand.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use crate::ensemble::EnsembleSpec;
use crate::error::Result;
use crate::hilbert::{apply_terms, dense_matrix, StateVector};
use crate::model::{total_hamiltonian, Couplings, LadderSpec};
use crate::onebody::{onebody_return, quenched_le, DisorderSampling, HoppingMatrix};
use crate::propagate::{evolve, prepare, EvolutionConfig};
use crate::protocols::{forward_p11_on, loschmidt_echo, LadderModel, LeSchedule};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub max_error: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.max_error <= self.tolerance
    }
}

fn random_state(n_sites: usize, rng: &mut ChaCha20Rng) -> StateVector {
    let amps = (0..1usize << n_sites)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let mut s = StateVector::from_amplitudes(n_sites, amps).expect("power-of-two length");
    s.normalize();
    s
}

fn dense_vs_matrix_free() -> Result<Check> {
    let spec = LadderSpec::ring(3)?;
    let h = total_hamiltonian(&spec, &Couplings::new(0.8, 1.0, 0.3, 1.0))?;
    let dense = dense_matrix(&h)?.map(|x| Complex64::new(x, 0.0));
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let psi = random_state(6, &mut rng);
        let free = apply_terms(&psi, &h, 1.0)?;
        let full = &dense * DVector::from_column_slice(psi.amplitudes());
        let diff = full
            .iter()
            .zip(free.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        worst = worst.max(diff);
    }
    Ok(Check {
        name: "dense vs matrix-free H|psi> (m=3 ring)",
        max_error: worst,
        tolerance: 1e-12,
    })
}

fn trotter_vs_exact() -> Result<Check> {
    let spec = LadderSpec::ring(3)?;
    let h = total_hamiltonian(&spec, &Couplings::weak(0.3, 1.0))?;
    let exact = prepare(&h, &EvolutionConfig::exact())?;
    let trotter = prepare(&h, &EvolutionConfig::trotter4(0.05))?;
    let mut rng = ChaCha20Rng::seed_from_u64(12);
    let psi = random_state(6, &mut rng);
    let a = evolve(&exact, &psi, 10.0)?;
    let b = evolve(&trotter, &psi, 10.0)?;
    Ok(Check {
        name: "Trotter4 (dt=0.05) vs exact at t=10 (m=3 ring)",
        max_error: a.max_abs_diff(&b),
        tolerance: 1e-6,
    })
}

fn many_body_vs_one_body() -> Result<Check> {
    let spec = LadderSpec::ring(5)?;
    let model = LadderModel::new(spec, Couplings::weak(0.0, 0.0));
    let times: Vec<f64> = (0..=40).map(|k| 0.5 * k as f64).collect();
    let many = forward_p11_on(&model, &EnsembleSpec::exact(), &EvolutionConfig::exact(), &times)?;
    let one = onebody_return(&HoppingMatrix::leg(&spec, 1.0)?, &times)?;
    Ok(Check {
        name: "many-body P11 vs one-body return, J_SE=0 (m=5 ring)",
        max_error: many.max_abs_diff(&one),
        tolerance: 1e-10,
    })
}

fn quenched_disorder() -> Result<Check> {
    let spec = LadderSpec::ring(3)?;
    let (j_se, alpha) = (0.4, 1.0);
    let model = LadderModel::new(spec, Couplings::new(1.0, 0.0, j_se, alpha)).ising_rungs_only();
    let schedule = LeSchedule::linear(1.0, 30.0)?;
    let many = loschmidt_echo(&model, &EnsembleSpec::exact(), &schedule, &EvolutionConfig::exact())?;
    let one = quenched_le(&spec, 1.0, alpha * j_se, DisorderSampling::Exhaustive, &schedule.total_times())?;
    Ok(Check {
        name: "many-body echo vs quenched one-body echo (m=3 ring)",
        max_error: many.max_abs_diff(&one),
        tolerance: 1e-8,
    })
}

fn perfect_reversal() -> Result<Check> {
    let model = LadderModel::new(LadderSpec::ring(4)?, Couplings::weak(0.0, 1.0));
    let s = loschmidt_echo(&model, &EnsembleSpec::exact(), &LeSchedule::linear(5.0, 100.0)?, &EvolutionConfig::exact())?;
    Ok(Check {
        name: "echo with J_SE=0 stays at 1 (m=4 ring)",
        max_error: s.values.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max),
        tolerance: 1e-10,
    })
}

/// Runs every oracle check.
pub fn oracle_checks() -> Result<Vec<Check>> {
    Ok(vec![
        dense_vs_matrix_free()?,
        trotter_vs_exact()?,
        many_body_vs_one_body()?,
        quenched_disorder()?,
        perfect_reversal()?,
    ])
}
