//! Fourth-order Trotter error against exact spectral evolution.

use ladder_echo::ensemble::random_phase_state;
use ladder_echo::model::{total_hamiltonian, Couplings, LadderSpec};
use ladder_echo::propagate::{evolve, prepare, EvolutionConfig};

fn main() -> ladder_echo::Result<()> {
    let spec = LadderSpec::ring(3)?;
    let h = total_hamiltonian(&spec, &Couplings::weak(0.3, 1.0))?;
    let psi = random_phase_state(&spec, 7, 0);
    let t = 10.0;
    let exact = evolve(&prepare(&h, &EvolutionConfig::exact())?, &psi, t)?;
    let mut prev: Option<f64> = None;
    for dt in [0.2, 0.1, 0.05, 0.025] {
        let state = evolve(&prepare(&h, &EvolutionConfig::trotter4(dt))?, &psi, t)?;
        let err = state.max_abs_diff(&exact);
        match prev {
            Some(p) => println!("dt={dt:<6} error {err:.3e}  ratio {:.2}", p / err),
            None => println!("dt={dt:<6} error {err:.3e}"),
        }
        prev = Some(err);
    }
    Ok(())
}
