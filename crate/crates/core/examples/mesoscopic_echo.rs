//! Revival of the return probability on a finite chain.

use ladder_echo::model::LadderSpec;
use ladder_echo::onebody::{detect_meso_echo, onebody_return, HoppingMatrix, MesoEcho, DEFAULT_PROMINENCE};

fn main() -> ladder_echo::Result<()> {
    let times: Vec<f64> = (0..=1200).map(|k| 0.05 * k as f64).collect();
    for m in [3, 5, 8] {
        let spec = LadderSpec::open(m)?;
        let p11 = onebody_return(&HoppingMatrix::leg(&spec, 1.0)?, &times)?;
        match detect_meso_echo(&p11, m, 1.0, DEFAULT_PROMINENCE) {
            MesoEcho::Found(r) => println!(
                "m={m}: first echo at t={:.2}, height {:.3}, prominence {:.3} (m/J = {})",
                r.t_peak, r.peak_value, r.prominence, r.t_heisenberg_estimate
            ),
            MesoEcho::NotFound { t_heisenberg_estimate } => {
                println!("m={m}: no echo before t={} (m/J = {t_heisenberg_estimate})", times.last().unwrap())
            }
        }
    }
    Ok(())
}
