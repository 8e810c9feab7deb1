//! Survival probability of a site weakly attached to a long chain, compared
//! with the golden-rule rate and the Gaussian-to-exponential interpolation.

use ladder_echo::analysis::{fit_exponential, interpolation_curve, ExpFitOptions, FgrParams};
use ladder_echo::protocols::sp_paradigm;

fn main() -> ladder_echo::Result<()> {
    let (j_se, j_e) = (0.3, 1.0);
    let times: Vec<f64> = (0..=600).map(|k| 0.1 * k as f64).collect();
    let sp = sp_paradigm(j_se, j_e, 2000, &times)?;
    let opts = ExpFitOptions {
        guard: 1.0,
        plateau: Some(0.05),
        ..Default::default()
    };
    let fit = fit_exponential(&sp, &opts)?;
    // edge density of states of a chain with bonds J_E/2 is 2/(π J_E)
    println!("fitted rate {:.4}, edge golden rule J_SE^2/J_E = {:.4}", fit.rate, j_se * j_se / j_e);

    let params = FgrParams::from_rate((j_se / 2.0).powi(2), fit.rate);
    let interp = interpolation_curve(&params, &sp.times);
    println!("{:>6} {:>10} {:>12}", "t", "SP", "interpolation");
    for k in (0..sp.len()).step_by(50) {
        println!("{:>6.1} {:>10.5} {:>12.5}", sp.times[k], sp.values[k], interp.values[k]);
    }
    Ok(())
}
