//! Regime fits and rate bookkeeping for echo curves.
//!
//! Curves decay quadratically at short times, exponentially at intermediate
//! times and saturate at a plateau. The functions here extract the short-time
//! curvature `σ²`, the decay rate `1/τ_φ` and the plateau. They also split
//! rates collected over an `(α, J_SE)` grid into flip-flop and Ising
//! contributions.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::ensemble::{Observable, TimeSeries};
use crate::error::{Error, Result};

/// Published flip-flop coefficient of the decoherence rate, `(value, error)`.
pub const PAPER_XY_COEFFICIENT: (f64, f64) = (0.92, 0.04);
/// Published Ising coefficient of the decoherence rate, `(value, error)`.
pub const PAPER_ZZ_COEFFICIENT: (f64, f64) = (1.12, 0.04);
/// Mesoscopic-echo attenuation coefficients, for comparison only.
pub const MESO_ECHO_XY_COEFFICIENT: (f64, f64) = (1.00, 0.06);
pub const MESO_ECHO_ZZ_COEFFICIENT: (f64, f64) = (2.0, 0.3);

/// Ordinary least squares `y = slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_err: f64,
    pub intercept_err: f64,
    pub r2: f64,
    pub n: usize,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    assert_eq!(x.len(), y.len(), "x and y differ in length");
    let n = x.len();
    if n < 2 {
        return Err(Error::InsufficientSamples {
            what: "linear regression",
            needed: 2,
            found: n,
        });
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if !(sxx > 0.0) || !sxx.is_finite() {
        return Err(Error::SingularRegression(format!(
            "all {n} abscissae coincide"
        )));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - slope * a - intercept).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let (slope_err, intercept_err) = if n > 2 {
        let s2 = sse / (nf - 2.0);
        let se_slope = (s2 / sxx).sqrt();
        let se_int = (s2 * (1.0 / nf + mx * mx / sxx)).sqrt();
        (se_slope, se_int)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(LinearFit {
        slope,
        intercept,
        slope_err,
        intercept_err,
        r2,
        n,
    })
}

/// Default upper time for the short-time fit.
pub const DEFAULT_T_CUT: f64 = 0.5;

/// `σ²` from `1 − M ≈ σ² t²` on samples with `0 < t ≤ t_cut`, by least
/// squares through the origin (the curve equals 1 at `t = 0` by construction).
pub fn fit_quadratic(series: &TimeSeries, t_cut: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, _)| *t > 0.0 && *t <= t_cut)
        .map(|(t, v)| (t * t, 1.0 - v))
        .collect();
    if pts.len() < 5 {
        return Err(Error::InsufficientSamples {
            what: "short-time quadratic fit",
            needed: 5,
            found: pts.len(),
        });
    }
    let sxx: f64 = pts.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = pts.iter().map(|(x, y)| x * y).sum();
    Ok(sxy / sxx)
}

/// Default share of samples used for the plateau.
pub const DEFAULT_TAIL_FRACTION: f64 = 0.2;

/// Mean of the last `tail_fraction` of the samples (at least 20 of them).
pub fn estimate_plateau(series: &TimeSeries, tail_fraction: f64) -> Result<f64> {
    let n = series.len();
    let tail = ((n as f64) * tail_fraction).floor() as usize;
    if tail < 20 {
        return Err(Error::InsufficientSamples {
            what: "plateau tail",
            needed: 20,
            found: tail,
        });
    }
    let vals = &series.values[n - tail..];
    Ok(vals.iter().sum::<f64>() / tail as f64)
}

/// Mean over the samples with `lo ≤ t ≤ hi`.
pub fn window_mean(series: &TimeSeries, lo: f64, hi: f64) -> Result<f64> {
    let w = series.window(lo, hi);
    if w.is_empty() {
        return Err(Error::InsufficientSamples {
            what: "averaging window",
            needed: 1,
            found: 0,
        });
    }
    Ok(w.values.iter().sum::<f64>() / w.len() as f64)
}

/// First sampled time at which `1 − M` departs from `σ² t²` by more than
/// `threshold` in relative terms.
pub fn spreading_time(series: &TimeSeries, sigma2: f64, threshold: f64) -> Option<f64> {
    if !(sigma2 > 0.0) {
        return None;
    }
    series
        .iter()
        .filter(|(t, _)| *t > 0.0)
        .find(|(t, v)| {
            let model = sigma2 * t * t;
            ((1.0 - v) - model).abs() / model > threshold
        })
        .map(|(t, _)| t)
}

/// Window rules for the exponential fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpFitOptions {
    /// Earliest time in the window.
    pub onset: f64,
    /// The window ends at the last sample with `M ≥ guard · plateau`.
    pub guard: f64,
    /// Saturation level; estimated from the curve tail when `None`.
    pub plateau: Option<f64>,
    /// Spreading time; the window never starts before it.
    pub t_spread: Option<f64>,
    /// Optional hard end of the window.
    pub t_end: Option<f64>,
    /// Regress `ln(M − plateau)` instead of `ln M`.
    #[serde(default)]
    pub subtract_plateau: bool,
}

impl Default for ExpFitOptions {
    fn default() -> Self {
        Self {
            onset: 2.0,
            guard: 3.0,
            plateau: None,
            t_spread: None,
            t_end: None,
            subtract_plateau: false,
        }
    }
}

impl ExpFitOptions {
    pub fn with_plateau(mut self, plateau: f64) -> Self {
        self.plateau = Some(plateau);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub sigma2: Option<f64>,
    /// `1/τ_φ`.
    pub rate: f64,
    pub rate_err: f64,
    pub fit_window: (f64, f64),
    pub plateau: f64,
    pub t_spread: Option<f64>,
    pub r2: f64,
    pub n_samples: usize,
}

/// `1/τ` from a regression of `ln M` on `t` over the exponential window.
///
/// The window is `[max(onset, t_spread), t_end]`. Here `t_end` is the last
/// sample with `M ≥ guard · plateau`. If the curve is already inside the guard
/// band at the window start, the fit fails instead of guessing.
pub fn fit_exponential(series: &TimeSeries, opts: &ExpFitOptions) -> Result<RateFit> {
    let plateau = match opts.plateau {
        Some(p) => p,
        None => estimate_plateau(series, DEFAULT_TAIL_FRACTION)?,
    };
    let start = opts.t_spread.map_or(opts.onset, |ts| ts.max(opts.onset));
    let floor = opts.guard * plateau;
    let hard_end = opts.t_end.unwrap_or(f64::INFINITY);
    let candidates: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, _)| *t >= start && *t <= hard_end)
        .collect();
    let Some(&(_, first)) = candidates.first() else {
        return Err(Error::InsufficientSamples {
            what: "exponential window",
            needed: 10,
            found: 0,
        });
    };
    if first < floor {
        let t_end = series
            .iter()
            .filter(|(_, v)| *v >= floor)
            .map(|(t, _)| t)
            .last()
            .unwrap_or(0.0);
        return Err(Error::PlateauBeforeOnset { onset: start, t_end });
    }
    let end = candidates
        .iter()
        .filter(|(_, v)| *v >= floor && *v > 0.0)
        .map(|(t, _)| *t)
        .last()
        .unwrap_or(start);
    let shift = if opts.subtract_plateau { plateau } else { 0.0 };
    let (x, y): (Vec<f64>, Vec<f64>) = candidates
        .iter()
        .filter(|(t, v)| *t <= end && *v > shift)
        .map(|(t, v)| (*t, (v - shift).ln()))
        .unzip();
    if x.len() < 10 {
        return Err(Error::InsufficientSamples {
            what: "exponential window",
            needed: 10,
            found: x.len(),
        });
    }
    let fit = linear_fit(&x, &y)?;
    Ok(RateFit {
        sigma2: None,
        rate: -fit.slope,
        rate_err: fit.slope_err,
        fit_window: (x[0], end),
        plateau,
        t_spread: opts.t_spread,
        r2: fit.r2,
        n_samples: x.len(),
    })
}

/// Golden-rule parameters with `1/τ_FGR = 2Γ = 2π σ² N₁` (ħ = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FgrParams {
    pub sigma2: f64,
    pub gamma: f64,
    pub n1: f64,
    pub tau_fgr: f64,
}

impl FgrParams {
    pub fn rate(&self) -> f64 {
        2.0 * self.gamma
    }

    /// Parameters reproducing a measured rate: `Γ = rate/2`, `N₁` inferred.
    pub fn from_rate(sigma2: f64, rate: f64) -> Self {
        let gamma = rate / 2.0;
        Self {
            sigma2,
            gamma,
            n1: if sigma2 > 0.0 { gamma / (PI * sigma2) } else { 0.0 },
            tau_fgr: 1.0 / rate,
        }
    }
}

pub fn fgr_predict(sigma2: f64, n1: f64) -> FgrParams {
    let gamma = PI * sigma2 * n1;
    FgrParams {
        sigma2,
        gamma,
        n1,
        tau_fgr: 1.0 / (2.0 * gamma),
    }
}

/// One decay channel: second moment `|V|²` and density of directly connected
/// states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FgrChannel {
    pub sigma2: f64,
    pub n1: f64,
}

/// Channel-summed golden rule. The returned `n1` is the σ²-weighted mean
/// density, so `2Γ = 2π σ² N₁` still holds.
pub fn fgr_predict_channels(channels: &[FgrChannel]) -> FgrParams {
    let sigma2: f64 = channels.iter().map(|c| c.sigma2).sum();
    let gamma: f64 = channels.iter().map(|c| PI * c.sigma2 * c.n1).sum();
    FgrParams {
        sigma2,
        gamma,
        n1: if sigma2 > 0.0 { gamma / (PI * sigma2) } else { 0.0 },
        tau_fgr: 1.0 / (2.0 * gamma),
    }
}

/// Gaussian-to-exponential interpolation
/// `P(t) = exp[2Γ²/σ² − 2 √(Γ⁴/σ⁴ + Γ² t²)]`.
pub fn interpolation_curve(params: &FgrParams, times: &[f64]) -> TimeSeries {
    let g2 = params.gamma * params.gamma;
    let a = g2 / params.sigma2;
    let values = times
        .iter()
        .map(|t| (2.0 * a - 2.0 * (a * a + g2 * t * t).sqrt()).exp())
        .collect();
    TimeSeries::new(times.to_vec(), values, Observable::SP)
}

/// One measured rate on the `(α, J_SE)` grid, `J_SE` in units of `J_E`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub alpha: f64,
    pub j_se: f64,
    pub fit: RateFit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaFit {
    pub alpha: f64,
    /// Slope of `1/τ_φ` vs `J_SE²`.
    pub slope: f64,
    pub slope_err: f64,
    /// `1/τ₀(α)`.
    pub offset: f64,
    pub offset_err: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FgrDecomposition {
    pub slope_xy: f64,
    pub slope_xy_err: f64,
    pub slope_zz: f64,
    pub slope_zz_err: f64,
    /// R² of the slope-vs-α² line.
    pub r2: f64,
    /// Covariance of the `(intercept, slope)` estimates of that line.
    pub covariance: [[f64; 2]; 2],
    pub per_alpha: Vec<AlphaFit>,
}

/// Two-stage regression: per α, `1/τ_φ = s(α) J_SE² + 1/τ₀(α)`; then
/// `s(α) = XY + ZZ·α²`.
pub fn fgr_decompose(points: &[RatePoint]) -> Result<FgrDecomposition> {
    let mut alphas: Vec<f64> = Vec::new();
    for p in points {
        if !alphas.iter().any(|a| *a == p.alpha) {
            alphas.push(p.alpha);
        }
    }
    if alphas.len() < 3 {
        return Err(Error::SingularRegression(format!(
            "need at least 3 alpha values, found {}",
            alphas.len()
        )));
    }
    let mut per_alpha = Vec::with_capacity(alphas.len());
    for &alpha in &alphas {
        let (x, y): (Vec<f64>, Vec<f64>) = points
            .iter()
            .filter(|p| p.alpha == alpha)
            .map(|p| (p.j_se * p.j_se, p.fit.rate))
            .unzip();
        if x.len() < 3 {
            return Err(Error::SingularRegression(format!(
                "alpha = {alpha} has {} coupling values, need at least 3",
                x.len()
            )));
        }
        let f = linear_fit(&x, &y)?;
        per_alpha.push(AlphaFit {
            alpha,
            slope: f.slope,
            slope_err: f.slope_err,
            offset: f.intercept,
            offset_err: f.intercept_err,
            r2: f.r2,
        });
    }
    let x: Vec<f64> = per_alpha.iter().map(|a| a.alpha * a.alpha).collect();
    let y: Vec<f64> = per_alpha.iter().map(|a| a.slope).collect();
    let f = linear_fit(&x, &y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let s2 = if n > 2.0 {
        (1.0 - f.r2) * y.iter().map(|v| (v - y.iter().sum::<f64>() / n).powi(2)).sum::<f64>() / (n - 2.0)
    } else {
        f64::NAN
    };
    let cov_is = -mx * s2 / sxx;
    Ok(FgrDecomposition {
        slope_xy: f.intercept,
        slope_xy_err: f.intercept_err,
        slope_zz: f.slope,
        slope_zz_err: f.slope_err,
        r2: f.r2,
        covariance: [
            [f.intercept_err.powi(2), cov_is],
            [cov_is, f.slope_err.powi(2)],
        ],
        per_alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(times: Vec<f64>, f: impl Fn(f64) -> f64) -> TimeSeries {
        let values = times.iter().map(|t| f(*t)).collect();
        TimeSeries::new(times, values, Observable::MLE)
    }

    fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
        let n = ((hi - lo) / step).round() as usize;
        (0..=n).map(|k| lo + k as f64 * step).collect()
    }

    fn rate_fit(rate: f64) -> RateFit {
        RateFit {
            sigma2: None,
            rate,
            rate_err: 0.0,
            fit_window: (0.0, 1.0),
            plateau: 0.1,
            t_spread: None,
            r2: 1.0,
            n_samples: 10,
        }
    }

    #[test]
    fn linear_fit_recovers_line() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 2.0).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope - 3.0).abs() < 1e-14 && (f.intercept + 2.0).abs() < 1e-13);
        assert!((f.r2 - 1.0).abs() < 1e-14);
        assert!(f.slope_err < 1e-12);
    }

    #[test]
    fn linear_fit_standard_errors() {
        // residuals ±1 alternate around y = x; textbook formulas by hand
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 0.0, 3.0, 2.0];
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope - 0.6).abs() < 1e-14);
        assert!((f.intercept - 0.6).abs() < 1e-14);
        // sse = 3.2, s² = 1.6, sxx = 5
        assert!((f.slope_err - (1.6f64 / 5.0).sqrt()).abs() < 1e-14);
        assert!((f.intercept_err - (1.6f64 * (0.25 + 2.25 / 5.0)).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn degenerate_abscissae_are_singular() {
        assert!(matches!(linear_fit(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0]), Err(Error::SingularRegression(_))));
    }

    #[test]
    fn quadratic_fit_is_exact_on_its_model() {
        let s = series(grid(0.0, 0.5, 0.05), |t| 1.0 - 0.0123 * t * t);
        assert!((fit_quadratic(&s, 0.5).unwrap() - 0.0123).abs() < 1e-15);
    }

    #[test]
    fn quadratic_fit_of_flat_curve_is_zero() {
        let s = series(grid(0.0, 0.5, 0.05), |_| 1.0);
        assert_eq!(fit_quadratic(&s, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_fit_needs_five_samples() {
        let s = series(grid(0.0, 0.5, 0.125), |t| 1.0 - t * t);
        assert!(matches!(fit_quadratic(&s, 0.5), Err(Error::InsufficientSamples { found: 4, .. })));
    }

    #[test]
    fn exponential_fit_recovers_rate() {
        let s = series(grid(0.0, 400.0, 0.5), |t| 0.9 * (-t / 20.0).exp() + 0.1);
        let opts = ExpFitOptions {
            subtract_plateau: true,
            ..Default::default()
        };
        let fit = fit_exponential(&s, &opts).unwrap();
        assert!((fit.plateau - 0.1).abs() < 1e-6);
        assert!((fit.rate - 0.05).abs() / 0.05 < 0.02, "rate {}", fit.rate);
        assert!(fit.fit_window.0 >= 2.0);
    }

    #[test]
    fn exponential_fit_is_exact_on_pure_exponential() {
        let s = series(grid(0.0, 50.0, 0.5), |t| (-0.07 * t).exp());
        let fit = fit_exponential(&s, &ExpFitOptions::default().with_plateau(0.0)).unwrap();
        assert!((fit.rate - 0.07).abs() < 1e-13);
        assert_eq!(fit.fit_window, (2.0, 50.0));
    }

    #[test]
    fn window_starts_after_spreading_time() {
        let s = series(grid(0.0, 50.0, 0.5), |t| (-0.07 * t).exp());
        let opts = ExpFitOptions {
            t_spread: Some(4.5),
            plateau: Some(0.0),
            ..Default::default()
        };
        let fit = fit_exponential(&s, &opts).unwrap();
        assert_eq!(fit.fit_window.0, 4.5);
    }

    #[test]
    fn fast_saturation_is_reported() {
        let s = series(grid(0.0, 100.0, 0.5), |t| 0.9 * (-t).exp() + 0.1);
        let r = fit_exponential(&s, &ExpFitOptions::default().with_plateau(0.1));
        assert!(matches!(r, Err(Error::PlateauBeforeOnset { .. })));
    }

    #[test]
    fn short_window_is_rejected() {
        let s = series(grid(0.0, 6.0, 0.5), |t| (-0.2 * t).exp());
        let r = fit_exponential(&s, &ExpFitOptions::default().with_plateau(0.0));
        assert!(matches!(r, Err(Error::InsufficientSamples { found: 9, .. })));
    }

    #[test]
    fn plateau_of_constant_curve() {
        let s = series(grid(0.0, 99.0, 1.0), |_| 0.37);
        assert!((estimate_plateau(&s, 0.2).unwrap() - 0.37).abs() < 1e-15);
        let short = series(grid(0.0, 50.0, 1.0), |_| 0.37);
        assert!(estimate_plateau(&short, 0.2).is_err());
    }

    #[test]
    fn spreading_time_of_gaussian() {
        // 1 - exp(-s t²) departs from s t² by 20% where s t² ≈ 0.38
        let s2 = 0.01;
        let s = series(grid(0.0, 20.0, 0.01), |t| (-s2 * t * t).exp());
        let ts = spreading_time(&s, s2, 0.2).unwrap();
        let rel = |t: f64| {
            let x = s2 * t * t;
            (((1.0 - (-x).exp()) - x) / x).abs()
        };
        assert!(rel(ts) > 0.2);
        assert!(rel(ts - 0.01) <= 0.2);
        // root of 1 - e^{-x} = 0.8 x
        let x = s2 * ts * ts;
        assert!((1.0 - (-x).exp() - 0.8 * x).abs() < 1e-3);
    }

    #[test]
    fn fgr_arithmetic() {
        let p = fgr_predict(0.0625, 1.0);
        assert!((p.rate() - 2.0 * PI * 0.0625).abs() < 1e-15);
        assert!((1.0 / p.tau_fgr - 0.39269908169872414).abs() < 1e-12);
        assert_eq!(fgr_predict(0.3, 0.0).rate(), 0.0);
        let back = FgrParams::from_rate(0.0625, p.rate());
        assert!((back.n1 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn channel_sum_adds_rates() {
        let a = FgrChannel { sigma2: 0.01, n1: 1.0 };
        let b = FgrChannel { sigma2: 0.02, n1: 0.5 };
        let p = fgr_predict_channels(&[a, b]);
        let expect = fgr_predict(a.sigma2, a.n1).rate() + fgr_predict(b.sigma2, b.n1).rate();
        assert!((p.rate() - expect).abs() < 1e-15);
        assert!((2.0 * PI * p.sigma2 * p.n1 - p.rate()).abs() < 1e-15);
    }

    #[test]
    fn interpolation_limits() {
        let p = fgr_predict(0.04, 1.0);
        let short = interpolation_curve(&p, &[0.0, 1e-3]);
        assert_eq!(short.values[0], 1.0);
        let gauss = (-p.sigma2 * 1e-6f64).exp();
        assert!((short.values[1] - gauss).abs() < 1e-12);
        let long = interpolation_curve(&p, &[1000.0, 1001.0]);
        let slope = (long.values[1].ln() - long.values[0].ln()) / 1.0;
        assert!((slope + p.rate()).abs() < 1e-5);
    }

    #[test]
    fn decomposition_recovers_planted_coefficients() {
        let (xy, zz) = (0.92, 1.12);
        let mut pts = Vec::new();
        for (alpha, off) in [(0.0, 0.01), (-0.5, 0.02), (1.0, 0.005)] {
            for j in [0.05, 0.075, 0.1, 0.125, 0.15] {
                let rate = (xy + zz * alpha * alpha) * j * j + off;
                pts.push(RatePoint { alpha, j_se: j, fit: rate_fit(rate) });
            }
        }
        let d = fgr_decompose(&pts).unwrap();
        assert!((d.slope_xy - xy).abs() < 1e-10 && (d.slope_zz - zz).abs() < 1e-10);
        assert!((d.r2 - 1.0).abs() < 1e-12);
        assert!((d.per_alpha[1].offset - 0.02).abs() < 1e-12);
    }

    #[test]
    fn decomposition_needs_three_alphas() {
        let pts: Vec<RatePoint> = [0.0, 1.0]
            .iter()
            .flat_map(|&a| {
                [0.05, 0.1, 0.15].map(|j| RatePoint { alpha: a, j_se: j, fit: rate_fit(j * j) })
            })
            .collect();
        assert!(matches!(fgr_decompose(&pts), Err(Error::SingularRegression(_))));
    }
}
