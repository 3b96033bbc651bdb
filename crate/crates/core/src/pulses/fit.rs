//! Damped least-squares (Levenberg-Marquardt) fit of a two-Gaussian pulse.

use nalgebra::{SMatrix, SVector};

use super::{FittedPulse, GaussianTerm, StirapParams};
use crate::error::{Error, Result};

pub const FIT_MAX_ITERATIONS: usize = 500;
pub const FIT_GRADIENT_TOLERANCE: f64 = 1e-10;
const MIN_SAMPLES: usize = 50;

type Params = SVector<f64, 6>;
type Normal = SMatrix<f64, 6, 6>;

#[derive(Clone, Debug, PartialEq)]
pub struct FitOutcome {
    /// Terms ordered by decreasing width.
    pub pulse: FittedPulse,
    pub rms: f64,
    pub iterations: usize,
}

fn model(p: &Params, t: f64) -> f64 {
    (0..2)
        .map(|k| {
            let (a, c, w) = (p[3 * k], p[3 * k + 1], p[3 * k + 2]);
            let x = (t - c) / w;
            a * (-x * x).exp()
        })
        .sum()
}

fn jacobian_row(p: &Params, t: f64) -> Params {
    let mut row = Params::zeros();
    for k in 0..2 {
        let (a, c, w) = (p[3 * k], p[3 * k + 1], p[3 * k + 2]);
        let d = t - c;
        let e = (-(d * d) / (w * w)).exp();
        row[3 * k] = e;
        row[3 * k + 1] = a * e * 2.0 * d / (w * w);
        row[3 * k + 2] = a * e * 2.0 * d * d / (w * w * w);
    }
    row
}

fn sum_sq(p: &Params, samples: &[(f64, f64)]) -> f64 {
    samples.iter().map(|&(t, y)| (model(p, t) - y).powi(2)).sum()
}

fn rms(p: &Params, samples: &[(f64, f64)]) -> f64 {
    (sum_sq(p, samples) / samples.len() as f64).sqrt()
}

fn into_pulse(p: &Params) -> FittedPulse {
    let mut terms: Vec<GaussianTerm> = (0..2)
        .map(|k| GaussianTerm { amplitude: p[3 * k], center: p[3 * k + 1], width: p[3 * k + 2].abs() })
        .collect();
    terms.sort_by(|a, b| b.width.total_cmp(&a.width));
    FittedPulse::new(terms).expect("two terms with nonzero widths")
}

/// Fits Σ_{k=1,2} A_k exp(−(t−c_k)²/w_k²) to `(t, value)` samples.
///
/// Starts from both centres at the midpoint of the sampled window, widths
/// 0.16 and 0.08 of the window, and amplitudes of half the sampled peak.
pub fn fit_two_gaussians(samples: &[(f64, f64)]) -> Result<FitOutcome> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::Parameter(format!(
            "need at least {MIN_SAMPLES} samples to fit, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|(t, y)| !t.is_finite() || !y.is_finite()) {
        return Err(Error::Parameter("samples must be finite".into()));
    }
    let t_min = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let t_max = samples.iter().map(|s| s.0).fold(f64::NEG_INFINITY, f64::max);
    let span = t_max - t_min;
    if !(span > 0.0) {
        return Err(Error::Parameter("samples must span a positive time window".into()));
    }
    let width = StirapParams::DEFAULT_WIDTH_FRACTION * span;
    let center = t_min + span / 2.0;
    let peak = samples.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max).max(0.0);
    let mut p = Params::from([peak / 2.0, center, width, peak / 2.0, center, width / 2.0]);

    let mut lambda = 1e-3;
    let mut cost = sum_sq(&p, samples);
    for iteration in 0..FIT_MAX_ITERATIONS {
        let mut jtj = Normal::zeros();
        let mut grad = Params::zeros();
        for &(t, y) in samples {
            let row = jacobian_row(&p, t);
            let r = model(&p, t) - y;
            jtj += row * row.transpose();
            grad += row * r;
        }
        if grad.amax() < FIT_GRADIENT_TOLERANCE {
            return Ok(FitOutcome { pulse: into_pulse(&p), rms: rms(&p, samples), iterations: iteration });
        }

        let scale = jtj.diagonal().map(|d| d.max(1e-12 * jtj.diagonal().max().max(1e-300)));
        let mut accepted = false;
        while lambda < 1e16 {
            let mut damped = jtj;
            for i in 0..6 {
                damped[(i, i)] += lambda * scale[i];
            }
            let Some(step) = damped.lu().solve(&(-grad)) else {
                lambda *= 10.0;
                continue;
            };
            let trial = p + step;
            let trial_cost = sum_sq(&trial, samples);
            if trial_cost.is_finite() && trial_cost < cost {
                let tiny = step.norm() <= 1e-14 * (p.norm() + 1e-14);
                p = trial;
                cost = trial_cost;
                lambda = (lambda / 10.0).max(1e-15);
                accepted = true;
                if tiny {
                    return Ok(FitOutcome { pulse: into_pulse(&p), rms: rms(&p, samples), iterations: iteration + 1 });
                }
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no descent direction left at working precision
            return Ok(FitOutcome { pulse: into_pulse(&p), rms: rms(&p, samples), iterations: iteration + 1 });
        }
    }
    Err(Error::Fit { iterations: FIT_MAX_ITERATIONS, rms: rms(&p, samples) })
}
