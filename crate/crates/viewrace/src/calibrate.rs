//! Parameter estimation from an observed viewcount series.
//!
//! For a single content under constant acceleration the fluid solution is
//! `x(t) = 1 − (1 − z) e^{−λ u t}`, so `−ln(1 − views/M)` is affine in `t`
//! with slope `λ u` and intercept `−ln(1 − z)`. A least-squares line fit
//! recovers both.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibrateError {
    #[error("need at least 3 observations (got {got})")]
    TooFewPoints { got: usize },
    #[error("observation times must be strictly increasing")]
    NonIncreasingTimes,
    #[error("degenerate series: {reason}")]
    DegenerateSeries { reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaFit {
    /// Estimated per-viewer intensity (1/day).
    pub lambda_hat: f64,
    /// Estimated initial watched fraction.
    pub z_hat: f64,
    /// RMS residual of the linearized fit.
    pub rms_residual: f64,
}

/// Least-squares fit of `−ln(1 − views/M) = (λ u) t + const` on a series of
/// `(t, views)` observations.
pub fn estimate_lambda(
    series: &[(f64, f64)],
    viewers: f64,
    u_assumed: f64,
) -> Result<LambdaFit, CalibrateError> {
    if series.len() < 3 {
        return Err(CalibrateError::TooFewPoints { got: series.len() });
    }
    if !series.windows(2).all(|w| w[0].0 < w[1].0) {
        return Err(CalibrateError::NonIncreasingTimes);
    }
    let mut w = Vec::with_capacity(series.len());
    for &(t, views) in series {
        let frac = views / viewers;
        if frac >= 1.0 {
            return Err(CalibrateError::DegenerateSeries {
                reason: format!("views {views} saturate the viewer base {viewers}"),
            });
        }
        if frac < 0.0 {
            return Err(CalibrateError::DegenerateSeries {
                reason: format!("negative views {views}"),
            });
        }
        w.push((t, -(-frac).ln_1p()));
    }

    let n = w.len() as f64;
    let sum_t: f64 = w.iter().map(|p| p.0).sum();
    let sum_w: f64 = w.iter().map(|p| p.1).sum();
    let sum_tt: f64 = w.iter().map(|p| p.0 * p.0).sum();
    let sum_tw: f64 = w.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sum_tt - sum_t * sum_t;
    let slope = (n * sum_tw - sum_t * sum_w) / denom;
    let intercept = (sum_w - slope * sum_t) / n;
    if !(slope > 0.0) {
        return Err(CalibrateError::DegenerateSeries {
            reason: format!("nonpositive slope {slope}"),
        });
    }

    let mse: f64 = w
        .iter()
        .map(|&(t, wv)| {
            let r = wv - (slope * t + intercept);
            r * r
        })
        .sum::<f64>()
        / n;
    Ok(LambdaFit {
        lambda_hat: slope / u_assumed,
        z_hat: 1.0 - (-intercept).exp(),
        rms_residual: mse.sqrt(),
    })
}
