//! Contraction-rate fits on Lyapunov traces and log-log slope fits for sweeps.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{HarnessError, Result};

/// Minimum number of usable entries for [`estimate_rate`].
pub const MIN_USABLE: usize = 10;
/// Share of the usable entries, counted from the end, entering the fit.
pub const TAIL_FRACTION: f64 = 0.6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub rho_hat: f64,
    pub r_squared: f64,
    /// Half-open index range of the fitted entries.
    pub window: (usize, usize),
}

struct LineFit {
    slope: f64,
    intercept: f64,
    r_squared: f64,
    stderr: f64,
}

fn least_squares(x: &[f64], y: &[f64]) -> LineFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let stderr = if x.len() > 2 && sxx > 0.0 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    LineFit {
        slope,
        intercept,
        r_squared,
        stderr,
    }
}

/// Fits `log E_k` against `k` over the last 60% of the leading run of entries
/// above `100 eps E_0`; `rho_hat = exp(slope)`.
pub fn estimate_rate(values: &[f64]) -> Result<RateFit> {
    let e0 = *values
        .first()
        .ok_or_else(|| HarnessError::Usage("empty trace".into()))?;
    let floor = 100.0 * f64::EPSILON * e0;
    let usable = values
        .iter()
        .take_while(|&&v| v > floor && v.is_finite())
        .count();
    if usable < MIN_USABLE {
        return Err(HarnessError::Usage(format!(
            "rate fit needs at least {MIN_USABLE} entries above the floor, got {usable}"
        )));
    }
    let len = ((usable as f64) * TAIL_FRACTION).ceil() as usize;
    let start = usable - len.max(2);
    let xs: Vec<f64> = (start..usable).map(|k| k as f64).collect();
    let ys: Vec<f64> = values[start..usable].iter().map(|v| v.ln()).collect();
    let fit = least_squares(&xs, &ys);
    Ok(RateFit {
        rho_hat: fit.slope.exp(),
        r_squared: fit.r_squared,
        window: (start, usable),
    })
}

/// Least-squares fit of `log y` against `log x` with a 95% interval on the
/// slope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub ci95: (f64, f64),
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

pub fn fit_loglog(x: &[f64], y: &[f64]) -> Result<SlopeFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(HarnessError::Usage(
            "slope fit needs at least two paired points".into(),
        ));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(HarnessError::Usage("slope fit needs positive data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let fit = least_squares(&lx, &ly);
    let ci95 = if fit.stderr.is_finite() {
        let t = StudentsT::new(0.0, 1.0, (x.len() - 2) as f64)
            .map(|d| d.inverse_cdf(0.975))
            .unwrap_or(f64::INFINITY);
        (fit.slope - t * fit.stderr, fit.slope + t * fit.stderr)
    } else {
        (f64::NEG_INFINITY, f64::INFINITY)
    };
    Ok(SlopeFit {
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        ci95,
        x: x.to_vec(),
        y: y.to_vec(),
    })
}
