//! Ordinary least squares on `(log x, log metric)` with a leading-point window.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which leading (largest-x, pre-asymptotic) points to drop before fitting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum WindowPolicy {
    All,
    DropLeading { count: usize },
    /// Drop leading points until the slope of the window and of the window
    /// without its first point differ by less than `tolerance`.
    Stabilize { tolerance: f64, min_points: usize },
}

impl Default for WindowPolicy {
    fn default() -> Self {
        WindowPolicy::Stabilize {
            tolerance: 0.02,
            min_points: 4,
        }
    }
}

impl WindowPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            WindowPolicy::Stabilize {
                tolerance,
                min_points,
            } if !(tolerance > 0.0) || min_points < 4 => Err(Error::InvalidInput(
                "stabilize window needs tolerance > 0 and min_points >= 4".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Fitted exponent with a half-width of two standard errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub half_width: f64,
    /// Index of the first point used, counted among usable points.
    pub window_start: usize,
    pub points_used: usize,
}

/// `(slope, intercept, standard error of the slope)`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let se = if xs.len() > 2 {
        (ssr / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, intercept, se)
}

const MIN_POINTS: usize = 4;

/// Fits `log metric = slope·log x + c` on `(x, metric)` pairs given in sweep
/// order. Points with non-finite or non-positive values are skipped.
pub fn fit_slope(points: &[(f64, f64)], policy: WindowPolicy) -> Result<SlopeFit> {
    policy.validate()?;
    let (lx, ly): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|(x, y)| x.is_finite() && *x > 0.0 && y.is_finite() && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .unzip();
    let usable = lx.len();
    let fit_from = |k: usize| least_squares(&lx[k..], &ly[k..]);
    let start = match policy {
        WindowPolicy::All => 0,
        WindowPolicy::DropLeading { count } => count,
        WindowPolicy::Stabilize {
            tolerance,
            min_points,
        } => {
            let last = usable.saturating_sub(min_points);
            (0..last)
                .find(|&k| (fit_from(k).0 - fit_from(k + 1).0).abs() < tolerance)
                .unwrap_or(last)
        }
    };
    if usable < start + MIN_POINTS {
        return Err(Error::InsufficientPoints {
            got: usable.saturating_sub(start),
            need: MIN_POINTS,
        });
    }
    let (slope, intercept, se) = fit_from(start);
    Ok(SlopeFit {
        slope,
        intercept,
        half_width: 2.0 * se,
        window_start: start,
        points_used: usable - start,
    })
}
