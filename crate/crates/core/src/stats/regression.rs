use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Simple linear regression `y = beta0 + beta1 * x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub beta0: f64,
    pub beta1: f64,
    pub r2: f64,
    pub adj_r2: f64,
    pub n: usize,
    pub residual_sd: f64,
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!("x has {} values, y has {}", x.len(), y.len())));
    }
    if x.len() < 3 {
        return Err(Error::InsufficientData(format!("need at least 3 observations, got {}", x.len())));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("observations must be finite".into()));
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Centred sums `(Sxx, Syy, Sxy)`.
fn centred_sums(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let (mx, my) = (mean(x), mean(y));
    x.iter().zip(y).fold((0.0, 0.0, 0.0), |(sxx, syy, sxy), (&a, &b)| {
        let (dx, dy) = (a - mx, b - my);
        (sxx + dx * dx, syy + dy * dy, sxy + dx * dy)
    })
}

pub fn ols_fit(x: &[f64], y: &[f64]) -> Result<RegressionFit> {
    check_pair(x, y)?;
    let (sxx, syy, sxy) = centred_sums(x, y);
    if sxx <= 0.0 {
        return Err(Error::Degenerate("predictor is constant".into()));
    }
    let beta1 = sxy / sxx;
    let beta0 = mean(y) - beta1 * mean(x);
    let sse: f64 = x.iter().zip(y).map(|(&a, &b)| (b - beta0 - beta1 * a).powi(2)).sum();
    let n = x.len();
    let r2 = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 0.0 };
    let adj_r2 = 1.0 - (1.0 - r2) * (n - 1) as f64 / (n - 2) as f64;
    Ok(RegressionFit {
        beta0,
        beta1,
        r2,
        adj_r2,
        n,
        residual_sd: (sse / (n - 2) as f64).sqrt(),
    })
}

pub fn correct_count(fit: &RegressionFit, visible_count: f64) -> f64 {
    fit.beta0 + fit.beta1 * visible_count
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let (sxx, syy, sxy) = centred_sums(x, y);
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::Degenerate("correlation of a constant series".into()));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}
