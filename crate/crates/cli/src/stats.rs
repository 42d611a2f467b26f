//! Log-log rate fits.

use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Least-squares fit of `ln value = intercept + slope · ln n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub std_error: f64,
    /// 95% confidence band of the slope.
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
}

/// Fits a power law to `(n, value)` pairs; needs at least four distinct n.
pub fn rate_study_fit(points: &[(f64, f64)]) -> Result<RateFit> {
    let mut distinct: Vec<f64> = points.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 4 {
        bail!("rate fit: need at least 4 distinct n values, got {}", distinct.len());
    }
    if points.iter().any(|&(n, v)| !(n > 0.0 && v > 0.0)) {
        bail!("rate fit: n and values must be positive");
    }
    let k = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let dof = k - 2.0;
    let std_error = (sse / dof / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, dof).expect("dof is positive").inverse_cdf(0.975);
    Ok(RateFit {
        slope,
        intercept,
        std_error,
        lower: slope - t * std_error,
        upper: slope + t * std_error,
        points: points.len(),
    })
}
