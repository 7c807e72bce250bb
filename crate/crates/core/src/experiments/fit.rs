//! Least-squares fit of `h(S) = mu / sqrt(S)` and small rank/regression helpers.

use serde::{Deserialize, Serialize};

use super::ExperimentError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub mu: f64,
    pub residual_rms: f64,
    /// `1 - SS_res / SS_tot` with `SS_tot` taken about the mean gap.
    pub r_squared: f64,
}

/// Closed form `mu = sum(gap_i / sqrt(S_i)) / sum(1 / S_i)`.
pub fn fit_inverse_sqrt(s: &[f64], gap: &[f64]) -> Result<FitResult, ExperimentError> {
    if s.len() != gap.len() {
        return Err(ExperimentError::Precondition(format!("{} sizes but {} gaps", s.len(), gap.len())));
    }
    if s.len() < 3 {
        return Err(ExperimentError::Precondition(format!("fit needs at least 3 points, got {}", s.len())));
    }
    if s.iter().any(|&x| !(x > 0.0 && x.is_finite())) || gap.iter().any(|g| !g.is_finite()) {
        return Err(ExperimentError::Precondition("fit needs positive sizes and finite gaps".into()));
    }
    let num: f64 = s.iter().zip(gap).map(|(&si, &g)| g / si.sqrt()).sum();
    let den: f64 = s.iter().map(|&si| 1.0 / si).sum();
    let mu = num / den;
    let ss_res: f64 = s.iter().zip(gap).map(|(&si, &g)| (g - mu / si.sqrt()).powi(2)).sum();
    let mean = gap.iter().sum::<f64>() / gap.len() as f64;
    let ss_tot: f64 = gap.iter().map(|g| (g - mean).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    };
    Ok(FitResult { mu, residual_rms: (ss_res / s.len() as f64).sqrt(), r_squared })
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        // ties share the average rank
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        f64::NAN
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Spearman rank correlation (average ranks for ties). NaN for constant inputs.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&ranks(x), &ranks(y))
}

/// Least-squares slope of `ln y` against `ln x`. `None` if fewer than two
/// usable points or any `y <= 0`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 || x.iter().chain(y).any(|&v| !(v > 0.0 && v.is_finite())) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}
