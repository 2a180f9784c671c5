use std::collections::BTreeMap;

use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// (1/|Ω| Σ_{(i,j)∈Ω} (X*_ij − X̂_ij)²)^{1/2}.
pub fn rmse(truth: &DataMatrix, completed: &DataMatrix, omega: &[(usize, usize)]) -> Result<f64> {
    if truth.dim() != completed.dim() {
        return Err(Error::ShapeMismatch {
            expected: truth.dim(),
            actual: completed.dim(),
        });
    }
    if omega.is_empty() {
        return Err(Error::EmptyOmega);
    }
    let (m, n) = truth.dim();
    let mut sum = 0.0;
    for &(i, j) in omega {
        if i >= m || j >= n {
            return Err(Error::param("omega", format!("cell ({i}, {j}) outside {m}x{n}")));
        }
        let d = truth[(i, j)] - completed[(i, j)];
        sum += d * d;
    }
    Ok((sum / omega.len() as f64).sqrt())
}

/// 1 − (rmse − min) / (max − min) per method: the best method scores 1, the
/// worst 0. When every method ties, all score 0.5.
pub fn imputation_accuracy(rmse_by_method: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>> {
    if rmse_by_method.len() < 2 {
        return Err(Error::TooFewMethods {
            needed: 2,
            got: rmse_by_method.len(),
        });
    }
    if let Some((name, v)) = rmse_by_method.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::param("rmse", format!("{name}: non-finite value {v}")));
    }
    let min = rmse_by_method.values().copied().fold(f64::INFINITY, f64::min);
    let max = rmse_by_method.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    Ok(rmse_by_method
        .iter()
        .map(|(k, &v)| {
            let acc = if span > 0.0 {
                (1.0 - (v - min) / span).clamp(0.0, 1.0)
            } else {
                0.5
            };
            (k.clone(), acc)
        })
        .collect())
}

/// Mean and population standard deviation; `None` for an empty slice.
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}
