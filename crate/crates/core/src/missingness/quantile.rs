use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{sample_bernoulli_mask, DataMatrix, Mask, PropensityMatrix, SeedSpec};
use crate::error::{Error, Result};

/// Linear-interpolation quantile of `values` at level `q` ∈ [0, 1].
/// `values` need not be sorted. Panics on an empty slice.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    sorted_quantile(&v, q)
}

fn sorted_quantile(v: &[f64], q: f64) -> f64 {
    assert!(!v.is_empty(), "quantile of empty slice");
    let h = (v.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CensorDirection {
    Left,
    Right,
}

/// Per-column censoring directions, each side with probability 1/2.
pub fn censoring_directions(cols: usize, seed: &SeedSpec) -> Vec<CensorDirection> {
    let mut rng = seed.child("direction").rng();
    (0..cols)
        .map(|_| {
            if rng.random_bool(0.5) {
                CensorDirection::Left
            } else {
                CensorDirection::Right
            }
        })
        .collect()
}

/// Censoring MNAR: per column, mask values strictly below the q-quantile
/// (left) or strictly above the (1 − q)-quantile (right).
pub fn gen_censoring(truth: &DataMatrix, q_censor: f64, seed: &SeedSpec) -> Result<Mask> {
    if !(0.0..0.5).contains(&q_censor) {
        return Err(Error::param("q_censor", format!("{q_censor} not in [0, 0.5)")));
    }
    let (m, n) = truth.dim();
    let dirs = censoring_directions(n, seed);
    let x = truth.values();
    let mut ind = Array2::from_elem((m, n), true);
    for (j, dir) in dirs.iter().enumerate() {
        let col: Vec<f64> = x.column(j).to_vec();
        match dir {
            CensorDirection::Left => {
                let cut = quantile(&col, q_censor);
                for (i, &v) in col.iter().enumerate() {
                    ind[[i, j]] = v >= cut || v.is_nan();
                }
            }
            CensorDirection::Right => {
                let cut = quantile(&col, 1.0 - q_censor);
                for (i, &v) in col.iter().enumerate() {
                    ind[[i, j]] = v <= cut || v.is_nan();
                }
            }
        }
    }
    Ok(Mask::new(ind))
}

/// Hard polarization: per column, mask values strictly between the
/// q-quantile and the (1 − q)-quantile.
pub fn gen_polarization_hard(truth: &DataMatrix, q_thresh: f64, _seed: &SeedSpec) -> Result<Mask> {
    if !(q_thresh > 0.0 && q_thresh < 0.5) {
        return Err(Error::param("q_thresh", format!("{q_thresh} not in (0, 0.5)")));
    }
    let (m, n) = truth.dim();
    let x = truth.values();
    let mut ind = Array2::from_elem((m, n), true);
    for j in 0..n {
        let mut col = x.column(j).to_vec();
        col.sort_by(|a, b| a.total_cmp(b));
        let lo = sorted_quantile(&col, q_thresh);
        let hi = sorted_quantile(&col, 1.0 - q_thresh);
        for i in 0..m {
            let v = x[[i, j]];
            ind[[i, j]] = !(lo < v && v < hi);
        }
    }
    Ok(Mask::new(ind))
}

/// P(missing) = ε + (1 − 2ε)·|x − median|^α / max_k |x_k − median|^α, per
/// column; ε everywhere on a constant column.
pub fn soft_polarization_missing_prob(truth: &DataMatrix, alpha: f64, eps: f64) -> Array2<f64> {
    let (m, n) = truth.dim();
    let x = truth.values();
    let mut out = Array2::from_elem((m, n), eps);
    for j in 0..n {
        let col = x.column(j).to_vec();
        let med = quantile(&col, 0.5);
        let dist: Vec<f64> = col.iter().map(|v| (v - med).abs().powf(alpha)).collect();
        let max = dist.iter().copied().fold(0.0, f64::max);
        if max > 0.0 {
            for (i, d) in dist.iter().enumerate() {
                // eps + (1 - 2 eps) r, arranged to hit both endpoints exactly.
                let r = d / max;
                out[[i, j]] = eps * (1.0 - r) + (1.0 - eps) * r;
            }
        }
    }
    out
}

/// Soft polarization: mask sampled from [`soft_polarization_missing_prob`].
pub fn gen_polarization_soft(
    truth: &DataMatrix,
    alpha: f64,
    eps: f64,
    seed: &SeedSpec,
) -> Result<Mask> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::param("alpha", format!("{alpha} must be > 0")));
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::param("eps", format!("{eps} not in (0, 0.5)")));
    }
    let missing = soft_polarization_missing_prob(truth, alpha, eps);
    let observe = PropensityMatrix::new(missing.mapv(|q| (1.0 - q).clamp(0.0, 1.0)))?;
    Ok(sample_bernoulli_mask(&observe, &seed.child("mask")))
}
