use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{calibrate_intercept, check_unit_open, mean_sigmoid};
use crate::data::{sample_bernoulli_mask, sigmoid, DataMatrix, Mask, PropensityMatrix, SeedSpec};
use crate::error::{Error, Result};

/// Each entry missing independently with probability `p_missing`.
pub fn gen_mcar(truth: &DataMatrix, p_missing: f64, seed: &SeedSpec) -> Result<Mask> {
    if !(0.0..1.0).contains(&p_missing) {
        return Err(Error::param("p_missing", format!("{p_missing} not in [0, 1)")));
    }
    let (m, n) = truth.dim();
    let p = PropensityMatrix::constant(m, n, 1.0 - p_missing)?;
    Ok(sample_bernoulli_mask(&p, seed))
}

/// The random ingredients of a column-wise MAR mask.
#[derive(Debug, Clone)]
pub struct ColMarDesign {
    /// Fully observed predictor columns, ascending.
    pub predictors: Vec<usize>,
    /// For each masked column: (column, weights over `predictors`, intercept).
    pub columns: Vec<(usize, Vec<f64>, f64)>,
    /// P(missing) per cell; zero on predictor columns.
    pub missing_prob: Array2<f64>,
}

pub fn col_mar_design(
    truth: &DataMatrix,
    p_missing: f64,
    predictor_fraction: f64,
    seed: &SeedSpec,
) -> Result<ColMarDesign> {
    let (m, n) = truth.dim();
    if n < 2 {
        return Err(Error::param("cols", "column-wise MAR needs at least 2 columns"));
    }
    check_unit_open("p_missing", p_missing)?;
    check_unit_open("predictor_fraction", predictor_fraction)?;
    let n_pred = ((predictor_fraction * n as f64).ceil() as usize).max(1);
    if n_pred >= n {
        return Err(Error::param(
            "predictor_fraction",
            format!("{n_pred} predictors leave no column to mask"),
        ));
    }
    // Predictor columns stay fully observed, so the masked columns carry the
    // whole budget: p · n / (n − n_pred) each keeps the overall rate at p.
    let per_column = p_missing * n as f64 / (n - n_pred) as f64;
    if per_column >= 1.0 {
        return Err(Error::param(
            "p_missing",
            format!("{p_missing} cannot be reached with {n_pred} fully observed predictors"),
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed.child("predictors").rng());
    let mut predictors = order[..n_pred].to_vec();
    predictors.sort_unstable();
    let mut targets = order[n_pred..].to_vec();
    targets.sort_unstable();

    let x = truth.values();
    let mut wrng = seed.child("weights").rng();
    let scale = (n_pred as f64).sqrt().recip();
    let mut missing_prob = Array2::zeros((m, n));
    let mut columns = Vec::with_capacity(targets.len());
    for &j in &targets {
        let w: Vec<f64> = (0..n_pred)
            .map(|_| scale * Distribution::<f64>::sample(&StandardNormal, &mut wrng))
            .collect::<Vec<f64>>();
        let scores: Vec<f64> = (0..m)
            .map(|i| predictors.iter().zip(&w).map(|(&k, wk)| wk * x[[i, k]]).sum())
            .collect();
        let b = calibrate_intercept(mean_sigmoid(&scores), per_column)?;
        for (i, s) in scores.iter().enumerate() {
            missing_prob[[i, j]] = sigmoid(s + b);
        }
        columns.push((j, w, b));
    }
    Ok(ColMarDesign {
        predictors,
        columns,
        missing_prob,
    })
}

/// Column-wise MAR: a seed-chosen set of ⌈predictor_fraction·n⌉ columns stays
/// fully observed and drives a logistic missingness model on every other
/// column. Intercepts are calibrated per column to p·n/(n − n_pred), so the
/// expected missing fraction of the whole matrix is `p_missing`.
pub fn gen_col_mar(
    truth: &DataMatrix,
    p_missing: f64,
    predictor_fraction: f64,
    seed: &SeedSpec,
) -> Result<Mask> {
    let design = col_mar_design(truth, p_missing, predictor_fraction, seed)?;
    let observe = PropensityMatrix::new(design.missing_prob.mapv(|q| 1.0 - q))?;
    Ok(sample_bernoulli_mask(&observe, &seed.child("mask")))
}

const SELF_MASKING_COEFFICIENTS: [f64; 4] = [-2.0, -1.0, 1.0, 2.0];

/// Self-masking MNAR: in each target column, P(missing | x) = σ(α·x + β₀) with
/// α drawn from {−2, −1, 1, 2} and β₀ calibrated so the column's mean missing
/// propensity equals `p_missing`.
pub fn gen_self_masking(
    truth: &DataMatrix,
    p_missing: f64,
    target_cols: Option<&[usize]>,
    seed: &SeedSpec,
) -> Result<Mask> {
    let n = truth.cols();
    let cols: Vec<usize> = match target_cols {
        Some(c) => c.to_vec(),
        None => (0..n).collect(),
    };
    let mut rng = seed.child("alpha").rng();
    let coefs: Vec<(usize, f64)> = cols
        .iter()
        .map(|&j| (j, SELF_MASKING_COEFFICIENTS[rng.random_range(0..4)]))
        .collect();
    self_mask_with(truth, p_missing, &coefs, seed)
}

/// Self-masking with explicit `(column, α)` pairs.
pub fn self_mask_with(
    truth: &DataMatrix,
    p_missing: f64,
    coefs: &[(usize, f64)],
    seed: &SeedSpec,
) -> Result<Mask> {
    let (m, n) = truth.dim();
    check_unit_open("p_missing", p_missing)?;
    if coefs.is_empty() {
        return Err(Error::param("target_cols", "no target columns"));
    }
    let x = truth.values();
    let mut observe = Array2::ones((m, n));
    for &(j, alpha) in coefs {
        if j >= n {
            return Err(Error::param("target_cols", format!("column {j} out of range")));
        }
        let logits: Vec<f64> = x.column(j).iter().map(|&v| alpha * v).collect();
        let b0 = calibrate_intercept(mean_sigmoid(&logits), p_missing)?;
        for (i, z) in logits.iter().enumerate() {
            observe[[i, j]] = 1.0 - sigmoid(z + b0);
        }
    }
    Ok(sample_bernoulli_mask(&PropensityMatrix::new(observe)?, &seed.child("mask")))
}
