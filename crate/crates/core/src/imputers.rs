//! Classical baselines behind one interface: column mean, row-wise kNN,
//! SoftImpute and ICE-style chained ridge regressions, plus the featurized
//! ridge regressor of [`crate::featurize`].
//!
//! Every imputer returns the completed matrix with observed entries copied
//! bit for bit, and a full matrix of its own predictions whose values at
//! observed cells feed the adaptive ensemble weight.

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::data::{is_missing, DataMatrix, MaskedDataset, SeedSpec};
use crate::error::{Error, Result};
use crate::featurize::{build_features, ridge_on_features};
use crate::linalg::ridge_fit;

/// Anything that can complete a masked dataset.
pub trait Impute: Sync {
    fn impute(&self, ds: &MaskedDataset) -> Result<ImputationResult>;
    fn label(&self) -> String;
}

/// Convergence record of an imputation run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub iterations: usize,
    /// Last convergence measure (relative change for SoftImpute, max
    /// absolute change for ICE).
    pub final_change: f64,
    pub converged: bool,
    /// SoftImpute objective after each iteration, starting at Z₀.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub objective: Vec<f64>,
    /// Blend weight on the first base, when the result is a blend.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

impl Diagnostics {
    fn closed_form() -> Self {
        Diagnostics {
            converged: true,
            ..Default::default()
        }
    }

    /// True when the recorded objective never rises by more than a relative
    /// 1e-9 from one iteration to the next.
    pub fn objective_non_increasing(&self) -> bool {
        self.objective
            .windows(2)
            .all(|w| w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImputationResult {
    pub completed: DataMatrix,
    /// The method's prediction for every cell; only the observed cells are
    /// meaningful to the ensembler.
    pub fitted_observed: Option<DataMatrix>,
    pub diagnostics: Diagnostics,
}

impl ImputationResult {
    /// Fitted values at Ω_obs in row-major order.
    pub fn fitted_at_observed(&self, ds: &MaskedDataset) -> Option<Vec<f64>> {
        let fitted = self.fitted_observed.as_ref()?.values();
        Some(
            ds.mask()
                .indicator()
                .iter()
                .zip(fitted.iter())
                .filter(|(&obs, _)| obs)
                .map(|(_, &v)| v)
                .collect(),
        )
    }
}

/// Copies the observed values of `ds` over `estimate`.
pub fn overlay_observed(ds: &MaskedDataset, estimate: &Array2<f64>) -> Result<DataMatrix> {
    let mut out = estimate.clone();
    for (o, &x) in out.iter_mut().zip(ds.observed()) {
        if !is_missing(x) {
            *o = x;
        }
    }
    DataMatrix::new(out)
}

/// Method tag plus hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Imputer {
    ColMean,
    Knn {
        k: usize,
    },
    SoftImpute {
        /// `None` selects 0.1·σ₁ of the mean-filled matrix.
        lambda: Option<f64>,
        max_iter: usize,
        tol: f64,
    },
    Ice {
        max_iter: usize,
        tol: f64,
        ridge_lambda: f64,
        /// Drives the column visiting order.
        seed: u64,
    },
    FeaturizedRidge {
        lambda: f64,
    },
}

impl Imputer {
    pub const TAGS: [&'static str; 5] = ["col-mean", "knn", "soft-impute", "ice", "featurized-ridge"];

    pub fn default_for(tag: &str) -> Result<Imputer> {
        Ok(match tag {
            "col-mean" => Imputer::ColMean,
            "knn" => Imputer::Knn { k: 5 },
            "soft-impute" => Imputer::SoftImpute {
                lambda: None,
                max_iter: 200,
                tol: 1e-5,
            },
            "ice" => Imputer::Ice {
                max_iter: 20,
                tol: 1e-5,
                ridge_lambda: 1e-3,
                seed: 0,
            },
            "featurized-ridge" => Imputer::FeaturizedRidge { lambda: 1e-3 },
            other => return Err(Error::UnknownTag(other.to_string())),
        })
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Imputer::ColMean => "col-mean",
            Imputer::Knn { .. } => "knn",
            Imputer::SoftImpute { .. } => "soft-impute",
            Imputer::Ice { .. } => "ice",
            Imputer::FeaturizedRidge { .. } => "featurized-ridge",
        }
    }
}

impl Impute for Imputer {
    fn impute(&self, ds: &MaskedDataset) -> Result<ImputationResult> {
        match self {
            Imputer::ColMean => Ok(impute_col_mean(ds)),
            Imputer::Knn { k } => impute_knn(ds, *k),
            Imputer::SoftImpute {
                lambda,
                max_iter,
                tol,
            } => impute_soft(ds, *lambda, *max_iter, *tol),
            Imputer::Ice {
                max_iter,
                tol,
                ridge_lambda,
                seed,
            } => impute_ice(ds, *max_iter, *tol, *ridge_lambda, &SeedSpec::new(*seed, "ice")),
            Imputer::FeaturizedRidge { lambda } => impute_featurized_ridge(ds, *lambda),
        }
    }

    fn label(&self) -> String {
        self.tag().to_string()
    }
}

/// Mean of the observed entries of each column; 0 for all-missing columns.
pub fn column_means(ds: &MaskedDataset) -> Vec<f64> {
    ds.observed()
        .columns()
        .into_iter()
        .map(|col| {
            let (sum, count) = col
                .iter()
                .filter(|v| !is_missing(**v))
                .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
            if count == 0 {
                0.0
            } else {
                sum / count as f64
            }
        })
        .collect()
}

fn mean_filled(ds: &MaskedDataset) -> Array2<f64> {
    let means = column_means(ds);
    let mut z = ds.observed().clone();
    for ((_, j), v) in z.indexed_iter_mut() {
        if is_missing(*v) {
            *v = means[j];
        }
    }
    z
}

pub fn impute_col_mean(ds: &MaskedDataset) -> ImputationResult {
    let means = column_means(ds);
    let fitted = Array2::from_shape_fn(ds.dim(), |(_, j)| means[j]);
    let completed = overlay_observed(ds, &fitted).expect("finite column means");
    ImputationResult {
        completed,
        fitted_observed: Some(DataMatrix::new(fitted).expect("finite column means")),
        diagnostics: Diagnostics::closed_form(),
    }
}

/// Distance between two rows over their co-observed coordinates, scaled by
/// √(n / #co-observed). `None` when no coordinate is shared.
pub fn masked_distance(a: &[f64], b: &[f64]) -> Option<f64> {
    let (mut sum, mut shared) = (0.0, 0usize);
    for (x, y) in a.iter().zip(b) {
        if !is_missing(*x) && !is_missing(*y) {
            sum += (x - y) * (x - y);
            shared += 1;
        }
    }
    (shared > 0).then(|| (sum * a.len() as f64 / shared as f64).sqrt())
}

/// Row-wise k-nearest-neighbour mean. Each cell averages column j over the k
/// nearest other rows with j observed (ties broken by row index), falling
/// back to the column mean when no such row exists.
pub fn impute_knn(ds: &MaskedDataset, k: usize) -> Result<ImputationResult> {
    if k == 0 {
        return Err(Error::param("k", "must be >= 1"));
    }
    let (m, n) = ds.dim();
    let k = if k >= m.max(1) {
        let clamped = m.saturating_sub(1).max(1);
        if m > 1 {
            log::warn!("knn: k = {k} exceeds the {} other rows; clamped to {clamped}", m - 1);
        }
        clamped
    } else {
        k
    };
    let x = ds.observed();
    let rows: Vec<Vec<f64>> = x.rows().into_iter().map(|r| r.to_vec()).collect();
    let means = column_means(ds);
    let mut fitted = Array2::zeros((m, n));
    for i in 0..m {
        let mut dist: Vec<(f64, usize)> = (0..m)
            .filter(|&l| l != i)
            .filter_map(|l| masked_distance(&rows[i], &rows[l]).map(|d| (d, l)))
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for j in 0..n {
            let donors: Vec<f64> = dist
                .iter()
                .filter(|(_, l)| !is_missing(rows[*l][j]))
                .take(k)
                .map(|(_, l)| rows[*l][j])
                .collect();
            fitted[[i, j]] = if donors.is_empty() {
                means[j]
            } else {
                donors.iter().sum::<f64>() / donors.len() as f64
            };
        }
    }
    Ok(ImputationResult {
        completed: overlay_observed(ds, &fitted)?,
        fitted_observed: Some(DataMatrix::new(fitted)?),
        diagnostics: Diagnostics::closed_form(),
    })
}

fn to_dmatrix(a: &Array2<f64>) -> DMatrix<f64> {
    let (m, n) = a.dim();
    DMatrix::from_fn(m, n, |i, j| a[[i, j]])
}

fn from_dmatrix(a: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn(a.shape(), |(i, j)| a[(i, j)])
}

/// Largest singular value of the mean-filled matrix.
pub fn top_singular_value(ds: &MaskedDataset) -> f64 {
    to_dmatrix(&mean_filled(ds)).singular_values().max()
}

/// Singular value soft-thresholding; returns the shrunk matrix and its
/// nuclear norm.
fn svt(w: &DMatrix<f64>, lambda: f64) -> (DMatrix<f64>, f64) {
    let svd = w.clone().svd(true, true);
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let mut z = DMatrix::zeros(w.nrows(), w.ncols());
    let mut nuclear = 0.0;
    for (r, &s) in svd.singular_values.iter().enumerate() {
        let shrunk = s - lambda;
        if shrunk > 0.0 {
            nuclear += shrunk;
            z += u.column(r) * vt.row(r) * shrunk;
        }
    }
    (z, nuclear)
}

fn soft_objective(x: &Array2<f64>, z: &DMatrix<f64>, nuclear: f64, lambda: f64) -> f64 {
    let fit: f64 = x
        .indexed_iter()
        .filter(|(_, v)| !is_missing(**v))
        .map(|((i, j), v)| (v - z[(i, j)]).powi(2))
        .sum();
    0.5 * fit + lambda * nuclear
}

/// SoftImpute: Z ← SVT_λ(P_obs(X) + P_miss(Z)) from the mean-filled Z₀ until
/// ‖Z_{t+1} − Z_t‖_F / ‖Z_t‖_F < `tol` or `max_iter` iterations. The
/// objective ½‖P_obs(X − Z)‖² + λ‖Z‖_* is recorded after each step; each
/// step minimizes a majorizer of it, so the trace is non-increasing.
pub fn impute_soft(
    ds: &MaskedDataset,
    lambda: Option<f64>,
    max_iter: usize,
    tol: f64,
) -> Result<ImputationResult> {
    let lambda = match lambda {
        Some(l) if l.is_finite() && l >= 0.0 => l,
        Some(l) => return Err(Error::param("lambda", format!("{l} must be >= 0"))),
        None => 0.1 * top_singular_value(ds),
    };
    if max_iter == 0 {
        return Err(Error::param("max_iter", "must be >= 1"));
    }
    let x = ds.observed();
    let mut z = to_dmatrix(&mean_filled(ds));
    let nuclear0: f64 = z.singular_values().iter().sum();
    let mut diagnostics = Diagnostics {
        objective: vec![soft_objective(x, &z, nuclear0, lambda)],
        ..Default::default()
    };
    for it in 1..=max_iter {
        let mut w = z.clone();
        for ((i, j), &v) in x.indexed_iter() {
            if !is_missing(v) {
                w[(i, j)] = v;
            }
        }
        let (next, nuclear) = svt(&w, lambda);
        let denom = z.norm();
        let change = (&next - &z).norm() / if denom > 0.0 { denom } else { 1.0 };
        z = next;
        diagnostics.objective.push(soft_objective(x, &z, nuclear, lambda));
        diagnostics.iterations = it;
        diagnostics.final_change = change;
        if change < tol {
            diagnostics.converged = true;
            break;
        }
    }
    if !diagnostics.converged {
        log::warn!(
            "soft-impute: no convergence after {max_iter} iterations (change {:.3e})",
            diagnostics.final_change
        );
    }
    if !diagnostics.objective_non_increasing() {
        log::warn!("soft-impute: objective increased; numerical trouble suspected");
    }
    let fitted = from_dmatrix(&z);
    Ok(ImputationResult {
        completed: overlay_observed(ds, &fitted)?,
        fitted_observed: Some(DataMatrix::new(fitted)?),
        diagnostics,
    })
}

/// Ridge fit of column `j`'s observed entries on all other columns of `z`.
fn regress_column(
    z: &Array2<f64>,
    observed: &[usize],
    j: usize,
    ridge_lambda: f64,
) -> Result<crate::linalg::RidgeFit> {
    let n = z.ncols();
    let others: Vec<usize> = (0..n).filter(|&c| c != j).collect();
    let xs = DMatrix::from_fn(observed.len(), others.len(), |r, c| z[[observed[r], others[c]]]);
    let ys = DVector::from_iterator(observed.len(), observed.iter().map(|&i| z[[i, j]]));
    ridge_fit(&xs, &ys, ridge_lambda)
}

fn predict_row(fit: &crate::linalg::RidgeFit, z: &Array2<f64>, i: usize, j: usize) -> f64 {
    fit.predict(z.row(i).iter().enumerate().filter(|(c, _)| *c != j).map(|(_, v)| *v))
}

/// Iterative chained equations with ridge regressions. Starts from the
/// mean-filled matrix and sweeps the incomplete columns in a seed-fixed
/// order until the largest update is below `tol`.
pub fn impute_ice(
    ds: &MaskedDataset,
    max_iter: usize,
    tol: f64,
    ridge_lambda: f64,
    seed: &SeedSpec,
) -> Result<ImputationResult> {
    if max_iter == 0 {
        return Err(Error::param("max_iter", "must be >= 1"));
    }
    if !(ridge_lambda.is_finite() && ridge_lambda >= 0.0) {
        return Err(Error::param("ridge_lambda", format!("{ridge_lambda} must be >= 0")));
    }
    let (m, n) = ds.dim();
    let mask = ds.mask();
    let observed_rows: Vec<Vec<usize>> = (0..n)
        .map(|j| (0..m).filter(|&i| mask.observed(i, j)).collect())
        .collect();
    let mut order: Vec<usize> = (0..n)
        .filter(|&j| !observed_rows[j].is_empty() && observed_rows[j].len() < m)
        .collect();
    order.shuffle(&mut seed.child("order").rng());

    let mut z = mean_filled(ds);
    let mut diagnostics = Diagnostics {
        converged: order.is_empty(),
        ..Default::default()
    };
    if !order.is_empty() {
        for it in 1..=max_iter {
            let mut change: f64 = 0.0;
            for &j in &order {
                let fit = regress_column(&z, &observed_rows[j], j, ridge_lambda)?;
                for i in (0..m).filter(|&i| !mask.observed(i, j)) {
                    let v = predict_row(&fit, &z, i, j);
                    change = change.max((v - z[[i, j]]).abs());
                    z[[i, j]] = v;
                }
            }
            diagnostics.iterations = it;
            diagnostics.final_change = change;
            if change < tol {
                diagnostics.converged = true;
                break;
            }
        }
    }

    // Per-column regression predictions on the final completion.
    let mut fitted = z.clone();
    for j in 0..n {
        if observed_rows[j].is_empty() {
            continue;
        }
        let fit = regress_column(&z, &observed_rows[j], j, ridge_lambda)?;
        for &i in &observed_rows[j] {
            fitted[[i, j]] = predict_row(&fit, &z, i, j);
        }
    }
    Ok(ImputationResult {
        completed: overlay_observed(ds, &z)?,
        fitted_observed: Some(DataMatrix::new(fitted)?),
        diagnostics,
    })
}

/// Entry-wise featurization followed by closed-form ridge.
pub fn impute_featurized_ridge(ds: &MaskedDataset, lambda: f64) -> Result<ImputationResult> {
    let ft = build_features(ds);
    let pred = ridge_on_features(&ft, lambda)?;
    let mut fitted = Array2::zeros(ds.dim());
    for (&r, &v) in ft.train_rows.iter().zip(&pred.train) {
        fitted[ft.cell_index[r]] = v;
    }
    for (&r, &v) in ft.test_rows.iter().zip(&pred.test) {
        fitted[ft.cell_index[r]] = v;
    }
    Ok(ImputationResult {
        completed: overlay_observed(ds, &fitted)?,
        fitted_observed: Some(DataMatrix::new(fitted)?),
        diagnostics: Diagnostics::closed_form(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{apply_mask, Mask};
    use crate::missingness::gen_mcar;
    use ndarray::array;
    use rand::Rng;

    fn random_ds(m: usize, n: usize, p: f64, seed: u64) -> MaskedDataset {
        let mut rng = SeedSpec::new(seed, "truth").rng();
        let truth = DataMatrix::new(Array2::from_shape_simple_fn((m, n), || rng.random::<f64>() * 4.0 - 2.0)).unwrap();
        let mask = gen_mcar(&truth, p, &SeedSpec::new(seed, "mask")).unwrap();
        apply_mask(&truth, &mask).unwrap()
    }

    fn all_defaults() -> Vec<Imputer> {
        Imputer::TAGS.iter().map(|t| Imputer::default_for(t).unwrap()).collect()
    }

    #[test]
    fn col_mean_small_column() {
        let truth = DataMatrix::new(array![[1.0], [9.0], [3.0]]).unwrap();
        let mask = Mask::from_bits(&[vec![1], vec![0], vec![1]]).unwrap();
        let out = impute_col_mean(&apply_mask(&truth, &mask).unwrap());
        assert_eq!(out.completed[(1, 0)], 2.0);
    }

    #[test]
    fn col_mean_matches_loop() {
        let ds = random_ds(8, 5, 0.3, 4);
        let out = impute_col_mean(&ds);
        let x = ds.observed();
        for j in 0..5 {
            let mut s = 0.0;
            let mut c = 0;
            for i in 0..8 {
                if ds.mask().observed(i, j) {
                    s += x[[i, j]];
                    c += 1;
                }
            }
            let mean = if c == 0 { 0.0 } else { s / c as f64 };
            for i in 0..8 {
                if !ds.mask().observed(i, j) {
                    assert_eq!(out.completed[(i, j)], mean);
                }
            }
        }
    }

    #[test]
    fn every_imputer_preserves_observed_bits_and_is_finite() {
        for seed in 0..3 {
            let ds = random_ds(12, 6, 0.35, seed);
            for imp in all_defaults() {
                let out = imp.impute(&ds).unwrap();
                for ((i, j), &v) in ds.observed().indexed_iter() {
                    let c = out.completed[(i, j)];
                    assert!(c.is_finite(), "{}", imp.tag());
                    if !v.is_nan() {
                        assert_eq!(c.to_bits(), v.to_bits(), "{}", imp.tag());
                    }
                }
                assert!(out.fitted_observed.is_some());
            }
        }
    }

    #[test]
    fn every_imputer_is_identity_on_complete_data() {
        let ds = random_ds(7, 4, 0.0, 9);
        for imp in all_defaults() {
            let out = imp.impute(&ds).unwrap();
            assert_eq!(out.completed.values(), ds.truth().values(), "{}", imp.tag());
        }
    }

    #[test]
    fn every_imputer_handles_sparse_and_empty_columns() {
        let truth = DataMatrix::new(Array2::from_shape_fn((6, 4), |(i, j)| (i * 4 + j) as f64 * 0.1)).unwrap();
        // Column 1 has one observed entry, column 3 none.
        let mask = Mask::from_bits(&[
            vec![1, 1, 1, 0],
            vec![1, 0, 1, 0],
            vec![0, 0, 1, 0],
            vec![1, 0, 0, 0],
            vec![1, 0, 1, 0],
            vec![1, 0, 1, 0],
        ])
        .unwrap();
        let ds = apply_mask(&truth, &mask).unwrap();
        for imp in all_defaults() {
            let out = imp.impute(&ds).unwrap();
            assert!(out.completed.values().iter().all(|v| v.is_finite()), "{}", imp.tag());
        }
        let mean = impute_col_mean(&ds);
        assert!((0..6).all(|i| mean.completed[(i, 3)] == 0.0));
    }

    #[test]
    fn deterministic_under_fixed_settings() {
        let ds = random_ds(10, 5, 0.3, 2);
        for imp in all_defaults() {
            assert_eq!(imp.impute(&ds).unwrap(), imp.impute(&ds).unwrap());
        }
    }

    #[test]
    fn knn_duplicate_row() {
        let truth = DataMatrix::new(array![[1.0, 2.0], [1.0, 7.0]]).unwrap();
        let mask = Mask::from_bits(&[vec![1, 1], vec![1, 0]]).unwrap();
        let out = impute_knn(&apply_mask(&truth, &mask).unwrap(), 1).unwrap();
        assert_eq!(out.completed[(1, 1)], 2.0);
    }

    #[test]
    fn knn_single_row_falls_back_to_column_mean() {
        let truth = DataMatrix::new(array![[1.0, 2.0, 3.0]]).unwrap();
        let mask = Mask::from_bits(&[vec![1, 0, 1]]).unwrap();
        let out = impute_knn(&apply_mask(&truth, &mask).unwrap(), 5).unwrap();
        assert_eq!(out.completed[(0, 1)], 0.0);
        assert_eq!(out.fitted_observed.unwrap()[(0, 0)], 1.0);
        assert!(impute_knn(&apply_mask(&truth, &mask).unwrap(), 0).is_err());
    }

    #[test]
    fn knn_matches_brute_force() {
        let ds = random_ds(10, 4, 0.3, 17);
        let x = ds.observed();
        let out = impute_knn(&ds, 3).unwrap();
        let means = column_means(&ds);
        for (i, j) in ds.mask().missing_indices() {
            // Independent formulation: all-pairs table, then a full sort.
            let mut cands = Vec::new();
            for l in 0..10 {
                if l == i || x[[l, j]].is_nan() {
                    continue;
                }
                let mut sq = 0.0;
                let mut shared = 0.0;
                for c in 0..4 {
                    if !x[[i, c]].is_nan() && !x[[l, c]].is_nan() {
                        sq += (x[[i, c]] - x[[l, c]]).powi(2);
                        shared += 1.0;
                    }
                }
                if shared > 0.0 {
                    cands.push(((sq * 4.0 / shared).sqrt(), l, x[[l, j]]));
                }
            }
            cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let expected = if cands.is_empty() {
                means[j]
            } else {
                let take = cands.len().min(3);
                cands[..take].iter().map(|c| c.2).sum::<f64>() / take as f64
            };
            assert!((out.completed[(i, j)] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn soft_impute_fixed_point_at_zero_lambda() {
        let ds = random_ds(6, 4, 0.0, 3);
        let out = impute_soft(&ds, Some(0.0), 50, 1e-5).unwrap();
        assert!(out.diagnostics.converged);
        assert_eq!(out.diagnostics.iterations, 1);
        assert_eq!(out.completed.values(), ds.truth().values());
    }

    #[test]
    fn soft_impute_full_shrinkage_gives_zero_estimate() {
        let ds = random_ds(12, 6, 0.3, 5);
        let lambda = 10.0 * top_singular_value(&ds);
        let out = impute_soft(&ds, Some(lambda), 50, 1e-5).unwrap();
        for (i, j) in ds.mask().missing_indices() {
            assert_eq!(out.completed[(i, j)], 0.0);
        }
        assert!(out.diagnostics.objective_non_increasing());
    }

    #[test]
    fn soft_impute_objective_never_increases() {
        for seed in 0..5 {
            let ds = random_ds(20, 8, 0.4, seed);
            let out = impute_soft(&ds, None, 100, 1e-7).unwrap();
            assert!(out.diagnostics.objective.len() >= 2);
            assert!(out.diagnostics.objective_non_increasing(), "{:?}", out.diagnostics.objective);
        }
    }

    #[test]
    fn ice_single_column_equals_mean() {
        let truth = DataMatrix::new(array![[1.0], [5.0], [3.0], [8.0]]).unwrap();
        let mask = Mask::from_bits(&[vec![1], vec![0], vec![1], vec![0]]).unwrap();
        let ds = apply_mask(&truth, &mask).unwrap();
        let ice = impute_ice(&ds, 10, 1e-8, 1e-3, &SeedSpec::new(0, "i")).unwrap();
        assert_eq!(ice.completed, impute_col_mean(&ds).completed);
    }

    #[test]
    fn ice_recovers_exact_linear_relation() {
        let col1 = [0.5, -1.0, 2.0, 0.0, 1.5, -0.7];
        let truth = DataMatrix::new(Array2::from_shape_fn((6, 2), |(i, j)| col1[i] * (1 + j) as f64)).unwrap();
        let mut ind = Array2::from_elem((6, 2), true);
        ind[[3, 1]] = false;
        let ds = apply_mask(&truth, &Mask::new(ind)).unwrap();
        let out = impute_ice(&ds, 50, 1e-10, 1e-8, &SeedSpec::new(0, "i")).unwrap();
        assert!((out.completed[(3, 1)] - 2.0 * col1[3]).abs() < 1e-4);
    }

    #[test]
    fn featurized_ridge_reports_singular_without_penalty() {
        let truth = DataMatrix::new(Array2::from_shape_fn((4, 3), |(i, j)| (i + j) as f64)).unwrap();
        let ds = apply_mask(&truth, &Mask::all_observed(4, 3)).unwrap();
        assert!(matches!(impute_featurized_ridge(&ds, 0.0), Err(Error::Singular)));
    }
}
