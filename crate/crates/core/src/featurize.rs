//! Entry-wise featurization: every cell (i, j) becomes one regression row
//! `i ⊕ j ⊕ X[i, :] ⊕ X[:, j]` with target X*_ij, so imputation turns into
//! supervised learning on the observed rows.
//!
//! The table keeps the missing sentinel (`NaN`) inside context features. Its
//! width is m + n + 2: two index features followed by the row and the column.

use nalgebra::{DMatrix, DVector};
use ndarray::Array2;

use crate::data::{is_missing, MaskedDataset, MISSING};
use crate::error::{Error, Result};
use crate::linalg::ridge_fit;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    rows: usize,
    cols: usize,
    /// (m·n) × (m + n + 2), row-major over cells.
    pub features: Array2<f64>,
    /// Observed value on train rows, `NaN` on test rows.
    pub targets: Vec<f64>,
    pub cell_index: Vec<(usize, usize)>,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

impl FeatureTable {
    /// Shape (m, n) of the matrix the table was built from.
    pub fn source_dim(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn width(&self) -> usize {
        self.features.ncols()
    }

    /// Table row of cell (i, j).
    pub fn row_of(&self, i: usize, j: usize) -> usize {
        i * self.cols + j
    }
}

/// Builds the entry-wise feature table of a masked dataset.
pub fn build_features(ds: &MaskedDataset) -> FeatureTable {
    let (m, n) = ds.dim();
    let x = ds.observed();
    let width = m + n + 2;
    let mut features = Array2::zeros((m * n, width));
    let mut targets = Vec::with_capacity(m * n);
    let mut cell_index = Vec::with_capacity(m * n);
    let mut train_rows = Vec::new();
    let mut test_rows = Vec::new();
    for (r, mut row) in features.rows_mut().into_iter().enumerate() {
        let (i, j) = (r / n, r % n);
        row[0] = i as f64;
        row[1] = j as f64;
        for k in 0..n {
            row[2 + k] = x[[i, k]];
        }
        for l in 0..m {
            row[2 + n + l] = x[[l, j]];
        }
        cell_index.push((i, j));
        if ds.mask().observed(i, j) {
            train_rows.push(r);
            targets.push(x[[i, j]]);
        } else {
            test_rows.push(r);
            targets.push(MISSING);
        }
    }
    FeatureTable {
        rows: m,
        cols: n,
        features,
        targets,
        cell_index,
        train_rows,
        test_rows,
    }
}

/// Predictions of [`ridge_on_features`], aligned with `train_rows` and
/// `test_rows` of the table.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgePredictions {
    pub train: Vec<f64>,
    pub test: Vec<f64>,
}

/// Closed-form ridge regression on the feature table.
///
/// Index features are z-scored; each context feature is mean-filled (train
/// mean) and gets a companion missing indicator. The intercept is not
/// penalized. `lambda = 0` on a rank-deficient design is an error.
pub fn ridge_on_features(ft: &FeatureTable, lambda: f64) -> Result<RidgePredictions> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::param("lambda", format!("{lambda} must be >= 0")));
    }
    if ft.train_rows.is_empty() {
        return Err(Error::param("train_rows", "no observed cells to fit"));
    }
    let design = expand_design(ft);
    let p = design.ncols();
    let x = DMatrix::from_fn(ft.train_rows.len(), p, |k, c| design[[ft.train_rows[k], c]]);
    let y = DVector::from_iterator(ft.train_rows.len(), ft.train_rows.iter().map(|&r| ft.targets[r]));
    let fit = ridge_fit(&x, &y, lambda)?;
    let predict = |r: usize| fit.predict(design.row(r).iter().copied());
    Ok(RidgePredictions {
        train: ft.train_rows.iter().map(|&r| predict(r)).collect(),
        test: ft.test_rows.iter().map(|&r| predict(r)).collect(),
    })
}

/// Numeric design: z-scored indices, mean-filled context, indicators.
fn expand_design(ft: &FeatureTable) -> Array2<f64> {
    let total = ft.features.nrows();
    let width = ft.width();
    let ctx = width - 2;
    let train = &ft.train_rows;
    let mut out = Array2::zeros((total, 2 + 2 * ctx));
    for c in 0..width {
        let vals: Vec<f64> = train
            .iter()
            .map(|&r| ft.features[[r, c]])
            .filter(|v| !is_missing(*v))
            .collect();
        let mean = if vals.is_empty() {
            0.0
        } else {
            vals.iter().sum::<f64>() / vals.len() as f64
        };
        if c < 2 {
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
            let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
            for r in 0..total {
                out[[r, c]] = (ft.features[[r, c]] - mean) / sd;
            }
        } else {
            for r in 0..total {
                let v = ft.features[[r, c]];
                if is_missing(v) {
                    out[[r, c]] = mean;
                    out[[r, c + ctx]] = 1.0;
                } else {
                    out[[r, c]] = v;
                }
            }
        }
    }
    out
}
