use serde::{Deserialize, Serialize};

use crate::data::{apply_mask, is_missing, DataMatrix, MaskedDataset};
use crate::error::Result;

/// Per-column map x ↦ (x − mean) / scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub mean: f64,
    pub scale: f64,
}

impl Affine {
    pub const IDENTITY: Affine = Affine { mean: 0.0, scale: 1.0 };

    /// Mean and population standard deviation of `values`; a column with
    /// fewer than two values or zero spread keeps scale 1, and an empty one
    /// is left untouched.
    pub fn fit(values: &[f64]) -> Affine {
        if values.is_empty() {
            return Affine::IDENTITY;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let scale = if values.len() > 1 && var > 0.0 { var.sqrt() } else { 1.0 };
        Affine { mean, scale }
    }

    pub fn apply(&self, x: f64) -> f64 {
        (x - self.mean) / self.scale
    }

    pub fn invert(&self, z: f64) -> f64 {
        z * self.scale + self.mean
    }
}

fn transform(m: &DataMatrix, params: &[Affine]) -> Result<DataMatrix> {
    let mut v = m.values().clone();
    for ((_, j), x) in v.indexed_iter_mut() {
        *x = params[j].apply(*x);
    }
    DataMatrix::new(v)
}

/// Z-scores every column of a fully observed matrix.
pub fn standardize_columns(m: &DataMatrix) -> Result<(DataMatrix, Vec<Affine>)> {
    let params: Vec<Affine> = m
        .values()
        .columns()
        .into_iter()
        .map(|c| Affine::fit(&c.to_vec()))
        .collect();
    Ok((transform(m, &params)?, params))
}

/// Standardizes each column by the statistics of its observed entries and
/// maps the ground truth through the same affine transform.
pub fn standardize_observed(ds: &MaskedDataset) -> Result<(MaskedDataset, Vec<Affine>)> {
    let params: Vec<Affine> = ds
        .observed()
        .columns()
        .into_iter()
        .map(|c| {
            let vals: Vec<f64> = c.iter().copied().filter(|v| !is_missing(*v)).collect();
            Affine::fit(&vals)
        })
        .collect();
    let truth = transform(ds.truth(), &params)?;
    Ok((apply_mask(&truth, ds.mask())?, params))
}
