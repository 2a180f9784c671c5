//! Masked-matrix data model shared by every other module.
//!
//! A [`DataMatrix`] is the complete ground truth, a [`Mask`] marks which
//! cells are observed (`true` = observed), and a [`MaskedDataset`] bundles
//! both with the observed view, where missing cells carry `NaN`.

use ndarray::{Array2, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// The sentinel stored at missing cells of an observed matrix.
pub const MISSING: f64 = f64::NAN;

#[inline]
pub fn is_missing(v: f64) -> bool {
    v.is_nan()
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Dense, finite, real-valued matrix with at least one row and one column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataMatrix(Array2<f64>);

impl DataMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let (m, n) = values.dim();
        if m == 0 || n == 0 {
            return Err(Error::param("shape", format!("{m}x{n} matrix is empty")));
        }
        if let Some(((row, col), _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { row, col });
        }
        Ok(DataMatrix(values))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::param("rows", "ragged rows"));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let values = Array2::from_shape_vec((m, n), flat)
            .map_err(|e| Error::param("rows", e.to_string()))?;
        Self::new(values)
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn dim(&self) -> (usize, usize) {
        self.0.dim()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }
}

impl std::ops::Index<(usize, usize)> for DataMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[[i, j]]
    }
}

/// Binary observation indicator; `true` means observed.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Mask(Array2<bool>);

impl Mask {
    pub fn new(indicator: Array2<bool>) -> Self {
        Mask(indicator)
    }

    pub fn all_observed(rows: usize, cols: usize) -> Self {
        Mask(Array2::from_elem((rows, cols), true))
    }

    pub fn all_missing(rows: usize, cols: usize) -> Self {
        Mask(Array2::from_elem((rows, cols), false))
    }

    pub fn from_bits(rows: &[Vec<u8>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        let mut out = Array2::from_elem((m, n), false);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::param("mask", "ragged rows"));
            }
            for (j, &b) in r.iter().enumerate() {
                out[[i, j]] = match b {
                    0 => false,
                    1 => true,
                    other => return Err(Error::param("mask", format!("entry {other} is not 0/1"))),
                };
            }
        }
        Ok(Mask(out))
    }

    pub fn dim(&self) -> (usize, usize) {
        self.0.dim()
    }

    pub fn indicator(&self) -> &Array2<bool> {
        &self.0
    }

    #[inline]
    pub fn observed(&self, i: usize, j: usize) -> bool {
        self.0[[i, j]]
    }

    pub fn n_missing(&self) -> usize {
        self.0.iter().filter(|&&b| !b).count()
    }

    pub fn n_observed(&self) -> usize {
        self.0.len() - self.n_missing()
    }

    /// Ω: missing cells in row-major order.
    pub fn missing_indices(&self) -> Vec<(usize, usize)> {
        self.0
            .indexed_iter()
            .filter(|(_, &b)| !b)
            .map(|(ix, _)| ix)
            .collect()
    }

    /// Ω_obs: observed cells in row-major order.
    pub fn observed_indices(&self) -> Vec<(usize, usize)> {
        self.0
            .indexed_iter()
            .filter(|(_, &b)| b)
            .map(|(ix, _)| ix)
            .collect()
    }

    pub fn column_all_missing(&self, j: usize) -> bool {
        self.0.column(j).iter().all(|&b| !b)
    }
}

/// |Ω| / (m·n).
pub fn missing_fraction(mask: &Mask) -> f64 {
    let total = mask.0.len();
    if total == 0 {
        return 0.0;
    }
    mask.n_missing() as f64 / total as f64
}

/// Ground truth, mask and the observed view with `NaN` at Ω.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedDataset {
    truth: DataMatrix,
    mask: Mask,
    observed: Array2<f64>,
}

impl MaskedDataset {
    pub fn truth(&self) -> &DataMatrix {
        &self.truth
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn observed(&self) -> &Array2<f64> {
        &self.observed
    }

    pub fn dim(&self) -> (usize, usize) {
        self.truth.dim()
    }

    /// Observed values in row-major order of Ω_obs.
    pub fn observed_values(&self) -> Vec<f64> {
        self.observed.iter().copied().filter(|v| !is_missing(*v)).collect()
    }

    /// Stable digest of the mask and observed matrix; equal digests mean the
    /// methods of a benchmark group saw byte-identical inputs.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        let (m, n) = self.dim();
        h.update((m as u64).to_le_bytes());
        h.update((n as u64).to_le_bytes());
        for &b in self.mask.0.iter() {
            h.update([b as u8]);
        }
        for v in self.observed.iter() {
            h.update(v.to_bits().to_le_bytes());
        }
        let out = h.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Builds X from X* and M: X_ij = X*_ij where observed, `NaN` otherwise.
pub fn apply_mask(truth: &DataMatrix, mask: &Mask) -> Result<MaskedDataset> {
    if truth.dim() != mask.dim() {
        return Err(Error::ShapeMismatch {
            expected: truth.dim(),
            actual: mask.dim(),
        });
    }
    if mask.n_observed() == 0 {
        return Err(Error::FullyMissing);
    }
    let mut observed = truth.values().clone();
    Zip::from(&mut observed)
        .and(mask.indicator())
        .for_each(|x, &obs| {
            if !obs {
                *x = MISSING;
            }
        });
    Ok(MaskedDataset {
        truth: truth.clone(),
        mask: mask.clone(),
        observed,
    })
}

/// Entrywise observation probabilities in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct PropensityMatrix(Array2<f64>);

impl PropensityMatrix {
    pub fn new(p: Array2<f64>) -> Result<Self> {
        if let Some(((row, col), &value)) = p
            .indexed_iter()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::PropensityOutOfRange { row, col, value });
        }
        Ok(PropensityMatrix(p))
    }

    pub fn constant(rows: usize, cols: usize, p: f64) -> Result<Self> {
        Self::new(Array2::from_elem((rows, cols), p))
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.0
    }
}

/// Seed plus stream label. Equal pairs give identical random streams.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub seed: u64,
    pub label: String,
}

impl SeedSpec {
    pub fn new(seed: u64, label: impl Into<String>) -> Self {
        SeedSpec {
            seed,
            label: label.into(),
        }
    }

    /// Substream for a named sub-task; independent of sibling substreams.
    pub fn child(&self, sub: impl std::fmt::Display) -> SeedSpec {
        SeedSpec {
            seed: self.seed,
            label: format!("{}/{}", self.label, sub),
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(self.label.as_bytes());
        let digest = h.finalize();
        let mut key = [0u8; 32];
        key.copy_from_slice(&digest);
        ChaCha8Rng::from_seed(key)
    }
}

/// Draws M_ij ~ Bernoulli(p_ij) with p_ij = P(observed).
pub fn sample_bernoulli_mask(p: &PropensityMatrix, seed: &SeedSpec) -> Mask {
    let mut rng = seed.rng();
    // One uniform per cell in row-major order, even for p in {0, 1}.
    Mask(p.0.map(|&pij| rng.random::<f64>() < pij))
}
