//! Missing-data benchmark toolkit.
//!
//! Low-rank synthetic ground truth ([`datagen`]), thirteen missingness
//! mechanisms ([`missingness`]), the entry-wise featurization
//! ([`featurize`]), classical imputers ([`imputers`]), permutation and
//! adaptive-weight ensembling ([`ensemble`]), the softmax pattern-proportion
//! scheduler ([`scheduler`]) and the normalized-RMSE harness ([`bench`]).

pub mod bench;
pub mod data;
pub mod datagen;
pub mod ensemble;
pub mod error;
pub mod featurize;
pub mod imputers;
mod linalg;
pub mod missingness;
pub mod scheduler;

pub use data::{
    apply_mask, missing_fraction, sample_bernoulli_mask, DataMatrix, Mask, MaskedDataset,
    PropensityMatrix, SeedSpec,
};
pub use error::{Error, Result};
