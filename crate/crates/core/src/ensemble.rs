//! Two-layer ensembling: averaging over random row/column permutations, and
//! the closed-form adaptive weight that blends two imputers using their
//! predictions at observed cells.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{apply_mask, DataMatrix, Mask, MaskedDataset, SeedSpec};
use crate::error::{Error, Result};
use crate::imputers::{overlay_observed, Diagnostics, ImputationResult, Impute, Imputer};

/// Row permutation and column permutation; `perm[k]` is the source index
/// placed at position `k`.
pub type PermutationPair = (Vec<usize>, Vec<usize>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub base_a: Imputer,
    pub base_b: Imputer,
    pub n_perms: usize,
    pub degenerate_tol: f64,
}

impl Default for EnsembleSpec {
    /// Featurized ridge blended with SoftImpute over four permutations.
    fn default() -> Self {
        EnsembleSpec {
            base_a: Imputer::default_for("featurized-ridge").expect("known tag"),
            base_b: Imputer::default_for("soft-impute").expect("known tag"),
            n_perms: 4,
            degenerate_tol: 1e-12,
        }
    }
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_perms == 0 {
            return Err(Error::param("n_perms", "must be >= 1"));
        }
        if !(self.degenerate_tol.is_finite() && self.degenerate_tol > 0.0) {
            return Err(Error::param("degenerate_tol", "must be > 0"));
        }
        Ok(())
    }
}

/// Draws `n_perms` independent (row, column) permutation pairs.
pub fn draw_permutations(rows: usize, cols: usize, n_perms: usize, seed: &SeedSpec) -> Vec<PermutationPair> {
    (0..n_perms)
        .map(|t| {
            let mut rng = seed.child(format_args!("perm-{t}")).rng();
            let mut r: Vec<usize> = (0..rows).collect();
            let mut c: Vec<usize> = (0..cols).collect();
            r.shuffle(&mut rng);
            c.shuffle(&mut rng);
            (r, c)
        })
        .collect()
}

fn permute(a: &Array2<f64>, (r, c): &PermutationPair) -> Array2<f64> {
    Array2::from_shape_fn(a.dim(), |(i, j)| a[[r[i], c[j]]])
}

fn unpermute(a: &Array2<f64>, (r, c): &PermutationPair) -> Array2<f64> {
    let mut out = Array2::zeros(a.dim());
    for i in 0..r.len() {
        for j in 0..c.len() {
            out[[r[i], c[j]]] = a[[i, j]];
        }
    }
    out
}

fn permute_dataset(ds: &MaskedDataset, perm: &PermutationPair) -> Result<MaskedDataset> {
    let (r, c) = perm;
    let truth = DataMatrix::new(permute(ds.truth().values(), perm))?;
    let ind = ds.mask().indicator();
    let mask = Mask::new(Array2::from_shape_fn(ind.dim(), |(i, j)| ind[[r[i], c[j]]]));
    apply_mask(&truth, &mask)
}

fn check_permutation(p: &[usize], len: usize) -> Result<()> {
    let mut seen = vec![false; len];
    if p.len() != len {
        return Err(Error::LengthMismatch(p.len(), len));
    }
    for &k in p {
        if k >= len || std::mem::replace(&mut seen[k], true) {
            return Err(Error::param("permutation", format!("{p:?} is not a permutation of 0..{len}")));
        }
    }
    Ok(())
}

/// Imputes under each given permutation, maps back, and averages the
/// completions and fitted values entrywise in the given order.
pub fn permutation_ensemble_with(
    imputer: &dyn Impute,
    ds: &MaskedDataset,
    perms: &[PermutationPair],
) -> Result<ImputationResult> {
    if perms.is_empty() {
        return Err(Error::param("n_perms", "must be >= 1"));
    }
    let (m, n) = ds.dim();
    for (r, c) in perms {
        check_permutation(r, m)?;
        check_permutation(c, n)?;
    }
    let runs: Vec<(Array2<f64>, Option<Array2<f64>>, Diagnostics)> = perms
        .par_iter()
        .map(|perm| {
            let out = imputer.impute(&permute_dataset(ds, perm)?)?;
            let fitted = out.fitted_observed.map(|f| unpermute(f.values(), perm));
            Ok((unpermute(out.completed.values(), perm), fitted, out.diagnostics))
        })
        .collect::<Result<_>>()?;

    let scale = 1.0 / runs.len() as f64;
    let mut completed = Array2::zeros((m, n));
    let mut fitted = Some(Array2::zeros((m, n)));
    let mut diagnostics = Diagnostics {
        converged: true,
        ..Default::default()
    };
    for (c, f, d) in &runs {
        completed.scaled_add(scale, c);
        fitted = match (fitted, f) {
            (Some(mut acc), Some(f)) => {
                acc.scaled_add(scale, f);
                Some(acc)
            }
            _ => None,
        };
        diagnostics.iterations = diagnostics.iterations.max(d.iterations);
        diagnostics.final_change = diagnostics.final_change.max(d.final_change);
        diagnostics.converged &= d.converged;
    }
    Ok(ImputationResult {
        completed: overlay_observed(ds, &completed)?,
        fitted_observed: fitted.map(DataMatrix::new).transpose()?,
        diagnostics,
    })
}

/// [`permutation_ensemble_with`] over `n_perms` seed-drawn permutations.
pub fn permutation_ensemble(
    imputer: &dyn Impute,
    ds: &MaskedDataset,
    n_perms: usize,
    seed: &SeedSpec,
) -> Result<ImputationResult> {
    let (m, n) = ds.dim();
    permutation_ensemble_with(imputer, ds, &draw_permutations(m, n, n_perms, seed))
}

/// w* = (x_obs − x̂₂)ᵀ(x̂₁ − x̂₂) / ‖x̂₁ − x̂₂‖², the unconstrained minimizer
/// of ‖x_obs − (w x̂₁ + (1 − w) x̂₂)‖². Returns 0.5 when the denominator is
/// below `degenerate_tol`. Not clipped to [0, 1].
pub fn adaptive_weight(x1: &[f64], x2: &[f64], x_obs: &[f64], degenerate_tol: f64) -> Result<f64> {
    if x1.len() != x2.len() {
        return Err(Error::LengthMismatch(x1.len(), x2.len()));
    }
    if x1.len() != x_obs.len() {
        return Err(Error::LengthMismatch(x1.len(), x_obs.len()));
    }
    if x1.is_empty() {
        return Err(Error::param("x_obs", "needs at least one observed cell"));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for ((a, b), y) in x1.iter().zip(x2).zip(x_obs) {
        let d = a - b;
        num += (y - b) * d;
        den += d * d;
    }
    Ok(if den < degenerate_tol { 0.5 } else { num / den })
}

/// Blends two already-computed results with the adaptive weight.
pub fn blend_results(
    ds: &MaskedDataset,
    a: &ImputationResult,
    b: &ImputationResult,
    labels: (&str, &str),
    degenerate_tol: f64,
) -> Result<ImputationResult> {
    let fa = a.fitted_at_observed(ds).ok_or_else(|| Error::MissingFitted {
        method: labels.0.to_string(),
    })?;
    let fb = b.fitted_at_observed(ds).ok_or_else(|| Error::MissingFitted {
        method: labels.1.to_string(),
    })?;
    let w = adaptive_weight(&fa, &fb, &ds.observed_values(), degenerate_tol)?;
    if !(0.0..=1.0).contains(&w) {
        log::info!("blend weight {w:.4} lies outside [0, 1]");
    }
    let mix = |x: &Array2<f64>, y: &Array2<f64>| x * w + y * (1.0 - w);
    let completed = mix(a.completed.values(), b.completed.values());
    let fitted = mix(
        a.fitted_observed.as_ref().expect("checked above").values(),
        b.fitted_observed.as_ref().expect("checked above").values(),
    );
    Ok(ImputationResult {
        completed: overlay_observed(ds, &completed)?,
        fitted_observed: Some(DataMatrix::new(fitted)?),
        diagnostics: Diagnostics {
            iterations: a.diagnostics.iterations.max(b.diagnostics.iterations),
            final_change: a.diagnostics.final_change.max(b.diagnostics.final_change),
            converged: a.diagnostics.converged && b.diagnostics.converged,
            objective: Vec::new(),
            weight: Some(w),
        },
    })
}

/// Runs both bases under the permutation ensemble and blends them. The two
/// bases share the permutation draws.
pub fn blend_with(
    ds: &MaskedDataset,
    base_a: &dyn Impute,
    base_b: &dyn Impute,
    n_perms: usize,
    degenerate_tol: f64,
    seed: &SeedSpec,
) -> Result<ImputationResult> {
    let (ra, rb) = rayon::join(
        || permutation_ensemble(base_a, ds, n_perms, seed),
        || permutation_ensemble(base_b, ds, n_perms, seed),
    );
    let (la, lb) = (base_a.label(), base_b.label());
    blend_results(ds, &ra?, &rb?, (&la, &lb), degenerate_tol)
}

pub fn blend(ds: &MaskedDataset, spec: &EnsembleSpec, seed: &SeedSpec) -> Result<ImputationResult> {
    spec.validate()?;
    blend_with(ds, &spec.base_a, &spec.base_b, spec.n_perms, spec.degenerate_tol, seed)
}
