//! Small dense helpers shared by the regressors.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Ridge fit with an unpenalized intercept, obtained by centering.
#[derive(Debug, Clone)]
pub(crate) struct RidgeFit {
    pub intercept: f64,
    pub beta: DVector<f64>,
    pub x_mean: DVector<f64>,
}

impl RidgeFit {
    pub fn predict(&self, row: impl Iterator<Item = f64>) -> f64 {
        self.intercept
            + row
                .zip(self.x_mean.iter().zip(self.beta.iter()))
                .map(|(v, (mu, b))| (v - mu) * b)
                .sum::<f64>()
    }
}

/// Solves min ‖y − b₀ − Xβ‖² + λ‖β‖². With `lambda = 0` a rank-deficient
/// design is reported as [`Error::Singular`].
pub(crate) fn ridge_fit(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<RidgeFit> {
    let (rows, p) = x.shape();
    if rows == 0 {
        return Err(Error::param("rows", "ridge fit needs at least one sample"));
    }
    let x_mean = DVector::from_iterator(p, x.column_iter().map(|c| c.mean()));
    let y_mean = y.mean();
    if p == 0 {
        return Ok(RidgeFit {
            intercept: y_mean,
            beta: DVector::zeros(0),
            x_mean,
        });
    }
    let mut xc = x.clone();
    for (mut col, mu) in xc.column_iter_mut().zip(x_mean.iter()) {
        col.add_scalar_mut(-mu);
    }
    let yc = y.add_scalar(-y_mean);

    let beta = if lambda > 0.0 {
        let mut gram = xc.tr_mul(&xc);
        for d in 0..p {
            gram[(d, d)] += lambda;
        }
        let rhs = xc.tr_mul(&yc);
        match gram.clone().cholesky() {
            Some(chol) => chol.solve(&rhs),
            None => svd_ridge(&xc, &yc, lambda)?,
        }
    } else {
        svd_ridge(&xc, &yc, 0.0)?
    };
    Ok(RidgeFit {
        intercept: y_mean,
        beta,
        x_mean,
    })
}

fn svd_ridge(xc: &DMatrix<f64>, yc: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    let (rows, p) = xc.shape();
    let svd = xc.clone().svd(true, true);
    let (u, vt) = match (svd.u.as_ref(), svd.v_t.as_ref()) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::Singular),
    };
    let sv = &svd.singular_values;
    let tol = sv.max() * rows.max(p) as f64 * f64::EPSILON;
    if lambda == 0.0 && (sv.len() < p || sv.iter().any(|&s| s <= tol)) {
        return Err(Error::Singular);
    }
    let uty = u.tr_mul(yc);
    let scaled = DVector::from_iterator(
        sv.len(),
        sv.iter().zip(uty.iter()).map(|(&s, &b)| s * b / (s * s + lambda)),
    );
    Ok(vt.tr_mul(&scaled))
}
