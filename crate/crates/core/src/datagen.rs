//! Synthetic ground truth from linear factor models, Y = U Vᵀ (+ optional noise).

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal, StudentT};
use serde::{Deserialize, Serialize};

use crate::data::{DataMatrix, SeedSpec};
use crate::error::{Error, Result};

/// Distribution of the rows of a latent factor matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LatentDistribution {
    Gaussian { scale: f64 },
    Laplace { scale: f64 },
    /// Degrees of freedom must be at least 3 so the variance exists.
    StudentT { dof: f64 },
    /// Exact zero with probability `spike_prob`, else N(0, slab_scale²).
    SpikeAndSlab { spike_prob: f64, slab_scale: f64 },
    /// Rows lie on the simplex. A single concentration is broadcast to
    /// every component.
    Dirichlet { concentration: Vec<f64> },
}

impl LatentDistribution {
    pub const NAMES: [&'static str; 5] =
        ["gaussian", "laplace", "student-t", "spike-and-slab", "dirichlet"];

    /// Family member with unit-scale default parameters.
    pub fn by_name(name: &str) -> Result<Self> {
        Ok(match name {
            "gaussian" => LatentDistribution::Gaussian { scale: 1.0 },
            "laplace" => LatentDistribution::Laplace { scale: 1.0 },
            "student-t" => LatentDistribution::StudentT { dof: 5.0 },
            "spike-and-slab" => LatentDistribution::SpikeAndSlab {
                spike_prob: 0.5,
                slab_scale: 1.0,
            },
            "dirichlet" => LatentDistribution::Dirichlet {
                concentration: vec![1.0],
            },
            other => return Err(Error::UnknownTag(other.to_string())),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::param(name, format!("{v} must be finite and > 0")))
            }
        };
        match self {
            LatentDistribution::Gaussian { scale } | LatentDistribution::Laplace { scale } => {
                positive("scale", *scale)
            }
            LatentDistribution::StudentT { dof } => {
                if dof.is_finite() && *dof >= 3.0 {
                    Ok(())
                } else {
                    Err(Error::param("dof", format!("{dof} must be >= 3")))
                }
            }
            LatentDistribution::SpikeAndSlab {
                spike_prob,
                slab_scale,
            } => {
                if !(0.0..=1.0).contains(spike_prob) {
                    return Err(Error::param("spike_prob", format!("{spike_prob} not in [0, 1]")));
                }
                if !(slab_scale.is_finite() && *slab_scale >= 0.0) {
                    return Err(Error::param("slab_scale", format!("{slab_scale} must be >= 0")));
                }
                Ok(())
            }
            LatentDistribution::Dirichlet { concentration } => {
                if concentration.is_empty() {
                    return Err(Error::param("concentration", "empty"));
                }
                concentration
                    .iter()
                    .try_for_each(|&a| positive("concentration", a))
            }
        }
    }
}

/// Draws a `rows × cols` matrix whose rows are i.i.d. from `dist`.
pub fn sample_latent(
    dist: &LatentDistribution,
    rows: usize,
    cols: usize,
    seed: &SeedSpec,
) -> Result<Array2<f64>> {
    dist.validate()?;
    let mut rng = seed.rng();
    let out = match dist {
        LatentDistribution::Gaussian { scale } => {
            let normal = Normal::new(0.0, *scale).map_err(|e| Error::param("scale", e.to_string()))?;
            Array2::from_shape_simple_fn((rows, cols), || normal.sample(&mut rng))
        }
        LatentDistribution::Laplace { scale } => Array2::from_shape_simple_fn((rows, cols), || {
            // Inverse CDF on u in (-1/2, 1/2).
            let u: f64 = rng.random::<f64>() - 0.5;
            -scale * u.signum() * (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln()
        }),
        LatentDistribution::StudentT { dof } => {
            let t = StudentT::new(*dof).map_err(|e| Error::param("dof", e.to_string()))?;
            Array2::from_shape_simple_fn((rows, cols), || t.sample(&mut rng))
        }
        LatentDistribution::SpikeAndSlab {
            spike_prob,
            slab_scale,
        } => {
            let normal = Normal::new(0.0, 1.0).expect("unit normal");
            Array2::from_shape_simple_fn((rows, cols), || {
                let spike = rng.random::<f64>() < *spike_prob;
                let z: f64 = normal.sample(&mut rng);
                if spike {
                    0.0
                } else {
                    slab_scale * z
                }
            })
        }
        LatentDistribution::Dirichlet { concentration } => {
            let alphas: Vec<f64> = match concentration.len() {
                1 => vec![concentration[0]; cols],
                len if len == cols => concentration.clone(),
                len => {
                    return Err(Error::param(
                        "concentration",
                        format!("length {len} does not match {cols} components"),
                    ))
                }
            };
            let gammas: Vec<Gamma<f64>> = alphas
                .iter()
                .map(|&a| Gamma::new(a, 1.0).map_err(|e| Error::param("concentration", e.to_string())))
                .collect::<Result<_>>()?;
            let mut out = Array2::zeros((rows, cols));
            for mut row in out.rows_mut() {
                let draws: Vec<f64> = gammas.iter().map(|g| g.sample(&mut rng)).collect();
                let total: f64 = draws.iter().sum();
                for (x, d) in row.iter_mut().zip(&draws) {
                    *x = if total > 0.0 { d / total } else { 1.0 / cols as f64 };
                }
            }
            out
        }
    };
    Ok(out)
}

/// Shape, rank and latent distributions of a linear factor model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LfmSpec {
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub row_dist: LatentDistribution,
    pub col_dist: LatentDistribution,
    #[serde(default)]
    pub noise_scale: f64,
}

impl LfmSpec {
    pub fn gaussian(rows: usize, cols: usize, rank: usize) -> Self {
        LfmSpec {
            rows,
            cols,
            rank,
            row_dist: LatentDistribution::Gaussian { scale: 1.0 },
            col_dist: LatentDistribution::Gaussian { scale: 1.0 },
            noise_scale: 0.0,
        }
    }

    /// Row and column distributions drawn independently from the family.
    pub fn random_family(rows: usize, cols: usize, rank: usize, seed: &SeedSpec) -> Self {
        let mut rng = seed.child("family").rng();
        let mut pick = || {
            let name = LatentDistribution::NAMES[rng.random_range(0..LatentDistribution::NAMES.len())];
            LatentDistribution::by_name(name).expect("known family name")
        };
        let row_dist = pick();
        let col_dist = pick();
        LfmSpec {
            rows,
            cols,
            rank,
            row_dist,
            col_dist,
            noise_scale: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::param("shape", "rows and cols must be positive"));
        }
        if self.rank == 0 || self.rank > self.rows.min(self.cols) {
            return Err(Error::param(
                "rank",
                format!("{} not in [1, {}]", self.rank, self.rows.min(self.cols)),
            ));
        }
        if !(self.noise_scale.is_finite() && self.noise_scale >= 0.0) {
            return Err(Error::param("noise_scale", format!("{} must be >= 0", self.noise_scale)));
        }
        self.row_dist.validate()?;
        self.col_dist.validate()
    }
}

/// Samples U (m×k) and V (n×k) and returns U Vᵀ + noise_scale·G.
pub fn sample_lfm(spec: &LfmSpec, seed: &SeedSpec) -> Result<DataMatrix> {
    spec.validate()?;
    let u = sample_latent(&spec.row_dist, spec.rows, spec.rank, &seed.child("u"))?;
    let v = sample_latent(&spec.col_dist, spec.cols, spec.rank, &seed.child("v"))?;
    let mut y = u.dot(&v.t());
    if spec.noise_scale > 0.0 {
        let mut rng = seed.child("noise").rng();
        let normal = Normal::new(0.0, spec.noise_scale).expect("validated scale");
        y.mapv_inplace(|x| x + normal.sample(&mut rng));
    }
    DataMatrix::new(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn singular_values(a: &Array2<f64>) -> Vec<f64> {
        let (m, n) = a.dim();
        let mat = nalgebra::DMatrix::from_fn(m, n, |i, j| a[[i, j]]);
        let mut s: Vec<f64> = mat.singular_values().iter().copied().collect();
        s.sort_by(|x, y| y.partial_cmp(x).unwrap());
        s
    }

    #[test]
    fn spike_probability_one_is_zero_matrix() {
        let d = LatentDistribution::SpikeAndSlab {
            spike_prob: 1.0,
            slab_scale: 3.0,
        };
        let z = sample_latent(&d, 7, 3, &SeedSpec::new(1, "s")).unwrap();
        assert!(z.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn dirichlet_rows_on_simplex() {
        for conc in [vec![0.3], vec![1.0], vec![5.0, 0.5, 2.0]] {
            let d = LatentDistribution::Dirichlet { concentration: conc };
            let z = sample_latent(&d, 50, 3, &SeedSpec::new(4, "d")).unwrap();
            for row in z.rows() {
                assert!((row.sum() - 1.0).abs() < 1e-12);
                assert!(row.iter().all(|&x| x >= 0.0));
            }
        }
    }

    #[test]
    fn gaussian_moments() {
        // n = 10^4: sd(mean) = 0.01, sd(var) ~ sqrt(2/n) = 0.014; the windows
        // [-0.05, 0.05] and [0.94, 1.06] are 5 and ~4 sigma respectively.
        let z = sample_latent(
            &LatentDistribution::Gaussian { scale: 1.0 },
            100,
            100,
            &SeedSpec::new(11, "g"),
        )
        .unwrap();
        let n = z.len() as f64;
        let mean = z.sum() / n;
        let var = z.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((-0.05..=0.05).contains(&mean), "{mean}");
        assert!((0.94..=1.06).contains(&var), "{var}");
    }

    #[test]
    fn laplace_variance_is_two_b_squared() {
        let z = sample_latent(
            &LatentDistribution::Laplace { scale: 1.0 },
            200,
            100,
            &SeedSpec::new(2, "l"),
        )
        .unwrap();
        let n = z.len() as f64;
        let var = z.iter().map(|x| x * x).sum::<f64>() / n;
        assert!((var - 2.0).abs() < 0.15, "{var}");
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(LatentDistribution::StudentT { dof: 2.0 }.validate().is_err());
        assert!(LatentDistribution::Gaussian { scale: 0.0 }.validate().is_err());
        assert!(LatentDistribution::SpikeAndSlab { spike_prob: 1.5, slab_scale: 1.0 }
            .validate()
            .is_err());
        assert!(LatentDistribution::Dirichlet { concentration: vec![1.0, -1.0] }
            .validate()
            .is_err());
        assert!(sample_lfm(&LfmSpec::gaussian(3, 4, 5), &SeedSpec::new(0, "x")).is_err());
    }

    #[test]
    fn single_component_dirichlet_gives_all_ones() {
        let ones = LatentDistribution::Dirichlet { concentration: vec![1.0] };
        let spec = LfmSpec {
            rows: 6,
            cols: 4,
            rank: 1,
            row_dist: ones.clone(),
            col_dist: ones,
            noise_scale: 0.0,
        };
        let y = sample_lfm(&spec, &SeedSpec::new(0, "ones")).unwrap();
        assert!(y.values().iter().all(|&x| (x - 1.0).abs() < 1e-15));
    }

    #[test]
    fn noiseless_rank_is_bounded_for_every_family() {
        for (s, row) in LatentDistribution::NAMES.iter().enumerate() {
            for col in LatentDistribution::NAMES {
                let spec = LfmSpec {
                    rows: 20,
                    cols: 20,
                    rank: 3,
                    row_dist: LatentDistribution::by_name(row).unwrap(),
                    col_dist: LatentDistribution::by_name(col).unwrap(),
                    noise_scale: 0.0,
                };
                let y = sample_lfm(&spec, &SeedSpec::new(s as u64, col)).unwrap();
                let sv = singular_values(y.values());
                assert!(sv[3] <= 1e-8 * sv[0], "{row}/{col}: {sv:?}");
            }
        }
    }

    #[test]
    fn noise_raises_rank_and_seed_is_deterministic() {
        let mut spec = LfmSpec::gaussian(20, 20, 3);
        spec.noise_scale = 0.1;
        let a = sample_lfm(&spec, &SeedSpec::new(5, "n")).unwrap();
        let b = sample_lfm(&spec, &SeedSpec::new(5, "n")).unwrap();
        assert_eq!(a, b);
        let sv = singular_values(a.values());
        assert!(sv[3] > 1e-3);
    }
}
