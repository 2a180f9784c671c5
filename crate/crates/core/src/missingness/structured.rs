use ndarray::{s, Array1, Array2};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{calibrate_intercept, check_unit_open};
use crate::data::{sample_bernoulli_mask, sigmoid, DataMatrix, Mask, PropensityMatrix, SeedSpec};
use crate::error::{Error, Result};

/// Panel dropout: row i drops out at t₀ ~ Unif{1, …, n−1} and every column
/// from t₀ on is missing.
pub fn gen_panel(truth: &DataMatrix, seed: &SeedSpec) -> Result<Mask> {
    let (m, n) = truth.dim();
    if n < 2 {
        return Err(Error::param("cols", "panel dropout needs at least 2 columns"));
    }
    let mut rng = seed.child("dropout").rng();
    let mut ind = Array2::from_elem((m, n), true);
    for i in 0..m {
        let t0 = rng.random_range(1..n);
        ind.slice_mut(s![i, t0..]).fill(false);
    }
    Ok(Mask::new(ind))
}

/// σ(u_iᵀ v_j + b_i + c_j) for every cell.
pub fn latent_factor_propensities(
    u: &Array2<f64>,
    v: &Array2<f64>,
    b: &Array1<f64>,
    c: &Array1<f64>,
) -> Array2<f64> {
    let mut z = u.dot(&v.t());
    for ((i, j), x) in z.indexed_iter_mut() {
        *x = sigmoid(*x + b[i] + c[j]);
    }
    z
}

/// Latent-factor MNAR: P(observed) = σ(u_iᵀ v_j + b_i + c_j) with rank
/// k ~ Unif{k_low, …, k_high} and all factors standard normal.
pub fn gen_latent_factor(
    truth: &DataMatrix,
    k_low: usize,
    k_high: usize,
    seed: &SeedSpec,
) -> Result<Mask> {
    if k_low < 1 || k_low > k_high {
        return Err(Error::param("k_low", format!("need 1 <= {k_low} <= {k_high}")));
    }
    let (m, n) = truth.dim();
    let mut rng = seed.child("factors").rng();
    let k = rng.random_range(k_low..=k_high);
    let mut draw = |shape: (usize, usize)| {
        Array2::from_shape_simple_fn(shape, || StandardNormal.sample(&mut rng))
    };
    let u = draw((m, k));
    let v = draw((n, k));
    let b = draw((m, 1)).column(0).to_owned();
    let c = draw((n, 1)).column(0).to_owned();
    let p = PropensityMatrix::new(latent_factor_propensities(&u, &v, &b, &c))?;
    Ok(sample_bernoulli_mask(&p, &seed.child("mask")))
}

/// Row and column cluster labels plus P(observed) under the additive
/// random-effects model σ(g_{C_R(i)} + h_{C_C(j)} + ε_ij).
#[allow(clippy::too_many_arguments)]
pub fn cluster_propensities(
    rows: usize,
    cols: usize,
    row_clusters: usize,
    col_clusters: usize,
    tau_r: f64,
    tau_c: f64,
    eps_std: f64,
    seed: &SeedSpec,
) -> Result<(Vec<usize>, Vec<usize>, Array2<f64>)> {
    if row_clusters == 0 || col_clusters == 0 {
        return Err(Error::param("clusters", "cluster counts must be >= 1"));
    }
    for (name, v) in [("tau_r", tau_r), ("tau_c", tau_c), ("eps_std", eps_std)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(Error::param(name, format!("{v} must be >= 0")));
        }
    }
    let mut rng = seed.child("clusters").rng();
    let row_of: Vec<usize> = (0..rows).map(|_| rng.random_range(0..row_clusters)).collect();
    let col_of: Vec<usize> = (0..cols).map(|_| rng.random_range(0..col_clusters)).collect();
    let normal = |sd: f64| Normal::new(0.0, sd).expect("sd validated");
    let g: Vec<f64> = (0..row_clusters).map(|_| normal(tau_r).sample(&mut rng)).collect();
    let h: Vec<f64> = (0..col_clusters).map(|_| normal(tau_c).sample(&mut rng)).collect();
    let noise = normal(eps_std);
    let p = Array2::from_shape_fn((rows, cols), |(i, j)| {
        sigmoid(g[row_of[i]] + h[col_of[j]] + noise.sample(&mut rng))
    });
    Ok((row_of, col_of, p))
}

/// Cluster MNAR, see [`cluster_propensities`].
pub fn gen_cluster(
    truth: &DataMatrix,
    row_clusters: usize,
    col_clusters: usize,
    tau_r: f64,
    tau_c: f64,
    eps_std: f64,
    seed: &SeedSpec,
) -> Result<Mask> {
    let (m, n) = truth.dim();
    let (_, _, p) =
        cluster_propensities(m, n, row_clusters, col_clusters, tau_r, tau_c, eps_std, seed)?;
    Ok(sample_bernoulli_mask(&PropensityMatrix::new(p)?, &seed.child("mask")))
}

/// Random split into (cheap, expensive) columns, both ascending. The cheap
/// set has round(f_cheap·n) columns, kept within [1, n − 1].
pub fn two_phase_partition(
    cols: usize,
    f_cheap: f64,
    seed: &SeedSpec,
) -> Result<(Vec<usize>, Vec<usize>)> {
    check_unit_open("f_cheap", f_cheap)?;
    if cols < 2 {
        return Err(Error::param("cols", "two-phase needs a cheap and an expensive column"));
    }
    let n_cheap = ((f_cheap * cols as f64).round() as usize).clamp(1, cols - 1);
    let mut order: Vec<usize> = (0..cols).collect();
    order.shuffle(&mut seed.child("partition").rng());
    let mut cheap = order[..n_cheap].to_vec();
    let mut expensive = order[n_cheap..].to_vec();
    cheap.sort_unstable();
    expensive.sort_unstable();
    Ok((cheap, expensive))
}

fn z_normalize(v: &mut [f64]) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    for x in v.iter_mut() {
        *x = if sd > 0.0 { (*x - mean) / sd } else { 0.0 };
    }
}

/// Two-phase MNAR: cheap columns are always observed; each row's expensive
/// block is observed as a whole with probability σ(α + β·s_i), where s_i is
/// the z-scored random linear score of its cheap values.
pub fn gen_two_phase(
    truth: &DataMatrix,
    f_cheap: f64,
    alpha: f64,
    beta: f64,
    seed: &SeedSpec,
) -> Result<Mask> {
    let (m, n) = truth.dim();
    let (cheap, expensive) = two_phase_partition(n, f_cheap, seed)?;
    let mut rng = seed.child("weights").rng();
    let w: Vec<f64> = cheap.iter().map(|_| StandardNormal.sample(&mut rng)).collect();
    let x = truth.values();
    let mut score: Vec<f64> = (0..m)
        .map(|i| cheap.iter().zip(&w).map(|(&j, wj)| wj * x[[i, j]]).sum())
        .collect();
    z_normalize(&mut score);
    let mut rng = seed.child("mask").rng();
    let mut ind = Array2::from_elem((m, n), true);
    for (i, s) in score.iter().enumerate() {
        if rng.random::<f64>() >= sigmoid(alpha + beta * s) {
            for &j in &expensive {
                ind[[i, j]] = false;
            }
        }
    }
    Ok(Mask::new(ind))
}

/// Statistic summarising a block of X*.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Convolution {
    #[default]
    Mean,
}

/// Contiguous `[start, end)` ranges splitting `len` into `blocks` parts.
pub fn block_bounds(len: usize, blocks: usize) -> Vec<(usize, usize)> {
    (0..blocks)
        .map(|b| (b * len / blocks, (b + 1) * len / blocks))
        .collect()
}

/// Block MNAR: the matrix is cut into a `row_blocks × col_blocks` grid; each
/// block's mean is z-scored across blocks and the whole block goes missing
/// with probability σ(score + b), b calibrated so the expected missing
/// fraction over all cells is `p_missing`.
pub fn gen_block(
    truth: &DataMatrix,
    p_missing: f64,
    row_blocks: usize,
    col_blocks: usize,
    conv: Convolution,
    seed: &SeedSpec,
) -> Result<Mask> {
    let (m, n) = truth.dim();
    check_unit_open("p_missing", p_missing)?;
    if row_blocks == 0 || col_blocks == 0 || row_blocks > m || col_blocks > n {
        return Err(Error::param(
            "blocks",
            format!("{row_blocks}x{col_blocks} grid does not fit a {m}x{n} matrix"),
        ));
    }
    let rb = block_bounds(m, row_blocks);
    let cb = block_bounds(n, col_blocks);
    let x = truth.values();
    let mut scores = Vec::with_capacity(row_blocks * col_blocks);
    let mut weights = Vec::with_capacity(row_blocks * col_blocks);
    for &(r0, r1) in &rb {
        for &(c0, c1) in &cb {
            let block = x.slice(s![r0..r1, c0..c1]);
            let stat = match conv {
                Convolution::Mean => block.mean().expect("non-empty block"),
            };
            scores.push(stat);
            weights.push(block.len() as f64 / (m * n) as f64);
        }
    }
    z_normalize(&mut scores);
    let form = |b: f64| {
        scores
            .iter()
            .zip(&weights)
            .map(|(s, w)| w * sigmoid(s + b))
            .sum::<f64>()
    };
    let b = calibrate_intercept(form, p_missing)?;
    let mut rng = seed.child("mask").rng();
    let mut ind = Array2::from_elem((m, n), true);
    let mut k = 0;
    for &(r0, r1) in &rb {
        for &(c0, c1) in &cb {
            if rng.random::<f64>() < sigmoid(scores[k] + b) {
                ind.slice_mut(s![r0..r1, c0..c1]).fill(false);
            }
            k += 1;
        }
    }
    Ok(Mask::new(ind))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::missing_fraction;
    use crate::datagen::{sample_lfm, LfmSpec};

    fn lfm(m: usize, n: usize, s: u64) -> DataMatrix {
        sample_lfm(&LfmSpec::gaussian(m, n, 2), &SeedSpec::new(s, "x")).unwrap()
    }

    #[test]
    fn panel_two_columns() {
        let mask = gen_panel(&lfm(30, 2, 0), &SeedSpec::new(0, "p")).unwrap();
        for i in 0..30 {
            assert!(mask.observed(i, 0) && !mask.observed(i, 1));
        }
        assert!(gen_panel(&DataMatrix::new(Array2::zeros((4, 1))).unwrap(), &SeedSpec::new(0, "p")).is_err());
    }

    #[test]
    fn panel_dropout_is_uniform() {
        // 10^4 rows, n = 11: chi-square over 10 cells (9 dof); the 0.999
        // quantile is 27.88.
        let x = DataMatrix::new(Array2::zeros((10_000, 11))).unwrap();
        let mask = gen_panel(&x, &SeedSpec::new(4, "chi")).unwrap();
        let mut counts = [0usize; 11];
        for i in 0..10_000 {
            let t0 = (0..11).find(|&j| !mask.observed(i, j)).unwrap();
            assert!((t0..11).all(|j| !mask.observed(i, j)));
            counts[t0] += 1;
        }
        assert_eq!(counts[0], 0);
        let expected = 1000.0;
        let chi2: f64 = counts[1..].iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        assert!(chi2 < 27.88, "{chi2} {counts:?}");
    }

    #[test]
    fn latent_factor_zero_is_half() {
        let p = latent_factor_propensities(
            &Array2::zeros((4, 2)),
            &Array2::zeros((3, 2)),
            &Array1::zeros(4),
            &Array1::zeros(3),
        );
        assert!(p.iter().all(|&v| v == 0.5));
        assert!(gen_latent_factor(&lfm(5, 5, 0), 3, 2, &SeedSpec::new(0, "l")).is_err());
    }

    #[test]
    fn latent_factor_rate_matches_monte_carlo() {
        // Oracle: E[σ(u·v + b + c)] estimated by direct simulation of the
        // same generative model (k uniform over 1..=5) with an unrelated RNG.
        let mut rng = SeedSpec::new(99, "oracle").rng();
        let mut acc = 0.0;
        let draws = 200_000;
        for _ in 0..draws {
            let k = rng.random_range(1..=5);
            let mut z = 0.0;
            for _ in 0..k {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                z += a * b;
            }
            let b: f64 = StandardNormal.sample(&mut rng);
            let c: f64 = StandardNormal.sample(&mut rng);
            acc += sigmoid(z + b + c);
        }
        let expected = acc / draws as f64;
        let x = lfm(60, 30, 1);
        let observed: f64 = (0..100)
            .map(|s| 1.0 - missing_fraction(&gen_latent_factor(&x, 1, 5, &SeedSpec::new(s, "lf")).unwrap()))
            .sum::<f64>()
            / 100.0;
        assert!((observed - expected).abs() < 0.03, "{observed} vs {expected}");
    }

    #[test]
    fn cluster_zero_scales_is_half() {
        let (_, _, p) = cluster_propensities(10, 6, 5, 4, 0.0, 0.0, 0.0, &SeedSpec::new(0, "c")).unwrap();
        assert!(p.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn cluster_cells_share_propensity_without_noise() {
        let (ro, co, p) = cluster_propensities(40, 12, 5, 4, 1.0, 1.0, 0.0, &SeedSpec::new(2, "c")).unwrap();
        for i in 0..40 {
            for j in 0..12 {
                for k in 0..40 {
                    for l in 0..12 {
                        if ro[i] == ro[k] && co[j] == co[l] {
                            assert_eq!(p[[i, j]], p[[k, l]]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn two_phase_all_or_nothing() {
        let x = lfm(80, 10, 3);
        for s in 0..20 {
            let seed = SeedSpec::new(s, "tp");
            let (cheap, expensive) = two_phase_partition(10, 0.4, &seed).unwrap();
            assert_eq!(cheap.len(), 4);
            let mask = gen_two_phase(&x, 0.4, 0.0, 2.0, &seed).unwrap();
            for i in 0..80 {
                assert!(cheap.iter().all(|&j| mask.observed(i, j)));
                let obs: Vec<bool> = expensive.iter().map(|&j| mask.observed(i, j)).collect();
                assert!(obs.iter().all(|&b| b == obs[0]));
            }
        }
        assert!(two_phase_partition(1, 0.4, &SeedSpec::new(0, "t")).is_err());
    }

    #[test]
    fn block_constant_and_grid_errors() {
        let x = lfm(100, 50, 4);
        let rb = block_bounds(100, 10);
        let cb = block_bounds(50, 10);
        let mask = gen_block(&x, 0.4, 10, 10, Convolution::Mean, &SeedSpec::new(0, "b")).unwrap();
        for &(r0, r1) in &rb {
            for &(c0, c1) in &cb {
                let first = mask.observed(r0, c0);
                for i in r0..r1 {
                    for j in c0..c1 {
                        assert_eq!(mask.observed(i, j), first);
                    }
                }
            }
        }
        assert!(gen_block(&x, 0.4, 101, 10, Convolution::Mean, &SeedSpec::new(0, "b")).is_err());
    }

    #[test]
    fn block_unit_grid_on_constant_is_mcar() {
        let x = DataMatrix::new(Array2::from_elem((100, 50), 2.0)).unwrap();
        let frac = missing_fraction(&gen_block(&x, 0.4, 100, 50, Convolution::Mean, &SeedSpec::new(1, "b")).unwrap());
        // 5000 independent cells: sd 0.007.
        assert!((frac - 0.4).abs() < 0.03, "{frac}");
    }

    #[test]
    fn block_bounds_cover() {
        let b = block_bounds(23, 4);
        assert_eq!(b.first().unwrap().0, 0);
        assert_eq!(b.last().unwrap().1, 23);
        assert!(b.windows(2).all(|w| w[0].1 == w[1].0));
    }
}
