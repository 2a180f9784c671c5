use ndarray::{Array1, Array2};
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{calibrate_intercept, check_range, check_unit_open, mean_sigmoid};
use crate::data::{sample_bernoulli_mask, sigmoid, DataMatrix, Mask, PropensityMatrix, SeedSpec};
use crate::error::Result;

/// Small dense network: tanh hidden layers and a scalar linear output (the
/// logit of the observation propensity).
#[derive(Debug, Clone)]
pub struct FeedForward {
    layers: Vec<(Array2<f64>, Array1<f64>)>,
}

impl FeedForward {
    /// Layer sizes run `input -> hidden[0] -> ... -> 1`. Weights and biases are
    /// i.i.d. N(0, 1).
    pub fn random(input: usize, hidden: &[usize], rng: &mut impl Rng) -> Self {
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let weights =
                    Array2::from_shape_simple_fn((w[1], w[0]), || StandardNormal.sample(&mut *rng));
                let bias = Array1::from_shape_simple_fn(w[1], || StandardNormal.sample(&mut *rng));
                (weights, bias)
            })
            .collect();
        FeedForward { layers }
    }

    pub fn zeros(input: usize, hidden: &[usize]) -> Self {
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let layers = sizes
            .windows(2)
            .map(|w| (Array2::zeros((w[1], w[0])), Array1::zeros(w[1])))
            .collect();
        FeedForward { layers }
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].0.ncols()
    }

    pub fn forward(&self, input: &Array1<f64>) -> f64 {
        let last = self.layers.len() - 1;
        let mut h = input.clone();
        for (k, (w, b)) in self.layers.iter().enumerate() {
            h = w.dot(&h) + b;
            if k < last {
                h.mapv_inplace(f64::tanh);
            }
        }
        h[0]
    }
}

/// For every cell, `size` distinct cells drawn from its own row and column
/// (the cell itself included), in draw order. Row-major over cells.
pub fn sample_neighborhoods(
    rows: usize,
    cols: usize,
    size: usize,
    seed: &SeedSpec,
) -> Vec<Vec<(usize, usize)>> {
    let pool = rows + cols - 1;
    let size = size.clamp(1, pool);
    let mut rng = seed.rng();
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            let picks = index::sample(&mut rng, pool, size);
            out.push(
                picks
                    .iter()
                    .map(|k| {
                        if k < cols {
                            (i, k)
                        } else {
                            let s = k - cols;
                            // Skip row i in the column part.
                            (if s >= i { s + 1 } else { s }, j)
                        }
                    })
                    .collect(),
            );
        }
    }
    out
}

/// P(observed) per cell: the network's logit on the flattened neighborhood
/// plus one global bias calibrated so the mean propensity is 1 − p_missing.
pub fn nn_mnar_propensities(
    truth: &DataMatrix,
    neighborhoods: &[Vec<(usize, usize)>],
    net: &FeedForward,
    p_missing: f64,
) -> Result<Array2<f64>> {
    let (m, n) = truth.dim();
    let x = truth.values();
    let logits: Vec<f64> = neighborhoods
        .iter()
        .map(|cells| {
            let input = Array1::from_iter(cells.iter().map(|&(s, t)| x[[s, t]]));
            net.forward(&input)
        })
        .collect();
    let b = calibrate_intercept(mean_sigmoid(&logits), 1.0 - p_missing)?;
    Ok(Array2::from_shape_vec((m, n), logits.iter().map(|z| sigmoid(z + b)).collect())
        .expect("one logit per cell"))
}

/// Neural-network MNAR: a random network over random per-cell neighborhoods
/// defines the observation propensity.
pub fn gen_nn_mnar(
    truth: &DataMatrix,
    p_missing: f64,
    neighborhood: (usize, usize),
    layers: (usize, usize),
    width: (usize, usize),
    seed: &SeedSpec,
) -> Result<Mask> {
    check_unit_open("p_missing", p_missing)?;
    check_range("neighborhood", neighborhood, 1)?;
    check_range("layers", layers, 1)?;
    check_range("width", width, 1)?;
    let (m, n) = truth.dim();
    let mut rng = seed.child("shape").rng();
    let size = rng.random_range(neighborhood.0..=neighborhood.1).min(m + n - 1);
    let depth = rng.random_range(layers.0..=layers.1);
    let hidden: Vec<usize> = (0..depth).map(|_| rng.random_range(width.0..=width.1)).collect();
    let net = FeedForward::random(size, &hidden, &mut seed.child("weights").rng());
    let hoods = sample_neighborhoods(m, n, size, &seed.child("neighborhoods"));
    let p = nn_mnar_propensities(truth, &hoods, &net, p_missing)?;
    Ok(sample_bernoulli_mask(&PropensityMatrix::new(p)?, &seed.child("mask")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{sample_lfm, LfmSpec};
    use std::collections::HashSet;

    fn lfm() -> DataMatrix {
        sample_lfm(&LfmSpec::gaussian(12, 8, 2), &SeedSpec::new(0, "nn")).unwrap()
    }

    #[test]
    fn neighborhoods_stay_in_row_and_column() {
        let hoods = sample_neighborhoods(7, 5, 6, &SeedSpec::new(1, "h"));
        assert_eq!(hoods.len(), 35);
        for (c, cells) in hoods.iter().enumerate() {
            let (i, j) = (c / 5, c % 5);
            assert_eq!(cells.len(), 6);
            let uniq: HashSet<_> = cells.iter().collect();
            assert_eq!(uniq.len(), 6);
            assert!(cells.iter().all(|&(s, t)| (s == i || t == j) && s < 7 && t < 5));
        }
        // Oversized request is clamped to the pool m + n - 1.
        let full = sample_neighborhoods(3, 3, 50, &SeedSpec::new(1, "h"));
        assert!(full.iter().all(|c| c.len() == 5));
    }

    #[test]
    fn zero_network_is_constant_mcar() {
        let x = lfm();
        let hoods = sample_neighborhoods(12, 8, 4, &SeedSpec::new(2, "h"));
        let net = FeedForward::zeros(4, &[8, 5]);
        let p = nn_mnar_propensities(&x, &hoods, &net, 0.3).unwrap();
        let first = p[[0, 0]];
        assert!((first - 0.7).abs() < 1e-6);
        assert!(p.iter().all(|&v| v == first));
    }

    #[test]
    fn propensities_in_unit_interval() {
        let x = lfm();
        for s in 0..10 {
            let mut rng = SeedSpec::new(s, "w").rng();
            let net = FeedForward::random(5, &[10, 6], &mut rng);
            let hoods = sample_neighborhoods(12, 8, 5, &SeedSpec::new(s, "h"));
            let p = nn_mnar_propensities(&x, &hoods, &net, 0.4).unwrap();
            assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
            assert!((p.mean().unwrap() - 0.6).abs() < 1e-6);
        }
    }

    #[test]
    fn sensitivity_follows_neighborhoods() {
        let x = lfm();
        let (m, n) = x.dim();
        let hoods = sample_neighborhoods(m, n, 2, &SeedSpec::new(5, "h"));
        let net = FeedForward::random(2, &[6], &mut SeedSpec::new(5, "w").rng());
        let base = nn_mnar_propensities(&x, &hoods, &net, 0.4).unwrap();
        let used: HashSet<(usize, usize)> = hoods.iter().flatten().copied().collect();
        let perturb = |cell: (usize, usize)| {
            let mut v = x.values().clone();
            v[[cell.0, cell.1]] += 0.75;
            nn_mnar_propensities(&DataMatrix::new(v).unwrap(), &hoods, &net, 0.4).unwrap()
        };
        // Inside: the cell whose neighborhood contains the perturbed cell moves.
        let target = 17;
        let cell = hoods[target][0];
        let moved = perturb(cell);
        assert_ne!(moved[[target / n, target % n]], base[[target / n, target % n]]);
        // Outside every neighborhood: nothing moves.
        let outside = (0..m)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .find(|c| !used.contains(c))
            .expect("size-2 neighborhoods leave some cell unused");
        assert_eq!(perturb(outside), base);
    }

    #[test]
    fn invalid_ranges_rejected() {
        let x = lfm();
        let s = SeedSpec::new(0, "r");
        assert!(gen_nn_mnar(&x, 0.4, (5, 2), (1, 3), (4, 16), &s).is_err());
        assert!(gen_nn_mnar(&x, 0.4, (1, 5), (0, 3), (4, 16), &s).is_err());
        assert!(gen_nn_mnar(&x, 0.0, (1, 5), (1, 3), (4, 16), &s).is_err());
        assert!(gen_nn_mnar(&x, 0.4, (1, 5), (1, 3), (4, 16), &s).is_ok());
    }
}
