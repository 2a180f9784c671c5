//! The thirteen mask generators and a dispatcher keyed by [`PatternSpec`].
//!
//! Every generator maps `(X*, params, seed)` to a [`Mask`] with `true` meaning
//! observed, and is a pure function of its inputs. Parameters named
//! `p_missing` are missing probabilities; generators convert them to
//! observation propensities internally.

mod nn;
mod quantile;
mod seq;
mod simple;
mod structured;

use serde::{Deserialize, Serialize};

use crate::data::{sigmoid, DataMatrix, Mask, SeedSpec};
use crate::error::{Error, Result};

pub use nn::{gen_nn_mnar, nn_mnar_propensities, sample_neighborhoods, FeedForward};
pub use quantile::{
    censoring_directions, gen_censoring, gen_polarization_hard, gen_polarization_soft, quantile,
    soft_polarization_missing_prob, CensorDirection,
};
pub use seq::{gen_seq, BanditAlgorithm, BanditConfig};
pub use simple::{col_mar_design, gen_col_mar, gen_mcar, gen_self_masking, ColMarDesign};
pub use structured::{
    block_bounds, cluster_propensities, gen_block, gen_cluster, gen_latent_factor, gen_panel,
    gen_two_phase, latent_factor_propensities, two_phase_partition, Convolution,
};

/// Maximum number of draws the dispatcher makes before giving up on a
/// degenerate mask.
pub const RESAMPLE_LIMIT: usize = 16;

/// Lower and upper ends of the intercept bisection bracket.
pub const CALIBRATION_BRACKET: (f64, f64) = (-30.0, 30.0);

/// One of the thirteen mechanisms with its parameters. `Default` values come
/// from the published hyperparameter table where it gives one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "pattern", rename_all = "kebab-case")]
pub enum Pattern {
    Mcar {
        p_missing: f64,
    },
    ColMar {
        p_missing: f64,
        predictor_fraction: f64,
    },
    NnMnar {
        p_missing: f64,
        neighborhood: (usize, usize),
        layers: (usize, usize),
        width: (usize, usize),
    },
    SelfMasking {
        p_missing: f64,
        /// `None` targets every column.
        target_cols: Option<Vec<usize>>,
    },
    Censoring {
        q_censor: f64,
    },
    Panel,
    PolarizationHard {
        q_thresh: f64,
    },
    PolarizationSoft {
        alpha: f64,
        eps: f64,
    },
    LatentFactor {
        k_low: usize,
        k_high: usize,
    },
    Cluster {
        row_clusters: usize,
        col_clusters: usize,
        tau_r: f64,
        tau_c: f64,
        eps_std: f64,
    },
    TwoPhase {
        f_cheap: f64,
        alpha: f64,
        beta: f64,
    },
    Block {
        p_missing: f64,
        row_blocks: usize,
        col_blocks: usize,
        conv: Convolution,
    },
    Seq {
        /// Recorded for completeness; the bandit decides the arms itself.
        p_missing: f64,
        bandit: BanditConfig,
    },
}

impl Pattern {
    pub const TAGS: [&'static str; 13] = [
        "mcar",
        "col-mar",
        "nn-mnar",
        "self-masking",
        "censoring",
        "panel",
        "polarization-hard",
        "polarization-soft",
        "latent-factor",
        "cluster",
        "two-phase",
        "block",
        "seq",
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Pattern::Mcar { .. } => "mcar",
            Pattern::ColMar { .. } => "col-mar",
            Pattern::NnMnar { .. } => "nn-mnar",
            Pattern::SelfMasking { .. } => "self-masking",
            Pattern::Censoring { .. } => "censoring",
            Pattern::Panel => "panel",
            Pattern::PolarizationHard { .. } => "polarization-hard",
            Pattern::PolarizationSoft { .. } => "polarization-soft",
            Pattern::LatentFactor { .. } => "latent-factor",
            Pattern::Cluster { .. } => "cluster",
            Pattern::TwoPhase { .. } => "two-phase",
            Pattern::Block { .. } => "block",
            Pattern::Seq { .. } => "seq",
        }
    }

    /// Pattern with default hyperparameters.
    pub fn default_for(tag: &str) -> Result<Pattern> {
        Ok(match tag {
            "mcar" => Pattern::Mcar { p_missing: 0.4 },
            "col-mar" => Pattern::ColMar {
                p_missing: 0.4,
                predictor_fraction: 0.3,
            },
            "nn-mnar" => Pattern::NnMnar {
                p_missing: 0.4,
                neighborhood: (1, 10),
                layers: (1, 3),
                width: (4, 16),
            },
            "self-masking" => Pattern::SelfMasking {
                p_missing: 0.4,
                target_cols: None,
            },
            "censoring" => Pattern::Censoring { q_censor: 0.25 },
            "panel" => Pattern::Panel,
            "polarization-hard" => Pattern::PolarizationHard { q_thresh: 0.25 },
            "polarization-soft" => Pattern::PolarizationSoft {
                alpha: 2.5,
                eps: 0.05,
            },
            "latent-factor" => Pattern::LatentFactor { k_low: 1, k_high: 5 },
            "cluster" => Pattern::Cluster {
                row_clusters: 5,
                col_clusters: 4,
                tau_r: 1.0,
                tau_c: 1.0,
                eps_std: 0.5,
            },
            "two-phase" => Pattern::TwoPhase {
                f_cheap: 0.4,
                alpha: 0.0,
                beta: 2.0,
            },
            "block" => Pattern::Block {
                p_missing: 0.4,
                row_blocks: 10,
                col_blocks: 10,
                conv: Convolution::Mean,
            },
            "seq" => Pattern::Seq {
                p_missing: 0.4,
                bandit: BanditConfig::default(),
            },
            other => return Err(Error::UnknownTag(other.to_string())),
        })
    }

    pub fn all_defaults() -> Vec<Pattern> {
        Self::TAGS
            .iter()
            .map(|t| Self::default_for(t).expect("every tag has defaults"))
            .collect()
    }

    /// The missing probability a calibrated pattern targets, if any.
    /// Copy with grid parameters shrunk to fit an `rows × cols` matrix: a
    /// block grid finer than the matrix is clamped to one block per row or
    /// column. Other patterns are returned unchanged.
    pub fn fitted_to(&self, rows: usize, cols: usize) -> Pattern {
        match self {
            Pattern::Block {
                p_missing,
                row_blocks,
                col_blocks,
                conv,
            } => Pattern::Block {
                p_missing: *p_missing,
                row_blocks: (*row_blocks).min(rows),
                col_blocks: (*col_blocks).min(cols),
                conv: *conv,
            },
            other => other.clone(),
        }
    }

    pub fn target_missing(&self) -> Option<f64> {
        match self {
            Pattern::Mcar { p_missing }
            | Pattern::ColMar { p_missing, .. }
            | Pattern::NnMnar { p_missing, .. }
            | Pattern::SelfMasking { p_missing, .. }
            | Pattern::Block { p_missing, .. } => Some(*p_missing),
            _ => None,
        }
    }
}

/// A pattern plus the seed that drives it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternSpec {
    #[serde(flatten)]
    pub pattern: Pattern,
    pub seed: SeedSpec,
}

impl PatternSpec {
    pub fn new(pattern: Pattern, seed: SeedSpec) -> Self {
        PatternSpec { pattern, seed }
    }
}

/// Runs the generator named by `spec.pattern` once.
pub fn generate_once(pattern: &Pattern, truth: &DataMatrix, seed: &SeedSpec) -> Result<Mask> {
    match pattern {
        Pattern::Mcar { p_missing } => gen_mcar(truth, *p_missing, seed),
        Pattern::ColMar {
            p_missing,
            predictor_fraction,
        } => gen_col_mar(truth, *p_missing, *predictor_fraction, seed),
        Pattern::NnMnar {
            p_missing,
            neighborhood,
            layers,
            width,
        } => gen_nn_mnar(truth, *p_missing, *neighborhood, *layers, *width, seed),
        Pattern::SelfMasking {
            p_missing,
            target_cols,
        } => gen_self_masking(truth, *p_missing, target_cols.as_deref(), seed),
        Pattern::Censoring { q_censor } => gen_censoring(truth, *q_censor, seed),
        Pattern::Panel => gen_panel(truth, seed),
        Pattern::PolarizationHard { q_thresh } => gen_polarization_hard(truth, *q_thresh, seed),
        Pattern::PolarizationSoft { alpha, eps } => gen_polarization_soft(truth, *alpha, *eps, seed),
        Pattern::LatentFactor { k_low, k_high } => gen_latent_factor(truth, *k_low, *k_high, seed),
        Pattern::Cluster {
            row_clusters,
            col_clusters,
            tau_r,
            tau_c,
            eps_std,
        } => gen_cluster(
            truth,
            *row_clusters,
            *col_clusters,
            *tau_r,
            *tau_c,
            *eps_std,
            seed,
        ),
        Pattern::TwoPhase { f_cheap, alpha, beta } => {
            gen_two_phase(truth, *f_cheap, *alpha, *beta, seed)
        }
        Pattern::Block {
            p_missing,
            row_blocks,
            col_blocks,
            conv,
        } => gen_block(truth, *p_missing, *row_blocks, *col_blocks, *conv, seed),
        Pattern::Seq { bandit, .. } => gen_seq(truth, bandit, seed),
    }
}

/// Dispatches to the matching generator, redrawing with a fresh substream
/// whenever the mask has no observed entry. Gives up after
/// [`RESAMPLE_LIMIT`] draws.
pub fn generate(spec: &PatternSpec, truth: &DataMatrix) -> Result<Mask> {
    for attempt in 0..RESAMPLE_LIMIT {
        let seed = if attempt == 0 {
            spec.seed.clone()
        } else {
            spec.seed.child(format_args!("resample-{attempt}"))
        };
        let mask = generate_once(&spec.pattern, truth, &seed)?;
        if mask.n_observed() > 0 {
            return Ok(mask);
        }
        log::debug!("{}: fully missing mask on attempt {attempt}", spec.pattern.tag());
    }
    Err(Error::ResampleExhausted {
        pattern: spec.pattern.tag().to_string(),
        attempts: RESAMPLE_LIMIT,
    })
}

/// Finds `b` with `form(b) = target_mean` to within 1e-6 by bisection on
/// [`CALIBRATION_BRACKET`]. `form` must be non-decreasing in `b`.
pub fn calibrate_intercept(form: impl Fn(f64) -> f64, target_mean: f64) -> Result<f64> {
    let (mut lo, mut hi) = CALIBRATION_BRACKET;
    let fail = || Error::CalibrationFailed {
        target: target_mean,
        lo: CALIBRATION_BRACKET.0,
        hi: CALIBRATION_BRACKET.1,
    };
    if !(target_mean > 0.0 && target_mean < 1.0) {
        return Err(fail());
    }
    if form(lo) > target_mean + 1e-6 || form(hi) < target_mean - 1e-6 {
        return Err(fail());
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let v = form(mid);
        if (v - target_mean).abs() <= 1e-9 {
            break;
        }
        if v < target_mean {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    if (form(mid) - target_mean).abs() > 1e-6 {
        return Err(fail());
    }
    Ok(mid)
}

/// `b ↦ mean σ(logit + b)` over the given logits.
pub fn mean_sigmoid(logits: &[f64]) -> impl Fn(f64) -> f64 + '_ {
    move |b| logits.iter().map(|&z| sigmoid(z + b)).sum::<f64>() / logits.len() as f64
}

pub(crate) fn check_unit_open(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("{v} not in (0, 1)")))
    }
}

pub(crate) fn check_range(name: &'static str, (lo, hi): (usize, usize), min: usize) -> Result<()> {
    if lo >= min && lo <= hi {
        Ok(())
    } else {
        Err(Error::param(name, format!("range ({lo}, {hi}) is empty or below {min}")))
    }
}
