//! The evaluation grid. Every (dataset, pattern, replicate) group draws one
//! mask, standardizes by observed statistics, and hands the same
//! `MaskedDataset` to every method.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::io::DatasetRecord;
use super::metrics::{imputation_accuracy, mean_std, rmse};
use super::report::{
    Aggregates, BenchReport, Cell, DroppedGroup, MethodStat, PatternRow, ProportionTrajectory, Timing,
    TrajectoryPoint, OVERALL, REPORT_VERSION,
};
use super::standardize::{standardize_columns, standardize_observed};
use crate::data::{apply_mask, DataMatrix, MaskedDataset, SeedSpec};
use crate::ensemble::{blend, EnsembleSpec};
use crate::error::{Error, Result};
use crate::imputers::{ImputationResult, Impute, Imputer};
use crate::missingness::{generate, Pattern, PatternSpec};
use crate::scheduler::{ProportionState, DEFAULT_PERIOD};

/// A benchmarked method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Method {
    Base { imputer: Imputer },
    Ensemble { spec: EnsembleSpec },
    /// Returns the ground truth. Only meaningful for testing the harness.
    Oracle,
}

impl Method {
    /// Parses a method tag with default hyperparameters.
    pub fn parse(tag: &str) -> Result<Method> {
        Ok(match tag {
            "ensemble" => Method::Ensemble {
                spec: EnsembleSpec::default(),
            },
            "oracle" => Method::Oracle,
            other => Method::Base {
                imputer: Imputer::default_for(other)?,
            },
        })
    }

    pub fn label(&self) -> String {
        match self {
            Method::Base { imputer } => imputer.tag().to_string(),
            Method::Ensemble { .. } => "ensemble".to_string(),
            Method::Oracle => "oracle".to_string(),
        }
    }

    pub fn run(&self, ds: &MaskedDataset, seed: &SeedSpec) -> Result<ImputationResult> {
        match self {
            Method::Base { imputer } => imputer.impute(ds),
            Method::Ensemble { spec } => blend(ds, spec, seed),
            Method::Oracle => Ok(ImputationResult {
                completed: ds.truth().clone(),
                fitted_observed: Some(ds.truth().clone()),
                diagnostics: Default::default(),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulerConfig {
    pub period: usize,
    pub temperature: f64,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            period: DEFAULT_PERIOD,
            temperature: 1.0,
        }
    }
}

/// Everything that determines the report's contents. Parallelism is not
/// part of it: results do not depend on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub datasets: Vec<String>,
    pub patterns: Vec<Pattern>,
    pub methods: Vec<Method>,
    pub n_seeds: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheduler: Option<SchedulerConfig>,
}

impl BenchConfig {
    pub fn new(patterns: Vec<Pattern>, methods: Vec<Method>, n_seeds: usize, seed: u64) -> Self {
        BenchConfig {
            datasets: Vec::new(),
            patterns,
            methods,
            n_seeds,
            seed,
            scheduler: None,
        }
    }

    fn validate(&self, datasets: &[DatasetRecord]) -> Result<()> {
        if datasets.is_empty() {
            return Err(Error::param("datasets", "no datasets"));
        }
        if self.patterns.is_empty() {
            return Err(Error::param("patterns", "no patterns"));
        }
        if self.n_seeds == 0 {
            return Err(Error::param("n_seeds", "must be >= 1"));
        }
        if self.methods.len() < 2 {
            return Err(Error::TooFewMethods {
                needed: 2,
                got: self.methods.len(),
            });
        }
        let mut labels: Vec<String> = self.methods.iter().map(Method::label).collect();
        labels.sort();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::param("methods", format!("duplicate method `{}`", w[0])));
        }
        let mut tags: Vec<&str> = self.patterns.iter().map(Pattern::tag).collect();
        tags.sort_unstable();
        if let Some(w) = tags.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::param("patterns", format!("duplicate pattern `{}`", w[0])));
        }
        let mut names: Vec<&str> = datasets.iter().map(|d| d.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::param("datasets", format!("duplicate dataset name `{}`", w[0])));
        }
        for p in &self.patterns {
            if p.target_missing() == Some(0.0) {
                return Err(Error::param(
                    "p_missing",
                    format!("{}: p_missing = 0 leaves nothing to evaluate", p.tag()),
                ));
            }
        }
        for m in &self.methods {
            if let Method::Ensemble { spec } = m {
                spec.validate()?;
            }
        }
        if let Some(s) = &self.scheduler {
            ProportionState::new(vec!["probe".into()], s.period, s.temperature)?;
        }
        Ok(())
    }
}

struct GroupOutcome {
    cells: Vec<Cell>,
    timings: Vec<Timing>,
    dropped: Option<DroppedGroup>,
}

/// Seed of one group: depends only on the run seed, the dataset name, the
/// pattern tag and the replicate index.
pub fn group_seed(run_seed: u64, dataset: &str, pattern: &str, replicate: usize) -> SeedSpec {
    SeedSpec::new(run_seed, format!("{dataset}/{pattern}/{replicate}"))
}

/// Builds the standardized masked dataset of one group. Grid patterns are
/// first fitted to the dataset's shape.
pub fn group_dataset(truth: &DataMatrix, pattern: &Pattern, seed: &SeedSpec) -> Result<MaskedDataset> {
    let (m, n) = truth.dim();
    let mask = generate(&PatternSpec::new(pattern.fitted_to(m, n), seed.child("mask")), truth)?;
    let (ds, _) = standardize_observed(&apply_mask(truth, &mask)?)?;
    Ok(ds)
}

fn run_group(
    name: &str,
    truth: &DataMatrix,
    pattern: &Pattern,
    replicate: usize,
    config: &BenchConfig,
) -> GroupOutcome {
    let tag = pattern.tag();
    let seed = group_seed(config.seed, name, tag, replicate);
    let drop = |reason: String| {
        log::warn!("dropping group {name}/{tag}/{replicate}: {reason}");
        GroupOutcome {
            cells: Vec::new(),
            timings: Vec::new(),
            dropped: Some(DroppedGroup {
                dataset: name.to_string(),
                pattern: tag.to_string(),
                replicate,
                reason,
            }),
        }
    };
    let ds = match group_dataset(truth, pattern, &seed) {
        Ok(ds) => ds,
        Err(e) => return drop(format!("mask generation failed: {e}")),
    };
    let omega = ds.mask().missing_indices();
    if omega.is_empty() {
        return drop("mask has no missing entries".to_string());
    }
    let digest = ds.digest();
    let entries = (ds.dim().0 * ds.dim().1) as f64;

    let mut cells = Vec::with_capacity(config.methods.len());
    let mut timings = Vec::with_capacity(config.methods.len());
    for method in &config.methods {
        let label = method.label();
        let start = Instant::now();
        let outcome = method
            .run(&ds, &seed.child(&label))
            .and_then(|r| Ok((rmse(ds.truth(), &r.completed, &omega)?, r.diagnostics.weight)));
        let seconds = start.elapsed().as_secs_f64();
        let (rmse, weight, error) = match outcome {
            Ok((v, w)) if v.is_finite() => (Some(v), w, None),
            Ok((v, _)) => (None, None, Some(format!("non-finite rmse {v}"))),
            Err(e) => {
                log::warn!("{name}/{tag}/{replicate}: {label} failed: {e}");
                (None, None, Some(e.to_string()))
            }
        };
        cells.push(Cell {
            dataset: name.to_string(),
            pattern: tag.to_string(),
            replicate,
            method: label.clone(),
            rmse,
            accuracy: None,
            weight,
            error,
            input_digest: digest.clone(),
        });
        timings.push(Timing {
            dataset: name.to_string(),
            pattern: tag.to_string(),
            replicate,
            method: label,
            seconds,
            seconds_per_entry: seconds / entries,
        });
    }

    let survivors: BTreeMap<String, f64> = cells
        .iter()
        .filter_map(|c| c.rmse.map(|v| (c.method.clone(), v)))
        .collect();
    let mut dropped = None;
    match imputation_accuracy(&survivors) {
        Ok(acc) => {
            for c in &mut cells {
                c.accuracy = acc.get(&c.method).copied();
            }
        }
        Err(_) => {
            let reason = format!("only {} method(s) succeeded", survivors.len());
            log::warn!("dropping group {name}/{tag}/{replicate}: {reason}");
            dropped = Some(DroppedGroup {
                dataset: name.to_string(),
                pattern: tag.to_string(),
                replicate,
                reason,
            });
        }
    }
    GroupOutcome { cells, timings, dropped }
}

fn aggregate(config: &BenchConfig, cells: &[Cell]) -> Aggregates {
    let stat_row = |pattern: &str, filter: &dyn Fn(&Cell) -> bool| PatternRow {
        pattern: pattern.to_string(),
        methods: config
            .methods
            .iter()
            .filter_map(|m| {
                let label = m.label();
                let acc: Vec<f64> = cells
                    .iter()
                    .filter(|c| c.method == label && filter(c))
                    .filter_map(|c| c.accuracy)
                    .collect();
                mean_std(&acc).map(|(mean, std)| MethodStat {
                    method: label,
                    mean,
                    std,
                    groups: acc.len(),
                })
            })
            .collect(),
    };
    let mut rows: Vec<PatternRow> = config
        .patterns
        .iter()
        .map(|p| stat_row(p.tag(), &|c: &Cell| c.pattern == p.tag()))
        .collect();
    rows.push(stat_row(OVERALL, &|_| true));
    Aggregates {
        std_over: "population std over (dataset, replicate) groups".to_string(),
        rows,
    }
}

/// Replays the groups in canonical order as scheduler steps. A pattern's
/// loss is the mean RMSE of the first method over its groups so far.
fn proportion_trajectory(
    config: &BenchConfig,
    sched: &SchedulerConfig,
    cells: &[Cell],
) -> Result<ProportionTrajectory> {
    let tags: Vec<String> = config.patterns.iter().map(|p| p.tag().to_string()).collect();
    let probe_method = config.methods[0].label();
    let mut state = ProportionState::new(tags.clone(), sched.period, sched.temperature)?;
    let mut points = vec![TrajectoryPoint {
        step: 0,
        proportions: state.proportions.clone(),
    }];
    let mut running: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for cell in cells.iter().filter(|c| c.method == probe_method && c.accuracy.is_some()) {
        if let Some(v) = cell.rmse {
            let e = running.entry(cell.pattern.as_str()).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
        state = state.step(|t| {
            Ok(running
                .get(t)
                .map(|(s, n)| s / *n as f64)
                .unwrap_or(0.0))
        })?;
        if state.refreshed() {
            points.push(TrajectoryPoint {
                step: state.step,
                proportions: state.proportions.clone(),
            });
        }
    }
    Ok(ProportionTrajectory {
        patterns: tags,
        probe_method,
        points,
    })
}

/// Runs the full grid on `jobs` worker threads. The report depends only on
/// the datasets and `config`, never on `jobs`.
pub fn run_benchmark(datasets: &[DatasetRecord], config: &BenchConfig, jobs: usize) -> Result<BenchReport> {
    config.validate(datasets)?;
    if jobs == 0 {
        return Err(Error::param("jobs", "must be >= 1"));
    }
    let mut config = config.clone();
    config.datasets = datasets.iter().map(|d| d.name.clone()).collect();

    // Datasets are z-scored once so pattern parameters act on a common scale.
    let standardized: Vec<DataMatrix> = datasets
        .iter()
        .map(|d| standardize_columns(&d.matrix).map(|(m, _)| m))
        .collect::<Result<_>>()?;
    let groups: Vec<(usize, usize, usize)> = (0..datasets.len())
        .flat_map(|d| {
            (0..config.patterns.len()).flat_map(move |p| (0..config.n_seeds).map(move |r| (d, p, r)))
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::param("jobs", e.to_string()))?;
    let outcomes: Vec<GroupOutcome> = pool.install(|| {
        groups
            .par_iter()
            .map(|&(d, p, r)| run_group(&datasets[d].name, &standardized[d], &config.patterns[p], r, &config))
            .collect()
    });

    let mut cells = Vec::new();
    let mut timings = Vec::new();
    let mut dropped = Vec::new();
    for o in outcomes {
        cells.extend(o.cells);
        timings.extend(o.timings);
        dropped.extend(o.dropped);
    }
    let aggregates = aggregate(&config, &cells);
    let proportions = config
        .scheduler
        .as_ref()
        .map(|s| proportion_trajectory(&config, s, &cells))
        .transpose()?;
    Ok(BenchReport {
        version: REPORT_VERSION.to_string(),
        config,
        cells,
        aggregates,
        dropped,
        proportions,
        timings,
    })
}
