use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ndarray::Array2;

use missbench::bench::io::{default_columns, load_mask_csv, read_numeric_csv, save_mask_csv};
use missbench::bench::{
    emit_report, load_datasets, load_report, render_table, run_benchmark, save_csv, BenchConfig, Method,
    SchedulerConfig,
};
use missbench::data::{apply_mask, is_missing, missing_fraction, DataMatrix, Mask, SeedSpec};
use missbench::datagen::{sample_lfm, LatentDistribution, LfmSpec};
use missbench::ensemble::{blend, EnsembleSpec};
use missbench::imputers::{Impute, Imputer};
use missbench::missingness::{generate, Pattern, PatternSpec};
use missbench::Error;

#[derive(Parser)]
#[command(name = "missbench", version, about = "Missing-data benchmark toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a low-rank matrix Y = U Vᵀ and write it as CSV.
    Gen(GenArgs),
    /// Draw a missingness mask for a data CSV.
    Mask(MaskArgs),
    /// Complete a masked matrix with one method.
    Impute(ImputeArgs),
    /// Run the (dataset × pattern × method × seed) grid.
    Bench(BenchArgs),
    /// Print the accuracy table of a saved report.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    rows: usize,
    #[arg(long)]
    cols: usize,
    #[arg(long)]
    rank: usize,
    /// Latent distribution of U: gaussian, laplace, student-t, spike-and-slab, dirichlet.
    #[arg(long, default_value = "gaussian")]
    row_dist: String,
    /// Latent distribution of V.
    #[arg(long, default_value = "gaussian")]
    col_dist: String,
    /// Standard deviation of additive Gaussian noise.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MaskArgs {
    #[arg(long)]
    data: PathBuf,
    /// Pattern tag, e.g. mcar, col-mar, panel.
    #[arg(long)]
    pattern: String,
    /// Override a pattern parameter, e.g. `--set p_missing=0.2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Mask CSV (1 = observed); a JSON sidecar is written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ImputeArgs {
    /// Data CSV; empty cells are treated as missing.
    #[arg(long)]
    data: PathBuf,
    /// Optional mask CSV (1 = observed) applied on top of empty cells.
    #[arg(long)]
    mask: Option<PathBuf>,
    /// col-mean, knn, soft-impute, ice, featurized-ridge or ensemble.
    #[arg(long)]
    method: String,
    #[arg(long)]
    k: Option<usize>,
    /// Penalty for soft-impute / featurized-ridge.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    ridge_lambda: Option<f64>,
    #[arg(long, default_value = "featurized-ridge")]
    base_a: String,
    #[arg(long, default_value = "soft-impute")]
    base_b: String,
    #[arg(long, default_value_t = 4)]
    perms: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Diagnostics JSON; defaults to the output path with a .json extension.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Directory of CSVs, a manifest listing CSV paths, or one CSV.
    #[arg(long)]
    datasets: PathBuf,
    /// Comma-separated pattern tags, or `all`.
    #[arg(long, default_value = "all")]
    patterns: String,
    #[arg(long, default_value = "col-mean,knn,soft-impute,ice")]
    methods: String,
    /// Replicates per (dataset, pattern).
    #[arg(long, default_value_t = 5)]
    seeds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Record the softmax pattern-proportion trajectory in the report.
    #[arg(long)]
    adaptive_proportions: bool,
    #[arg(long, default_value_t = missbench::scheduler::DEFAULT_PERIOD)]
    refresh_period: usize,
    #[arg(long, default_value_t = 1.0)]
    temperature: f64,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    input: PathBuf,
    /// Also write the table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// Exit status for configuration and input errors.
const EXIT_CONFIG: u8 = 2;
/// Exit status when some benchmark groups were dropped.
const EXIT_PARTIAL: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter { .. }
        | Error::UnknownTag(_)
        | Error::TooFewMethods { .. }
        | Error::Parse { .. }
        | Error::PreexistingMissing { .. }
        | Error::ShapeMismatch { .. }
        | Error::Csv(_)
        | Error::Io(_)
        | Error::Json(_) => EXIT_CONFIG,
        _ => 1,
    }
}

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn cmd_gen(a: GenArgs) -> missbench::Result<u8> {
    let spec = LfmSpec {
        rows: a.rows,
        cols: a.cols,
        rank: a.rank,
        row_dist: LatentDistribution::by_name(&a.row_dist)?,
        col_dist: LatentDistribution::by_name(&a.col_dist)?,
        noise_scale: a.noise,
    };
    let y = sample_lfm(&spec, &SeedSpec::new(a.seed, "gen"))?;
    save_csv(&a.out, &default_columns(a.cols), y.values())?;
    Ok(0)
}

/// Applies `key=value` overrides to a pattern through its JSON form.
fn apply_overrides(pattern: Pattern, overrides: &[String]) -> missbench::Result<Pattern> {
    let mut value = serde_json::to_value(&pattern)?;
    for kv in overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::UnknownTag(format!("override `{kv}` is not KEY=VALUE")))?;
        let obj = value.as_object_mut().expect("patterns serialize to objects");
        if !obj.contains_key(k) {
            return Err(Error::UnknownTag(format!("{}: no parameter `{k}`", pattern.tag())));
        }
        let parsed = serde_json::from_str(v).unwrap_or_else(|_| serde_json::Value::String(v.to_string()));
        obj.insert(k.to_string(), parsed);
    }
    Ok(serde_json::from_value(value)?)
}

fn cmd_mask(a: MaskArgs) -> missbench::Result<u8> {
    let (columns, values) = read_numeric_csv(&a.data)?;
    let truth = DataMatrix::new(values)?;
    let pattern = apply_overrides(Pattern::default_for(&a.pattern)?, &a.overrides)?;
    let spec = PatternSpec::new(pattern, SeedSpec::new(a.seed, "mask"));
    let mask = generate(&spec, &truth)?;
    save_mask_csv(&a.out, &columns, &mask)?;
    let meta = serde_json::json!({
        "spec": spec,
        "missing_fraction": missing_fraction(&mask),
    });
    std::fs::write(sidecar(&a.out), serde_json::to_string_pretty(&meta)? + "\n")?;
    println!("{}: missing fraction {:.4}", spec.pattern.tag(), missing_fraction(&mask));
    Ok(0)
}

fn build_imputer(tag: &str, a: &ImputeArgs) -> missbench::Result<Imputer> {
    let mut imp = Imputer::default_for(tag)?;
    match &mut imp {
        Imputer::ColMean => {}
        Imputer::Knn { k } => *k = a.k.unwrap_or(*k),
        Imputer::SoftImpute { lambda, max_iter, tol } => {
            *lambda = a.lambda.or(*lambda);
            *max_iter = a.max_iter.unwrap_or(*max_iter);
            *tol = a.tol.unwrap_or(*tol);
        }
        Imputer::Ice {
            max_iter,
            tol,
            ridge_lambda,
            seed,
        } => {
            *max_iter = a.max_iter.unwrap_or(*max_iter);
            *tol = a.tol.unwrap_or(*tol);
            *ridge_lambda = a.ridge_lambda.unwrap_or(*ridge_lambda);
            *seed = a.seed;
        }
        Imputer::FeaturizedRidge { lambda } => *lambda = a.lambda.unwrap_or(*lambda),
    }
    Ok(imp)
}

fn cmd_impute(a: ImputeArgs) -> missbench::Result<u8> {
    let (columns, values) = read_numeric_csv(&a.data)?;
    let mut observed = values.mapv(|v| !is_missing(v));
    if let Some(path) = &a.mask {
        let extra = load_mask_csv(path)?;
        if extra.dim() != observed.dim() {
            return Err(Error::ShapeMismatch {
                expected: observed.dim(),
                actual: extra.dim(),
            });
        }
        observed.zip_mut_with(extra.indicator(), |o, &e| *o = *o && e);
    }
    // Unknown cells get a placeholder truth; imputers only read observed values.
    let truth = DataMatrix::new(Array2::from_shape_fn(values.dim(), |(i, j)| {
        if observed[[i, j]] {
            values[[i, j]]
        } else {
            0.0
        }
    }))?;
    let ds = apply_mask(&truth, &Mask::new(observed))?;
    let result = if a.method == "ensemble" {
        let spec = EnsembleSpec {
            base_a: build_imputer(&a.base_a, &a)?,
            base_b: build_imputer(&a.base_b, &a)?,
            n_perms: a.perms,
            ..EnsembleSpec::default()
        };
        blend(&ds, &spec, &SeedSpec::new(a.seed, "ensemble"))?
    } else {
        build_imputer(&a.method, &a)?.impute(&ds)?
    };
    save_csv(&a.out, &columns, result.completed.values())?;
    let diag_path = a.diagnostics.clone().unwrap_or_else(|| sidecar(&a.out));
    std::fs::write(&diag_path, serde_json::to_string_pretty(&result.diagnostics)? + "\n")?;
    if let Some(w) = result.diagnostics.weight {
        println!("blend weight {w:.6}");
    }
    Ok(0)
}

fn cmd_bench(a: BenchArgs) -> missbench::Result<u8> {
    let datasets = load_datasets(&a.datasets)?;
    let patterns = if a.patterns == "all" {
        Pattern::all_defaults()
    } else {
        a.patterns
            .split(',')
            .map(|t| Pattern::default_for(t.trim()))
            .collect::<missbench::Result<_>>()?
    };
    let methods = a
        .methods
        .split(',')
        .map(|t| Method::parse(t.trim()))
        .collect::<missbench::Result<_>>()?;
    let mut config = BenchConfig::new(patterns, methods, a.seeds, a.seed);
    if a.adaptive_proportions {
        config.scheduler = Some(SchedulerConfig {
            period: a.refresh_period,
            temperature: a.temperature,
        });
    }
    let jobs = a
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let report = run_benchmark(&datasets, &config, jobs)?;
    for path in emit_report(&report, &a.out)? {
        log::info!("wrote {}", path.display());
    }
    print!("{}", render_table(&report));
    if report.dropped.is_empty() {
        Ok(0)
    } else {
        eprintln!("{} group(s) dropped; see `dropped` in report.json", report.dropped.len());
        Ok(EXIT_PARTIAL)
    }
}

fn cmd_report(a: ReportArgs) -> missbench::Result<u8> {
    let report = load_report(&a.input)?;
    if report.aggregates.rows.is_empty() {
        return Err(Error::EmptyReport);
    }
    print!("{}", render_table(&report));
    if let Some(path) = a.csv {
        let mut w = csv::Writer::from_path(path)?;
        for row in missbench::bench::report::table_rows(&report) {
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Mask(a) => cmd_mask(a),
        Command::Impute(a) => cmd_impute(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
