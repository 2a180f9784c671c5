//! The benchmark harness: dataset ingestion, observed-value standardization,
//! RMSE and Imputation Accuracy, the (dataset × pattern × method × seed)
//! grid and its report.

pub mod io;
pub mod metrics;
pub mod report;
pub mod runner;
pub mod standardize;

pub use io::{load_csv, load_datasets, save_csv, DatasetRecord};
pub use metrics::{imputation_accuracy, rmse};
pub use report::{emit_report, load_report, render_table, BenchReport};
pub use runner::{run_benchmark, BenchConfig, Method, SchedulerConfig};
pub use standardize::{standardize_columns, standardize_observed, Affine};
