//! Parameter sweeps, log-log slope fits, oracle comparisons and persistence.

pub mod config;
pub mod fit;
pub mod io;
pub mod oracle;
pub mod sweep;

pub use config::{DeltaRule, ExperimentConfig, Metric, MetricFamily, OutputPaths, SweepAxis, Tolerances};
pub use fit::{fit_slope, least_squares, SlopeFit, WindowPolicy};
pub use io::{read_csv_header, write_csv, write_json, write_table, CsvHeader};
pub use oracle::{oracle_compare, OracleConfig, OracleReport};
pub use sweep::{evaluate_sweep, pool_size, run_sweep, thread_pool, ColumnFit, SweepResult, SweepRow};

/// Version of the CSV/JSON layouts written by this crate.
pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable that caps the worker pool.
pub const THREADS_ENV: &str = "WGL_THREADS";

/// Software version stamp embedded in every result.
pub fn version_stamp() -> String {
    format!("wgl-core {}", env!("CARGO_PKG_VERSION"))
}
