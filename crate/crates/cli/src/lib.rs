//! Experiment runner for the splitting-receiver toolkit: JSON specs, a
//! catalog of built-in figure reproductions, CSV and JSON outputs.

pub mod catalog;
pub mod point;
pub mod run;
pub mod spec;

pub use catalog::{builtin, list_experiments};
pub use run::{execute, run_experiment, Outcome, RunReport, Table};
pub use spec::{ConstellationSpec, Estimator, ExperimentKind, ExperimentSpec, FieldError, Grid, MiEval, SpecErrors, Sweep};

use anyhow::{bail, Context, Result};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "SPLITRX_THREADS";

/// Worker count from `SPLITRX_THREADS`, if set.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => {
            let n: usize = v
                .trim()
                .parse()
                .with_context(|| format!("{THREADS_ENV} must be a positive integer, got '{v}'"))?;
            if n == 0 {
                bail!("{THREADS_ENV} must be a positive integer, got 0");
            }
            Ok(Some(n))
        }
        _ => Ok(None),
    }
}

/// Runs `f` on a dedicated pool of `threads` workers (rayon's default when `None`).
pub fn with_workers<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    Ok(b.build().context("building worker pool")?.install(f))
}
