//! Worker pool sizing. Every parallel reduction in the crate collects in
//! input order, so the worker count never changes results.

use crate::error::{Error, Result};

pub const WORKERS_ENV: &str = "VAROSC_WORKERS";

/// `VAROSC_WORKERS` if set, otherwise the machine's available parallelism.
pub fn worker_count() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Error::invalid(format!(
                "{WORKERS_ENV} must be a positive integer, got '{s}'"
            ))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Runs `f` inside a dedicated rayon pool of `workers` threads.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}
