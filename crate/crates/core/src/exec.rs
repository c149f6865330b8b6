//! Ordered map over independent jobs, on a rayon pool when the `parallel`
//! feature is enabled and more than one worker is requested.

use crate::error::DatasetError;

/// Worker count; `0` means one per available core.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Workers(pub usize);

impl Workers {
    pub const SERIAL: Workers = Workers(1);
    pub const AUTO: Workers = Workers(0);

    pub fn is_serial(self) -> bool {
        self.0 == 1 || !cfg!(feature = "parallel")
    }
}

impl Default for Workers {
    fn default() -> Self {
        Workers::AUTO
    }
}

/// Applies `f` to every job and returns results in job order, or one of the
/// errors if any job fails.
pub fn map_ordered<J, T, F>(jobs: &[J], workers: Workers, f: F) -> Result<Vec<T>, DatasetError>
where
    J: Sync,
    T: Send,
    F: Fn(&J) -> Result<T, DatasetError> + Sync + Send,
{
    if workers.is_serial() {
        return jobs.iter().map(f).collect();
    }
    parallel(jobs, workers, f)
}

#[cfg(feature = "parallel")]
fn parallel<J, T, F>(jobs: &[J], workers: Workers, f: F) -> Result<Vec<T>, DatasetError>
where
    J: Sync,
    T: Send,
    F: Fn(&J) -> Result<T, DatasetError> + Sync + Send,
{
    use rayon::prelude::*;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.0)
        .build()
        .map_err(|e| DatasetError::Pool(e.to_string()))?;
    pool.install(|| jobs.par_iter().map(f).collect())
}

#[cfg(not(feature = "parallel"))]
fn parallel<J, T, F>(jobs: &[J], _workers: Workers, f: F) -> Result<Vec<T>, DatasetError>
where
    J: Sync,
    T: Send,
    F: Fn(&J) -> Result<T, DatasetError> + Sync + Send,
{
    jobs.iter().map(f).collect()
}
