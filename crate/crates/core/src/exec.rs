//! Data-parallel map with a sequential fallback.
//!
//! With the `parallel` feature (default) work is spread over a rayon pool;
//! without it every [`Execution`] runs on the calling thread. Results always
//! come back in input order.

use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// `jobs: None` uses rayon's global pool.
    Parallel {
        jobs: Option<usize>,
    },
}

impl Default for Execution {
    fn default() -> Self {
        Execution::Parallel { jobs: None }
    }
}

impl Execution {
    pub fn with_jobs(jobs: Option<usize>) -> Self {
        match jobs {
            Some(1) => Execution::Sequential,
            jobs => Execution::Parallel { jobs },
        }
    }
}

pub fn is_parallel_available() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(feature = "parallel")]
pub(crate) fn map_ordered<T, F>(exec: Execution, items: &[usize], f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;

    match exec {
        Execution::Sequential => Ok(items.iter().map(|&i| f(i)).collect()),
        Execution::Parallel { jobs: None } => Ok(items.par_iter().map(|&i| f(i)).collect()),
        Execution::Parallel { jobs: Some(n) } => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| {
                    crate::error::Error::Parameter(format!("cannot start {n} workers: {e}"))
                })?;
            Ok(pool.install(|| items.par_iter().map(|&i| f(i)).collect()))
        }
    }
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_ordered<T, F>(_exec: Execution, items: &[usize], f: F) -> Result<Vec<T>>
where
    F: Fn(usize) -> T,
{
    Ok(items.iter().map(|&i| f(i)).collect())
}
