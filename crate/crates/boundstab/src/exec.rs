//! A rayon-backed [`Executor`] for contour evaluations.

use boundstab_core::Executor;
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

/// Evaluates contour nodes on a dedicated pool. Results come back in index
/// order, so the outcome does not depend on the number of threads.
pub struct RayonExecutor {
    pool: ThreadPool,
}

impl RayonExecutor {
    pub fn new(threads: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        Ok(RayonExecutor { pool: ThreadPoolBuilder::new().num_threads(threads.max(1)).build()? })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for RayonExecutor {
    fn map<T: Send, F: Fn(usize) -> T + Sync>(&self, n: usize, f: F) -> Vec<T> {
        self.pool.install(|| (0..n).into_par_iter().map(&f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use boundstab_core::Sequential;

    #[test]
    fn matches_sequential_order() {
        let exec = RayonExecutor::new(3).unwrap();
        assert_eq!(exec.threads(), 3);
        let f = |i: usize| (i * i) as f64 / 7.0;
        assert_eq!(exec.map(1000, f), Sequential.map(1000, f));
    }
}
