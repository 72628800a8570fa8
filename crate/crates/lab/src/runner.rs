use rayon::prelude::*;
use volterra_core::stats::PathRunner;

use crate::error::{param, LabResult};

/// Fans paths out over a rayon pool; results come back in index order.
pub struct RayonRunner {
    pool: rayon::ThreadPool,
}

impl RayonRunner {
    /// `None` uses rayon's default thread count.
    pub fn new(threads: Option<usize>) -> LabResult<Self> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            if n == 0 {
                return Err(param!("--threads must be at least 1"));
            }
            b = b.num_threads(n);
        }
        let pool = b.build().map_err(|e| param!("cannot start worker pool: {e}"))?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl PathRunner for RayonRunner {
    fn map_paths<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }
}
