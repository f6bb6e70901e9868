//! Order-preserving map over independent jobs.
//!
//! With the `parallel` feature the jobs run on a rayon pool of the requested
//! size; without it (or with `jobs == 1`) they run in a plain loop. Results
//! always come back in input order.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Executor {
    jobs: usize,
}

impl Executor {
    /// `jobs == 0` means "use every available core".
    pub fn new(jobs: usize) -> Self {
        Self { jobs }
    }

    pub fn sequential() -> Self {
        Self { jobs: 1 }
    }

    pub fn jobs(&self) -> usize {
        self.jobs
    }

    pub fn is_parallel(&self) -> bool {
        cfg!(feature = "parallel") && self.jobs != 1
    }

    pub fn map<T, R, F>(&self, items: Vec<T>, f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        {
            if self.jobs != 1 {
                return self.map_parallel(items, f);
            }
        }
        items.into_iter().map(f).collect()
    }

    #[cfg(feature = "parallel")]
    fn map_parallel<T, R, F>(&self, items: Vec<T>, f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(T) -> R + Sync + Send,
    {
        use rayon::prelude::*;
        if self.jobs == 0 {
            return items.into_par_iter().map(f).collect();
        }
        match rayon::ThreadPoolBuilder::new().num_threads(self.jobs).build() {
            Ok(pool) => pool.install(|| items.into_par_iter().map(f).collect()),
            // fall back to the global pool
            Err(_) => items.into_par_iter().map(f).collect(),
        }
    }
}

impl Default for Executor {
    fn default() -> Self {
        Self::new(0)
    }
}
