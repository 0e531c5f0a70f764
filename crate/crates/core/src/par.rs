//! Data-parallel execution with a sequential fallback.
//!
//! Every batch workload in the crate (cross-validation folds, permutation
//! replicates, topic-count candidate fits) is an indexed map over independent
//! jobs whose randomness is derived from the job index alone. Running those
//! jobs on rayon or in a plain loop therefore yields identical results; only
//! the wall clock changes.
//!
//! Without the `parallel` feature, [`Execution::Parallel`] degrades to the
//! sequential loop.

use serde::{Deserialize, Serialize};

/// How an indexed batch of independent jobs is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Maps `job` over `0..n`, returning results in index order.
    pub fn map_indexed<T, F>(self, n: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..n).map(job).collect(),
            Execution::Parallel => parallel_map(n, job),
        }
    }

    /// Like [`Execution::map_indexed`] over a slice.
    pub fn map_slice<'a, I, T, F>(self, items: &'a [I], job: F) -> Vec<T>
    where
        I: Sync,
        T: Send,
        F: Fn(&'a I) -> T + Sync + Send,
    {
        self.map_indexed(items.len(), |i| job(&items[i]))
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(n: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(job).collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(n: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(job).collect()
}

/// Seeded generator for job `stream` of a batch.
///
/// ChaCha streams are independent for a fixed key, so the draw sequence of a
/// job depends only on `(seed, stream)` and never on scheduling.
pub fn stream_rng(seed: u64, stream: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
