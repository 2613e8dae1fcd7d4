//! Trial fan-out with reproducible per-trial random streams.
//!
//! Every Monte Carlo trial `t` draws from its own ChaCha stream derived from
//! `(seed, t)`, so results do not depend on scheduling and the parallel and
//! sequential executors produce identical output.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Execution strategy for independent trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    /// Data-parallel over the rayon global pool. Falls back to sequential
    /// execution when the crate is built without the `parallel` feature.
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

/// Random stream for trial `index` under `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs `f(index, rng)` for every trial and returns the results in index order.
pub fn map_trials<T, F>(trials: u64, seed: u64, exec: Exec, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> T + Sync + Send,
{
    let run = |t: u64| {
        let mut rng = trial_rng(seed, t);
        f(t, &mut rng)
    };
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            (0..trials).into_par_iter().map(run).collect()
        }
        _ => (0..trials).map(run).collect(),
    }
}

/// Maps `f` over a slice of work items, preserving order.
pub fn map_items<I, T, F>(items: &[I], exec: Exec, f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

/// Counts the trials for which `f` returns true.
pub fn count_trials<F>(trials: u64, seed: u64, exec: Exec, f: F) -> u64
where
    F: Fn(u64, &mut ChaCha8Rng) -> bool + Sync + Send,
{
    let run = |t: u64| {
        let mut rng = trial_rng(seed, t);
        f(t, &mut rng) as u64
    };
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            (0..trials).into_par_iter().map(run).sum()
        }
        _ => (0..trials).map(run).sum(),
    }
}
