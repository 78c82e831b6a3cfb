//! Order-preserving map over independent scenarios. Runs on the rayon pool
//! when the `parallel` feature is enabled and sequentially otherwise; results
//! never depend on the worker count.

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Sequential,
    /// Falls back to sequential without the `parallel` feature.
    Parallel,
}

impl Strategy {
    /// The strategy selected at compile time.
    pub fn default_for_build() -> Self {
        if cfg!(feature = "parallel") {
            Strategy::Parallel
        } else {
            Strategy::Sequential
        }
    }
}

/// Sizes the global worker pool. Only the first call takes effect; later
/// calls and sequential builds are no-ops.
pub fn set_jobs(jobs: usize) {
    #[cfg(feature = "parallel")]
    {
        if rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global()
            .is_err()
        {
            log::debug!("worker pool already initialized; ignoring jobs = {jobs}");
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = jobs;
}

pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    map_with(Strategy::default_for_build(), items, f)
}

pub fn map_with<T, R, F>(strategy: Strategy, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match strategy {
        #[cfg(feature = "parallel")]
        Strategy::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(f).collect()
        }
        _ => items.iter().map(f).collect(),
    }
}

/// [`map`] over a fallible function; the first error in item order wins.
pub fn try_map<T, R, F>(items: &[T], f: F) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> Result<R> + Sync + Send,
{
    map(items, f).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategies_agree_and_keep_order() {
        let xs: Vec<u64> = (0..1000).collect();
        let f = |x: &u64| x.wrapping_mul(2_654_435_761) % 977;
        assert_eq!(map_with(Strategy::Sequential, &xs, f), map_with(Strategy::Parallel, &xs, f));
    }

    #[test]
    fn first_error_in_order() {
        let xs = [1, 2, 3, 4];
        let r = try_map(&xs, |x| {
            if *x >= 2 {
                Err(crate::Error::Domain(format!("{x}")))
            } else {
                Ok(*x)
            }
        });
        assert_eq!(r.unwrap_err().to_string(), "domain error: 2");
    }
}
