//! Replica scheduling.
//!
//! Replicas are embarrassingly parallel: replica r seeds its own RNG stream
//! from (master seed, r), so results are a pure function of the replica id
//! and outputs are returned ordered by id regardless of execution order.
//! With the `parallel` feature (default) replicas run on the rayon pool;
//! [`map_replicas_seq`] is always available as the sequential baseline and
//! is what the benchmarks compare against.

use crate::error::Result;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Run `f` for replica ids `0..n`, sequentially, in id order.
pub fn map_replicas_seq<T, F>(n: u64, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    (0..n).map(f).collect()
}

/// Run `f` for replica ids `0..n`; output index r holds f(r).
#[cfg(feature = "parallel")]
pub fn map_replicas<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_replicas<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    map_replicas_seq(n, f)
}

/// Fallible variant of [`map_replicas`]; the first error (by replica id
/// under sequential execution, any failing id under parallel) is returned.
pub fn try_map_replicas<T, F>(n: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::replica_rng;
    use rand::Rng;

    #[test]
    fn parallel_and_sequential_agree_and_order_by_id() {
        let job = |r: u64| {
            let mut rng = replica_rng(99, r);
            (r, rng.gen::<u64>())
        };
        let a = map_replicas(64, job);
        let b = map_replicas_seq(64, job);
        assert_eq!(a, b);
        for (i, (r, _)) in a.iter().enumerate() {
            assert_eq!(*r as usize, i);
        }
    }

    #[test]
    fn try_map_propagates_errors() {
        let out: Result<Vec<u64>> = try_map_replicas(8, |r| {
            if r == 5 {
                Err(crate::Error::usage("boom"))
            } else {
                Ok(r)
            }
        });
        assert!(out.is_err());
        let ok: Result<Vec<u64>> = try_map_replicas(8, Ok);
        assert_eq!(ok.unwrap(), (0..8).collect::<Vec<_>>());
    }
}
