//! Data-parallel mapping with a sequential twin.
//!
//! Point sweeps (residual suites, grid scans, family members) are
//! embarrassingly parallel: every evaluation is a pure function of its
//! input. With the default `parallel` feature the indexed map runs on
//! rayon; without it the same entry point degrades to a plain loop.
//! `map_indexed_seq` is always sequential so benchmarks can compare the
//! two paths in a single build. Results come back in input order either
//! way, keeping downstream reductions deterministic.

/// Map `f` over `0..n`, in parallel when the `parallel` feature is active.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Sequential fallback used when the `parallel` feature is disabled.
#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    map_indexed_seq(n, f)
}

/// Always-sequential map over `0..n`.
pub fn map_indexed_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree_in_order() {
        let f = |i: usize| (i as f64).sqrt() * 3.0;
        let a = map_indexed(257, f);
        let b = map_indexed_seq(257, f);
        assert_eq!(a, b);
    }
}
