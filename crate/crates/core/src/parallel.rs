//! Bounded worker pool for independent sweep tasks.
//!
//! Results are always returned in task order, so aggregation is independent
//! of scheduling.

/// Maps `f` over `0..count` on at most `workers` threads.
#[cfg(feature = "parallel")]
pub fn map_indexed<R, F>(count: usize, workers: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    use rayon::prelude::*;
    if workers <= 1 || count <= 1 {
        return (0..count).map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(|| (0..count).into_par_iter().map(&f).collect()),
        Err(_) => (0..count).map(f).collect(),
    }
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<R, F>(count: usize, _workers: usize, f: F) -> Vec<R>
where
    F: Fn(usize) -> R,
{
    (0..count).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let seq = map_indexed(50, 1, |i| i * i);
        let par = map_indexed(50, 4, |i| i * i);
        assert_eq!(seq, par);
        assert!(map_indexed(0, 4, |i| i).is_empty());
    }
}
