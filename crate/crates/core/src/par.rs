//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature these dispatch to rayon; without it (or inside
//! [`sequential`]) they are plain loops. Every helper returns results in
//! index order, so output never depends on scheduling.

use std::cell::Cell;
use std::ops::Range;

thread_local! {
    static FORCE_SEQUENTIAL: Cell<bool> = const { Cell::new(false) };
}

/// Runs `f` with all helpers in this module forced onto the calling thread.
pub fn sequential<R>(f: impl FnOnce() -> R) -> R {
    let prev = FORCE_SEQUENTIAL.with(|c| c.replace(true));
    let out = f();
    FORCE_SEQUENTIAL.with(|c| c.set(prev));
    out
}

/// Whether helpers called from this thread will fan out.
pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.with(|c| c.get())
}

/// Runs `f` with at most `jobs` worker threads. `jobs == 1` is sequential;
/// `jobs == 0` uses the global pool.
pub fn with_jobs<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> R {
    if jobs == 1 {
        return sequential(f);
    }
    #[cfg(feature = "parallel")]
    {
        if jobs > 1 {
            if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
                return pool.install(f);
            }
        }
    }
    f()
}

/// `(0..n).map(f)` collected in order.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

/// Splits `0..n` into contiguous chunks and maps each; results in chunk order.
pub fn map_chunks<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    let chunk = chunk_len(n);
    let chunks = n.div_ceil(chunk).max(1);
    map_range(chunks, |c| f(c * chunk..((c + 1) * chunk).min(n)))
}

/// The first `Some` by index, exactly as a sequential scan would find it.
pub fn find_first<T, F>(n: usize, f: F) -> Option<T>
where
    T: Send,
    F: Fn(usize) -> Option<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().find_map_first(f);
    }
    (0..n).find_map(f)
}

/// Like [`find_first`] for fallible probes: the lowest index yielding either
/// `Ok(Some)` or `Err` wins.
pub fn try_find_first<T, E, F>(n: usize, f: F) -> Result<Option<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<Option<T>, E> + Sync + Send,
{
    let hit = find_first(n, |i| match f(i) {
        Ok(None) => None,
        other => Some(other),
    });
    match hit {
        None => Ok(None),
        Some(r) => r,
    }
}

fn chunk_len(n: usize) -> usize {
    #[cfg(feature = "parallel")]
    let threads = rayon::current_num_threads();
    #[cfg(not(feature = "parallel"))]
    let threads = 1usize;
    // a few chunks per thread; chunk boundaries never affect results
    (n / (threads * 4).max(1)).clamp(64, 1 << 16)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_range_is_ordered() {
        let v = map_range(1000, |i| i * 2);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i));
        let s = sequential(|| map_range(1000, |i| i * 2));
        assert_eq!(v, s);
    }

    #[test]
    fn chunks_cover_range() {
        let parts = map_chunks(10_007, |r| (r.start, r.end));
        assert_eq!(parts.first().unwrap().0, 0);
        assert_eq!(parts.last().unwrap().1, 10_007);
        for w in parts.windows(2) {
            assert_eq!(w[0].1, w[1].0);
        }
        assert_eq!(map_chunks(0, |r| r.len()), vec![0]);
    }

    #[test]
    fn find_first_returns_lowest_index() {
        let hit = find_first(100_000, |i| (i % 977 == 976).then_some(i));
        assert_eq!(hit, Some(976));
        assert_eq!(sequential(|| find_first(10, |_| None::<u8>)), None);
    }

    #[test]
    fn try_find_first_prefers_earliest_error() {
        let r: Result<Option<usize>, usize> =
            try_find_first(100, |i| if i == 50 { Err(i) } else if i == 70 { Ok(Some(i)) } else { Ok(None) });
        assert_eq!(r, Err(50));
    }

    #[test]
    fn sequential_flag_restores() {
        let inside = sequential(is_parallel);
        assert!(!inside);
        assert_eq!(is_parallel(), cfg!(feature = "parallel"));
    }
}
