//! Data-parallel helpers. With the `parallel` feature the work is spread
//! over the rayon pool, otherwise it runs on the calling thread. Either
//! way the output order is fixed, so reductions over the results are
//! bit-identical between the two modes.

use std::sync::atomic::{AtomicBool, Ordering};

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Route all helpers through the sequential path even when the
/// `parallel` feature is on. Used by the benches.
pub fn force_sequential(on: bool) {
    FORCE_SEQUENTIAL.store(on, Ordering::SeqCst);
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.load(Ordering::SeqCst)
}

/// Cap the global worker count. Only the first call has an effect.
pub fn set_threads(n: usize) {
    #[cfg(feature = "parallel")]
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = n;
}

/// `(0..n).map(f).collect()`, possibly in parallel.
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

/// Map over a slice, possibly in parallel.
pub fn map_slice<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect();
    }
    items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
}

/// Run `f(offset, chunk)` on consecutive chunks of `items`. Returns one
/// result per chunk, in chunk order.
pub fn map_chunks_mut<T, R, F>(items: &mut [T], chunk: usize, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(usize, &mut [T]) -> R + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return items
            .par_chunks_mut(chunk)
            .enumerate()
            .map(|(c, xs)| f(c * chunk, xs))
            .collect();
    }
    items
        .chunks_mut(chunk)
        .enumerate()
        .map(|(c, xs)| f(c * chunk, xs))
        .collect()
}

/// Like [`map_chunks_mut`] for shared slices.
pub fn map_chunks<T, R, F>(items: &[T], chunk: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &[T]) -> R + Sync + Send,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return items
            .par_chunks(chunk)
            .enumerate()
            .map(|(c, xs)| f(c * chunk, xs))
            .collect();
    }
    items
        .chunks(chunk)
        .enumerate()
        .map(|(c, xs)| f(c * chunk, xs))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunk_offsets_are_in_order() {
        let mut v: Vec<usize> = (0..10).collect();
        let offs = map_chunks_mut(&mut v, 3, |off, xs| {
            for x in xs.iter_mut() {
                *x *= 2;
            }
            off
        });
        assert_eq!(offs, vec![0, 3, 6, 9]);
        assert_eq!(v[9], 18);
    }
}
