//! Row-parallel helpers. With the `parallel` feature these dispatch to rayon,
//! otherwise they are plain loops. Callers never reduce across rows inside the
//! closures, so both builds produce identical bits.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Calls `f(row_index, row)` for every `cols`-wide row of `data`.
pub(crate) fn for_each_row_mut<F>(data: &mut [f64], cols: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    if cols == 0 {
        return;
    }
    #[cfg(feature = "parallel")]
    data.par_chunks_mut(cols)
        .enumerate()
        .for_each(|(i, row)| f(i, row));
    #[cfg(not(feature = "parallel"))]
    data.chunks_mut(cols)
        .enumerate()
        .for_each(|(i, row)| f(i, row));
}

/// Evaluates `f` on `0..n`, returning the results in index order.
pub(crate) fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
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
