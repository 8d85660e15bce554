//! Data-parallel execution with a sequential fallback.
//!
//! With the `parallel` feature (on by default) [`Execution::Parallel`] maps
//! work onto the rayon pool. Without it both variants run sequentially, so
//! callers never need their own `cfg` switches. Results are always returned
//! in index order.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
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
    /// `true` when work will actually be spread across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    pub fn map_range<T, F>(self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return (0..len).into_par_iter().map(f).collect();
        }
        (0..len).map(f).collect()
    }

    pub fn try_map_range<T, E, F>(self, len: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return (0..len).into_par_iter().map(f).collect();
        }
        (0..len).map(f).collect()
    }

    /// Folds fixed-size chunks of `items` into accumulators and merges them.
    pub fn fold_chunks<I, A, F, M>(self, items: &[I], chunk: usize, init: A, fold: F, merge: M) -> A
    where
        I: Sync,
        A: Clone + Send + Sync,
        F: Fn(A, &I) -> A + Sync + Send,
        M: Fn(A, A) -> A + Sync + Send,
    {
        let chunk = chunk.max(1);
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return items
                .par_chunks(chunk)
                .map(|c| c.iter().fold(init.clone(), &fold))
                .reduce(|| init.clone(), &merge);
        }
        items
            .chunks(chunk)
            .map(|c| c.iter().fold(init.clone(), &fold))
            .fold(init.clone(), &merge)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_preserve_order() {
        let seq = Execution::Sequential.map_range(1000, |i| i * i);
        let par = Execution::Parallel.map_range(1000, |i| i * i);
        assert_eq!(seq, par);
    }

    #[test]
    fn chunked_fold_matches_plain_sum() {
        let items: Vec<u64> = (0..10_001).collect();
        for exec in [Execution::Sequential, Execution::Parallel] {
            let total = exec.fold_chunks(&items, 97, 0u64, |a, x| a + x, |a, b| a + b);
            assert_eq!(total, 10_000 * 10_001 / 2);
        }
    }
}
