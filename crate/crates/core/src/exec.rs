//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) [`Execution::Parallel`] runs on the
//! rayon global pool. Without it every mode runs sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
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
    /// Maps `f` over `items`, preserving input order in the output.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => items.par_iter().map(f).collect(),
            _ => items.iter().map(f).collect(),
        }
    }

    /// Maps `f` over `0..n`, preserving order.
    pub fn map_range<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
            _ => (0..n).map(f).collect(),
        }
    }

    /// Folds `0..n` into an optional best element. `better(a, b)` returns true
    /// when `a` should replace `b`; it must be a strict total preference for
    /// the result to be independent of the execution mode.
    pub fn best_of<R, F, B>(self, n: usize, f: F, better: B) -> Option<R>
    where
        R: Send,
        F: Fn(usize) -> Option<R> + Sync + Send,
        B: Fn(&R, &R) -> bool + Sync + Send,
    {
        let pick = |a: Option<R>, b: Option<R>| match (a, b) {
            (Some(a), Some(b)) => {
                if better(&b, &a) {
                    Some(b)
                } else {
                    Some(a)
                }
            }
            (a, None) => a,
            (None, b) => b,
        };
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => (0..n).into_par_iter().map(&f).reduce(|| None, pick),
            _ => (0..n).map(&f).fold(None, pick),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_on_order() {
        let xs: Vec<u64> = (0..1000).collect();
        let a = Execution::Sequential.map(&xs, |x| x * x);
        let b = Execution::Parallel.map(&xs, |x| x * x);
        assert_eq!(a, b);
    }

    #[test]
    fn best_of_is_mode_independent() {
        let score = |i: usize| Some(((i * 7919) % 1009, i));
        let better = |a: &(usize, usize), b: &(usize, usize)| a < b;
        let a = Execution::Sequential.best_of(5000, score, better);
        let b = Execution::Parallel.best_of(5000, score, better);
        assert_eq!(a, b);
    }
}
