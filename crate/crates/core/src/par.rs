//! Execution strategy for the data-parallel parts of the analysis.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Without the `parallel` feature both variants run sequentially. Output
/// order never depends on the variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    pub fn map_collect<T, R, F>(self, items: &[T], f: F) -> Vec<R>
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

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_preserved() {
        let items: Vec<u32> = (0..1000).collect();
        let seq = Execution::Sequential.map_collect(&items, |x| x * 2);
        let par = Execution::Parallel.map_collect(&items, |x| x * 2);
        assert_eq!(seq, par);
        assert_eq!(par[999], 1998);
    }
}
