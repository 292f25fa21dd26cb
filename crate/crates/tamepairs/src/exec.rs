//! Execution-mode toggle for grid scans.
//!
//! Heavy scans (ratio grids, Piszczek sup grids) may be partitioned across
//! rayon workers. Every parallel reduction in this crate is a max or a
//! sort-then-fold, so results are schedule-independent and reports are
//! byte-identical whichever mode runs.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Execution {
    #[default]
    Sequential,
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        matches!(self, Execution::Parallel)
    }
}

/// Map `items` through `f` preserving input order.
pub fn ordered_map<T, U, F>(exec: Execution, items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    match exec {
        Execution::Sequential => items.into_iter().map(f).collect(),
        Execution::Parallel => items.into_par_iter().map(f).collect(),
    }
}
