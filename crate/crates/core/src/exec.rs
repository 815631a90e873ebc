//! Execution mode for data-parallel loops.
//!
//! Every parallel loop in the crate goes through [`map_indexed`]. Results are
//! collected in index order, so the output never depends on the mode or on
//! thread scheduling. Without the `parallel` feature, [`Exec::Parallel`]
//! runs sequentially.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// True when this mode will actually fan out across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Evaluates `f(0), .., f(n-1)` and returns the values in index order.
pub fn map_indexed<T, F>(exec: Exec, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_indexed_grain(exec, n, 1, f)
}

/// As [`map_indexed`], never splitting work below `grain` indices per task.
pub fn map_indexed_grain<T, F>(exec: Exec, n: usize, grain: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec == Exec::Parallel {
            use rayon::prelude::*;
            return (0..n).into_par_iter().with_min_len(grain.max(1)).map(f).collect();
        }
    }
    let _ = (exec, grain);
    (0..n).map(f).collect()
}
