//! Data-parallel map over independent work items. Runs on the rayon pool
//! when the `parallel` feature is on and the runtime mode allows it;
//! otherwise sequentially. Output order always follows input order.

use std::sync::atomic::{AtomicBool, Ordering};

static SEQUENTIAL: AtomicBool = AtomicBool::new(false);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExecMode {
    Parallel,
    Sequential,
}

pub fn set_exec_mode(mode: ExecMode) {
    SEQUENTIAL.store(mode == ExecMode::Sequential, Ordering::SeqCst);
}

pub fn exec_mode() -> ExecMode {
    if cfg!(feature = "parallel") && !SEQUENTIAL.load(Ordering::SeqCst) {
        ExecMode::Parallel
    } else {
        ExecMode::Sequential
    }
}

/// `(0..n).map(f)` collected in index order.
pub fn map_indexed<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec_mode() == ExecMode::Parallel {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    (0..n).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_preserved_in_both_modes() {
        let want: Vec<usize> = (0..1000).map(|i| i * i).collect();
        assert_eq!(map_indexed(1000, |i| i * i), want);
        set_exec_mode(ExecMode::Sequential);
        assert_eq!(exec_mode(), ExecMode::Sequential);
        assert_eq!(map_indexed(1000, |i| i * i), want);
        set_exec_mode(ExecMode::Parallel);
    }
}
