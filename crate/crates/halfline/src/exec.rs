use std::num::NonZeroUsize;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use halfline_core::mc::Executor;

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "HALFLINE_THREADS";

/// Scoped worker pool. Jobs are claimed dynamically but results come back in job order,
/// so output does not depend on the worker count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Threads {
    count: usize,
}

impl Threads {
    pub fn new(count: usize) -> Threads {
        Threads { count: count.max(1) }
    }

    /// Worker count from `HALFLINE_THREADS`, else the available parallelism.
    pub fn from_env() -> Threads {
        let fallback = std::thread::available_parallelism().map_or(1, NonZeroUsize::get);
        let count = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
            .unwrap_or(fallback);
        Threads::new(count)
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

impl Default for Threads {
    fn default() -> Self {
        Threads::from_env()
    }
}

impl Executor for Threads {
    fn run<T, F>(&self, jobs: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        let workers = self.count.min(jobs);
        if workers <= 1 {
            return (0..jobs).map(f).collect();
        }
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..jobs).map(|_| None).collect());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let job = next.fetch_add(1, Ordering::Relaxed);
                    if job >= jobs {
                        break;
                    }
                    let out = f(job);
                    slots.lock().expect("worker panicked")[job] = Some(out);
                });
            }
        });
        slots.into_inner().expect("worker panicked").into_iter().map(|s| s.expect("every job ran")).collect()
    }
}
