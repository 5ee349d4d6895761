//! Execution substrate mapping parallel units onto threads.
//!
//! A unit is a cell of a [`Range2D`] of work items (a row, or a tile). The
//! body runs exactly once per unit and may only write locations owned by
//! that unit. Three schedulers are available:
//!
//! * `Serial`: ascending unit order on the calling thread.
//! * `StaticThreads`: the linearized unit list is cut into `n` contiguous
//!   blocks of `ceil(U / n)` units, block `k` runs on worker `k`.
//! * `WorkStealing`: the 2D range is split recursively along its longer
//!   side until at most `grain` units remain; idle workers steal halves.
//!
//! Worker pools are built lazily, one per thread count, and then live for
//! the rest of the process.

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use thiserror::Error;

/// Overrides [`detect_cores`] as the default thread count.
pub const THREADS_ENV: &str = "WAVESWEEP_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    Serial,
    StaticThreads { threads: usize },
    WorkStealing { threads: usize, grain: usize },
}

impl Backend {
    pub fn threads(&self) -> usize {
        match *self {
            Backend::Serial => 1,
            Backend::StaticThreads { threads } | Backend::WorkStealing { threads, .. } => threads,
        }
    }

    pub fn kind(&self) -> BackendKind {
        match self {
            Backend::Serial => BackendKind::Serial,
            Backend::StaticThreads { .. } => BackendKind::Static,
            Backend::WorkStealing { .. } => BackendKind::WorkStealing,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match *self {
            Backend::Serial => Ok(()),
            Backend::StaticThreads { threads } if threads >= 1 => Ok(()),
            Backend::WorkStealing { threads, grain } if threads >= 1 && grain >= 1 => Ok(()),
            other => Err(format!("thread count and grain must be at least 1: {other:?}")),
        }
    }
}

/// Scheduler family without its thread count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BackendKind {
    Serial,
    Static,
    WorkStealing,
}

impl BackendKind {
    pub const ALL: [BackendKind; 3] = [BackendKind::Serial, BackendKind::Static, BackendKind::WorkStealing];

    pub fn name(&self) -> &'static str {
        match self {
            BackendKind::Serial => "serial",
            BackendKind::Static => "static",
            BackendKind::WorkStealing => "workstealing",
        }
    }

    pub fn with_threads(&self, threads: usize, grain: usize) -> Backend {
        match self {
            BackendKind::Serial => Backend::Serial,
            BackendKind::Static => Backend::StaticThreads { threads },
            BackendKind::WorkStealing => Backend::WorkStealing { threads, grain },
        }
    }
}

impl std::fmt::Display for BackendKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BackendKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown backend '{s}' (expected serial, static or workstealing)"))
    }
}

/// Half-open 2D index range `[i0, i1) x [j0, j1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Range2D {
    pub i0: usize,
    pub i1: usize,
    pub j0: usize,
    pub j1: usize,
}

impl Range2D {
    pub fn new(i0: usize, i1: usize, j0: usize, j1: usize) -> Self {
        assert!(i0 <= i1 && j0 <= j1, "inverted range {i0}..{i1} x {j0}..{j1}");
        Self { i0, i1, j0, j1 }
    }

    /// `n` units laid out along `j`, one per row.
    pub fn rows(n: usize) -> Self {
        Self::new(0, 1, 0, n)
    }

    pub fn width(&self) -> usize {
        self.i1 - self.i0
    }

    pub fn height(&self) -> usize {
        self.j1 - self.j0
    }

    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    /// Unit at position `k` of the row-major (j outer) linearization.
    pub fn unit(&self, k: usize) -> (usize, usize) {
        let w = self.width();
        (self.i0 + k % w, self.j0 + k / w)
    }

    pub fn linear_index(&self, i: usize, j: usize) -> usize {
        (j - self.j0) * self.width() + (i - self.i0)
    }

    /// Halves the range along its longer side.
    pub fn split(&self) -> (Range2D, Range2D) {
        if self.width() >= self.height() {
            let mid = self.i0 + self.width() / 2;
            (Range2D { i1: mid, ..*self }, Range2D { i0: mid, ..*self })
        } else {
            let mid = self.j0 + self.height() / 2;
            (Range2D { j1: mid, ..*self }, Range2D { j0: mid, ..*self })
        }
    }
}

/// Worker-local reduction state. `merge` must be associative and
/// commutative.
pub trait Accumulator: Send + Sized {
    fn identity() -> Self;
    fn merge(self, other: Self) -> Self;
}

impl Accumulator for () {
    fn identity() -> Self {}
    fn merge(self, _: Self) -> Self {}
}

/// Running maximum; identity is negative infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxAcc(pub f64);

impl Accumulator for MaxAcc {
    fn identity() -> Self {
        MaxAcc(f64::NEG_INFINITY)
    }

    fn merge(self, other: Self) -> Self {
        MaxAcc(self.0.max(other.0))
    }
}

#[derive(Debug, Error)]
pub enum BackendError<E: std::fmt::Display + std::fmt::Debug> {
    #[error("invalid backend: {0}")]
    InvalidConfig(String),
    #[error("could not build thread pool: {0}")]
    PoolBuild(String),
    #[error("unit ({}, {}) failed: {cause}", unit.0, unit.1)]
    UnitFailed { unit: (usize, usize), cause: E },
    #[error("unit ({}, {}) panicked: {message}", unit.0, unit.1)]
    UnitPanicked { unit: (usize, usize), message: String },
}

/// Hardware concurrency, at least 1.
pub fn detect_cores() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Thread count precedence: explicit flag, then [`THREADS_ENV`], then
/// [`detect_cores`].
pub fn resolve_threads(flag: Option<usize>) -> usize {
    flag.filter(|&n| n >= 1)
        .or_else(|| {
            std::env::var(THREADS_ENV)
                .ok()
                .and_then(|v| v.trim().parse::<usize>().ok())
                .filter(|&n| n >= 1)
        })
        .unwrap_or_else(detect_cores)
}

/// Contiguous ceiling-size blocks over `units` items for `threads` workers.
/// Trailing blocks may be short or empty.
pub fn static_blocks(units: usize, threads: usize) -> Vec<std::ops::Range<usize>> {
    let threads = threads.max(1);
    let size = units.div_ceil(threads);
    (0..threads)
        .map(|k| (k * size).min(units)..((k + 1) * size).min(units))
        .collect()
}

fn pool_for(threads: usize) -> Result<Arc<rayon::ThreadPool>, String> {
    static POOLS: OnceLock<Mutex<HashMap<usize, Arc<rayon::ThreadPool>>>> = OnceLock::new();
    let mut pools = POOLS
        .get_or_init(|| Mutex::new(HashMap::new()))
        .lock()
        .unwrap_or_else(|e| e.into_inner());
    if let Some(p) = pools.get(&threads) {
        return Ok(p.clone());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .thread_name(move |k| format!("wavesweep-{threads}-{k}"))
        .build()
        .map_err(|e| e.to_string())?;
    let pool = Arc::new(pool);
    pools.insert(threads, pool.clone());
    Ok(pool)
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "non-string panic payload".to_string()
    }
}

enum Failure<E> {
    Error(E),
    Panic(String),
}

/// Keeps the failure with the smallest linear unit index so the reported
/// unit does not depend on scheduling when only one unit fails.
/// `(linear index, unit, failure)`.
type Recorded<E> = (usize, (usize, usize), Failure<E>);

struct FailureSlot<E> {
    abort: AtomicBool,
    first: Mutex<Option<Recorded<E>>>,
}

impl<E> FailureSlot<E> {
    fn new() -> Self {
        Self {
            abort: AtomicBool::new(false),
            first: Mutex::new(None),
        }
    }

    fn aborted(&self) -> bool {
        self.abort.load(Ordering::Relaxed)
    }

    fn record(&self, linear: usize, unit: (usize, usize), f: Failure<E>) {
        self.abort.store(true, Ordering::Relaxed);
        let mut slot = self.first.lock().unwrap_or_else(|e| e.into_inner());
        if slot.as_ref().is_none_or(|(k, _, _)| linear < *k) {
            *slot = Some((linear, unit, f));
        }
    }

    fn into_result<A>(self, acc: A) -> Result<A, BackendError<E>>
    where
        E: std::fmt::Display + std::fmt::Debug,
    {
        match self.first.into_inner().unwrap_or_else(|e| e.into_inner()) {
            None => Ok(acc),
            Some((_, unit, Failure::Error(cause))) => Err(BackendError::UnitFailed { unit, cause }),
            Some((_, unit, Failure::Panic(message))) => Err(BackendError::UnitPanicked { unit, message }),
        }
    }
}

#[inline(always)]
fn run_unit<A, E, F>(body: &F, units: &Range2D, k: usize, acc: &mut A, failures: &FailureSlot<E>) -> bool
where
    F: Fn(usize, usize, &mut A) -> Result<(), E>,
{
    let (i, j) = units.unit(k);
    match catch_unwind(AssertUnwindSafe(|| body(i, j, acc))) {
        Ok(Ok(())) => true,
        Ok(Err(e)) => {
            failures.record(k, (i, j), Failure::Error(e));
            false
        }
        Err(payload) => {
            failures.record(k, (i, j), Failure::Panic(panic_message(payload)));
            false
        }
    }
}

/// Runs `body(i, j, local)` once for every unit of `units` and returns the
/// merge of all worker-local accumulators.
///
/// On failure the remaining units are skipped and the failing unit is
/// reported; when several fail concurrently the lowest in linear order wins.
pub fn for_each_unit<A, E, F>(units: Range2D, backend: &Backend, body: F) -> Result<A, BackendError<E>>
where
    A: Accumulator,
    E: Send + std::fmt::Display + std::fmt::Debug,
    F: Fn(usize, usize, &mut A) -> Result<(), E> + Sync,
{
    backend.validate().map_err(BackendError::InvalidConfig)?;
    let total = units.area();
    let failures = FailureSlot::new();
    match *backend {
        Backend::Serial => {
            let mut acc = A::identity();
            for k in 0..total {
                if !run_unit(&body, &units, k, &mut acc, &failures) {
                    break;
                }
            }
            failures.into_result(acc)
        }
        Backend::StaticThreads { threads } => {
            let pool = pool_for(threads).map_err(BackendError::PoolBuild)?;
            let blocks = static_blocks(total, threads);
            let locals = pool.broadcast(|ctx| {
                let mut acc = A::identity();
                for k in blocks[ctx.index()].clone() {
                    if failures.aborted() || !run_unit(&body, &units, k, &mut acc, &failures) {
                        break;
                    }
                }
                acc
            });
            let acc = locals.into_iter().fold(A::identity(), A::merge);
            failures.into_result(acc)
        }
        Backend::WorkStealing { threads, grain } => {
            let pool = pool_for(threads).map_err(BackendError::PoolBuild)?;
            let locals: Vec<Mutex<A>> = (0..threads).map(|_| Mutex::new(A::identity())).collect();
            let ctx = StealCtx {
                units: &units,
                body: &body,
                grain,
                locals: &locals,
                failures: &failures,
            };
            pool.install(|| ctx.split(units));
            let acc = locals
                .into_iter()
                .map(|m| m.into_inner().unwrap_or_else(|e| e.into_inner()))
                .fold(A::identity(), A::merge);
            failures.into_result(acc)
        }
    }
}

struct StealCtx<'a, A, E, F> {
    units: &'a Range2D,
    body: &'a F,
    grain: usize,
    locals: &'a [Mutex<A>],
    failures: &'a FailureSlot<E>,
}

impl<A, E, F> StealCtx<'_, A, E, F>
where
    A: Accumulator,
    E: Send,
    F: Fn(usize, usize, &mut A) -> Result<(), E> + Sync,
{
    fn split(&self, r: Range2D) {
        if self.failures.aborted() || r.area() == 0 {
            return;
        }
        if r.area() <= self.grain {
            self.leaf(r);
            return;
        }
        let (a, b) = r.split();
        rayon::join(|| self.split(a), || self.split(b));
    }

    fn leaf(&self, r: Range2D) {
        let worker = rayon::current_thread_index().unwrap_or(0);
        // A leaf never yields to another task, so its worker's slot is
        // uncontended for the duration.
        let mut acc = self.locals[worker].lock().unwrap_or_else(|e| e.into_inner());
        for j in r.j0..r.j1 {
            for i in r.i0..r.i1 {
                let k = self.units.linear_index(i, j);
                if !run_unit(self.body, self.units, k, &mut *acc, self.failures) {
                    return;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicUsize;

    fn backends() -> Vec<Backend> {
        vec![
            Backend::Serial,
            Backend::StaticThreads { threads: 1 },
            Backend::StaticThreads { threads: 3 },
            Backend::StaticThreads { threads: 4 },
            Backend::WorkStealing { threads: 1, grain: 1 },
            Backend::WorkStealing { threads: 4, grain: 1 },
            Backend::WorkStealing { threads: 4, grain: 7 },
        ]
    }

    #[test]
    fn ceiling_blocks() {
        assert_eq!(static_blocks(10, 3), vec![0..4, 4..8, 8..10]);
        assert_eq!(static_blocks(4, 3), vec![0..2, 2..4, 4..4]);
        assert_eq!(static_blocks(0, 2), vec![0..0, 0..0]);
    }

    #[test]
    fn max_fold() {
        let acc = [3.0, 7.5, 1.2]
            .into_iter()
            .map(MaxAcc)
            .fold(MaxAcc::identity(), MaxAcc::merge);
        assert_eq!(acc, MaxAcc(7.5));
    }

    #[test]
    fn every_unit_runs_exactly_once() {
        for units in [Range2D::rows(37), Range2D::new(2, 9, 1, 6), Range2D::new(0, 0, 0, 5)] {
            for b in backends() {
                let hits: Vec<AtomicUsize> = (0..units.area()).map(|_| AtomicUsize::new(0)).collect();
                for_each_unit::<(), String, _>(units, &b, |i, j, _| {
                    hits[units.linear_index(i, j)].fetch_add(1, Ordering::Relaxed);
                    Ok(())
                })
                .unwrap();
                assert!(hits.iter().all(|h| h.load(Ordering::Relaxed) == 1), "{b:?}");
            }
        }
    }

    #[test]
    fn serial_visits_in_ascending_order() {
        let seen = Mutex::new(Vec::new());
        let units = Range2D::new(0, 3, 0, 2);
        for_each_unit::<(), String, _>(units, &Backend::Serial, |i, j, _| {
            seen.lock().unwrap().push((i, j));
            Ok(())
        })
        .unwrap();
        assert_eq!(seen.into_inner().unwrap(), vec![(0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (2, 1)]);
    }

    #[test]
    fn static_blocks_map_to_workers() {
        let owner: Vec<Mutex<Option<String>>> = (0..10).map(|_| Mutex::new(None)).collect();
        for_each_unit::<(), String, _>(Range2D::rows(10), &Backend::StaticThreads { threads: 3 }, |_, j, _| {
            *owner[j].lock().unwrap() = std::thread::current().name().map(str::to_string);
            Ok(())
        })
        .unwrap();
        let names: Vec<_> = owner.into_iter().map(|m| m.into_inner().unwrap().unwrap()).collect();
        assert!(names[0..4].iter().all(|n| n == &names[0]));
        assert!(names[4..8].iter().all(|n| n == &names[4]));
        assert!(names[8..10].iter().all(|n| n == &names[8]));
        assert_ne!(names[0], names[4]);
    }

    #[test]
    fn merged_max_is_order_independent() {
        let values: Vec<f64> = (0..200).map(|k| ((k * 7919) % 211) as f64 * 0.5).collect();
        for b in backends() {
            let acc: MaxAcc = for_each_unit::<_, String, _>(Range2D::rows(values.len()), &b, |_, j, acc: &mut MaxAcc| {
                acc.0 = acc.0.max(values[j]);
                Ok(())
            })
            .unwrap();
            assert_eq!(acc, MaxAcc(105.0), "{b:?}");
        }
    }

    #[test]
    fn failure_identifies_unit() {
        for b in backends() {
            let r = for_each_unit::<(), String, _>(Range2D::new(0, 4, 0, 4), &b, |i, j, _| {
                if (i, j) == (2, 3) {
                    Err("boom".into())
                } else {
                    Ok(())
                }
            });
            match r {
                Err(BackendError::UnitFailed { unit, cause }) => {
                    assert_eq!(unit, (2, 3));
                    assert_eq!(cause, "boom");
                }
                other => panic!("{b:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn panic_is_reported_not_propagated() {
        for b in backends() {
            let r = for_each_unit::<(), String, _>(Range2D::rows(8), &b, |_, j, _| {
                if j == 5 {
                    panic!("unit five");
                }
                Ok(())
            });
            assert!(
                matches!(&r, Err(BackendError::UnitPanicked { unit: (0, 5), message }) if message == "unit five"),
                "{b:?}: {r:?}"
            );
        }
    }

    #[test]
    fn invalid_backend_rejected() {
        let r = for_each_unit::<(), String, _>(Range2D::rows(1), &Backend::StaticThreads { threads: 0 }, |_, _, _| Ok(()));
        assert!(matches!(r, Err(BackendError::InvalidConfig(_))));
        let r = for_each_unit::<(), String, _>(
            Range2D::rows(1),
            &Backend::WorkStealing { threads: 2, grain: 0 },
            |_, _, _| Ok(()),
        );
        assert!(matches!(r, Err(BackendError::InvalidConfig(_))));
    }

    #[test]
    fn split_halves_longer_side() {
        let (a, b) = Range2D::new(0, 10, 0, 3).split();
        assert_eq!((a, b), (Range2D::new(0, 5, 0, 3), Range2D::new(5, 10, 0, 3)));
        let (a, b) = Range2D::new(0, 2, 4, 9).split();
        assert_eq!((a, b), (Range2D::new(0, 2, 4, 6), Range2D::new(0, 2, 6, 9)));
    }

    #[test]
    fn cores_and_precedence() {
        assert!(detect_cores() >= 1);
        assert_eq!(resolve_threads(Some(3)), 3);
        assert!(resolve_threads(None) >= 1);
    }
}
