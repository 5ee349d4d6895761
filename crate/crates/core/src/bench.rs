//! Timing harness over the kernel x grid x strategy x backend x threads
//! matrix, with a bitwise correctness guard against the serial run.

use std::io::{self, Write};
use std::time::Instant;

use thiserror::Error;

use crate::backend::{Backend, BackendKind};
use crate::driver::{DriverError, Simulation, SimulationConfig, StopCondition, TimestepController};
use crate::grid::{BoundaryCondition, CellField};
use crate::ic::InitialCondition;
use crate::riemann::KernelKind;
use crate::sweep::TraversalStrategy;

pub const CSV_HEADER: &str =
    "kernel,nx,ny,strategy,backend,threads,steps,ms_per_step,mcells_per_s,speedup,efficiency";

/// Efficiencies above this are flagged as superlinear.
pub const EFFICIENCY_SANITY_MAX: f64 = 1.5;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub kernels: Vec<KernelKind>,
    pub sizes: Vec<(usize, usize)>,
    pub strategies: Vec<TraversalStrategy>,
    pub backends: Vec<BackendKind>,
    pub threads: Vec<usize>,
    /// Work-stealing grain in units (rows or tiles).
    pub grain: usize,
    pub steps: usize,
    pub warmup: usize,
    pub repetitions: usize,
    pub controller: TimestepController,
    /// Replaces the per-kernel default initial condition.
    pub ic: Option<InitialCondition>,
    /// Corrupts the first threaded result so the guard can be exercised.
    pub inject_fault: bool,
}

impl BenchConfig {
    /// Full matrix: four grid sizes up to 2048^2, every kernel, strategy
    /// and backend, threads `1..=cores`.
    pub fn full_matrix(cores: usize) -> Self {
        Self {
            kernels: KernelKind::ALL.to_vec(),
            sizes: vec![(256, 256), (512, 512), (1024, 1024), (2048, 2048)],
            strategies: vec![
                TraversalStrategy::RowWise,
                TraversalStrategy::CellWise,
                TraversalStrategy::tiled(crate::sweep::DEFAULT_TILE, crate::sweep::DEFAULT_TILE),
            ],
            backends: BackendKind::ALL.to_vec(),
            threads: (1..=cores.max(1)).collect(),
            grain: 1,
            steps: 10,
            warmup: 2,
            repetitions: 5,
            controller: TimestepController::default(),
            ic: None,
            inject_fault: false,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: &str| Err(BenchError::Config(m.to_string()));
        if self.kernels.is_empty() || self.sizes.is_empty() || self.strategies.is_empty() {
            return bad("kernel, size and strategy lists must be non-empty");
        }
        if self.backends.is_empty() || self.threads.is_empty() {
            return bad("backend and thread lists must be non-empty");
        }
        if self.threads.contains(&0) {
            return bad("thread counts must be at least 1");
        }
        if self.sizes.iter().any(|&(nx, ny)| nx == 0 || ny == 0) {
            return bad("grid sizes must be at least 1x1");
        }
        if self.steps == 0 || self.repetitions == 0 || self.grain == 0 {
            return bad("steps, repetitions and grain must be at least 1");
        }
        for s in &self.strategies {
            s.validate().map_err(BenchError::Config)?;
        }
        self.controller.validate().map_err(BenchError::Driver)?;
        if let Some(ic) = self.ic {
            if let Some(k) = self.kernels.iter().find(|&&k| k != ic.kernel_kind()) {
                return Err(BenchError::Config(format!("initial condition {ic} cannot drive the {k} kernel")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub kernel: KernelKind,
    pub nx: usize,
    pub ny: usize,
    pub strategy: TraversalStrategy,
    pub backend: BackendKind,
    pub threads: usize,
    pub steps: usize,
    /// Median over repetitions.
    pub ms_per_step: f64,
    pub mcells_per_s: f64,
    pub speedup: f64,
    pub efficiency: f64,
}

impl BenchRecord {
    pub fn superlinear(&self) -> bool {
        self.efficiency > EFFICIENCY_SANITY_MAX
    }

    /// Every column except the three derived from timings.
    pub fn same_setup(&self, other: &BenchRecord) -> bool {
        (self.kernel, self.nx, self.ny, self.strategy, self.backend, self.threads, self.steps)
            == (other.kernel, other.nx, other.ny, other.strategy, other.backend, other.threads, other.steps)
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid bench configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Driver(#[from] DriverError),
    #[error(
        "{kernel} {nx}x{ny} {strategy} {backend} threads={threads}: final state differs from serial \
         run (first difference at component {} of cell ({}, {}))",
        first_diff.0, first_diff.1, first_diff.2
    )]
    Mismatch {
        kernel: KernelKind,
        nx: usize,
        ny: usize,
        strategy: TraversalStrategy,
        backend: BackendKind,
        threads: usize,
        first_diff: (usize, isize, isize),
    },
}

/// Median; the mean of the two middle values for an even count.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn first_difference(a: &CellField, b: &CellField) -> Option<(usize, isize, isize)> {
    a.interior_cells().find_map(|(i, j)| {
        a.cell(i, j)
            .iter()
            .zip(b.cell(i, j))
            .position(|(x, y)| x.to_bits() != y.to_bits())
            .map(|m| (m, i, j))
    })
}

struct Measurement {
    rep_ms: Vec<f64>,
    finals: Vec<CellField>,
}

fn measure(template: &Simulation, strategy: TraversalStrategy, backend: Backend, cfg: &BenchConfig) -> Result<Measurement, BenchError> {
    let mut rep_ms = Vec::with_capacity(cfg.repetitions);
    let mut finals = Vec::with_capacity(cfg.repetitions);
    for _ in 0..cfg.repetitions {
        let mut sim = template.clone();
        sim.set_execution(strategy, backend)?;
        for _ in 0..cfg.warmup {
            sim.step()?;
        }
        let t0 = Instant::now();
        for _ in 0..cfg.steps {
            sim.step()?;
        }
        rep_ms.push(t0.elapsed().as_secs_f64() * 1e3);
        finals.push(sim.into_state());
    }
    Ok(Measurement { rep_ms, finals })
}

/// Runs the matrix in configuration order. The serial run of each
/// (kernel, size, strategy) is measured first and used both as speedup
/// denominator and as the bitwise reference for every threaded run; a
/// mismatch aborts the whole bench.
///
/// Boundaries are periodic on both axes regardless of the initial
/// condition's defaults.
///
/// The serial backend contributes one row (threads = 1) per strategy;
/// threaded backends contribute one row per thread count.
pub fn run_bench(cfg: &BenchConfig, mut on_record: impl FnMut(&BenchRecord)) -> Result<Vec<BenchRecord>, BenchError> {
    cfg.validate()?;
    let mut records = Vec::new();
    let mut fault_pending = cfg.inject_fault;
    for &kernel in &cfg.kernels {
        let ic = cfg.ic.unwrap_or_else(|| InitialCondition::default_for(kernel));
        for &(nx, ny) in &cfg.sizes {
            let mut base = SimulationConfig::new(ic, nx, ny, StopCondition::Steps(cfg.warmup + cfg.steps))?
                .with_controller(cfg.controller);
            // timing runs are periodic in both directions
            base.bc_x = BoundaryCondition::Periodic;
            base.bc_y = BoundaryCondition::Periodic;
            let template = Simulation::new(base)?;
            for &strategy in &cfg.strategies {
                let serial = measure(&template, strategy, Backend::Serial, cfg)?;
                let serial_ms = median(&serial.rep_ms) / cfg.steps as f64;
                let reference = &serial.finals[0];

                let mut emit = |backend: BackendKind, threads: usize, ms_per_step: f64| {
                    let speedup = serial_ms / ms_per_step;
                    let rec = BenchRecord {
                        kernel,
                        nx,
                        ny,
                        strategy,
                        backend,
                        threads,
                        steps: cfg.steps,
                        ms_per_step,
                        mcells_per_s: (nx * ny) as f64 / (ms_per_step * 1e-3) / 1e6,
                        speedup,
                        efficiency: speedup / threads as f64,
                    };
                    on_record(&rec);
                    records.push(rec);
                };

                for &backend_kind in &cfg.backends {
                    if backend_kind == BackendKind::Serial {
                        // self-ratio, exactly 1 by construction
                        let rec_ms = serial_ms;
                        emit(BackendKind::Serial, 1, rec_ms);
                        continue;
                    }
                    for &threads in &cfg.threads {
                        let backend = backend_kind.with_threads(threads, cfg.grain);
                        let mut m = measure(&template, strategy, backend, cfg)?;
                        if fault_pending {
                            let v = &mut m.finals[0].data_mut()[..];
                            let k = v.len() / 2;
                            v[k] = f64::from_bits(v[k].to_bits() ^ 1);
                            fault_pending = false;
                        }
                        for fin in &m.finals {
                            if let Some(first_diff) = first_difference(fin, reference).or_else(|| {
                                (!fin.bits_eq(reference)).then_some((usize::MAX, -1, -1))
                            }) {
                                return Err(BenchError::Mismatch {
                                    kernel,
                                    nx,
                                    ny,
                                    strategy,
                                    backend: backend_kind,
                                    threads,
                                    first_diff,
                                });
                            }
                        }
                        emit(backend_kind, threads, median(&m.rep_ms) / cfg.steps as f64);
                    }
                }
            }
        }
    }
    Ok(records)
}

/// `%g`-style formatting with `sig` significant digits.
pub fn format_sig(x: f64, sig: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sig = sig.max(1);
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if exp < -4 || exp >= sig as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim(mantissa), sign, exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim(&format!("{:.*}", decimals, x))
    }
}

/// Writes the header and one row per record.
pub fn emit_csv(records: &[BenchRecord], out: &mut impl Write) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.kernel,
            r.nx,
            r.ny,
            r.strategy,
            r.backend,
            r.threads,
            r.steps,
            format_sig(r.ms_per_step, 6),
            format_sig(r.mcells_per_s, 6),
            format_sig(r.speedup, 6),
            format_sig(r.efficiency, 6),
        )?;
    }
    Ok(())
}

/// Parses a file written by [`emit_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<BenchRecord>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => return Err(format!("unexpected header {other:?}")),
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(n, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 11 {
                return Err(format!("line {}: expected 11 fields, got {}", n + 2, f.len()));
            }
            let int = |s: &str| s.parse::<usize>().map_err(|e| format!("line {}: {e}", n + 2));
            let real = |s: &str| s.parse::<f64>().map_err(|e| format!("line {}: {e}", n + 2));
            Ok(BenchRecord {
                kernel: f[0].parse()?,
                nx: int(f[1])?,
                ny: int(f[2])?,
                strategy: f[3].parse()?,
                backend: f[4].parse()?,
                threads: int(f[5])?,
                steps: int(f[6])?,
                ms_per_step: real(f[7])?,
                mcells_per_s: real(f[8])?,
                speedup: real(f[9])?,
                efficiency: real(f[10])?,
            })
        })
        .collect()
}
