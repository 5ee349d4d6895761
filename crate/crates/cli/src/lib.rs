//! Argument parsing and subcommand dispatch for the `wavesweep` binary.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use wavesweep::backend::{resolve_threads, BackendKind, THREADS_ENV};
use wavesweep::bench::{emit_csv, run_bench, BenchConfig, BenchError};
use wavesweep::driver::{Simulation, SimulationConfig, StopCondition, TimestepController};
use wavesweep::ic::InitialCondition;
use wavesweep::riemann::KernelKind;
use wavesweep::sweep::{parse_dims, TraversalStrategy};
use wavesweep::verify::verify_suite;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "wavesweep",
    version,
    about = "2D finite-volume wave propagation: run, benchmark and verify",
    after_help = "The default thread count comes from --threads, then the WAVESWEEP_THREADS \
                  environment variable, then the number of available cores.\n\
                  Exit codes: 0 ok, 1 correctness or verification failure, 2 usage error."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and report its final state.
    Run(RunArgs),
    /// Time the kernel x size x strategy x backend x threads matrix as CSV.
    Bench(BenchArgs),
    /// Run the property and reference-solution checks.
    Verify(VerifyArgs),
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

fn positive_real(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() && x > 0.0 => Ok(x),
        Ok(x) => Err(format!("must be positive and finite, got {x}")),
        Err(e) => Err(e.to_string()),
    }
}

fn non_negative_real(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() && x >= 0.0 => Ok(x),
        Ok(x) => Err(format!("must be non-negative and finite, got {x}")),
        Err(e) => Err(e.to_string()),
    }
}

fn dims(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = parse_dims(s)?;
    if w == 0 || h == 0 {
        return Err(format!("'{s}': both extents must be at least 1"));
    }
    Ok((w, h))
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, default_value = "euler")]
    pub kernel: KernelKind,
    /// Initial condition; defaults to the kernel's own.
    #[arg(long)]
    pub ic: Option<InitialCondition>,
    #[arg(long, default_value_t = 256, value_parser = positive)]
    pub nx: usize,
    #[arg(long, default_value_t = 256, value_parser = positive)]
    pub ny: usize,
    /// Number of steps; ignored when --t-final is given.
    #[arg(long, default_value_t = 10)]
    pub steps: usize,
    /// Run to this simulation time instead of a step count.
    #[arg(long, value_parser = non_negative_real)]
    pub t_final: Option<f64>,
    #[arg(long, default_value = "cellwise", value_parser = strategy_name)]
    pub strategy: String,
    /// Tile size used when the strategy is plain `tiled`.
    #[arg(long, value_parser = dims)]
    pub tile: Option<(usize, usize)>,
    #[arg(long, default_value = "serial")]
    pub backend: BackendKind,
    #[arg(long, value_parser = positive)]
    pub threads: Option<usize>,
    #[arg(long, default_value_t = 1, value_parser = positive)]
    pub grain: usize,
    #[arg(long, default_value_t = 0.9, value_parser = positive_real)]
    pub cfl: f64,
    /// Write the final interior state as CSV (`i,j,q0,q1,...`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Comma list of kernels; defaults to all four.
    #[arg(long, value_delimiter = ',')]
    pub kernel: Vec<KernelKind>,
    /// Comma list of NxM grid sizes.
    #[arg(long, value_delimiter = ',', value_parser = dims)]
    pub sizes: Vec<(usize, usize)>,
    /// Single grid width; combined with --ny into one size.
    #[arg(long, value_parser = positive, conflicts_with = "sizes")]
    pub nx: Option<usize>,
    #[arg(long, value_parser = positive, conflicts_with = "sizes")]
    pub ny: Option<usize>,
    #[arg(long, default_value_t = 10, value_parser = positive)]
    pub steps: usize,
    #[arg(long, default_value_t = 2)]
    pub warmup: usize,
    #[arg(long, default_value_t = 5, value_parser = positive)]
    pub reps: usize,
    /// Comma list of thread counts; defaults to 1 up to the default count.
    #[arg(long, value_delimiter = ',', value_parser = positive)]
    pub threads: Vec<usize>,
    /// Comma list: rowwise, cellwise, tiled, tiled:WxH.
    #[arg(long, value_delimiter = ',', value_parser = strategy_name)]
    pub strategy: Vec<String>,
    /// Tile size used for plain `tiled`.
    #[arg(long, value_parser = dims)]
    pub tile: Option<(usize, usize)>,
    /// Comma list: serial, static, workstealing.
    #[arg(long, value_delimiter = ',')]
    pub backend: Vec<BackendKind>,
    #[arg(long, default_value_t = 1, value_parser = positive)]
    pub grain: usize,
    #[arg(long, default_value_t = 0.9, value_parser = positive_real)]
    pub cfl: f64,
    /// Initial condition for every kernel (must match them all).
    #[arg(long)]
    pub ic: Option<InitialCondition>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Corrupt the first threaded result to exercise the serial guard.
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Seed for the randomized inputs.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Validates a strategy name but keeps the text, so plain `tiled` can
/// still pick up `--tile` later.
fn strategy_name(s: &str) -> Result<String, String> {
    s.parse::<TraversalStrategy>().map(|_| s.to_string())
}

fn resolve_strategy(name: &str, tile: Option<(usize, usize)>) -> TraversalStrategy {
    match (name, tile) {
        ("tiled", Some((w, h))) => TraversalStrategy::tiled(w, h),
        _ => name.parse().expect("validated by the argument parser"),
    }
}

impl BenchArgs {
    pub fn to_config(&self) -> BenchConfig {
        let mut cfg = BenchConfig::full_matrix(resolve_threads(None));
        if !self.kernel.is_empty() {
            cfg.kernels = self.kernel.clone();
        }
        if !self.sizes.is_empty() {
            cfg.sizes = self.sizes.clone();
        } else if self.nx.is_some() || self.ny.is_some() {
            let n = self.nx.or(self.ny).unwrap_or(256);
            cfg.sizes = vec![(self.nx.unwrap_or(n), self.ny.unwrap_or(n))];
        }
        let names: Vec<&str> = if self.strategy.is_empty() {
            vec!["rowwise", "cellwise", "tiled"]
        } else {
            self.strategy.iter().map(String::as_str).collect()
        };
        cfg.strategies = names.into_iter().map(|n| resolve_strategy(n, self.tile)).collect();
        if !self.backend.is_empty() {
            cfg.backends = self.backend.clone();
        }
        if !self.threads.is_empty() {
            cfg.threads = self.threads.clone();
        }
        cfg.grain = self.grain;
        cfg.steps = self.steps;
        cfg.warmup = self.warmup;
        cfg.repetitions = self.reps;
        cfg.controller = TimestepController::with_cfl(self.cfl);
        cfg.ic = self.ic;
        cfg.inject_fault = self.inject_fault;
        cfg
    }
}

fn open_out(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_run(args: &RunArgs) -> Result<(), (i32, String)> {
    let ic = args.ic.unwrap_or_else(|| InitialCondition::default_for(args.kernel));
    if ic.kernel_kind() != args.kernel {
        return Err((EXIT_USAGE, format!("initial condition {ic} needs the {} kernel", ic.kernel_kind())));
    }
    let stop = match args.t_final {
        Some(t) => StopCondition::FinalTime(t),
        None => StopCondition::Steps(args.steps),
    };
    let backend = args.backend.with_threads(resolve_threads(args.threads), args.grain);
    let cfg = SimulationConfig::new(ic, args.nx, args.ny, stop)
        .and_then(|c| {
            let c = c
                .with_strategy(resolve_strategy(&args.strategy, args.tile))
                .with_backend(backend)
                .with_controller(TimestepController::with_cfl(args.cfl));
            c.validate().map(|_| c)
        })
        .map_err(|e| (EXIT_USAGE, e.to_string()))?;

    let mut sim = Simulation::new(cfg).map_err(|e| (EXIT_USAGE, e.to_string()))?;
    let t0 = Instant::now();
    let reports = sim.run_to_end().map_err(|e| (EXIT_FAILURE, e.to_string()))?;
    let wall = t0.elapsed().as_secs_f64() * 1e3;

    let state = sim.state();
    let steps = reports.len();
    println!("kernel={} ic={ic} grid={}x{} strategy={} backend={} threads={}", args.kernel, args.nx, args.ny,
        sim.config().strategy, backend.kind(), backend.threads());
    println!("steps={steps} time={:.6e} wall_ms={wall:.3} ms_per_step={:.4}", sim.time(),
        if steps > 0 { wall / steps as f64 } else { 0.0 });
    if let Some(last) = reports.last() {
        println!("last_dt={:.6e} last_cfl={:.4}", last.dt, last.cfl);
    }
    for m in 0..state.num_comp() {
        println!("sum[{m}]={:.15e}", state.interior_sum(m));
    }
    if !state.all_finite() {
        return Err((EXIT_FAILURE, "final state contains non-finite values".into()));
    }

    if let Some(path) = &args.out {
        let write = || -> io::Result<()> {
            let mut out = open_out(&Some(path.clone()))?;
            let header: Vec<String> = (0..state.num_comp()).map(|m| format!("q{m}")).collect();
            writeln!(out, "i,j,{}", header.join(","))?;
            for (i, j) in state.interior_cells() {
                let vals: Vec<String> = state.cell(i, j).iter().map(|v| format!("{v:e}")).collect();
                writeln!(out, "{i},{j},{}", vals.join(","))?;
            }
            out.flush()
        };
        write().map_err(|e| (EXIT_FAILURE, format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<(), (i32, String)> {
    let cfg = args.to_config();
    cfg.validate().map_err(|e| (EXIT_USAGE, e.to_string()))?;
    let records = run_bench(&cfg, |r| {
        eprintln!(
            "{} {}x{} {} {} threads={}: {:.3} ms/step, speedup {:.2}",
            r.kernel, r.nx, r.ny, r.strategy, r.backend, r.threads, r.ms_per_step, r.speedup
        );
        if r.superlinear() {
            eprintln!("warning: efficiency {:.2} above the sanity band, likely timing noise", r.efficiency);
        }
    })
    .map_err(|e| match e {
        BenchError::Config(_) => (EXIT_USAGE, e.to_string()),
        _ => (EXIT_FAILURE, e.to_string()),
    })?;
    let mut out = open_out(&args.out).map_err(|e| (EXIT_FAILURE, e.to_string()))?;
    emit_csv(&records, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| (EXIT_FAILURE, e.to_string()))
}

fn cmd_verify(args: &VerifyArgs) -> Result<(), (i32, String)> {
    let report = verify_suite(args.seed);
    println!("seed {}", report.seed);
    for c in &report.checks {
        println!("{c}");
    }
    let failed: Vec<&str> = report.failures().map(|c| c.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err((EXIT_FAILURE, format!("failed: {}", failed.join(", "))))
    }
}

/// Parses `argv` and runs the chosen subcommand; returns the exit code.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}

/// Name of the variable consulted for the default thread count.
pub fn threads_env() -> &'static str {
    THREADS_ENV
}
