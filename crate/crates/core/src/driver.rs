//! Time integration: ghost fill, sweep, CFL-limited step choice, update.

use std::time::Instant;

use thiserror::Error;

use crate::backend::Backend;
use crate::grid::{fill_ghost, Axis, BoundaryCondition, CellField, FluctuationField, GridError, GridSpec};
use crate::ic::{initial_condition, InitialCondition};
use crate::riemann::{Kernel, KernelError, Side};
use crate::sweep::{apply_update, sweep_kernel_into, SweepError, TraversalStrategy};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DriverError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("{source}{}", cell.map(|(i, j)| format!(" (cell ({i}, {j}))")).unwrap_or_default())]
    Sweep {
        source: SweepError,
        /// Interior coordinates of the offending cell, when known.
        cell: Option<(isize, isize)>,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("all wave speeds are zero; set a fixed time step for a stationary field")]
    StationaryField,
}

impl From<SweepError> for DriverError {
    fn from(source: SweepError) -> Self {
        let cell = offending_cell(&source);
        DriverError::Sweep { source, cell }
    }
}

/// Maps a kernel failure on an interface back to the cell that caused it.
fn offending_cell(e: &SweepError) -> Option<(isize, isize)> {
    let SweepError::Kernel { axis, i, j, source } = e else {
        return None;
    };
    let side = match source {
        KernelError::NonFinite { side }
        | KernelError::Inadmissible { side, .. }
        | KernelError::InvalidAux { side, .. } => *side,
        _ => return None,
    };
    let (i, j) = (*i as isize, *j as isize);
    Some(match (axis, side) {
        (Axis::X, Side::Left) => (i - 1, j),
        (Axis::Y, Side::Left) => (i, j - 1),
        (_, Side::Right) => (i, j),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimestepController {
    pub cfl_target: f64,
    pub dt_max: Option<f64>,
    pub fixed_dt: Option<f64>,
}

impl Default for TimestepController {
    fn default() -> Self {
        Self {
            cfl_target: 0.9,
            dt_max: None,
            fixed_dt: None,
        }
    }
}

impl TimestepController {
    pub fn with_cfl(cfl_target: f64) -> Self {
        Self {
            cfl_target,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), DriverError> {
        if !(self.cfl_target > 0.0 && self.cfl_target < 1.0) {
            return Err(DriverError::Config(format!(
                "CFL target must lie in (0, 1), got {}",
                self.cfl_target
            )));
        }
        for (name, v) in [("dt_max", self.dt_max), ("fixed_dt", self.fixed_dt)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(DriverError::Config(format!("{name} must be positive, got {v}")));
                }
            }
        }
        Ok(())
    }
}

/// `cfl_target / (max_sx/dx + max_sy/dy)`, capped by `dt_max` and by the
/// time left before the end of the run. `fixed_dt` replaces the formula.
pub fn choose_dt(
    max_sx: f64,
    max_sy: f64,
    dx: f64,
    dy: f64,
    ctl: &TimestepController,
    remaining: Option<f64>,
) -> Result<f64, DriverError> {
    let mut dt = match ctl.fixed_dt {
        Some(dt) => dt,
        None => {
            let rate = max_sx / dx + max_sy / dy;
            if !(rate > 0.0) {
                return Err(DriverError::StationaryField);
            }
            ctl.cfl_target / rate
        }
    };
    if let Some(cap) = ctl.dt_max {
        dt = dt.min(cap);
    }
    if let Some(left) = remaining {
        dt = dt.min(left);
    }
    Ok(dt)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopCondition {
    Steps(usize),
    FinalTime(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub spec: GridSpec,
    pub kernel: Kernel,
    pub ic: InitialCondition,
    pub strategy: TraversalStrategy,
    pub backend: Backend,
    pub bc_x: BoundaryCondition,
    pub bc_y: BoundaryCondition,
    pub stop: StopCondition,
    pub controller: TimestepController,
}

impl SimulationConfig {
    /// Unit-square run of `ic` with its default kernel and boundaries,
    /// cell-wise traversal and the serial backend.
    pub fn new(ic: InitialCondition, nx: usize, ny: usize, stop: StopCondition) -> Result<Self, DriverError> {
        let (bc_x, bc_y) = ic.default_boundaries();
        Ok(Self {
            spec: ic.grid(nx, ny)?,
            kernel: ic.kernel(),
            ic,
            strategy: TraversalStrategy::CellWise,
            backend: Backend::Serial,
            bc_x,
            bc_y,
            stop,
            controller: TimestepController::default(),
        })
    }

    pub fn with_strategy(mut self, strategy: TraversalStrategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn with_backend(mut self, backend: Backend) -> Self {
        self.backend = backend;
        self
    }

    pub fn with_controller(mut self, controller: TimestepController) -> Self {
        self.controller = controller;
        self
    }

    pub fn validate(&self) -> Result<(), DriverError> {
        self.spec.validate()?;
        self.controller.validate()?;
        self.strategy.validate().map_err(DriverError::Config)?;
        self.backend.validate().map_err(DriverError::Config)?;
        if self.kernel.kind() != self.ic.kernel_kind() {
            return Err(DriverError::Config(format!(
                "initial condition {} needs the {} kernel, got {}",
                self.ic,
                self.ic.kernel_kind(),
                self.kernel.kind()
            )));
        }
        if let StopCondition::FinalTime(t) = self.stop {
            if !(t.is_finite() && t >= 0.0) {
                return Err(DriverError::Config(format!("final time must be non-negative, got {t}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    /// `dt * (max_sx/dx + max_sy/dy)` for the speeds of this step.
    pub cfl: f64,
    pub max_speed_x: f64,
    pub max_speed_y: f64,
    /// Simulation time after the step.
    pub time: f64,
    pub sweep_ms: f64,
    pub update_ms: f64,
}

/// A running simulation owning its fields and work arrays.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: SimulationConfig,
    state: CellField,
    aux: CellField,
    fluct: FluctuationField,
    time: f64,
    steps_taken: usize,
}

impl Simulation {
    pub fn new(config: SimulationConfig) -> Result<Self, DriverError> {
        config.validate()?;
        let (state, aux, _) = initial_condition(config.ic, &config.spec)?;
        Self::from_fields(config, state, aux)
    }

    /// Starts from caller-supplied interior state and aux.
    pub fn from_fields(config: SimulationConfig, state: CellField, mut aux: CellField) -> Result<Self, DriverError> {
        config.validate()?;
        if state.spec() != &config.spec || aux.spec() != &config.spec {
            return Err(DriverError::Config("fields do not match the configured grid".into()));
        }
        fill_ghost(&mut aux, config.bc_x, config.bc_y)?;
        let fluct = FluctuationField::zeros(&config.spec);
        Ok(Self {
            config,
            state,
            aux,
            fluct,
            time: 0.0,
            steps_taken: 0,
        })
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    pub fn state(&self) -> &CellField {
        &self.state
    }

    pub fn aux(&self) -> &CellField {
        &self.aux
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    pub fn into_state(self) -> CellField {
        self.state
    }

    /// Switches traversal and backend for subsequent steps.
    pub fn set_execution(&mut self, strategy: TraversalStrategy, backend: Backend) -> Result<(), DriverError> {
        strategy.validate().map_err(DriverError::Config)?;
        backend.validate().map_err(DriverError::Config)?;
        self.config.strategy = strategy;
        self.config.backend = backend;
        Ok(())
    }

    pub fn finished(&self) -> bool {
        match self.config.stop {
            StopCondition::Steps(n) => self.steps_taken >= n,
            StopCondition::FinalTime(t) => self.time >= t,
        }
    }

    /// One step: fill ghosts, sweep, pick `dt` from this sweep's speeds,
    /// apply the update.
    pub fn step(&mut self) -> Result<StepReport, DriverError> {
        let cfg = &self.config;
        let remaining = match cfg.stop {
            StopCondition::FinalTime(t) => Some(t - self.time),
            StopCondition::Steps(_) => None,
        };
        fill_ghost(&mut self.state, cfg.bc_x, cfg.bc_y)?;

        let t0 = Instant::now();
        let stats = sweep_kernel_into(&self.state, &self.aux, &cfg.kernel, cfg.strategy, &cfg.backend, &mut self.fluct)?;
        let sweep_ms = t0.elapsed().as_secs_f64() * 1e3;

        let (dx, dy) = (cfg.spec.dx, cfg.spec.dy);
        let dt = choose_dt(stats.max_speed_x, stats.max_speed_y, dx, dy, &cfg.controller, remaining)?;

        let t1 = Instant::now();
        apply_update(&mut self.state, &self.fluct, dt, &cfg.backend)?;
        let update_ms = t1.elapsed().as_secs_f64() * 1e3;

        match remaining {
            // land exactly on the final time
            Some(left) if dt >= left => {
                if let StopCondition::FinalTime(t) = cfg.stop {
                    self.time = t;
                }
            }
            _ => self.time += dt,
        }
        self.steps_taken += 1;
        Ok(StepReport {
            dt,
            cfl: dt * (stats.max_speed_x / dx + stats.max_speed_y / dy),
            max_speed_x: stats.max_speed_x,
            max_speed_y: stats.max_speed_y,
            time: self.time,
            sweep_ms,
            update_ms,
        })
    }

    /// Steps until the stop condition holds.
    pub fn run_to_end(&mut self) -> Result<Vec<StepReport>, DriverError> {
        let mut reports = Vec::new();
        while !self.finished() {
            reports.push(self.step()?);
        }
        Ok(reports)
    }
}

/// Runs `config` from its initial condition to the stop condition.
pub fn run(config: SimulationConfig) -> Result<(CellField, Vec<StepReport>), DriverError> {
    let mut sim = Simulation::new(config)?;
    let reports = sim.run_to_end()?;
    Ok((sim.into_state(), reports))
}
