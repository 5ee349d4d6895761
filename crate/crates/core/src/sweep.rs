//! Interface sweeps and the first-order update.
//!
//! A step is split in two phases: every interface is solved once into a
//! [`FluctuationField`], then each interior cell is updated from its four
//! faces. Parallel units in either phase write disjoint slots and only read
//! shared immutable inputs, so kernels need no synchronization.

use std::marker::PhantomData;
#[cfg(debug_assertions)]
use std::sync::atomic::{AtomicU8, Ordering};

use thiserror::Error;

use crate::backend::{for_each_unit, Accumulator, Backend, BackendError, Range2D};
use crate::grid::{Axis, CellField, FluctuationField, GridSpec};
use crate::riemann::{Direction, Kernel, KernelError, PointwiseSolver};

pub const DEFAULT_TILE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TraversalStrategy {
    /// All x-interfaces row by row, then all y-interfaces row by row.
    RowWise,
    /// One pass solving the x- and y-interface at each position.
    CellWise,
    /// The cell-wise body executed block by block.
    Tiled { tile_w: usize, tile_h: usize },
}

impl TraversalStrategy {
    pub fn tiled(tile_w: usize, tile_h: usize) -> Self {
        TraversalStrategy::Tiled { tile_w, tile_h }
    }

    pub fn validate(&self) -> Result<(), String> {
        match *self {
            TraversalStrategy::Tiled { tile_w, tile_h } if tile_w == 0 || tile_h == 0 => {
                Err(format!("tile must be at least 1x1, got {tile_w}x{tile_h}"))
            }
            _ => Ok(()),
        }
    }
}

impl std::fmt::Display for TraversalStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TraversalStrategy::RowWise => f.write_str("rowwise"),
            TraversalStrategy::CellWise => f.write_str("cellwise"),
            TraversalStrategy::Tiled { tile_w, tile_h } => write!(f, "tiled:{tile_w}x{tile_h}"),
        }
    }
}

impl std::str::FromStr for TraversalStrategy {
    type Err = String;

    /// Accepts `rowwise`, `cellwise`, `tiled` (default tile) or `tiled:WxH`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rowwise" => Ok(TraversalStrategy::RowWise),
            "cellwise" => Ok(TraversalStrategy::CellWise),
            "tiled" => Ok(TraversalStrategy::tiled(DEFAULT_TILE, DEFAULT_TILE)),
            _ => {
                let dims = s
                    .strip_prefix("tiled:")
                    .ok_or_else(|| format!("unknown strategy '{s}' (expected rowwise, cellwise or tiled)"))?;
                let (w, h) = parse_dims(dims)?;
                let t = TraversalStrategy::tiled(w, h);
                t.validate()?;
                Ok(t)
            }
        }
    }
}

/// Parses `WxH`.
pub fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got '{s}'"))?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("bad dimension '{v}' in '{s}': {e}"));
    Ok((parse(w)?, parse(h)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepStats {
    pub max_speed_x: f64,
    pub max_speed_y: f64,
    pub interfaces_solved: usize,
}

impl Accumulator for SweepStats {
    fn identity() -> Self {
        SweepStats {
            max_speed_x: 0.0,
            max_speed_y: 0.0,
            interfaces_solved: 0,
        }
    }

    fn merge(self, other: Self) -> Self {
        SweepStats {
            max_speed_x: self.max_speed_x.max(other.max_speed_x),
            max_speed_y: self.max_speed_y.max(other.max_speed_y),
            interfaces_solved: self.interfaces_solved + other.interfaces_solved,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("kernel failed at {axis}-interface ({i}, {j}): {source}")]
    Kernel {
        axis: Axis,
        i: usize,
        j: usize,
        source: KernelError,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("parallel unit ({}, {}) panicked: {message}", unit.0, unit.1)]
    Panicked { unit: (usize, usize), message: String },
    #[error("time step must be positive and finite, got {0}")]
    BadTimeStep(f64),
}

impl From<BackendError<SweepError>> for SweepError {
    fn from(e: BackendError<SweepError>) -> Self {
        match e {
            BackendError::UnitFailed { cause, .. } => cause,
            BackendError::UnitPanicked { unit, message } => SweepError::Panicked { unit, message },
            BackendError::InvalidConfig(m) | BackendError::PoolBuild(m) => SweepError::Config(m),
        }
    }
}

/// Mutable view of a buffer handed out slot by slot to concurrent units.
///
/// In builds with debug assertions every slot counts its writes so a sweep
/// can assert that each interface was written exactly once.
struct SharedSlots<'a> {
    ptr: *mut f64,
    len: usize,
    stride: usize,
    #[cfg(debug_assertions)]
    writes: Vec<AtomicU8>,
    _buf: PhantomData<&'a mut [f64]>,
}

unsafe impl Send for SharedSlots<'_> {}
unsafe impl Sync for SharedSlots<'_> {}

impl<'a> SharedSlots<'a> {
    fn new(buf: &'a mut [f64], stride: usize) -> Self {
        Self {
            ptr: buf.as_mut_ptr(),
            len: buf.len(),
            stride,
            #[cfg(debug_assertions)]
            writes: (0..buf.len() / stride.max(1)).map(|_| AtomicU8::new(0)).collect(),
            _buf: PhantomData,
        }
    }

    /// # Safety
    /// No other reference to the slot starting at `offset` may be alive.
    /// Units of a sweep own disjoint slots, which upholds this.
    #[inline(always)]
    #[allow(clippy::mut_from_ref)]
    unsafe fn slot(&self, offset: usize) -> &mut [f64] {
        assert!(offset + self.stride <= self.len && offset.is_multiple_of(self.stride));
        #[cfg(debug_assertions)]
        {
            let prev = self.writes[offset / self.stride].fetch_add(1, Ordering::Relaxed);
            assert_eq!(prev, 0, "slot at offset {offset} written twice");
        }
        std::slice::from_raw_parts_mut(self.ptr.add(offset), self.stride)
    }

    #[cfg(debug_assertions)]
    fn assert_complete(&self, what: &str) {
        if let Some(k) = self.writes.iter().position(|w| w.load(Ordering::Relaxed) != 1) {
            panic!("{what} slot {k} written {} times", self.writes[k].load(Ordering::Relaxed));
        }
    }

    #[cfg(not(debug_assertions))]
    fn assert_complete(&self, _what: &str) {}
}

struct SweepCtx<'a, K: ?Sized> {
    state: &'a CellField,
    aux: &'a CellField,
    kernel: &'a K,
    nx: usize,
    ny: usize,
    m: usize,
    x_minus: SharedSlots<'a>,
    x_plus: SharedSlots<'a>,
    y_minus: SharedSlots<'a>,
    y_plus: SharedSlots<'a>,
}

impl<K: PointwiseSolver + ?Sized> SweepCtx<'_, K> {
    #[inline(always)]
    fn aux_cell(&self, i: isize, j: isize) -> &[f64] {
        if self.aux.num_comp() == 0 {
            &[]
        } else {
            self.aux.cell(i, j)
        }
    }

    /// Face between cells `(i-1, j)` and `(i, j)`.
    #[inline(always)]
    fn solve_x(&self, i: usize, j: usize, acc: &mut SweepStats) -> Result<(), SweepError> {
        let (ci, cj) = (i as isize, j as isize);
        let off = (j * (self.nx + 1) + i) * self.m;
        // SAFETY: each x-interface belongs to exactly one unit of the sweep.
        let (amdq, apdq) = unsafe { (self.x_minus.slot(off), self.x_plus.slot(off)) };
        let s = self
            .kernel
            .solve_into(
                Direction::X,
                self.state.cell(ci - 1, cj),
                self.state.cell(ci, cj),
                self.aux_cell(ci - 1, cj),
                self.aux_cell(ci, cj),
                amdq,
                apdq,
            )
            .map_err(|source| SweepError::Kernel { axis: Axis::X, i, j, source })?;
        acc.max_speed_x = acc.max_speed_x.max(s);
        acc.interfaces_solved += 1;
        Ok(())
    }

    /// Face between cells `(i, j-1)` and `(i, j)`.
    #[inline(always)]
    fn solve_y(&self, i: usize, j: usize, acc: &mut SweepStats) -> Result<(), SweepError> {
        let (ci, cj) = (i as isize, j as isize);
        let off = (j * self.nx + i) * self.m;
        // SAFETY: each y-interface belongs to exactly one unit of the sweep.
        let (amdq, apdq) = unsafe { (self.y_minus.slot(off), self.y_plus.slot(off)) };
        let s = self
            .kernel
            .solve_into(
                Direction::Y,
                self.state.cell(ci, cj - 1),
                self.state.cell(ci, cj),
                self.aux_cell(ci, cj - 1),
                self.aux_cell(ci, cj),
                amdq,
                apdq,
            )
            .map_err(|source| SweepError::Kernel { axis: Axis::Y, i, j, source })?;
        acc.max_speed_y = acc.max_speed_y.max(s);
        acc.interfaces_solved += 1;
        Ok(())
    }

    /// Cell-wise body at position `(i, j)` of the `(nx+1) x (ny+1)` space.
    #[inline(always)]
    fn solve_position(&self, i: usize, j: usize, acc: &mut SweepStats) -> Result<(), SweepError> {
        if j < self.ny {
            self.solve_x(i, j, acc)?;
        }
        if i < self.nx {
            self.solve_y(i, j, acc)?;
        }
        Ok(())
    }

    fn run(&self, strategy: TraversalStrategy, backend: &Backend) -> Result<SweepStats, SweepError> {
        let (nx, ny) = (self.nx, self.ny);
        let stats = match strategy {
            TraversalStrategy::RowWise => {
                let x = for_each_unit(Range2D::rows(ny), backend, |_, j, acc: &mut SweepStats| {
                    (0..=nx).try_for_each(|i| self.solve_x(i, j, acc))
                })?;
                let y = for_each_unit(Range2D::rows(ny + 1), backend, |_, j, acc: &mut SweepStats| {
                    (0..nx).try_for_each(|i| self.solve_y(i, j, acc))
                })?;
                x.merge(y)
            }
            TraversalStrategy::CellWise => {
                for_each_unit(Range2D::rows(ny + 1), backend, |_, j, acc: &mut SweepStats| {
                    (0..=nx).try_for_each(|i| self.solve_position(i, j, acc))
                })?
            }
            TraversalStrategy::Tiled { tile_w, tile_h } => {
                let tiles = Range2D::new(0, (nx + 1).div_ceil(tile_w), 0, (ny + 1).div_ceil(tile_h));
                for_each_unit(tiles, backend, |ti, tj, acc: &mut SweepStats| {
                    let (i0, j0) = (ti * tile_w, tj * tile_h);
                    let (i1, j1) = ((i0 + tile_w).min(nx + 1), (j0 + tile_h).min(ny + 1));
                    for j in j0..j1 {
                        for i in i0..i1 {
                            self.solve_position(i, j, acc)?;
                        }
                    }
                    Ok(())
                })?
            }
        };
        self.x_minus.assert_complete("x_minus");
        self.x_plus.assert_complete("x_plus");
        self.y_minus.assert_complete("y_minus");
        self.y_plus.assert_complete("y_plus");
        Ok(stats)
    }
}

fn check_shapes(
    state: &CellField,
    aux: &CellField,
    fluct: &FluctuationField,
    num_eqn: usize,
    num_aux: usize,
) -> Result<(), SweepError> {
    let s = state.spec();
    if state.num_comp() != num_eqn || s.num_eqn != num_eqn {
        return Err(SweepError::Shape(format!(
            "kernel expects {num_eqn} equations, state has {}",
            state.num_comp()
        )));
    }
    if aux.num_comp() != num_aux {
        return Err(SweepError::Shape(format!(
            "kernel expects {num_aux} aux components, aux field has {}",
            aux.num_comp()
        )));
    }
    let a = aux.spec();
    if num_aux > 0 && (a.nx, a.ny, a.num_ghost) != (s.nx, s.ny, s.num_ghost) {
        return Err(SweepError::Shape("aux grid differs from state grid".into()));
    }
    if !fluct.matches(s) {
        return Err(SweepError::Shape("fluctuation field does not match grid".into()));
    }
    Ok(())
}

/// Solves every interface of `state` into `fluct`.
///
/// Ghost cells of `state` (and `aux`) must already be filled. The result
/// is bitwise identical for every strategy and backend.
pub fn sweep_into<K: PointwiseSolver + ?Sized>(
    state: &CellField,
    aux: &CellField,
    kernel: &K,
    strategy: TraversalStrategy,
    backend: &Backend,
    fluct: &mut FluctuationField,
) -> Result<SweepStats, SweepError> {
    strategy.validate().map_err(SweepError::Config)?;
    let d = kernel.descriptor();
    check_shapes(state, aux, fluct, d.num_eqn, d.num_aux)?;
    let spec = *state.spec();
    let m = spec.num_eqn;
    let stats = {
        let ctx = SweepCtx {
            state,
            aux,
            kernel,
            nx: spec.nx,
            ny: spec.ny,
            m,
            x_minus: SharedSlots::new(&mut fluct.x_minus, m),
            x_plus: SharedSlots::new(&mut fluct.x_plus, m),
            y_minus: SharedSlots::new(&mut fluct.y_minus, m),
            y_plus: SharedSlots::new(&mut fluct.y_plus, m),
        };
        ctx.run(strategy, backend)?
    };
    fluct.max_speed_x = stats.max_speed_x;
    fluct.max_speed_y = stats.max_speed_y;
    Ok(stats)
}

/// [`sweep_into`] for a built-in kernel, monomorphized per variant.
pub fn sweep_kernel_into(
    state: &CellField,
    aux: &CellField,
    kernel: &Kernel,
    strategy: TraversalStrategy,
    backend: &Backend,
    fluct: &mut FluctuationField,
) -> Result<SweepStats, SweepError> {
    match kernel {
        Kernel::Advection(k) => sweep_into(state, aux, k, strategy, backend, fluct),
        Kernel::AcousticsConst(k) => sweep_into(state, aux, k, strategy, backend, fluct),
        Kernel::AcousticsVar(k) => sweep_into(state, aux, k, strategy, backend, fluct),
        Kernel::Euler(k) => sweep_into(state, aux, k, strategy, backend, fluct),
    }
}

/// Allocating form of [`sweep_kernel_into`].
pub fn sweep(
    state: &CellField,
    aux: &CellField,
    kernel: &Kernel,
    strategy: TraversalStrategy,
    backend: &Backend,
) -> Result<(FluctuationField, SweepStats), SweepError> {
    let mut fluct = FluctuationField::zeros(state.spec());
    let stats = sweep_kernel_into(state, aux, kernel, strategy, backend, &mut fluct)?;
    Ok((fluct, stats))
}

/// First-order update of every interior cell:
///
/// `q -= dt/dx (apdq_x(i,j) + amdq_x(i+1,j)) + dt/dy (apdq_y(i,j) + amdq_y(i,j+1))`
///
/// with the four terms combined in exactly that order.
pub fn apply_update(
    state: &mut CellField,
    fluct: &FluctuationField,
    dt: f64,
    backend: &Backend,
) -> Result<(), SweepError> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(SweepError::BadTimeStep(dt));
    }
    let spec: GridSpec = *state.spec();
    if !fluct.matches(&spec) || state.num_comp() != spec.num_eqn {
        return Err(SweepError::Shape("fluctuation field does not match state".into()));
    }
    let (nx, m) = (spec.nx, spec.num_eqn);
    let dtdx = dt / spec.dx;
    let dtdy = dt / spec.dy;
    let offsets: Vec<usize> = (0..spec.ny).map(|j| state.offset(0, j as isize)).collect();
    let cells = SharedSlots::new(state.data_mut(), m);
    let (xm, xp, ym, yp) = (&fluct.x_minus, &fluct.x_plus, &fluct.y_minus, &fluct.y_plus);
    for_each_unit(Range2D::rows(spec.ny), backend, |_, j, _: &mut ()| {
        let row = offsets[j];
        for i in 0..nx {
            // SAFETY: row j is owned by this unit; cells within it are distinct.
            let q = unsafe { cells.slot(row + i * m) };
            let xl = (j * (nx + 1) + i) * m;
            let xr = xl + m;
            let yb = (j * nx + i) * m;
            let yt = yb + nx * m;
            for c in 0..m {
                q[c] = q[c] - dtdx * (xp[xl + c] + xm[xr + c]) - dtdy * (yp[yb + c] + ym[yt + c]);
            }
        }
        Ok::<(), SweepError>(())
    })?;
    Ok(())
}
