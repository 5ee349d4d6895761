//! Structured-grid data model: cell-centered fields with a ghost frame,
//! interface-indexed fluctuation storage and boundary fills.
//!
//! Cell storage is component-interleaved: all components of one cell are
//! contiguous, then `i` varies, then `j`. Cell indices are signed so ghost
//! cells can be addressed directly as `-num_ghost..nx + num_ghost`.

use thiserror::Error;

/// Default ghost depth. First-order sweeps only read one layer.
pub const DEFAULT_NUM_GHOST: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid must have at least one cell in each direction (got {nx}x{ny})")]
    EmptyGrid { nx: usize, ny: usize },
    #[error("cell widths must be positive and finite (got dx={dx}, dy={dy})")]
    BadCellWidth { dx: f64, dy: f64 },
    #[error("num_ghost must be at least 1")]
    NoGhostCells,
    #[error("num_eqn must be at least 1")]
    NoEquations,
    #[error("expected (num_eqn, num_aux) = {expected:?}, grid has {found:?}")]
    ComponentMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("periodic boundary on {axis} axis needs at least {num_ghost} interior cells, got {cells}")]
    PeriodicTooNarrow {
        axis: Axis,
        cells: usize,
        num_ghost: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Axis::X => f.write_str("x"),
            Axis::Y => f.write_str("y"),
        }
    }
}

/// Shape of a structured grid and the fields living on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub num_ghost: usize,
    pub num_eqn: usize,
    pub num_aux: usize,
}

impl GridSpec {
    pub fn new(
        nx: usize,
        ny: usize,
        dx: f64,
        dy: f64,
        num_ghost: usize,
        num_eqn: usize,
        num_aux: usize,
    ) -> Result<Self, GridError> {
        let spec = Self {
            nx,
            ny,
            dx,
            dy,
            num_ghost,
            num_eqn,
            num_aux,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Grid covering the unit square with the default ghost depth.
    pub fn unit_square(
        nx: usize,
        ny: usize,
        num_eqn: usize,
        num_aux: usize,
    ) -> Result<Self, GridError> {
        if nx == 0 || ny == 0 {
            return Err(GridError::EmptyGrid { nx, ny });
        }
        Self::new(
            nx,
            ny,
            1.0 / nx as f64,
            1.0 / ny as f64,
            DEFAULT_NUM_GHOST,
            num_eqn,
            num_aux,
        )
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if self.nx == 0 || self.ny == 0 {
            return Err(GridError::EmptyGrid {
                nx: self.nx,
                ny: self.ny,
            });
        }
        let width_ok = |w: f64| w.is_finite() && w > 0.0;
        if !width_ok(self.dx) || !width_ok(self.dy) {
            return Err(GridError::BadCellWidth {
                dx: self.dx,
                dy: self.dy,
            });
        }
        if self.num_ghost == 0 {
            return Err(GridError::NoGhostCells);
        }
        if self.num_eqn == 0 {
            return Err(GridError::NoEquations);
        }
        Ok(())
    }

    /// Cells per row including both ghost columns.
    pub fn padded_nx(&self) -> usize {
        self.nx + 2 * self.num_ghost
    }

    pub fn padded_ny(&self) -> usize {
        self.ny + 2 * self.num_ghost
    }

    /// Storage length of a field with `num_comp` components per cell.
    pub fn field_len(&self, num_comp: usize) -> usize {
        num_comp * self.padded_nx() * self.padded_ny()
    }

    pub fn width(&self) -> f64 {
        self.nx as f64 * self.dx
    }

    pub fn height(&self) -> f64 {
        self.ny as f64 * self.dy
    }

    /// Center of interior cell `(i, j)` with the domain origin at `(0, 0)`.
    pub fn cell_center(&self, i: isize, j: isize) -> (f64, f64) {
        (
            (i as f64 + 0.5) * self.dx,
            (j as f64 + 0.5) * self.dy,
        )
    }

    /// Number of x- plus y-interfaces touched by a full sweep.
    pub fn num_interfaces(&self) -> usize {
        (self.nx + 1) * self.ny + self.nx * (self.ny + 1)
    }
}

/// Cell-centered array with a ghost frame. Used both for conserved state
/// (`num_comp = num_eqn`) and for auxiliary coefficients (`num_comp = num_aux`).
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    spec: GridSpec,
    num_comp: usize,
    data: Vec<f64>,
}

/// Conserved quantities, `num_eqn` per cell.
pub type StateField = CellField;
/// Material coefficients, `num_aux` per cell. May have zero components.
pub type AuxField = CellField;

impl CellField {
    pub fn zeros(spec: GridSpec, num_comp: usize) -> Self {
        Self {
            spec,
            num_comp,
            data: vec![0.0; spec.field_len(num_comp)],
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn num_comp(&self) -> usize {
        self.num_comp
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    fn in_range(&self, i: isize, j: isize) -> bool {
        let g = self.spec.num_ghost as isize;
        (-g..self.spec.nx as isize + g).contains(&i) && (-g..self.spec.ny as isize + g).contains(&j)
    }

    /// Offset of component 0 of cell `(i, j)`.
    #[inline(always)]
    pub fn offset(&self, i: isize, j: isize) -> usize {
        debug_assert!(
            self.in_range(i, j),
            "cell ({i}, {j}) outside {}x{} grid with {} ghost layers",
            self.spec.nx,
            self.spec.ny,
            self.spec.num_ghost
        );
        let g = self.spec.num_ghost as isize;
        (((j + g) as usize) * self.spec.padded_nx() + (i + g) as usize) * self.num_comp
    }

    #[inline(always)]
    pub fn cell(&self, i: isize, j: isize) -> &[f64] {
        let o = self.offset(i, j);
        &self.data[o..o + self.num_comp]
    }

    #[inline(always)]
    pub fn cell_mut(&mut self, i: isize, j: isize) -> &mut [f64] {
        let o = self.offset(i, j);
        let n = self.num_comp;
        &mut self.data[o..o + n]
    }

    /// Bounds-checked access in every build profile.
    pub fn get(&self, m: usize, i: isize, j: isize) -> Option<f64> {
        (m < self.num_comp && self.in_range(i, j)).then(|| self.data[self.offset(i, j) + m])
    }

    /// Writes `value` into every interior cell.
    pub fn fill_interior(&mut self, value: &[f64]) {
        assert_eq!(value.len(), self.num_comp);
        for j in 0..self.spec.ny as isize {
            for i in 0..self.spec.nx as isize {
                self.cell_mut(i, j).copy_from_slice(value);
            }
        }
    }

    /// Sets every interior cell from a function of its center.
    pub fn fill_interior_with(&mut self, mut f: impl FnMut(f64, f64, &mut [f64])) {
        for j in 0..self.spec.ny as isize {
            for i in 0..self.spec.nx as isize {
                let (x, y) = self.spec.cell_center(i, j);
                f(x, y, self.cell_mut(i, j));
            }
        }
    }

    pub fn interior_cells(&self) -> impl Iterator<Item = (isize, isize)> + '_ {
        let (nx, ny) = (self.spec.nx as isize, self.spec.ny as isize);
        (0..ny).flat_map(move |j| (0..nx).map(move |i| (i, j)))
    }

    /// Interior sum of component `m` (not area weighted).
    pub fn interior_sum(&self, m: usize) -> f64 {
        self.interior_cells().map(|(i, j)| self.cell(i, j)[m]).sum()
    }

    /// Bitwise interior comparison; ghost cells are ignored.
    pub fn interior_bits_eq(&self, other: &CellField) -> bool {
        self.spec == other.spec
            && self.num_comp == other.num_comp
            && self.interior_cells().all(|(i, j)| {
                self.cell(i, j)
                    .iter()
                    .zip(other.cell(i, j))
                    .all(|(a, b)| a.to_bits() == b.to_bits())
            })
    }

    /// Bitwise comparison of the whole array, ghost frame included.
    pub fn bits_eq(&self, other: &CellField) -> bool {
        self.spec == other.spec
            && self.data.len() == other.data.len()
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Per-interface left- and right-going fluctuations from one sweep.
///
/// x-interface `(i, j)`, `i in 0..=nx`, `j in 0..ny`, is the face between
/// cells `(i-1, j)` and `(i, j)`; y-interface `(i, j)`, `i in 0..nx`,
/// `j in 0..=ny`, lies between `(i, j-1)` and `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationField {
    nx: usize,
    ny: usize,
    num_eqn: usize,
    pub x_minus: Vec<f64>,
    pub x_plus: Vec<f64>,
    pub y_minus: Vec<f64>,
    pub y_plus: Vec<f64>,
    pub max_speed_x: f64,
    pub max_speed_y: f64,
}

impl FluctuationField {
    pub fn zeros(spec: &GridSpec) -> Self {
        let m = spec.num_eqn;
        let nxi = (spec.nx + 1) * spec.ny * m;
        let nyi = spec.nx * (spec.ny + 1) * m;
        Self {
            nx: spec.nx,
            ny: spec.ny,
            num_eqn: m,
            x_minus: vec![0.0; nxi],
            x_plus: vec![0.0; nxi],
            y_minus: vec![0.0; nyi],
            y_plus: vec![0.0; nyi],
            max_speed_x: 0.0,
            max_speed_y: 0.0,
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn num_eqn(&self) -> usize {
        self.num_eqn
    }

    pub fn matches(&self, spec: &GridSpec) -> bool {
        self.nx == spec.nx && self.ny == spec.ny && self.num_eqn == spec.num_eqn
    }

    #[inline(always)]
    pub fn x_offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= self.nx && j < self.ny, "x-interface ({i}, {j}) out of range");
        (j * (self.nx + 1) + i) * self.num_eqn
    }

    #[inline(always)]
    pub fn y_offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j <= self.ny, "y-interface ({i}, {j}) out of range");
        (j * self.nx + i) * self.num_eqn
    }

    pub fn amdq_x(&self, i: usize, j: usize) -> &[f64] {
        let o = self.x_offset(i, j);
        &self.x_minus[o..o + self.num_eqn]
    }

    pub fn apdq_x(&self, i: usize, j: usize) -> &[f64] {
        let o = self.x_offset(i, j);
        &self.x_plus[o..o + self.num_eqn]
    }

    pub fn amdq_y(&self, i: usize, j: usize) -> &[f64] {
        let o = self.y_offset(i, j);
        &self.y_minus[o..o + self.num_eqn]
    }

    pub fn apdq_y(&self, i: usize, j: usize) -> &[f64] {
        let o = self.y_offset(i, j);
        &self.y_plus[o..o + self.num_eqn]
    }

    pub fn bits_eq(&self, other: &FluctuationField) -> bool {
        let same = |a: &[f64], b: &[f64]| {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
        };
        self.nx == other.nx
            && self.ny == other.ny
            && self.num_eqn == other.num_eqn
            && same(&self.x_minus, &other.x_minus)
            && same(&self.x_plus, &other.x_plus)
            && same(&self.y_minus, &other.y_minus)
            && same(&self.y_plus, &other.y_plus)
            && self.max_speed_x.to_bits() == other.max_speed_x.to_bits()
            && self.max_speed_y.to_bits() == other.max_speed_y.to_bits()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    Periodic,
    /// Zero-order extrapolation: ghosts copy the nearest interior cell.
    Extrapolate,
}

impl std::str::FromStr for BoundaryCondition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "periodic" => Ok(Self::Periodic),
            "extrapolate" => Ok(Self::Extrapolate),
            other => Err(format!("unknown boundary condition '{other}'")),
        }
    }
}

/// Zeroed state, aux and fluctuation storage for `spec`.
pub fn allocate_fields(
    spec: &GridSpec,
) -> Result<(StateField, AuxField, FluctuationField), GridError> {
    spec.validate()?;
    Ok((
        CellField::zeros(*spec, spec.num_eqn),
        CellField::zeros(*spec, spec.num_aux),
        FluctuationField::zeros(spec),
    ))
}

/// Fills the ghost frame from the interior: an x pass over interior rows,
/// then a y pass over full padded columns (which also fills the corners).
pub fn fill_ghost(
    field: &mut CellField,
    bc_x: BoundaryCondition,
    bc_y: BoundaryCondition,
) -> Result<(), GridError> {
    let spec = field.spec;
    let (nx, ny, g) = (spec.nx as isize, spec.ny as isize, spec.num_ghost as isize);
    if bc_x == BoundaryCondition::Periodic && spec.nx < spec.num_ghost {
        return Err(GridError::PeriodicTooNarrow {
            axis: Axis::X,
            cells: spec.nx,
            num_ghost: spec.num_ghost,
        });
    }
    if bc_y == BoundaryCondition::Periodic && spec.ny < spec.num_ghost {
        return Err(GridError::PeriodicTooNarrow {
            axis: Axis::Y,
            cells: spec.ny,
            num_ghost: spec.num_ghost,
        });
    }
    let m = field.num_comp;
    if m == 0 {
        return Ok(());
    }

    let source_x = |k: isize| -> (isize, isize) {
        // (low ghost source, high ghost source) for ghost layer k >= 1
        match bc_x {
            BoundaryCondition::Periodic => (nx - k, k - 1),
            BoundaryCondition::Extrapolate => (0, nx - 1),
        }
    };
    for j in 0..ny {
        for k in 1..=g {
            let (lo, hi) = source_x(k);
            let src = field.offset(lo, j);
            let dst = field.offset(-k, j);
            field.data.copy_within(src..src + m, dst);
            let src = field.offset(hi, j);
            let dst = field.offset(nx - 1 + k, j);
            field.data.copy_within(src..src + m, dst);
        }
    }

    // Rows are contiguous over the padded width, so the y pass copies whole rows.
    let row = spec.padded_nx() * m;
    for k in 1..=g {
        let (lo, hi) = match bc_y {
            BoundaryCondition::Periodic => (ny - k, k - 1),
            BoundaryCondition::Extrapolate => (0, ny - 1),
        };
        let src = field.offset(-g, lo);
        let dst = field.offset(-g, -k);
        field.data.copy_within(src..src + row, dst);
        let src = field.offset(-g, hi);
        let dst = field.offset(-g, ny - 1 + k);
        field.data.copy_within(src..src + row, dst);
    }
    Ok(())
}
