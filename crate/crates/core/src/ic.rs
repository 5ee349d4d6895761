//! Built-in initial conditions on the unit square.

use crate::grid::{AuxField, BoundaryCondition, CellField, GridError, GridSpec, StateField};
use crate::riemann::{
    AcousticsConst, AcousticsParams, AcousticsVar, Advection, Euler, EulerParams, Kernel, KernelKind,
};

/// Width of the advected Gaussian, as a fraction of the domain.
pub const ADVECTION_SIGMA: f64 = 0.15;
/// Width of the acoustic pressure pulses.
pub const PULSE_SIGMA: f64 = 0.05;

pub const SOD_LEFT: [f64; 4] = [1.0, 0.0, 0.0, 2.5];
pub const SOD_RIGHT: [f64; 4] = [0.125, 0.0, 0.0, 0.25];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InitialCondition {
    /// Gaussian bump advected diagonally with `u = v = 1`.
    AdvectionGaussian,
    /// Pressure Gaussian at rest, `rho = K = 1`.
    AcousticsPulse,
    /// Pressure pulse in `(rho, c) = (1, 1)` left of `x = 1/2`, `(1, 3)` right of it.
    AcousticsVarInterface,
    /// Sod shock tube split at the vertical midline, `gamma = 1.4`.
    EulerSodX,
    /// Constant gas at rest, `rho = p = 1`.
    EulerUniform,
}

impl InitialCondition {
    pub const ALL: [InitialCondition; 5] = [
        InitialCondition::AdvectionGaussian,
        InitialCondition::AcousticsPulse,
        InitialCondition::AcousticsVarInterface,
        InitialCondition::EulerSodX,
        InitialCondition::EulerUniform,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            InitialCondition::AdvectionGaussian => "advection-gaussian",
            InitialCondition::AcousticsPulse => "acoustics-pulse",
            InitialCondition::AcousticsVarInterface => "acoustics-var-interface",
            InitialCondition::EulerSodX => "euler-sod-x",
            InitialCondition::EulerUniform => "euler-uniform",
        }
    }

    pub fn kernel_kind(&self) -> KernelKind {
        match self {
            InitialCondition::AdvectionGaussian => KernelKind::Advection,
            InitialCondition::AcousticsPulse => KernelKind::AcousticsConst,
            InitialCondition::AcousticsVarInterface => KernelKind::AcousticsVar,
            InitialCondition::EulerSodX | InitialCondition::EulerUniform => KernelKind::Euler,
        }
    }

    /// The condition used for a kernel when none is requested.
    pub fn default_for(kind: KernelKind) -> Self {
        match kind {
            KernelKind::Advection => InitialCondition::AdvectionGaussian,
            KernelKind::AcousticsConst => InitialCondition::AcousticsPulse,
            KernelKind::AcousticsVar => InitialCondition::AcousticsVarInterface,
            KernelKind::Euler => InitialCondition::EulerSodX,
        }
    }

    /// `(bc_x, bc_y)`; the shock tube extrapolates at its open ends.
    pub fn default_boundaries(&self) -> (BoundaryCondition, BoundaryCondition) {
        match self {
            InitialCondition::EulerSodX => (BoundaryCondition::Extrapolate, BoundaryCondition::Periodic),
            _ => (BoundaryCondition::Periodic, BoundaryCondition::Periodic),
        }
    }

    pub fn kernel(&self) -> Kernel {
        match self {
            InitialCondition::AdvectionGaussian => Kernel::Advection(Advection { u: 1.0, v: 1.0 }),
            InitialCondition::AcousticsPulse => Kernel::AcousticsConst(AcousticsConst {
                params: AcousticsParams::new(1.0, 1.0).expect("unit acoustics parameters are valid"),
            }),
            InitialCondition::AcousticsVarInterface => Kernel::AcousticsVar(AcousticsVar),
            InitialCondition::EulerSodX | InitialCondition::EulerUniform => Kernel::Euler(Euler {
                params: EulerParams::default(),
            }),
        }
    }

    /// Unit-square grid sized for this condition's kernel.
    pub fn grid(&self, nx: usize, ny: usize) -> Result<GridSpec, GridError> {
        let d = self.kernel_kind().descriptor();
        GridSpec::unit_square(nx, ny, d.num_eqn, d.num_aux)
    }
}

impl std::fmt::Display for InitialCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for InitialCondition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        InitialCondition::ALL
            .into_iter()
            .find(|ic| ic.name() == s)
            .ok_or_else(|| format!("unknown initial condition '{s}'"))
    }
}

/// Gaussian bump centered in the domain described by `spec`.
pub fn gaussian_profile(spec: &GridSpec) -> impl Fn(f64, f64) -> f64 {
    let (w, h) = (spec.width(), spec.height());
    let sigma = ADVECTION_SIGMA * w.min(h);
    move |x, y| {
        let r2 = (x - 0.5 * w).powi(2) + (y - 0.5 * h).powi(2);
        (-r2 / (2.0 * sigma * sigma)).exp()
    }
}

fn pulse(x: f64, y: f64, xc: f64, yc: f64) -> f64 {
    let r2 = (x - xc).powi(2) + (y - yc).powi(2);
    (-r2 / (2.0 * PULSE_SIGMA * PULSE_SIGMA)).exp()
}

/// Interior state and aux for `ic` plus the kernel with its parameters.
/// Ghost cells are left zero.
pub fn initial_condition(
    ic: InitialCondition,
    spec: &GridSpec,
) -> Result<(StateField, AuxField, Kernel), GridError> {
    spec.validate()?;
    let d = ic.kernel_kind().descriptor();
    if spec.num_eqn != d.num_eqn || spec.num_aux != d.num_aux {
        return Err(GridError::ComponentMismatch {
            expected: (d.num_eqn, d.num_aux),
            found: (spec.num_eqn, spec.num_aux),
        });
    }
    let mut state = CellField::zeros(*spec, spec.num_eqn);
    let mut aux = CellField::zeros(*spec, spec.num_aux);
    let (w, h) = (spec.width(), spec.height());
    match ic {
        InitialCondition::AdvectionGaussian => {
            let profile = gaussian_profile(spec);
            state.fill_interior_with(|x, y, q| q[0] = profile(x, y));
        }
        InitialCondition::AcousticsPulse => {
            state.fill_interior_with(|x, y, q| q.copy_from_slice(&[pulse(x, y, 0.5 * w, 0.5 * h), 0.0, 0.0]));
        }
        InitialCondition::AcousticsVarInterface => {
            state.fill_interior_with(|x, y, q| q.copy_from_slice(&[pulse(x, y, 0.25 * w, 0.5 * h), 0.0, 0.0]));
            aux.fill_interior_with(|x, _, a| {
                let c = if x < 0.5 * w { 1.0 } else { 3.0 };
                a.copy_from_slice(&[1.0, c]);
            });
        }
        InitialCondition::EulerSodX => {
            state.fill_interior_with(|x, _, q| q.copy_from_slice(if x < 0.5 * w { &SOD_LEFT } else { &SOD_RIGHT }));
        }
        InitialCondition::EulerUniform => state.fill_interior(&[1.0, 0.0, 0.0, 2.5]),
    }
    Ok((state, aux, ic.kernel()))
}
