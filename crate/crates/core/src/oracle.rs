//! Independent reference computations: exact solutions, analytic
//! coefficient matrices, an exact 1D Euler Riemann solver and error norms.
//!
//! Nothing here calls into the Riemann kernels, so every check built on
//! these functions compares two separate routes to the same number.

use thiserror::Error;

use crate::grid::{CellField, GridSpec};
use crate::riemann::{AcousticsParams, Direction};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("inadmissible state: density={density}, pressure={pressure}")]
    Inadmissible { density: f64, pressure: f64 },
    #[error("initial data generate a vacuum")]
    Vacuum,
    #[error("pressure iteration did not converge")]
    NoConvergence,
    #[error("singular interface matrix")]
    Singular,
    #[error("fields have different shapes")]
    ShapeMismatch,
}

/// Samples `profile` translated by `(u t, v t)` at cell centers, wrapping
/// periodically over the domain.
pub fn exact_advection(
    profile: impl Fn(f64, f64) -> f64,
    u: f64,
    v: f64,
    t: f64,
    spec: &GridSpec,
) -> CellField {
    let (w, h) = (spec.width(), spec.height());
    let mut out = CellField::zeros(*spec, 1);
    out.fill_interior_with(|x, y, q| {
        let x0 = (x - u * t).rem_euclid(w);
        let y0 = (y - v * t).rem_euclid(h);
        q[0] = profile(x0, y0);
    });
    out
}

/// Acoustics interface whose coefficient matrix is applied to a jump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinearInterface {
    Constant(AcousticsParams),
    /// `(density, sound speed)` on each side.
    Variable { left: (f64, f64), right: (f64, f64) },
}

type Mat3 = [[f64; 3]; 3];

fn mat_vec(a: &Mat3, x: &[f64; 3]) -> [f64; 3] {
    let mut y = [0.0; 3];
    for r in 0..3 {
        y[r] = a[r][0] * x[0] + a[r][1] * x[1] + a[r][2] * x[2];
    }
    y
}

/// Gaussian elimination with partial pivoting.
fn solve3(mut a: Mat3, mut b: [f64; 3]) -> Result<[f64; 3], OracleError> {
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))
            .expect("non-empty range");
        if a[piv][col] == 0.0 {
            return Err(OracleError::Singular);
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..3 {
            let f = a[r][col] / a[col][col];
            let pivot_row = a[col];
            for (x, p) in a[r][col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= f * p;
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for r in (0..3).rev() {
        let tail: f64 = (r + 1..3).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - tail) / a[r][r];
    }
    Ok(x)
}

/// Applies the interface coefficient matrix to `jump`.
///
/// For a constant medium this is the flux Jacobian of linear acoustics,
/// `[[0, K, 0], [1/rho, 0, 0], [0, 0, 0]]` in x. Across a material
/// interface it is `R diag(-cl, +cr, 0) R^-1` with `R` the columns
/// `(-Zl, 1, 0)`, `(Zr, 1, 0)` and the transverse unit vector, solved
/// numerically rather than through the closed-form wave strengths.
pub fn linear_matrix_apply(iface: &LinearInterface, jump: &[f64; 3], dir: Direction) -> Result<[f64; 3], OracleError> {
    let (n, t) = match dir {
        Direction::X => (1, 2),
        Direction::Y => (2, 1),
    };
    match *iface {
        LinearInterface::Constant(p) => {
            let mut a = [[0.0; 3]; 3];
            a[0][n] = p.bulk_modulus();
            a[n][0] = 1.0 / p.density();
            Ok(mat_vec(&a, jump))
        }
        LinearInterface::Variable {
            left: (rl, cl),
            right: (rr, cr),
        } => {
            let (zl, zr) = (rl * cl, rr * cr);
            let mut r = [[0.0; 3]; 3];
            r[0][0] = -zl;
            r[n][0] = 1.0;
            r[0][1] = zr;
            r[n][1] = 1.0;
            r[t][2] = 1.0;
            let alpha = solve3(r, *jump)?;
            let scaled = [-cl * alpha[0], cr * alpha[1], 0.0];
            Ok(mat_vec(&r, &scaled))
        }
    }
}

/// 1D primitive gas state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive1d {
    pub density: f64,
    pub velocity: f64,
    pub pressure: f64,
}

impl Primitive1d {
    pub fn from_conserved(q: &[f64; 3], gamma: f64) -> Self {
        let velocity = q[1] / q[0];
        Self {
            density: q[0],
            velocity,
            pressure: (gamma - 1.0) * (q[2] - 0.5 * q[0] * velocity * velocity),
        }
    }

    pub fn to_conserved(&self, gamma: f64) -> [f64; 3] {
        [
            self.density,
            self.density * self.velocity,
            self.pressure / (gamma - 1.0) + 0.5 * self.density * self.velocity * self.velocity,
        ]
    }

    fn sound_speed(&self, gamma: f64) -> f64 {
        (gamma * self.pressure / self.density).sqrt()
    }
}

/// Exact similarity solution of the 1D Euler Riemann problem.
#[derive(Debug, Clone, Copy)]
pub struct ExactRiemann {
    left: Primitive1d,
    right: Primitive1d,
    gamma: f64,
    p_star: f64,
    u_star: f64,
}

impl ExactRiemann {
    pub fn new(left: Primitive1d, right: Primitive1d, gamma: f64) -> Result<Self, OracleError> {
        for s in [left, right] {
            if !(s.density > 0.0 && s.pressure > 0.0) {
                return Err(OracleError::Inadmissible {
                    density: s.density,
                    pressure: s.pressure,
                });
            }
        }
        let (cl, cr) = (left.sound_speed(gamma), right.sound_speed(gamma));
        let du = right.velocity - left.velocity;
        if 2.0 * (cl + cr) / (gamma - 1.0) <= du {
            return Err(OracleError::Vacuum);
        }
        let mut solver = Self {
            left,
            right,
            gamma,
            p_star: 0.0,
            u_star: 0.0,
        };
        let p = solver.solve_pressure()?;
        let (fl, _) = solver.wave_function(p, &left);
        let (fr, _) = solver.wave_function(p, &right);
        solver.p_star = p;
        solver.u_star = 0.5 * (left.velocity + right.velocity) + 0.5 * (fr - fl);
        Ok(solver)
    }

    pub fn star_pressure(&self) -> f64 {
        self.p_star
    }

    pub fn star_velocity(&self) -> f64 {
        self.u_star
    }

    /// Shock (Rankine-Hugoniot) or rarefaction (isentropic) branch of the
    /// pressure function, with its derivative.
    fn wave_function(&self, p: f64, s: &Primitive1d) -> (f64, f64) {
        let g = self.gamma;
        if p > s.pressure {
            let a = 2.0 / ((g + 1.0) * s.density);
            let b = (g - 1.0) / (g + 1.0) * s.pressure;
            let root = (a / (p + b)).sqrt();
            let f = (p - s.pressure) * root;
            (f, root * (1.0 - 0.5 * (p - s.pressure) / (p + b)))
        } else {
            let c = s.sound_speed(g);
            let ratio = p / s.pressure;
            let f = 2.0 * c / (g - 1.0) * (ratio.powf((g - 1.0) / (2.0 * g)) - 1.0);
            (f, ratio.powf(-(g + 1.0) / (2.0 * g)) / (s.density * c))
        }
    }

    fn pressure_function(&self, p: f64) -> (f64, f64) {
        let (fl, dl) = self.wave_function(p, &self.left);
        let (fr, dr) = self.wave_function(p, &self.right);
        (fl + fr + self.right.velocity - self.left.velocity, dl + dr)
    }

    /// Newton iteration kept inside a shrinking bracket; stops once the
    /// update is below `1e-12` (relative above unit pressure).
    fn solve_pressure(&self) -> Result<f64, OracleError> {
        let mut lo = 0.0;
        let mut hi = self.left.pressure.max(self.right.pressure);
        while self.pressure_function(hi).0 < 0.0 {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(OracleError::NoConvergence);
            }
        }
        let mut p = 0.5 * (lo + hi);
        for _ in 0..200 {
            let (f, df) = self.pressure_function(p);
            if f == 0.0 {
                return Ok(p);
            }
            if f < 0.0 {
                lo = p;
            } else {
                hi = p;
            }
            let newton = p - f / df;
            let next = if newton >= lo && newton <= hi { newton } else { 0.5 * (lo + hi) };
            if (next - p).abs() <= 1e-12 * p.max(1.0) {
                return Ok(next);
            }
            p = next;
        }
        Err(OracleError::NoConvergence)
    }

    /// State at similarity coordinate `xi = x / t`.
    pub fn sample(&self, xi: f64) -> Primitive1d {
        let g = self.gamma;
        let (ps, us) = (self.p_star, self.u_star);
        let gm = (g - 1.0) / (g + 1.0);
        if xi <= us {
            let s = self.left;
            let c = s.sound_speed(g);
            if ps > s.pressure {
                let shock = s.velocity - c * ((g + 1.0) / (2.0 * g) * ps / s.pressure + (g - 1.0) / (2.0 * g)).sqrt();
                if xi <= shock {
                    s
                } else {
                    let ratio = ps / s.pressure;
                    Primitive1d {
                        density: s.density * (ratio + gm) / (gm * ratio + 1.0),
                        velocity: us,
                        pressure: ps,
                    }
                }
            } else {
                let c_star = c * (ps / s.pressure).powf((g - 1.0) / (2.0 * g));
                let head = s.velocity - c;
                let tail = us - c_star;
                if xi <= head {
                    s
                } else if xi >= tail {
                    Primitive1d {
                        density: s.density * (ps / s.pressure).powf(1.0 / g),
                        velocity: us,
                        pressure: ps,
                    }
                } else {
                    let base = 2.0 / (g + 1.0) + gm / c * (s.velocity - xi);
                    Primitive1d {
                        density: s.density * base.powf(2.0 / (g - 1.0)),
                        velocity: 2.0 / (g + 1.0) * (c + (g - 1.0) / 2.0 * s.velocity + xi),
                        pressure: s.pressure * base.powf(2.0 * g / (g - 1.0)),
                    }
                }
            }
        } else {
            let s = self.right;
            let c = s.sound_speed(g);
            if ps > s.pressure {
                let shock = s.velocity + c * ((g + 1.0) / (2.0 * g) * ps / s.pressure + (g - 1.0) / (2.0 * g)).sqrt();
                if xi >= shock {
                    s
                } else {
                    let ratio = ps / s.pressure;
                    Primitive1d {
                        density: s.density * (ratio + gm) / (gm * ratio + 1.0),
                        velocity: us,
                        pressure: ps,
                    }
                }
            } else {
                let c_star = c * (ps / s.pressure).powf((g - 1.0) / (2.0 * g));
                let head = s.velocity + c;
                let tail = us + c_star;
                if xi >= head {
                    s
                } else if xi <= tail {
                    Primitive1d {
                        density: s.density * (ps / s.pressure).powf(1.0 / g),
                        velocity: us,
                        pressure: ps,
                    }
                } else {
                    let base = 2.0 / (g + 1.0) - gm / c * (s.velocity - xi);
                    Primitive1d {
                        density: s.density * base.powf(2.0 / (g - 1.0)),
                        velocity: 2.0 / (g + 1.0) * (-c + (g - 1.0) / 2.0 * s.velocity + xi),
                        pressure: s.pressure * base.powf(2.0 * g / (g - 1.0)),
                    }
                }
            }
        }
    }
}

/// Exact solution for conserved 1D states `(rho, rho u, E)` at `x / t`.
pub fn exact_riemann_euler_1d(
    ql: &[f64; 3],
    qr: &[f64; 3],
    gamma: f64,
    x_over_t: f64,
) -> Result<[f64; 3], OracleError> {
    let solver = ExactRiemann::new(
        Primitive1d::from_conserved(ql, gamma),
        Primitive1d::from_conserved(qr, gamma),
        gamma,
    )?;
    Ok(solver.sample(x_over_t).to_conserved(gamma))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

/// Area-weighted norms of component `m` of `numeric - reference` over the
/// interior.
pub fn error_norms(numeric: &CellField, reference: &CellField, m: usize) -> Result<ErrorNorms, OracleError> {
    let spec = numeric.spec();
    if spec != reference.spec() || m >= numeric.num_comp() || m >= reference.num_comp() {
        return Err(OracleError::ShapeMismatch);
    }
    let area = spec.dx * spec.dy;
    let (mut l1, mut l2, mut linf) = (0.0, 0.0, 0.0f64);
    for (i, j) in numeric.interior_cells() {
        let e = (numeric.cell(i, j)[m] - reference.cell(i, j)[m]).abs();
        l1 += e * area;
        l2 += e * e * area;
        linf = linf.max(e);
    }
    Ok(ErrorNorms {
        l1,
        l2: l2.sqrt(),
        linf,
    })
}
