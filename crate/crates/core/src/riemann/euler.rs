//! 2D Euler equations, `q = (rho, rho*u, rho*v, E)`, ideal gas.
//!
//! Roe linearization with three waves: the acoustic waves `u_n -/+ c` and a
//! middle wave at `u_n` carrying both the contact and the shear jump. There
//! is no entropy fix, so transonic rarefactions are represented as
//! expansion shocks.

use super::{
    check_finite, store, Direction, KernelDescriptor, KernelError, KernelKind, PointwiseSolver,
    RiemannResult, Side,
};

/// Densities and pressures at or below this are inadmissible.
pub const ADMISSIBLE_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerParams {
    gamma: f64,
}

impl EulerParams {
    pub fn new(gamma: f64) -> Result<Self, KernelError> {
        if !(gamma.is_finite() && gamma > 1.0) {
            return Err(KernelError::InvalidParams(format!(
                "gamma must exceed 1, got {gamma}"
            )));
        }
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

impl Default for EulerParams {
    fn default() -> Self {
        Self { gamma: 1.4 }
    }
}

#[inline(always)]
fn slots(dir: Direction) -> (usize, usize) {
    match dir {
        Direction::X => (1, 2),
        Direction::Y => (2, 1),
    }
}

/// Ideal-gas pressure `(gamma - 1) (E - rho |u|^2 / 2)`.
#[inline(always)]
pub fn euler_pressure(q: &[f64; 4], gamma: f64) -> f64 {
    let kinetic = 0.5 * (q[1] * q[1] + q[2] * q[2]) / q[0];
    (gamma - 1.0) * (q[3] - kinetic)
}

/// Returns the pressure of `q` after checking admissibility.
#[inline(always)]
fn admissible(side: Side, q: &[f64; 4], gamma: f64) -> Result<f64, KernelError> {
    check_finite(side, q)?;
    let rho = q[0];
    if !(rho > ADMISSIBLE_FLOOR) {
        return Err(KernelError::Inadmissible {
            side,
            density: rho,
            pressure: f64::NAN,
        });
    }
    let p = euler_pressure(q, gamma);
    if !(p > ADMISSIBLE_FLOOR) {
        return Err(KernelError::Inadmissible {
            side,
            density: rho,
            pressure: p,
        });
    }
    Ok(p)
}

/// Physical flux of `q` normal to `dir`.
pub fn euler_flux(q: &[f64; 4], dir: Direction, params: &EulerParams) -> Result<[f64; 4], KernelError> {
    let p = admissible(Side::Left, q, params.gamma)?;
    let (n, t) = slots(dir);
    let un = q[n] / q[0];
    let mut f = [0.0; 4];
    f[0] = q[n];
    f[n] = q[n] * un + p;
    f[t] = q[t] * un;
    f[3] = un * (q[3] + p);
    Ok(f)
}

#[inline(always)]
pub fn rp_euler(
    dir: Direction,
    ql: &[f64; 4],
    qr: &[f64; 4],
    params: &EulerParams,
) -> Result<RiemannResult<4, 3>, KernelError> {
    let gamma = params.gamma;
    let pl = admissible(Side::Left, ql, gamma)?;
    let pr = admissible(Side::Right, qr, gamma)?;
    let (n, t) = slots(dir);

    let rhsql = ql[0].sqrt();
    let rhsqr = qr[0].sqrt();
    let rhsq = rhsql + rhsqr;
    let u = (ql[n] / rhsql + qr[n] / rhsqr) / rhsq;
    let v = (ql[t] / rhsql + qr[t] / rhsqr) / rhsq;
    let enth = ((ql[3] + pl) / rhsql + (qr[3] + pr) / rhsqr) / rhsq;
    let u2v2 = u * u + v * v;
    let a2 = (gamma - 1.0) * (enth - 0.5 * u2v2);
    if !(a2 > 0.0) {
        return Err(KernelError::RoeSoundSpeed(a2));
    }
    let a = a2.sqrt();
    let g1a2 = (gamma - 1.0) / a2;
    let euv = enth - u2v2;

    let d0 = qr[0] - ql[0];
    let dn = qr[n] - ql[n];
    let dt = qr[t] - ql[t];
    let de = qr[3] - ql[3];

    let alpha_contact = g1a2 * (euv * d0 + u * dn + v * dt - de);
    let alpha_shear = dt - v * d0;
    let alpha_right = (dn + (a - u) * d0 - a * alpha_contact) / (2.0 * a);
    let alpha_left = d0 - alpha_contact - alpha_right;

    let mut waves = [[0.0; 4]; 3];
    waves[0][0] = alpha_left;
    waves[0][n] = alpha_left * (u - a);
    waves[0][t] = alpha_left * v;
    waves[0][3] = alpha_left * (enth - u * a);

    waves[1][0] = alpha_contact;
    waves[1][n] = alpha_contact * u;
    waves[1][t] = alpha_contact * v + alpha_shear;
    waves[1][3] = alpha_contact * 0.5 * u2v2 + alpha_shear * v;

    waves[2][0] = alpha_right;
    waves[2][n] = alpha_right * (u + a);
    waves[2][t] = alpha_right * v;
    waves[2][3] = alpha_right * (enth + u * a);

    Ok(RiemannResult::from_waves(waves, [u - a, u, u + a]))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Euler {
    pub params: EulerParams,
}

impl PointwiseSolver for Euler {
    fn descriptor(&self) -> KernelDescriptor {
        KernelKind::Euler.descriptor()
    }

    #[inline(always)]
    fn solve_into(
        &self,
        dir: Direction,
        ql: &[f64],
        qr: &[f64],
        _auxl: &[f64],
        _auxr: &[f64],
        amdq: &mut [f64],
        apdq: &mut [f64],
    ) -> Result<f64, KernelError> {
        let ql: &[f64; 4] = ql.try_into().expect("euler state has 4 components");
        let qr: &[f64; 4] = qr.try_into().expect("euler state has 4 components");
        let r = rp_euler(dir, ql, qr, &self.params)?;
        Ok(store(&r, amdq, apdq))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SOD_L: [f64; 4] = [1.0, 0.0, 0.0, 2.5];
    const SOD_R: [f64; 4] = [0.125, 0.0, 0.0, 0.25];

    #[test]
    fn flux_at_rest_is_pressure_only() {
        let f = euler_flux(&SOD_L, Direction::X, &EulerParams::default()).unwrap();
        // gamma - 1 is not exact in binary
        let want = [0.0, 1.0, 0.0, 0.0];
        assert!(f.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-15), "{f:?}");
    }

    #[test]
    fn flux_rejects_zero_pressure() {
        // E = rho u^2 / 2 leaves no internal energy
        let q = [1.0, 1.0, 0.0, 0.5];
        assert!(matches!(
            euler_flux(&q, Direction::X, &EulerParams::default()),
            Err(KernelError::Inadmissible { .. })
        ));
    }

    #[test]
    fn flux_coordinate_symmetry() {
        let p = EulerParams::default();
        let q = [1.3, 0.4, -0.7, 3.0];
        let fx = euler_flux(&q, Direction::X, &p).unwrap();
        let fy = euler_flux(&[q[0], q[2], q[1], q[3]], Direction::Y, &p).unwrap();
        assert_eq!(fx, [fy[0], fy[2], fy[1], fy[3]]);
    }

    #[test]
    fn sod_fluctuations_sum_to_flux_difference() {
        let r = rp_euler(Direction::X, &SOD_L, &SOD_R, &EulerParams::default()).unwrap();
        let total = r.total_fluctuation();
        let expect = [0.0, -0.9, 0.0, 0.0];
        for m in 0..4 {
            assert!((total[m] - expect[m]).abs() <= 1e-14, "{total:?}");
        }
    }

    #[test]
    fn zero_jump() {
        let q = [0.8, 0.3, -0.1, 2.0];
        let r = rp_euler(Direction::Y, &q, &q, &EulerParams::default()).unwrap();
        assert_eq!(r.waves, [[0.0; 4]; 3]);
        assert_eq!(r.amdq, [0.0; 4]);
        assert_eq!(r.apdq, [0.0; 4]);
    }

    #[test]
    fn reports_offending_side() {
        let bad = [-1.0, 0.0, 0.0, 1.0];
        let p = EulerParams::default();
        assert!(matches!(
            rp_euler(Direction::X, &SOD_L, &bad, &p),
            Err(KernelError::Inadmissible { side: Side::Right, .. })
        ));
        let cold = [1.0, 0.0, 0.0, 0.0];
        assert!(matches!(
            rp_euler(Direction::X, &cold, &SOD_R, &p),
            Err(KernelError::Inadmissible { side: Side::Left, .. })
        ));
    }

    #[test]
    fn gamma_validated() {
        assert!(EulerParams::new(1.0).is_err());
        assert!(EulerParams::new(1.67).is_ok());
    }
}
