//! Linear acoustics, `q = (pressure, x-velocity, y-velocity)`.

use super::{
    check_finite, store, Direction, KernelDescriptor, KernelError, KernelKind, PointwiseSolver,
    RiemannResult, Side,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcousticsParams {
    density: f64,
    bulk_modulus: f64,
    sound_speed: f64,
    impedance: f64,
}

impl AcousticsParams {
    pub fn new(density: f64, bulk_modulus: f64) -> Result<Self, KernelError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(density) || !ok(bulk_modulus) {
            return Err(KernelError::InvalidParams(format!(
                "acoustics needs positive density and bulk modulus, got rho={density}, K={bulk_modulus}"
            )));
        }
        let sound_speed = (bulk_modulus / density).sqrt();
        Ok(Self {
            density,
            bulk_modulus,
            sound_speed,
            impedance: density * sound_speed,
        })
    }

    pub fn density(&self) -> f64 {
        self.density
    }

    pub fn bulk_modulus(&self) -> f64 {
        self.bulk_modulus
    }

    pub fn sound_speed(&self) -> f64 {
        self.sound_speed
    }

    pub fn impedance(&self) -> f64 {
        self.impedance
    }
}

#[inline(always)]
fn normal_slot(dir: Direction) -> usize {
    match dir {
        Direction::X => 1,
        Direction::Y => 2,
    }
}

/// Two-wave decomposition shared by both acoustics solvers. With
/// `zl == zr` and `cl == cr` it is the constant-coefficient eigensystem.
#[inline(always)]
fn two_wave(
    dir: Direction,
    ql: &[f64; 3],
    qr: &[f64; 3],
    (zl, cl): (f64, f64),
    (zr, cr): (f64, f64),
) -> RiemannResult<3, 2> {
    let n = normal_slot(dir);
    let dp = qr[0] - ql[0];
    let dn = qr[n] - ql[n];
    let zsum = zl + zr;
    let a1 = (-dp + zr * dn) / zsum;
    let a2 = (dp + zl * dn) / zsum;

    let mut w1 = [0.0; 3];
    w1[0] = -a1 * zl;
    w1[n] = a1;
    let mut w2 = [0.0; 3];
    w2[0] = a2 * zr;
    w2[n] = a2;

    let (s1, s2) = (-cl, cr);
    let mut amdq = [0.0; 3];
    let mut apdq = [0.0; 3];
    for m in 0..3 {
        amdq[m] = s1 * w1[m];
        apdq[m] = s2 * w2[m];
    }
    RiemannResult {
        waves: [w1, w2],
        speeds: [s1, s2],
        amdq,
        apdq,
    }
}

/// Constant-coefficient acoustics. The transverse velocity is untouched.
#[inline(always)]
pub fn rp_acoustics_const(
    dir: Direction,
    ql: &[f64; 3],
    qr: &[f64; 3],
    p: &AcousticsParams,
) -> Result<RiemannResult<3, 2>, KernelError> {
    check_finite(Side::Left, ql)?;
    check_finite(Side::Right, qr)?;
    let zc = (p.impedance, p.sound_speed);
    Ok(two_wave(dir, ql, qr, zc, zc))
}

/// Variable-coefficient acoustics; each side supplies its own cell's
/// `(density, sound speed)`.
#[inline(always)]
pub fn rp_acoustics_var(
    dir: Direction,
    ql: &[f64; 3],
    qr: &[f64; 3],
    auxl: (f64, f64),
    auxr: (f64, f64),
) -> Result<RiemannResult<3, 2>, KernelError> {
    check_finite(Side::Left, ql)?;
    check_finite(Side::Right, qr)?;
    let check_aux = |side, (rho, c): (f64, f64)| {
        // written so NaN fails too
        if rho > 0.0 && c > 0.0 && rho.is_finite() && c.is_finite() {
            Ok((rho * c, c))
        } else {
            Err(KernelError::InvalidAux {
                side,
                density: rho,
                sound_speed: c,
            })
        }
    };
    let l = check_aux(Side::Left, auxl)?;
    let r = check_aux(Side::Right, auxr)?;
    Ok(two_wave(dir, ql, qr, l, r))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcousticsConst {
    pub params: AcousticsParams,
}

impl PointwiseSolver for AcousticsConst {
    fn descriptor(&self) -> KernelDescriptor {
        KernelKind::AcousticsConst.descriptor()
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
        let ql: &[f64; 3] = ql.try_into().expect("acoustics state has 3 components");
        let qr: &[f64; 3] = qr.try_into().expect("acoustics state has 3 components");
        let r = rp_acoustics_const(dir, ql, qr, &self.params)?;
        Ok(store(&r, amdq, apdq))
    }
}

/// Variable-coefficient acoustics reading `aux = (density, sound speed)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AcousticsVar;

impl PointwiseSolver for AcousticsVar {
    fn descriptor(&self) -> KernelDescriptor {
        KernelKind::AcousticsVar.descriptor()
    }

    #[inline(always)]
    fn solve_into(
        &self,
        dir: Direction,
        ql: &[f64],
        qr: &[f64],
        auxl: &[f64],
        auxr: &[f64],
        amdq: &mut [f64],
        apdq: &mut [f64],
    ) -> Result<f64, KernelError> {
        let ql: &[f64; 3] = ql.try_into().expect("acoustics state has 3 components");
        let qr: &[f64; 3] = qr.try_into().expect("acoustics state has 3 components");
        let r = rp_acoustics_var(dir, ql, qr, (auxl[0], auxl[1]), (auxr[0], auxr[1]))?;
        Ok(store(&r, amdq, apdq))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> AcousticsParams {
        AcousticsParams::new(1.0, 1.0).unwrap()
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-15)
    }

    #[test]
    fn derived_params() {
        let p = AcousticsParams::new(4.0, 16.0).unwrap();
        assert_eq!(p.sound_speed(), 2.0);
        assert_eq!(p.impedance(), 8.0);
        assert!(AcousticsParams::new(0.0, 1.0).is_err());
        assert!(AcousticsParams::new(1.0, -1.0).is_err());
    }

    #[test]
    fn pressure_jump() {
        let r = rp_acoustics_const(Direction::X, &[0.0; 3], &[1.0, 0.0, 0.0], &unit()).unwrap();
        assert!(close(&r.amdq, &[-0.5, 0.5, 0.0]));
        assert!(close(&r.apdq, &[0.5, 0.5, 0.0]));
        assert_eq!(r.speeds, [-1.0, 1.0]);
    }

    #[test]
    fn velocity_jump() {
        let r = rp_acoustics_const(Direction::X, &[0.0; 3], &[0.0, 1.0, 0.0], &unit()).unwrap();
        assert!(close(&r.amdq, &[0.5, -0.5, 0.0]));
        assert!(close(&r.apdq, &[0.5, 0.5, 0.0]));
    }

    #[test]
    fn transverse_slot_untouched() {
        let r = rp_acoustics_const(Direction::Y, &[0.3, 7.0, 0.1], &[1.0, -2.0, 0.5], &unit()).unwrap();
        for w in r.waves {
            assert_eq!(w[1], 0.0);
        }
        assert_eq!(r.amdq[1], 0.0);
        assert_eq!(r.apdq[1], 0.0);
    }

    #[test]
    fn zero_jump_is_zero() {
        let q = [0.7, -0.2, 1.1];
        let r = rp_acoustics_const(Direction::X, &q, &q, &unit()).unwrap();
        assert_eq!(r.amdq, [0.0; 3]);
        assert_eq!(r.apdq, [0.0; 3]);
        let r = rp_acoustics_var(Direction::Y, &q, &q, (1.0, 2.0), (3.0, 0.5)).unwrap();
        assert_eq!(r.amdq, [0.0; 3]);
        assert_eq!(r.apdq, [0.0; 3]);
    }

    #[test]
    fn variable_reduces_to_constant() {
        let ql = [0.3, -1.0, 2.0];
        let qr = [1.5, 0.25, -0.5];
        for dir in [Direction::X, Direction::Y] {
            let a = rp_acoustics_const(dir, &ql, &qr, &unit()).unwrap();
            let b = rp_acoustics_var(dir, &ql, &qr, (1.0, 1.0), (1.0, 1.0)).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn impedance_contrast() {
        // Zl = 1, Zr = 3 with a unit pressure jump
        let r = rp_acoustics_var(Direction::X, &[0.0; 3], &[1.0, 0.0, 0.0], (1.0, 1.0), (1.0, 3.0)).unwrap();
        assert!(close(&r.waves[0], &[0.25, -0.25, 0.0]));
        assert!(close(&r.waves[1], &[0.75, 0.25, 0.0]));
        assert_eq!(r.speeds, [-1.0, 3.0]);
        assert!(close(&r.amdq, &[-0.25, 0.25, 0.0]));
        assert!(close(&r.apdq, &[2.25, 0.75, 0.0]));
    }

    #[test]
    fn bad_aux_rejected() {
        let q = [0.0; 3];
        assert!(matches!(
            rp_acoustics_var(Direction::X, &q, &q, (0.0, 1.0), (1.0, 1.0)),
            Err(KernelError::InvalidAux { side: Side::Left, .. })
        ));
        assert!(matches!(
            rp_acoustics_var(Direction::X, &q, &q, (1.0, 1.0), (1.0, f64::NAN)),
            Err(KernelError::InvalidAux { side: Side::Right, .. })
        ));
    }
}
