use super::{
    check_finite, store, Direction, KernelDescriptor, KernelError, KernelKind, PointwiseSolver,
    RiemannResult, Side,
};

/// Scalar advection with a constant velocity `(u, v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Advection {
    pub u: f64,
    pub v: f64,
}

impl Advection {
    pub fn new(u: f64, v: f64) -> Result<Self, KernelError> {
        if !(u.is_finite() && v.is_finite()) {
            return Err(KernelError::InvalidParams(format!(
                "advection velocity must be finite, got ({u}, {v})"
            )));
        }
        Ok(Self { u, v })
    }

    /// Physical flux `s * q` in direction `dir`.
    pub fn flux(&self, q: f64, dir: Direction) -> f64 {
        match dir {
            Direction::X => self.u * q,
            Direction::Y => self.v * q,
        }
    }
}

/// Upwind solution: a single wave `qr - ql` moving at the normal velocity.
#[inline(always)]
pub fn rp_advection(
    dir: Direction,
    ql: &[f64; 1],
    qr: &[f64; 1],
    u: f64,
    v: f64,
) -> Result<RiemannResult<1, 1>, KernelError> {
    check_finite(Side::Left, ql)?;
    check_finite(Side::Right, qr)?;
    let s = match dir {
        Direction::X => u,
        Direction::Y => v,
    };
    let wave = qr[0] - ql[0];
    Ok(RiemannResult {
        waves: [[wave]],
        speeds: [s],
        amdq: [s.min(0.0) * wave],
        apdq: [s.max(0.0) * wave],
    })
}

impl PointwiseSolver for Advection {
    fn descriptor(&self) -> KernelDescriptor {
        KernelKind::Advection.descriptor()
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
        let r = rp_advection(dir, &[ql[0]], &[qr[0]], self.u, self.v)?;
        Ok(store(&r, amdq, apdq))
    }
}
