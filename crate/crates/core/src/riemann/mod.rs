//! Pointwise Riemann solvers.
//!
//! Every solver is a pure function of the two cell states adjacent to an
//! interface (plus their aux values and fixed physical parameters). None of
//! them knows about grids, strategies or threads; the sweep engine drives
//! them through [`PointwiseSolver`].

mod acoustics;
mod advection;
mod euler;

pub use acoustics::{rp_acoustics_const, rp_acoustics_var, AcousticsConst, AcousticsParams, AcousticsVar};
pub use advection::{rp_advection, Advection};
pub use euler::{euler_flux, euler_pressure, rp_euler, Euler, EulerParams};

use thiserror::Error;

/// Which coordinate direction is normal to the interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Side::Left => "left",
            Side::Right => "right",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("non-finite value in {side} input")]
    NonFinite { side: Side },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("inadmissible {side} state: density={density}, pressure={pressure}")]
    Inadmissible {
        side: Side,
        density: f64,
        pressure: f64,
    },
    #[error("invalid {side} aux: density={density}, sound speed={sound_speed}")]
    InvalidAux {
        side: Side,
        density: f64,
        sound_speed: f64,
    },
    #[error("Roe-averaged sound speed squared is not positive ({0})")]
    RoeSoundSpeed(f64),
}

/// Waves, speeds and fluctuations for one interface with `N` equations and
/// `W` waves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannResult<const N: usize, const W: usize> {
    pub waves: [[f64; N]; W],
    pub speeds: [f64; W],
    /// Left-going fluctuation, sum of `s * W` over negative speeds.
    pub amdq: [f64; N],
    /// Right-going fluctuation, sum of `s * W` over positive speeds.
    pub apdq: [f64; N],
}

impl<const N: usize, const W: usize> RiemannResult<N, W> {
    /// Splits `s * W` into left- and right-going parts. Zero-speed waves
    /// contribute to neither.
    #[inline(always)]
    pub fn from_waves(waves: [[f64; N]; W], speeds: [f64; W]) -> Self {
        let mut amdq = [0.0; N];
        let mut apdq = [0.0; N];
        for p in 0..W {
            let s = speeds[p];
            if s < 0.0 {
                for m in 0..N {
                    amdq[m] += s * waves[p][m];
                }
            } else if s > 0.0 {
                for m in 0..N {
                    apdq[m] += s * waves[p][m];
                }
            }
        }
        Self {
            waves,
            speeds,
            amdq,
            apdq,
        }
    }

    /// `sum_p waves[p]`, which equals `qr - ql` for a complete decomposition.
    pub fn jump_sum(&self) -> [f64; N] {
        let mut out = [0.0; N];
        for w in &self.waves {
            for (o, x) in out.iter_mut().zip(w) {
                *o += x;
            }
        }
        out
    }

    /// `sum_p speeds[p] * waves[p]`.
    pub fn speed_weighted_sum(&self) -> [f64; N] {
        let mut out = [0.0; N];
        for (w, s) in self.waves.iter().zip(self.speeds) {
            for (o, x) in out.iter_mut().zip(w) {
                *o += s * x;
            }
        }
        out
    }

    /// `amdq + apdq`.
    pub fn total_fluctuation(&self) -> [f64; N] {
        let mut out = self.amdq;
        for (o, x) in out.iter_mut().zip(&self.apdq) {
            *o += x;
        }
        out
    }

    #[inline(always)]
    pub fn max_abs_speed(&self) -> f64 {
        self.speeds.iter().fold(0.0, |acc: f64, s| acc.max(s.abs()))
    }
}

/// Arithmetic intensity as a rational `flops / bytes`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Intensity {
    pub flops: u32,
    pub bytes: u32,
}

impl Intensity {
    pub fn value(&self) -> f64 {
        self.flops as f64 / self.bytes as f64
    }
}

/// Static shape and cost metadata for a kernel.
///
/// The intensity is the hand-counted figure published for the reference
/// kernels, kept as metadata; it is not measured from this implementation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KernelDescriptor {
    pub name: &'static str,
    pub num_eqn: usize,
    pub num_waves: usize,
    pub num_aux: usize,
    pub arithmetic_intensity: Intensity,
}

/// Contract between the sweep engine and a kernel.
pub trait PointwiseSolver: Sync {
    fn descriptor(&self) -> KernelDescriptor;

    /// Solves one interface, writing the fluctuations into `amdq`/`apdq`
    /// (each `num_eqn` long) and returning the largest `|s|`.
    #[allow(clippy::too_many_arguments)]
    fn solve_into(
        &self,
        dir: Direction,
        ql: &[f64],
        qr: &[f64],
        auxl: &[f64],
        auxr: &[f64],
        amdq: &mut [f64],
        apdq: &mut [f64],
    ) -> Result<f64, KernelError>;
}

#[inline(always)]
pub(crate) fn check_finite(side: Side, values: &[f64]) -> Result<(), KernelError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(KernelError::NonFinite { side })
    }
}

#[inline(always)]
pub(crate) fn store<const N: usize, const W: usize>(
    r: &RiemannResult<N, W>,
    amdq: &mut [f64],
    apdq: &mut [f64],
) -> f64 {
    amdq.copy_from_slice(&r.amdq);
    apdq.copy_from_slice(&r.apdq);
    r.max_abs_speed()
}

/// Identifies one of the built-in kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    Advection,
    AcousticsConst,
    AcousticsVar,
    Euler,
}

impl KernelKind {
    pub const ALL: [KernelKind; 4] = [
        KernelKind::Advection,
        KernelKind::AcousticsConst,
        KernelKind::AcousticsVar,
        KernelKind::Euler,
    ];

    pub fn name(&self) -> &'static str {
        self.descriptor().name
    }

    pub fn descriptor(&self) -> KernelDescriptor {
        match self {
            KernelKind::Advection => KernelDescriptor {
                name: "advection",
                num_eqn: 1,
                num_waves: 1,
                num_aux: 0,
                arithmetic_intensity: Intensity { flops: 1, bytes: 3 },
            },
            KernelKind::AcousticsConst => KernelDescriptor {
                name: "acoustics-const",
                num_eqn: 3,
                num_waves: 2,
                num_aux: 0,
                arithmetic_intensity: Intensity { flops: 4, bytes: 5 },
            },
            KernelKind::AcousticsVar => KernelDescriptor {
                name: "acoustics-var",
                num_eqn: 3,
                num_waves: 2,
                num_aux: 2,
                arithmetic_intensity: Intensity { flops: 1, bytes: 1 },
            },
            KernelKind::Euler => KernelDescriptor {
                name: "euler",
                num_eqn: 4,
                num_waves: 3,
                num_aux: 0,
                arithmetic_intensity: Intensity { flops: 1, bytes: 1 },
            },
        }
    }
}

impl std::fmt::Display for KernelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for KernelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        KernelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                format!("unknown kernel '{s}' (expected advection, acoustics-const, acoustics-var or euler)")
            })
    }
}

/// A built-in kernel together with its physical parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Advection(Advection),
    AcousticsConst(AcousticsConst),
    AcousticsVar(AcousticsVar),
    Euler(Euler),
}

impl Kernel {
    pub fn kind(&self) -> KernelKind {
        match self {
            Kernel::Advection(_) => KernelKind::Advection,
            Kernel::AcousticsConst(_) => KernelKind::AcousticsConst,
            Kernel::AcousticsVar(_) => KernelKind::AcousticsVar,
            Kernel::Euler(_) => KernelKind::Euler,
        }
    }

    pub fn descriptor(&self) -> KernelDescriptor {
        self.kind().descriptor()
    }
}

impl PointwiseSolver for Kernel {
    fn descriptor(&self) -> KernelDescriptor {
        self.kind().descriptor()
    }

    #[allow(clippy::too_many_arguments)]
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
        match self {
            Kernel::Advection(k) => k.solve_into(dir, ql, qr, auxl, auxr, amdq, apdq),
            Kernel::AcousticsConst(k) => k.solve_into(dir, ql, qr, auxl, auxr, amdq, apdq),
            Kernel::AcousticsVar(k) => k.solve_into(dir, ql, qr, auxl, auxr, amdq, apdq),
            Kernel::Euler(k) => k.solve_into(dir, ql, qr, auxl, auxr, amdq, apdq),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn descriptors_match_published_table() {
        let d = |k: KernelKind| k.descriptor();
        assert_eq!(d(KernelKind::Advection).arithmetic_intensity, Intensity { flops: 1, bytes: 3 });
        assert_eq!(d(KernelKind::AcousticsConst).arithmetic_intensity, Intensity { flops: 4, bytes: 5 });
        assert_eq!(d(KernelKind::AcousticsVar).arithmetic_intensity.value(), 1.0);
        assert_eq!(d(KernelKind::Euler).arithmetic_intensity.value(), 1.0);

        let shape = |k: KernelKind| (d(k).num_eqn, d(k).num_waves, d(k).num_aux);
        assert_eq!(shape(KernelKind::Advection), (1, 1, 0));
        assert_eq!(shape(KernelKind::AcousticsConst), (3, 2, 0));
        assert_eq!(shape(KernelKind::AcousticsVar), (3, 2, 2));
        assert_eq!(shape(KernelKind::Euler), (4, 3, 0));
    }

    #[test]
    fn kind_names_round_trip() {
        for k in KernelKind::ALL {
            assert_eq!(k.name().parse::<KernelKind>().unwrap(), k);
        }
        assert!("burgers".parse::<KernelKind>().is_err());
    }

    #[test]
    fn fluctuation_split_skips_zero_speed() {
        let r = RiemannResult::from_waves([[1.0], [2.0], [3.0]], [-1.0, 0.0, 2.0]);
        assert_eq!(r.amdq, [-1.0]);
        assert_eq!(r.apdq, [6.0]);
        assert_eq!(r.speed_weighted_sum(), [5.0]);
        assert_eq!(r.max_abs_speed(), 2.0);
    }
}
