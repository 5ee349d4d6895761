//! Self-check suite behind `wavesweep verify`.
//!
//! Every check draws its inputs from a seeded generator, so a report is
//! reproducible from its seed alone.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::backend::Backend;
use crate::driver::{DriverError, Simulation, SimulationConfig, StopCondition};
use crate::grid::{BoundaryCondition, CellField};
use crate::ic::{gaussian_profile, InitialCondition, SOD_LEFT, SOD_RIGHT};
use crate::oracle::{error_norms, exact_advection, exact_riemann_euler_1d, linear_matrix_apply, LinearInterface};
use crate::riemann::{
    euler_flux, rp_acoustics_const, rp_acoustics_var, rp_advection, rp_euler, AcousticsParams, Advection, Direction,
    EulerParams, KernelKind, RiemannResult,
};
use crate::sweep::TraversalStrategy;

pub const IDENTITY_TOL: f64 = 1e-12;
pub const ROE_TOL: f64 = 1e-11;
pub const LINEAR_TOL: f64 = 1e-12;
pub const CONSERVATION_TOL: f64 = 1e-12;
pub const CONVERGENCE_BAND: (f64, f64) = (0.7, 1.1);
pub const SOD_L1_MAX: f64 = 0.02;
pub const SOD_TIME: f64 = 0.15;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Self { name, passed, detail }
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub seed: u64,
    pub checks: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// How much work the suite does.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteSize {
    pub samples: usize,
    /// Finest grid of the convergence study.
    pub convergence_max: usize,
}

impl Default for SuiteSize {
    fn default() -> Self {
        Self { samples: 10_000, convergence_max: 512 }
    }
}

/// Relative error of `got` against `want`, scaled by `max(1, |want|)`.
pub fn rel_err(got: &[f64], want: &[f64]) -> f64 {
    got.iter()
        .zip(want)
        .map(|(g, w)| (g - w).abs() / w.abs().max(1.0))
        .fold(0.0, f64::max)
}

fn sum_of_waves<const N: usize, const W: usize>(r: &RiemannResult<N, W>) -> [f64; N] {
    let mut acc = [0.0; N];
    for (w, s) in r.waves.iter().zip(r.speeds) {
        for (a, x) in acc.iter_mut().zip(w) {
            *a += s * x;
        }
    }
    acc
}

fn fluct_sum<const N: usize, const W: usize>(r: &RiemannResult<N, W>) -> [f64; N] {
    std::array::from_fn(|k| r.amdq[k] + r.apdq[k])
}

/// Random admissible inputs, one generator per kernel family.
pub mod sample {
    use super::*;

    pub fn direction(rng: &mut impl Rng) -> Direction {
        if rng.random_bool(0.5) {
            Direction::X
        } else {
            Direction::Y
        }
    }

    pub fn advection(rng: &mut impl Rng) -> ([f64; 1], [f64; 1], f64, f64) {
        (
            [rng.random_range(-10.0..10.0)],
            [rng.random_range(-10.0..10.0)],
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
        )
    }

    pub fn acoustics_state(rng: &mut impl Rng) -> [f64; 3] {
        std::array::from_fn(|_| rng.random_range(-10.0..10.0))
    }

    /// `(density, sound speed)`.
    pub fn medium(rng: &mut impl Rng) -> (f64, f64) {
        (rng.random_range(0.1..10.0), rng.random_range(0.1..10.0))
    }

    pub fn euler_state(rng: &mut impl Rng, gamma: f64) -> [f64; 4] {
        let rho: f64 = rng.random_range(0.1..10.0);
        let u: f64 = rng.random_range(-5.0..5.0);
        let v: f64 = rng.random_range(-5.0..5.0);
        let p: f64 = rng.random_range(0.1..10.0);
        [rho, rho * u, rho * v, p / (gamma - 1.0) + 0.5 * rho * (u * u + v * v)]
    }
}

/// `amdq + apdq == sum s W` for every kernel.
pub fn check_fluctuation_identity(seed: u64, samples: usize) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let euler = EulerParams::default();
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let dir = sample::direction(&mut rng);
        let (ql, qr, u, v) = sample::advection(&mut rng);
        let r = rp_advection(dir, &ql, &qr, u, v).expect("finite advection input");
        worst = worst.max(rel_err(&fluct_sum(&r), &sum_of_waves(&r)));

        let (rho, c) = sample::medium(&mut rng);
        let params = AcousticsParams::new(rho, rho * c * c).expect("positive medium");
        let (al, ar) = (sample::acoustics_state(&mut rng), sample::acoustics_state(&mut rng));
        let r = rp_acoustics_const(dir, &al, &ar, &params).expect("finite acoustics input");
        worst = worst.max(rel_err(&fluct_sum(&r), &sum_of_waves(&r)));

        let (ml, mr) = (sample::medium(&mut rng), sample::medium(&mut rng));
        let r = rp_acoustics_var(dir, &al, &ar, ml, mr).expect("valid aux");
        worst = worst.max(rel_err(&fluct_sum(&r), &sum_of_waves(&r)));

        let (el, er) = (sample::euler_state(&mut rng, 1.4), sample::euler_state(&mut rng, 1.4));
        let r = rp_euler(dir, &el, &er, &euler).expect("admissible euler input");
        worst = worst.max(rel_err(&fluct_sum(&r), &sum_of_waves(&r)));
    }
    CheckOutcome::new(
        "fluctuation-identity",
        worst <= IDENTITY_TOL,
        format!("{samples} samples per kernel, worst relative error {worst:.3e} (tol {IDENTITY_TOL:e})"),
    )
}

/// `amdq + apdq == f(qr) - f(ql)` for advection and Euler.
pub fn check_roe_property(seed: u64, samples: usize) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = EulerParams::default();
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let dir = sample::direction(&mut rng);
        let (ql, qr, u, v) = sample::advection(&mut rng);
        let adv = Advection { u, v };
        let r = rp_advection(dir, &ql, &qr, u, v).expect("finite advection input");
        let df = adv.flux(qr[0], dir) - adv.flux(ql[0], dir);
        worst = worst.max(rel_err(&fluct_sum(&r), &[df]));

        let (el, er) = (sample::euler_state(&mut rng, 1.4), sample::euler_state(&mut rng, 1.4));
        let r = rp_euler(dir, &el, &er, &params).expect("admissible euler input");
        let fl = euler_flux(&el, dir, &params).expect("admissible");
        let fr = euler_flux(&er, dir, &params).expect("admissible");
        let df: [f64; 4] = std::array::from_fn(|k| fr[k] - fl[k]);
        worst = worst.max(rel_err(&fluct_sum(&r), &df));
    }
    CheckOutcome::new(
        "roe-property",
        worst <= ROE_TOL,
        format!("{samples} pairs per kernel, worst relative error {worst:.3e} (tol {ROE_TOL:e})"),
    )
}

/// Both acoustics kernels against the analytic coefficient matrices.
pub fn check_linear_exactness(seed: u64, samples: usize) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let dir = sample::direction(&mut rng);
        let (ql, qr) = (sample::acoustics_state(&mut rng), sample::acoustics_state(&mut rng));
        let jump: [f64; 3] = std::array::from_fn(|k| qr[k] - ql[k]);

        let (rho, c) = sample::medium(&mut rng);
        let params = AcousticsParams::new(rho, rho * c * c).expect("positive medium");
        let r = rp_acoustics_const(dir, &ql, &qr, &params).expect("finite input");
        let want = linear_matrix_apply(&LinearInterface::Constant(params), &jump, dir).expect("regular");
        worst = worst.max(rel_err(&fluct_sum(&r), &want));

        let (left, right) = (sample::medium(&mut rng), sample::medium(&mut rng));
        let r = rp_acoustics_var(dir, &ql, &qr, left, right).expect("valid aux");
        let want = linear_matrix_apply(&LinearInterface::Variable { left, right }, &jump, dir).expect("regular");
        worst = worst.max(rel_err(&fluct_sum(&r), &want));
    }
    CheckOutcome::new(
        "linear-exactness",
        worst <= LINEAR_TOL,
        format!("{samples} jumps per kernel, worst relative error {worst:.3e} (tol {LINEAR_TOL:e})"),
    )
}

/// Every strategy/backend pair the equivalence check runs.
pub fn equivalence_matrix(threads: usize) -> Vec<(TraversalStrategy, Backend)> {
    let strategies = [
        TraversalStrategy::RowWise,
        TraversalStrategy::CellWise,
        TraversalStrategy::tiled(16, 16),
        TraversalStrategy::tiled(7, 5),
    ];
    let backends = [
        Backend::Serial,
        Backend::StaticThreads { threads },
        Backend::WorkStealing { threads, grain: 1 },
        Backend::WorkStealing { threads, grain: 7 },
    ];
    strategies
        .iter()
        .flat_map(|&s| backends.iter().map(move |&b| (s, b)))
        .collect()
}

/// Runs `steps` steps of the default condition for `kind` with every
/// strategy/backend pair; `None` if all final states are bitwise equal,
/// otherwise the first pair that differs.
pub fn first_inequivalent(
    kind: KernelKind,
    nx: usize,
    ny: usize,
    steps: usize,
    threads: usize,
) -> Result<Option<(TraversalStrategy, Backend)>, DriverError> {
    let ic = InitialCondition::default_for(kind);
    let base = SimulationConfig::new(ic, nx, ny, StopCondition::Steps(steps))?;
    let template = Simulation::new(base)?;
    let mut reference: Option<CellField> = None;
    for (strategy, backend) in equivalence_matrix(threads) {
        let mut sim = template.clone();
        sim.set_execution(strategy, backend)?;
        sim.run_to_end()?;
        let state = sim.into_state();
        match &reference {
            None => reference = Some(state),
            Some(r) if !r.interior_bits_eq(&state) => return Ok(Some((strategy, backend))),
            Some(_) => {}
        }
    }
    Ok(None)
}

pub fn check_equivalence() -> CheckOutcome {
    let mut detail = Vec::new();
    let mut passed = true;
    for kind in KernelKind::ALL {
        match first_inequivalent(kind, 48, 40, 5, 4) {
            Ok(None) => {}
            Ok(Some((s, b))) => {
                passed = false;
                detail.push(format!("{kind}: {s} with {b:?} differs"));
            }
            Err(e) => {
                passed = false;
                detail.push(format!("{kind}: {e}"));
            }
        }
    }
    let detail = if passed {
        format!("{} combinations bitwise identical for every kernel", equivalence_matrix(4).len())
    } else {
        detail.join("; ")
    };
    CheckOutcome::new("strategy-backend-equivalence", passed, detail)
}

/// Largest per-step relative change of any interior component sum over
/// `steps` periodic steps. Changes are scaled by the component's absolute
/// mass before or after the step, whichever is larger, so components whose
/// sum is zero stay meaningful.
pub fn worst_conservation_drift(ic: InitialCondition, n: usize, steps: usize) -> Result<f64, DriverError> {
    let mut cfg = SimulationConfig::new(ic, n, n, StopCondition::Steps(steps))?;
    cfg.bc_x = BoundaryCondition::Periodic;
    cfg.bc_y = BoundaryCondition::Periodic;
    let mut sim = Simulation::new(cfg)?;
    let m = sim.state().num_comp();
    let sums = |q: &CellField| -> Vec<(f64, f64)> {
        (0..m)
            .map(|c| {
                q.interior_cells().fold((0.0, 0.0), |(s, a), (i, j)| {
                    let v = q.cell(i, j)[c];
                    (s + v, a + v.abs())
                })
            })
            .collect()
    };
    let mut prev = sums(sim.state());
    let mut worst = 0.0f64;
    for _ in 0..steps {
        sim.step()?;
        let now = sums(sim.state());
        for ((s0, a0), (s1, a1)) in prev.iter().zip(&now) {
            let d = (s1 - s0).abs();
            if d > 0.0 {
                worst = worst.max(d / a0.max(*a1));
            }
        }
        prev = now;
    }
    Ok(worst)
}

pub fn check_conservation() -> CheckOutcome {
    let mut worst = 0.0f64;
    for ic in [InitialCondition::AdvectionGaussian, InitialCondition::EulerSodX] {
        match worst_conservation_drift(ic, 64, 100) {
            Ok(w) => worst = worst.max(w),
            Err(e) => return CheckOutcome::new("conservation", false, format!("{ic}: {e}")),
        }
    }
    CheckOutcome::new(
        "conservation",
        worst <= CONSERVATION_TOL,
        format!("100 periodic steps, worst per-step relative drift {worst:.3e} (tol {CONSERVATION_TOL:e})"),
    )
}

/// L1 error of the advected Gaussian after one full period on an `n x n`
/// grid.
pub fn advection_error(n: usize) -> Result<f64, DriverError> {
    let ic = InitialCondition::AdvectionGaussian;
    let cfg = SimulationConfig::new(ic, n, n, StopCondition::FinalTime(1.0))?;
    let mut sim = Simulation::new(cfg)?;
    sim.run_to_end()?;
    let spec = *sim.state().spec();
    let exact = exact_advection(gaussian_profile(&spec), 1.0, 1.0, sim.time(), &spec);
    Ok(error_norms(sim.state(), &exact, 0).expect("same grid").l1)
}

/// Least-squares slope of `-log2(error)` against `log2(n)`.
pub fn fitted_order(ns: &[usize], errors: &[f64]) -> f64 {
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).log2()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| -e.log2()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

pub fn check_convergence(max_n: usize) -> CheckOutcome {
    let mut ns = vec![64];
    while *ns.last().unwrap() * 2 <= max_n {
        ns.push(ns.last().unwrap() * 2);
    }
    if ns.len() < 2 {
        return CheckOutcome::new("convergence", false, format!("need at least two grids, finest {max_n}"));
    }
    let mut errors = Vec::new();
    for &n in &ns {
        match advection_error(n) {
            Ok(e) => errors.push(e),
            Err(e) => return CheckOutcome::new("convergence", false, format!("{n}x{n}: {e}")),
        }
    }
    let order = fitted_order(&ns, &errors);
    let (lo, hi) = CONVERGENCE_BAND;
    let listing: Vec<String> = ns.iter().zip(&errors).map(|(n, e)| format!("{n}:{e:.3e}")).collect();
    CheckOutcome::new(
        "convergence",
        (lo..=hi).contains(&order),
        format!("L1 errors {}, fitted order {order:.3} (band [{lo}, {hi}])", listing.join(" ")),
    )
}

/// Density L1 error of the shock tube on an `nx x 4` grid at the
/// acceptance time.
pub fn sod_density_error(nx: usize) -> Result<f64, DriverError> {
    let ic = InitialCondition::EulerSodX;
    let cfg = SimulationConfig::new(ic, nx, 4, StopCondition::FinalTime(SOD_TIME))?;
    let mut sim = Simulation::new(cfg)?;
    sim.run_to_end()?;
    let spec = *sim.state().spec();
    let gamma = 1.4;
    let ql = [SOD_LEFT[0], SOD_LEFT[1], SOD_LEFT[3]];
    let qr = [SOD_RIGHT[0], SOD_RIGHT[1], SOD_RIGHT[3]];
    let x0 = 0.5 * spec.width();
    let mut exact = CellField::zeros(spec, sim.state().num_comp());
    let t = sim.time();
    let mut failure = None;
    exact.fill_interior_with(|x, _, q| match exact_riemann_euler_1d(&ql, &qr, gamma, (x - x0) / t) {
        Ok(s) => q[0] = s[0],
        Err(e) => failure = Some(e),
    });
    if let Some(e) = failure {
        return Err(DriverError::Config(format!("exact solver: {e}")));
    }
    Ok(error_norms(sim.state(), &exact, 0).expect("same grid").l1)
}

pub fn check_sod() -> CheckOutcome {
    match (sod_density_error(400), sod_density_error(800)) {
        (Ok(e400), Ok(e800)) => CheckOutcome::new(
            "sod",
            e400 <= SOD_L1_MAX && e800 < e400,
            format!("density L1 {e400:.4e} at 400x4 (max {SOD_L1_MAX}), {e800:.4e} at 800x4"),
        ),
        (Err(e), _) | (_, Err(e)) => CheckOutcome::new("sod", false, e.to_string()),
    }
}

/// Runs every check; deterministic for a given seed.
pub fn verify_suite(seed: u64) -> VerifyReport {
    verify_suite_sized(seed, SuiteSize::default())
}

pub fn verify_suite_sized(seed: u64, size: SuiteSize) -> VerifyReport {
    // distinct streams per check
    let checks = vec![
        check_fluctuation_identity(seed, size.samples),
        check_roe_property(seed.wrapping_add(1), size.samples),
        check_linear_exactness(seed.wrapping_add(2), size.samples),
        check_equivalence(),
        check_conservation(),
        check_convergence(size.convergence_max),
        check_sod(),
    ];
    VerifyReport { seed, checks }
}
