//! Acceptance suite: one PASS/FAIL/WARN line per criterion.
//!
//! Runs without the libtest harness so the report reads top to bottom.
//! Exits non-zero if any criterion fails; WARN lines mark criteria that
//! this machine cannot evaluate and never count as passes.

use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wavesweep::backend::{detect_cores, Backend, BackendKind};
use wavesweep::bench::{emit_csv, median, parse_csv, run_bench, BenchConfig, CSV_HEADER};
use wavesweep::driver::{Simulation, SimulationConfig, StopCondition, TimestepController};
use wavesweep::grid::{BoundaryCondition, CellField};
use wavesweep::ic::{gaussian_profile, InitialCondition};
use wavesweep::oracle::{error_norms, exact_advection, exact_riemann_euler_1d, linear_matrix_apply, LinearInterface};
use wavesweep::riemann::{
    rp_acoustics_const, rp_acoustics_var, rp_advection, rp_euler, AcousticsParams, Direction, EulerParams,
    KernelKind, RiemannResult,
};
use wavesweep::sweep::TraversalStrategy;

const SAMPLES: usize = 10_000;
const SEED: u64 = 20_240_611;

enum Verdict {
    Pass,
    Fail,
    Warn,
}

struct Line {
    id: u32,
    name: &'static str,
    verdict: Verdict,
    detail: String,
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> (bool, String)) -> (Verdict, String) {
    let t0 = Instant::now();
    let (ok, detail) = f();
    let took = t0.elapsed();
    let in_time = limit.is_none_or(|l| took <= l);
    let budget = limit.map(|l| format!(" (limit {} s)", l.as_secs())).unwrap_or_default();
    let detail = format!("{detail}; {:.2} s{budget}", took.as_secs_f64());
    (if ok && in_time { Verdict::Pass } else { Verdict::Fail }, detail)
}

fn dir(rng: &mut ChaCha8Rng) -> Direction {
    if rng.random_bool(0.5) {
        Direction::X
    } else {
        Direction::Y
    }
}

fn uniform<const N: usize>(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> [f64; N] {
    std::array::from_fn(|_| rng.random_range(lo..hi))
}

fn euler_state(rng: &mut ChaCha8Rng) -> [f64; 4] {
    let [rho, u, v, p]: [f64; 4] = [
        rng.random_range(0.05..20.0),
        rng.random_range(-10.0..10.0),
        rng.random_range(-10.0..10.0),
        rng.random_range(0.05..20.0),
    ];
    [rho, rho * u, rho * v, p / 0.4 + 0.5 * rho * (u * u + v * v)]
}

/// Max over components of `|got - want| / max(1, |want|)`.
fn rel(got: &[f64], want: &[f64]) -> f64 {
    got.iter()
        .zip(want)
        .map(|(g, w)| (g - w).abs() / w.abs().max(1.0))
        .fold(0.0, f64::max)
}

fn total<const N: usize, const W: usize>(r: &RiemannResult<N, W>) -> [f64; N] {
    std::array::from_fn(|k| r.amdq[k] + r.apdq[k])
}

fn speed_weighted<const N: usize, const W: usize>(r: &RiemannResult<N, W>) -> [f64; N] {
    std::array::from_fn(|k| (0..W).map(|p| r.speeds[p] * r.waves[p][k]).sum())
}

/// Physical Euler flux written out independently of the kernel crate.
fn flux(q: &[f64; 4], d: Direction) -> [f64; 4] {
    let (n, t) = match d {
        Direction::X => (1, 2),
        Direction::Y => (2, 1),
    };
    let rho = q[0];
    let un = q[n] / rho;
    let p = 0.4 * (q[3] - 0.5 * (q[1] * q[1] + q[2] * q[2]) / rho);
    let mut f = [0.0; 4];
    f[0] = q[n];
    f[n] = q[n] * un + p;
    f[t] = q[t] * un;
    f[3] = (q[3] + p) * un;
    f
}

fn c1_fluctuation_identity() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let gas = EulerParams::new(1.4).unwrap();
    let mut worst = [0.0f64; 4];
    for _ in 0..SAMPLES {
        let d = dir(&mut rng);
        let [ql, qr, u, v] = uniform::<4>(&mut rng, -10.0, 10.0);
        let r = rp_advection(d, &[ql], &[qr], u, v).unwrap();
        worst[0] = worst[0].max(rel(&total(&r), &speed_weighted(&r)));

        let (rho, k) = (rng.random_range(0.05..20.0), rng.random_range(0.05..20.0));
        let (al, ar) = (uniform::<3>(&mut rng, -10.0, 10.0), uniform::<3>(&mut rng, -10.0, 10.0));
        let r = rp_acoustics_const(d, &al, &ar, &AcousticsParams::new(rho, k).unwrap()).unwrap();
        worst[1] = worst[1].max(rel(&total(&r), &speed_weighted(&r)));

        let [rl, cl, rr, cr] = uniform::<4>(&mut rng, 0.05, 20.0);
        let r = rp_acoustics_var(d, &al, &ar, (rl, cl), (rr, cr)).unwrap();
        worst[2] = worst[2].max(rel(&total(&r), &speed_weighted(&r)));

        let r = rp_euler(d, &euler_state(&mut rng), &euler_state(&mut rng), &gas).unwrap();
        worst[3] = worst[3].max(rel(&total(&r), &speed_weighted(&r)));
    }
    let ok = worst.iter().all(|&w| w <= 1e-12);
    let listed: Vec<String> = KernelKind::ALL.iter().zip(worst).map(|(k, w)| format!("{k} {w:.2e}")).collect();
    (ok, format!("worst relative error {}, tol 1e-12", listed.join(", ")))
}

fn c2_roe_property() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let gas = EulerParams::new(1.4).unwrap();
    let (mut adv, mut eul) = (0.0f64, 0.0f64);
    for _ in 0..SAMPLES {
        let d = dir(&mut rng);
        let [ql, qr, u, v] = uniform::<4>(&mut rng, -10.0, 10.0);
        let s = if d == Direction::X { u } else { v };
        let r = rp_advection(d, &[ql], &[qr], u, v).unwrap();
        adv = adv.max(rel(&total(&r), &[s * qr - s * ql]));

        let (el, er) = (euler_state(&mut rng), euler_state(&mut rng));
        let r = rp_euler(d, &el, &er, &gas).unwrap();
        let (fl, fr) = (flux(&el, d), flux(&er, d));
        let df: [f64; 4] = std::array::from_fn(|k| fr[k] - fl[k]);
        eul = eul.max(rel(&total(&r), &df));
    }
    (adv <= 1e-11 && eul <= 1e-11, format!("advection {adv:.2e}, euler {eul:.2e}, tol 1e-11"))
}

fn c3_linear_exactness() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 2);
    let (mut cst, mut var) = (0.0f64, 0.0f64);
    for _ in 0..SAMPLES {
        let d = dir(&mut rng);
        let (ql, qr) = (uniform::<3>(&mut rng, -10.0, 10.0), uniform::<3>(&mut rng, -10.0, 10.0));
        let jump: [f64; 3] = std::array::from_fn(|k| qr[k] - ql[k]);

        let params = AcousticsParams::new(rng.random_range(0.05..20.0), rng.random_range(0.05..20.0)).unwrap();
        let r = rp_acoustics_const(d, &ql, &qr, &params).unwrap();
        cst = cst.max(rel(&total(&r), &linear_matrix_apply(&LinearInterface::Constant(params), &jump, d).unwrap()));

        let [rl, cl, rr, cr] = uniform::<4>(&mut rng, 0.05, 20.0);
        let r = rp_acoustics_var(d, &ql, &qr, (rl, cl), (rr, cr)).unwrap();
        let iface = LinearInterface::Variable { left: (rl, cl), right: (rr, cr) };
        var = var.max(rel(&total(&r), &linear_matrix_apply(&iface, &jump, d).unwrap()));
    }
    (cst <= 1e-12 && var <= 1e-12, format!("constant {cst:.2e}, variable {var:.2e}, tol 1e-12"))
}

fn c4_bitwise_equivalence() -> (bool, String) {
    let strategies = [
        TraversalStrategy::RowWise,
        TraversalStrategy::CellWise,
        TraversalStrategy::tiled(64, 64),
        TraversalStrategy::tiled(7, 5),
    ];
    let backends = [
        Backend::Serial,
        Backend::StaticThreads { threads: 4 },
        Backend::WorkStealing { threads: 4, grain: 1 },
        Backend::WorkStealing { threads: 4, grain: 7 },
    ];
    let mut runs = 0;
    for kind in KernelKind::ALL {
        let ic = InitialCondition::default_for(kind);
        let cfg = SimulationConfig::new(ic, 128, 96, StopCondition::Steps(10)).unwrap();
        let template = Simulation::new(cfg).unwrap();
        let mut reference: Option<CellField> = None;
        for s in strategies {
            for b in backends {
                let mut sim = template.clone();
                sim.set_execution(s, b).unwrap();
                if let Err(e) = sim.run_to_end() {
                    return (false, format!("{kind} {s} {b:?}: {e}"));
                }
                runs += 1;
                let q = sim.into_state();
                match &reference {
                    None => reference = Some(q),
                    Some(r) if !r.interior_bits_eq(&q) => return (false, format!("{kind}: {s} {b:?} differs")),
                    Some(_) => {}
                }
            }
        }
    }
    (true, format!("{runs} runs, 16 combinations per kernel bitwise identical"))
}

fn c5_conservation() -> (bool, String) {
    let mut report = Vec::new();
    let mut ok = true;
    for ic in [InitialCondition::AdvectionGaussian, InitialCondition::EulerSodX] {
        let mut cfg = SimulationConfig::new(ic, 96, 64, StopCondition::Steps(100)).unwrap();
        cfg.bc_x = BoundaryCondition::Periodic;
        cfg.bc_y = BoundaryCondition::Periodic;
        let mut sim = Simulation::new(cfg).unwrap();
        let m = sim.state().num_comp();
        // (sum, sum of magnitudes) per component
        let measure = |q: &CellField| -> Vec<(f64, f64)> {
            (0..m)
                .map(|c| {
                    q.interior_cells()
                        .map(|(i, j)| q.cell(i, j)[c])
                        .fold((0.0, 0.0), |(s, a), v| (s + v, a + v.abs()))
                })
                .collect()
        };
        let mut prev = measure(sim.state());
        let mut worst = 0.0f64;
        for _ in 0..100 {
            sim.step().unwrap();
            let now = measure(sim.state());
            for (&(s0, a0), &(s1, a1)) in prev.iter().zip(&now) {
                // zero-sum components are scaled by their magnitude
                let scale = s0.abs().max(a0).max(a1);
                if s1 != s0 {
                    worst = worst.max((s1 - s0).abs() / scale);
                }
            }
            prev = now;
        }
        ok &= worst <= 1e-12;
        report.push(format!("{ic} {worst:.2e}"));
    }
    (ok, format!("worst per-step relative drift: {}, tol 1e-12", report.join(", ")))
}

fn advection_l1(n: usize) -> f64 {
    let ic = InitialCondition::AdvectionGaussian;
    let mut sim = Simulation::new(SimulationConfig::new(ic, n, n, StopCondition::FinalTime(1.0)).unwrap()).unwrap();
    sim.run_to_end().unwrap();
    let spec = *sim.state().spec();
    let exact = exact_advection(gaussian_profile(&spec), 1.0, 1.0, sim.time(), &spec);
    error_norms(sim.state(), &exact, 0).unwrap().l1
}

fn sod_l1(nx: usize) -> f64 {
    let ic = InitialCondition::EulerSodX;
    let mut sim = Simulation::new(SimulationConfig::new(ic, nx, 4, StopCondition::FinalTime(0.15)).unwrap()).unwrap();
    sim.run_to_end().unwrap();
    let spec = *sim.state().spec();
    let mut exact = CellField::zeros(spec, 4);
    let t = sim.time();
    exact.fill_interior_with(|x, _, q| {
        q[0] = exact_riemann_euler_1d(&[1.0, 0.0, 2.5], &[0.125, 0.0, 0.25], 1.4, (x - 0.5) / t).unwrap()[0];
    });
    error_norms(sim.state(), &exact, 0).unwrap().l1
}

fn c6_convergence() -> (bool, String) {
    let ns = [64usize, 128, 256, 512];
    let errs: Vec<f64> = ns.iter().map(|&n| advection_l1(n)).collect();
    // least-squares slope of -log2(e) over log2(n)
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).log2()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| -e.log2()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 4.0, ys.iter().sum::<f64>() / 4.0);
    let order = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let (s400, s800) = (sod_l1(400), sod_l1(800));
    let ok = (0.7..=1.1).contains(&order) && s400 <= 0.02 && s800 < s400;
    (
        ok,
        format!(
            "advection order {order:.3} in [0.7, 1.1] (L1 {:.2e} .. {:.2e}), Sod L1 {s400:.3e} at 400 (max 0.02), {s800:.3e} at 800",
            errs[0], errs[3]
        ),
    )
}

fn serial_vs_threads(kind: KernelKind, n: usize, threads: usize) -> (f64, f64) {
    let ic = InitialCondition::default_for(kind);
    let template = Simulation::new(SimulationConfig::new(ic, n, n, StopCondition::Steps(usize::MAX)).unwrap()).unwrap();
    let time = |backend: Backend| {
        let mut sim = template.clone();
        sim.set_execution(TraversalStrategy::CellWise, backend).unwrap();
        sim.step().unwrap();
        let reps: Vec<f64> = (0..3)
            .map(|_| {
                let t0 = Instant::now();
                sim.step().unwrap();
                t0.elapsed().as_secs_f64()
            })
            .collect();
        median(&reps)
    };
    (time(Backend::Serial), time(Backend::WorkStealing { threads, grain: 1 }))
}

fn c7_scaling() -> (Verdict, String) {
    let cores = detect_cores();
    if cores < 4 {
        return (Verdict::Warn, format!("skipped: needs 4 cores, this machine has {cores}"));
    }
    let dedicated = std::env::var("WAVESWEEP_DEDICATED").is_ok_and(|v| v == "1");
    let mut report = Vec::new();
    let mut ok = true;
    for (kind, need) in [(KernelKind::Euler, 2.0), (KernelKind::Advection, 1.6)] {
        let (serial, par) = serial_vs_threads(kind, 2048, 4);
        let speedup = serial / par;
        ok &= speedup >= need;
        report.push(format!("{kind} speedup {speedup:.2} (need {need})"));
    }
    let detail = report.join(", ");
    match (ok, dedicated) {
        (true, _) => (Verdict::Pass, detail),
        (false, true) => (Verdict::Fail, detail),
        (false, false) => (Verdict::Warn, format!("{detail}; shared machine, set WAVESWEEP_DEDICATED=1 to enforce")),
    }
}

fn c8_cost_ordering() -> (bool, String) {
    let cfg = BenchConfig {
        kernels: KernelKind::ALL.to_vec(),
        sizes: vec![(1024, 1024)],
        strategies: vec![TraversalStrategy::CellWise],
        backends: vec![BackendKind::Serial],
        threads: vec![1],
        grain: 1,
        steps: 2,
        warmup: 1,
        repetitions: 3,
        controller: TimestepController::default(),
        ic: None,
        inject_fault: false,
    };
    let recs = run_bench(&cfg, |_| {}).unwrap();
    let ms: Vec<f64> = recs.iter().map(|r| r.ms_per_step).collect();
    let ok = ms[0] < ms[1] && ms[1] <= ms[2] && ms[2] <= ms[3];
    (
        ok,
        format!(
            "ms/step advection {:.1} < acoustics-const {:.1} <= acoustics-var {:.1} <= euler {:.1}",
            ms[0], ms[1], ms[2], ms[3]
        ),
    )
}

fn c9_csv_contract() -> (bool, String) {
    let mut out = Vec::new();
    emit_csv(&[], &mut out).unwrap();
    let header_ok = out == b"kernel,nx,ny,strategy,backend,threads,steps,ms_per_step,mcells_per_s,speedup,efficiency\n"
        && CSV_HEADER.len() + 1 == out.len();

    let cfg = BenchConfig {
        kernels: vec![KernelKind::Advection, KernelKind::Euler],
        sizes: vec![(24, 16)],
        strategies: vec![TraversalStrategy::RowWise, TraversalStrategy::tiled(5, 3)],
        backends: BackendKind::ALL.to_vec(),
        threads: vec![1, 3],
        grain: 2,
        steps: 2,
        warmup: 0,
        repetitions: 1,
        controller: TimestepController::default(),
        ic: None,
        inject_fault: false,
    };
    let recs = run_bench(&cfg, |_| {}).unwrap();
    let mut csv = Vec::new();
    emit_csv(&recs, &mut csv).unwrap();
    let back = parse_csv(std::str::from_utf8(&csv).unwrap()).unwrap();
    let round_trip = back.len() == recs.len() && back.iter().zip(&recs).all(|(a, b)| a.same_setup(b));

    let bin = env!("CARGO_BIN_EXE_wavesweep");
    let args = [
        "bench", "--kernel", "advection", "--sizes", "32x24", "--backend", "serial,static", "--threads", "2",
        "--steps", "2", "--warmup", "0", "--reps", "1",
    ];
    let clean = Command::new(bin).args(args).output().unwrap();
    let faulty = Command::new(bin).args(args).arg("--inject-fault").output().unwrap();
    let guard = clean.status.code() == Some(0) && faulty.status.code() == Some(1) && faulty.stdout.is_empty();

    (
        header_ok && round_trip && guard,
        format!(
            "header exact {header_ok}, {} records round-trip {round_trip}, clean exit {:?}, injected fault exit {:?}",
            recs.len(),
            clean.status.code(),
            faulty.status.code()
        ),
    )
}

fn main() {
    let secs = |s| Some(Duration::from_secs(s));
    let mut lines = Vec::new();
    let mut push = |id, name, (verdict, detail)| lines.push(Line { id, name, verdict, detail });

    push(1, "fluctuation identity", timed(secs(5), c1_fluctuation_identity));
    push(2, "Roe property", timed(secs(5), c2_roe_property));
    push(3, "linear-kernel exactness", timed(None, c3_linear_exactness));
    push(4, "strategy/backend bitwise equivalence", timed(secs(30), c4_bitwise_equivalence));
    push(5, "conservation", timed(None, c5_conservation));
    push(6, "convergence", timed(secs(60), c6_convergence));
    push(7, "scaling", c7_scaling());
    push(8, "kernel cost ordering", timed(None, c8_cost_ordering));
    push(9, "CSV contract", timed(None, c9_csv_contract));

    let mut failed = 0;
    for l in &lines {
        let tag = match l.verdict {
            Verdict::Pass => "PASS",
            Verdict::Fail => {
                failed += 1;
                "FAIL"
            }
            Verdict::Warn => "WARN",
        };
        println!("{tag} [{}] {}: {}", l.id, l.name, l.detail);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
