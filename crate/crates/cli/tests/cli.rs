use std::process::{Command, Output};

use wavesweep::bench::{parse_csv, CSV_HEADER};

fn wavesweep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wavesweep"))
        .args(args)
        .env_remove("WAVESWEEP_THREADS")
        .output()
        .expect("binary runs")
}

#[test]
fn run_reports_sums_and_writes_state() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.csv");
    let out = wavesweep(&[
        "run", "--kernel", "advection", "--nx", "20", "--ny", "10", "--steps", "4",
        "--backend", "workstealing", "--threads", "2", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("steps=4"));
    assert!(stdout.contains("sum[0]="));
    let state = std::fs::read_to_string(path).unwrap();
    assert_eq!(state.lines().next(), Some("i,j,q0"));
    assert_eq!(state.lines().count(), 1 + 20 * 10);
}

#[test]
fn run_to_final_time() {
    let out = wavesweep(&["run", "--kernel", "euler", "--nx", "40", "--ny", "4", "--t-final", "0.05"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("time=5.000000e-2"));
}

#[test]
fn bench_writes_csv_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bench.csv");
    let out = wavesweep(&[
        "bench", "--kernel", "acoustics-var", "--sizes", "16x8,8x8", "--strategy", "cellwise,tiled",
        "--tile", "4x4", "--backend", "serial,static", "--threads", "1,2", "--steps", "1", "--reps", "1",
        "--warmup", "0", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.starts_with(&format!("{CSV_HEADER}\n")));
    let recs = parse_csv(&text).unwrap();
    // per size and strategy: one serial row plus two static rows
    assert_eq!(recs.len(), 2 * 2 * 3);
    assert_eq!(recs[3].strategy.to_string(), "tiled:4x4");
    assert!(recs.iter().filter(|r| r.threads == 1).all(|r| r.backend.name() != "serial" || r.speedup == 1.0));
}

#[test]
fn thread_default_follows_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_wavesweep"))
        .args(["bench", "--kernel", "advection", "--sizes", "8x8", "--strategy", "rowwise", "--backend", "static",
            "--steps", "1", "--reps", "1", "--warmup", "0"])
        .env("WAVESWEEP_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let threads: Vec<usize> = parse_csv(&String::from_utf8(out.stdout).unwrap()).unwrap().iter().map(|r| r.threads).collect();
    assert_eq!(threads, [1, 2, 3]);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["bench", "--threads", "0"][..],
        &["bench", "--threads", "1,0,2"],
        &["run", "--kernel", "plasma"],
        &["run", "--nx", "0"],
        &["run", "--kernel", "advection", "--ic", "euler-sod-x"],
        &["bench", "--kernel", "advection", "--ic", "euler-uniform"],
        &["frobnicate"],
        &[],
    ] {
        assert_eq!(wavesweep(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn help_exits_0_and_mentions_env() {
    let out = wavesweep(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("WAVESWEEP_THREADS"));
}

#[test]
fn fault_injection_aborts_without_csv() {
    let out = wavesweep(&[
        "bench", "--kernel", "euler", "--sizes", "16x16", "--backend", "workstealing", "--threads", "2",
        "--steps", "1", "--reps", "2", "--inject-fault",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(out.stdout.is_empty());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("differs from serial"), "{err}");
    assert!(err.contains("euler 16x16"), "{err}");
}
