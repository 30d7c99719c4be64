//! End-to-end checks of the batch binary: exit codes, config handling, CSV
//! schema, determinism, and the corrupted-tableau failure path.

use std::path::PathBuf;
use std::process::{Command, Output};

const HEADER: &str = "level,h,tau,dofs_u,dofs_p,err_u_infH1,eoc_u,err_p_infL2,eoc_p_L2,\
                      err_p_l2H1,eoc_p_H1,energy_residual_max,compat_residual_max,runtime_s";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_biotfe"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("biotfe_cli_tests");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn usage_problems_exit_with_code_2() {
    let bad_flag = run(&["convergence", "--no-such-flag"]);
    assert_eq!(bad_flag.status.code(), Some(2));

    let bad_k = run(&["convergence", "--k", "7", "--levels", "1..1"]);
    assert_eq!(bad_k.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_k.stderr).contains("k"));

    let empty_range = run(&["convergence", "--levels", "4..2"]);
    assert_eq!(empty_range.status.code(), Some(2));
}

#[test]
fn config_errors_report_path_and_line() {
    let cfg = scratch("bad.cfg");
    std::fs::write(&cfg, "case = polynomial\nk = 2\ntau_ratio = wat\n").unwrap();
    let out = run(&["convergence", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(":3:"), "no line number in: {err}");
    assert!(err.contains("bad.cfg"), "no path in: {err}");
}

#[test]
fn flags_override_config_values() {
    let cfg = scratch("poly.cfg");
    std::fs::write(&cfg, "case = polynomial\nk = 1\nlevels = 1..1\nT = 0.43\n").unwrap();
    let base = run(&["convergence", "--config", cfg.to_str().unwrap()]);
    assert_eq!(base.status.code(), Some(0));
    let flagged = run(&[
        "convergence",
        "--config",
        cfg.to_str().unwrap(),
        "--T",
        "0.2",
    ]);
    assert_eq!(flagged.status.code(), Some(0));
    let tau = |out: &Output| {
        String::from_utf8_lossy(&out.stdout)
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .nth(2)
            .unwrap()
            .to_owned()
    };
    assert_eq!(tau(&base), "4.77778e-2", "9 steps of T=0.43 at h=1/2");
    assert_eq!(tau(&flagged), "5.00000e-2", "4 steps of T=0.2 at h=1/2");
}

#[test]
fn csv_schema_floor_and_determinism() {
    let out_a = scratch("run_a.csv");
    let out_b = scratch("run_b.csv");
    for path in [&out_a, &out_b] {
        let out = run(&[
            "convergence",
            "--case",
            "polynomial",
            "--k",
            "1",
            "--levels",
            "1..2",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let a = std::fs::read(&out_a).unwrap();
    let b = std::fs::read(&out_b).unwrap();
    assert_eq!(a, b, "identical runs must produce identical bytes");

    let text = String::from_utf8(a).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), HEADER);
    for line in lines {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 14, "row arity in {line}");
        for idx in [6, 8, 10] {
            assert!(cells[idx].is_empty(), "eoc below floor must be empty: {line}");
        }
        for idx in [5, 7, 9] {
            let v: f64 = cells[idx].parse().unwrap();
            assert!(v < 1e-9, "exact case error {v} in {line}");
            assert!(cells[idx].contains('e'), "scientific notation in {line}");
        }
        assert!(cells[13].is_empty(), "runtime without --timing: {line}");
    }
}

#[test]
fn plot_script_is_written_next_to_the_csv() {
    let out = scratch("plotted.csv");
    let status = run(&[
        "convergence",
        "--case",
        "polynomial",
        "--k",
        "1",
        "--levels",
        "1..1",
        "--out",
        out.to_str().unwrap(),
        "--emit_plots",
    ]);
    assert_eq!(status.status.code(), Some(0));
    let script = std::fs::read_to_string(out.with_extension("gp")).unwrap();
    assert!(script.contains("plotted.csv"));
    assert!(script.contains("logscale"));
}

#[test]
fn infsup_prints_positive_constants() {
    let out = run(&["infsup", "--k", "1", "--levels", "1..2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout).into_owned();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "level,beta_h");
    let mut count = 0;
    for line in lines {
        let beta: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!(beta > 0.0, "beta in {line}");
        count += 1;
    }
    assert_eq!(count, 2);
}

#[test]
fn energy_check_passes_clean_and_rejects_corrupted_tableau() {
    let ok = run(&["energy-check", "--s", "2", "--levels", "3..3"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("energy checks passed"));

    let bad = run(&["energy-check", "--s", "2", "--levels", "3..3", "--corrupt-tableau"]);
    assert_eq!(bad.status.code(), Some(1));
}
