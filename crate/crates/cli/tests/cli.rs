//! Black-box tests of the `rcsccc` binary: output formats, config files and exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rcsccc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rcsccc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap()
}

#[test]
fn help_lists_every_subcommand() {
    let o = rcsccc(&["--help"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for sub in [
        "rate", "tables", "exit-curve", "threshold", "wf-grid", "bound", "ub-grid", "strategy",
        "simulate", "predict",
    ] {
        assert!(text.contains(sub), "missing {sub} in help");
    }
}

#[test]
fn rate_of_five_sixths_member() {
    let o = rcsccc(&["rate", "--d1", "20", "--d2", "20"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("5/6"), "{text}");
    assert!(text.contains("240"), "{text}");
}

#[test]
fn infeasible_dimensions_exit_with_code_2() {
    let o = rcsccc(&["rate", "--d1", "150", "--d2", "20"]);
    assert_eq!(o.status.code(), Some(2));
    let o = rcsccc(&["rate", "--rate", "1/2", "--d2", "50"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_flags_are_usage_errors() {
    let o = rcsccc(&["rate", "--bogus", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn strategies_pick_documented_values() {
    let o = rcsccc(&["strategy", "--rate", "1/2", "--mode", "compromise"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("d2=150"), "{}", stdout(&o));
    let o = rcsccc(&["strategy", "--rate", "2/3", "--mode", "ef"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("d2=100"), "{}", stdout(&o));
}

#[test]
fn bound_writes_monotone_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ub.csv");
    let o = rcsccc(&[
        "bound", "--rate", "1/2", "--d2", "150", "--k", "400", "--snr-min", "2", "--snr-max",
        "6", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("eb_n0_db,pb_bound"));
    let pb: Vec<f64> = lines
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(pb.len(), 9);
    assert!(pb.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn uncoded_simulation_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ber.csv");
    let manifest = dir.path().join("run.json");
    let o = rcsccc(&[
        "simulate", "--uncoded", "--k", "1000", "--snr-min", "0", "--snr-max", "2", "--snr-step",
        "1", "--seed", "5", "--out", out.to_str().unwrap(), "--manifest",
        manifest.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("eb_n0_db,ber,fer,bits,frames,bit_errors,frame_errors"));
    let ber0: f64 = lines.next().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    // Uncoded BPSK at 0 dB: Q(sqrt(2)) = 0.0786.
    assert!((ber0 - 0.0786).abs() < 0.02, "{ber0}");
    let m: serde_json::Value = serde_json::from_str(&read(&manifest)).unwrap();
    assert_eq!(m["seed"], 5);
}

#[test]
fn coded_simulation_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (p, threads) in [(&a, "1"), (&b, "2")] {
        let o = rcsccc(&[
            "simulate", "--rate", "1/2", "--d2", "100", "--k", "400", "--iters", "4", "--snr-min",
            "1", "--snr-max", "1", "--seed", "9", "--max-bits", "20000", "--threads", threads,
            "--out", p.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(read(&a), read(&b));
}

#[test]
fn config_file_supplies_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "threads = 1\n\n[rate]\nd1 = 20\nd2 = 20\n").unwrap();
    let o = rcsccc(&["--config", cfg.to_str().unwrap(), "rate"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("5/6"));
    let o = rcsccc(&["--config", cfg.to_str().unwrap(), "rate", "--d2", "180"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("1/2"), "{}", stdout(&o));
}

#[test]
fn malformed_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[rate\nd1 = 20\n").unwrap();
    let o = rcsccc(&["--config", cfg.to_str().unwrap(), "rate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exit_curve_csv_format() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exit.csv");
    let o = rcsccc(&[
        "exit-curve", "--d1", "20", "--d2", "20", "--k", "2000", "--snr", "3", "--samples",
        "4000", "--points", "6", "--seed", "1", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("ia,ie,component,eb_n0_db,d0,d1,d2"));
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    assert_eq!(rows.len(), 12);
    for r in &rows {
        let ie: f64 = r[1].parse().unwrap();
        assert!((0.0..=1.0).contains(&ie));
        assert_eq!(&r[4..], ["200", "20", "20"]);
    }
}

#[test]
fn threshold_csv_format() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("thr.csv");
    let o = rcsccc(&[
        "threshold", "--rate", "1/2", "--d2", "100", "--k", "2000", "--samples", "4000",
        "--seed", "1", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = read(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("rate,d2,eb_n0_db_min,target_pb,iters"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "1/2");
    assert_eq!(row[1], "100");
    let snr: f64 = row[2].parse().unwrap();
    assert!((0.0..3.0).contains(&snr), "{snr}");
    assert_eq!(row[4], "10");
}

#[test]
fn zero_iterations_are_rejected() {
    let o = rcsccc(&[
        "threshold", "--rate", "1/2", "--d2", "100", "--k", "2000", "--samples", "2000",
        "--iters", "0", "--seed", "1",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn partial_tables_are_nested_prefixes() {
    let dir = tempfile::tempdir().unwrap();
    let o = rcsccc(&[
        "tables", "--out-dir", dir.path().to_str().unwrap(), "--max-steps", "2", "--w-max", "3",
        "--h-max", "10", "--l-max", "10",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["upper_table.txt", "lower_table.txt"] {
        let text = read(&dir.path().join(name));
        let table = rcsccc::puncturing::RateCompatibleTable::parse(&text).unwrap();
        assert_eq!(table.len(), 2);
    }
}
