use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn spinboson(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spinboson"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&read(p)).unwrap()
}

#[test]
fn uncoupled_dynamics_has_no_entropy() {
    let dir = tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = spinboson(&[
        "dynamics",
        "--alpha",
        "0",
        "--delta",
        "0.1",
        "--tmax",
        "100",
        "--dt",
        "1",
        "--out-dir",
        out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(&dir.path().join("entropy_full.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,entropy,s_eq,method"));
    for l in lines {
        let s: f64 = l.split(',').nth(1).unwrap().parse().unwrap();
        assert!(s <= 1e-3);
    }
    let summary = json(&dir.path().join("summary_full.json"));
    for key in [
        "schema_version",
        "s_eq",
        "overshoot",
        "n_local_maxima",
        "t_of_max",
    ] {
        assert!(summary.get(key).is_some(), "missing {key}");
    }
    assert!(dir.path().join("sz.svg").exists());
}

#[test]
fn full_and_markov_series_are_aligned() {
    let dir = tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = spinboson(&[
        "dynamics",
        "--alpha",
        "0.2",
        "--tmax",
        "200",
        "--dt",
        "0.5",
        "--methods",
        "full,markov",
        "--out-dir",
        out,
    ]);
    assert!(o.status.success());
    let full = read(&dir.path().join("trajectory_full.csv"));
    let markov = read(&dir.path().join("trajectory_markov.csv"));
    assert_eq!(full.lines().count(), markov.lines().count());
    assert!(full.starts_with("t,sx,sy,sz,method\n"));
    for (a, b) in full.lines().zip(markov.lines()).skip(1) {
        assert_eq!(a.split(',').next(), b.split(',').next());
    }
    let f = json(&dir.path().join("summary_full.json"));
    let m = json(&dir.path().join("summary_markov.json"));
    assert!(f["n_local_maxima"].as_u64().unwrap() >= 1);
    assert_eq!(m["n_local_maxima"], 0);
}

#[test]
fn identical_configs_give_identical_bytes() {
    let a = tempdir().unwrap();
    let b = tempdir().unwrap();
    for (dir, jobs) in [(&a, "1"), (&b, "3")] {
        let o = spinboson(&[
            "--jobs",
            jobs,
            "dynamics",
            "--alpha",
            "0.15",
            "--tmax",
            "40",
            "--dt",
            "0.25",
            "--methods",
            "full,volterra",
            "--out-dir",
            dir.path().to_str().unwrap(),
        ]);
        assert!(o.status.success());
    }
    for f in [
        "trajectory_full.csv",
        "trajectory_volterra.csv",
        "entropy_full.csv",
        "summary_full.json",
        "entropy.svg",
    ] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(
        &conf,
        "# test\nalpha = 0.5\ndelta = 0.1\ntmax = 5\ndt = 1\ntime_axis = delta_r\n",
    )
    .unwrap();
    let out = dir.path().join("o");
    let o = spinboson(&[
        "dynamics",
        "--config",
        conf.to_str().unwrap(),
        "--alpha",
        "0.1",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let s = json(&out.join("summary_full.json"));
    assert_eq!(s["alpha"], 0.1);
    assert_eq!(s["time_axis"], "delta_r");
    // t column is Dr t, so the second row is below 1
    let csv = read(&out.join("trajectory_full.csv"));
    let t1: f64 = csv
        .lines()
        .nth(2)
        .unwrap()
        .split(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(t1 > 0.05 && t1 < 0.1);
}

#[test]
fn usage_and_numerical_exit_codes() {
    let dir = tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(
        spinboson(&["dynamics", "--dt", "0", "--out-dir", out])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        spinboson(&["dynamics", "--methods", "magic", "--out-dir", out])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        spinboson(&["dynamics", "--time-axis", "hours", "--out-dir", out])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(spinboson(&["frobnicate"]).status.code(), Some(2));
    let bad = dir.path().join("bad.conf");
    fs::write(&bad, "colour = red\n").unwrap();
    assert_eq!(
        spinboson(&["sweep", "--config", bad.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    // localized model: the pole search has nothing to find
    let o = spinboson(&[
        "dynamics",
        "--alpha",
        "1.3",
        "--delta",
        "0.001",
        "--tmax",
        "1",
        "--out-dir",
        out,
    ]);
    assert_eq!(o.status.code(), Some(1));
    let diag = json(&dir.path().join("error.json"));
    assert_eq!(diag["error"], "numerical");
    assert_eq!(diag["schema_version"], 1);
}

#[test]
fn regime_table_near_the_scaling_limit() {
    let dir = tempdir().unwrap();
    let o = spinboson(&[
        "regime",
        "--delta",
        "0.001",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let r = json(&dir.path().join("regime.json"));
    assert_eq!(r["schema_version"], 1);
    let b = &r["boundaries"];
    assert!((b["alpha_c"].as_f64().unwrap() - 0.5).abs() <= 0.005);
    assert!((b["alpha_star_c"].as_f64().unwrap() - 0.325).abs() <= 0.01);
    let first = &r["points"][0];
    assert_eq!(first["label"], "underdamped");
    assert!((first["omega0"].as_f64().unwrap() - 0.001).abs() < 1e-12);
    for key in ["omega0", "gamma_at_pole", "alpha_c", "label"] {
        assert!(first.get(key).is_some());
    }
}

#[test]
fn sweep_is_sorted_and_monotone() {
    let dir = tempdir().unwrap();
    let o = spinboson(&[
        "sweep",
        "--alphas",
        "0.8,0,0.4,0.1,0.2,0.6,0.3,0.5,0.7",
        "--deltas",
        "0.1",
        "--tmax",
        "0",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let csv = read(&dir.path().join("sweep.csv"));
    let rows: Vec<Vec<&str>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    let alphas: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(alphas.windows(2).all(|w| w[0] < w[1]));
    let s: Vec<f64> = rows.iter().map(|r| r[4].parse().unwrap()).collect();
    assert_eq!(s[0], 0.0);
    assert!(s.windows(2).all(|w| w[1] >= w[0]));
    let i = alphas.iter().position(|&a| a == 0.2).unwrap();
    assert!((s[i] - 0.61).abs() < 0.005);
    assert!(dir.path().join("s_eq.svg").exists());
}

#[test]
fn validate_quick_passes_without_coupling() {
    let dir = tempdir().unwrap();
    let o = spinboson(&[
        "validate",
        "--alpha",
        "0",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let r = json(&dir.path().join("validation.json"));
    assert_eq!(r["pass"], true);
    assert_eq!(r["schema_version"], 1);
}

#[test]
fn validate_reports_each_suite() {
    let dir = tempdir().unwrap();
    let o = spinboson(&[
        "validate",
        "--alpha",
        "0.1",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    let r = json(&dir.path().join("validation.json"));
    let suites = r["suites"].as_array().unwrap();
    let volterra = suites.iter().find(|s| s["name"] == "volterra").unwrap();
    assert_eq!(volterra["pass"], true);
    assert!(volterra["measured"].as_f64().unwrap() <= 1e-3);
    // the pole approximation misses the bound at this coupling, so the run is non-zero
    let residue = suites.iter().find(|s| s["name"] == "residue").unwrap();
    assert_eq!(residue["pass"], false);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn recipes_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("recipes");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        let text = read(&p);
        for line in text
            .lines()
            .map(|l| l.split('#').next().unwrap().trim())
            .filter(|l| !l.is_empty())
        {
            assert!(line.contains('='), "{}: {line}", p.display());
        }
        n += 1;
    }
    assert!(n >= 4);
}
