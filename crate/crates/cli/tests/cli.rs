use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn hdsign(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hdsign"))
        .args(args)
        .output()
        .expect("run hdsign")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes a generated sample to `dir/name` and returns its path.
fn sample(dir: &TempDir, name: &str, n: usize, d: usize, c: f64, seed: u64) -> PathBuf {
    let path = dir.path().join(name);
    let out = hdsign(&[
        "generate",
        "--model",
        "spherical-t5",
        "--n",
        &n.to_string(),
        "--d",
        &d.to_string(),
        "--c",
        &c.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        path_str(&path),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    path
}

#[test]
fn two_sample_json_has_the_report_schema() {
    let dir = TempDir::new().unwrap();
    let x = sample(&dir, "x.csv", 12, 20, 0.0, 1);
    let y = sample(&dir, "y.csv", 15, 20, 2.0, 2);
    let out = hdsign(&[
        "two-sample",
        "--x",
        path_str(&x),
        "--y",
        path_str(&y),
        "--stat",
        "wmw",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in [
        "schema",
        "stat_kind",
        "statistic",
        "z",
        "p_value",
        "reject",
        "alpha",
        "method",
        "n_resamples",
        "seed",
        "nuisance",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["schema"], 1);
    assert_eq!(v["stat_kind"], "WMW");
    for key in ["tr1", "tr2", "tr12", "gamma", "sigma1_sq", "sigma2_sq"] {
        assert!(v["nuisance"][key].is_number(), "nuisance.{key}");
    }
}

#[test]
fn permutation_output_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let x = sample(&dir, "x.csv", 10, 30, 0.0, 3);
    let y = sample(&dir, "y.csv", 10, 30, 0.0, 4);
    let args = [
        "two-sample",
        "--x",
        path_str(&x),
        "--y",
        path_str(&y),
        "--stat",
        "cq2",
        "--method",
        "permutation",
        "--perms",
        "500",
        "--seed",
        "7",
    ];
    let (a, b) = (hdsign(&args), hdsign(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["n_resamples"], 500);
    assert_eq!(v["seed"], 7);
    assert!(v["z"].is_null());
}

#[test]
fn one_sample_reports_its_statistic() {
    let dir = TempDir::new().unwrap();
    let x = sample(&dir, "x.csv", 10, 30, 1.0, 5);
    let out = hdsign(&[
        "one-sample",
        "--x",
        path_str(&x),
        "--stat",
        "s",
        "--format",
        "csv",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("schema,stat_kind,statistic,z,p_value"));
    assert!(lines[1].starts_with("1,S,"));

    let args = [
        "one-sample",
        "--x",
        path_str(&x),
        "--stat",
        "sr",
        "--method",
        "signflip",
        "--seed",
        "9",
    ];
    assert_eq!(hdsign(&args).stdout, hdsign(&args).stdout);
}

#[test]
fn ragged_rows_are_a_data_error() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("ragged.csv");
    let mut text = String::new();
    for i in 0..20 {
        let width = if i == 16 { 95 } else { 96 };
        let row: Vec<String> = (0..width)
            .map(|k| format!("{}", (i * 96 + k) as f64 * 0.01))
            .collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(&path, text).unwrap();
    let out = hdsign(&["one-sample", "--x", path_str(&path), "--stat", "cq1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(
        stderr(&out).contains("row 17: expected 96 fields, found 95"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn bad_cells_and_missing_files_are_data_errors() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "1,2\n3,x\n5,6\n").unwrap();
    let out = hdsign(&["one-sample", "--x", path_str(&path), "--stat", "cq1"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("row 2, column 2"), "{}", stderr(&out));

    let missing = dir.path().join("nope.csv");
    let out = hdsign(&["one-sample", "--x", path_str(&missing), "--stat", "cq1"]);
    assert_eq!(out.status.code(), Some(3));

    let x = sample(&dir, "x.csv", 6, 3, 0.0, 1);
    let y = sample(&dir, "y.csv", 6, 4, 0.0, 2);
    let out = hdsign(&[
        "two-sample",
        "--x",
        path_str(&x),
        "--y",
        path_str(&y),
        "--stat",
        "cq2",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(
        stderr(&out).contains("dimension mismatch"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn too_few_rows_for_t_sr() {
    let dir = TempDir::new().unwrap();
    let x = sample(&dir, "x.csv", 3, 5, 0.0, 1);
    let out = hdsign(&["one-sample", "--x", path_str(&x), "--stat", "sr"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(
        stderr(&out).contains("T_SR requires at least 4 observations"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn header_line_is_skipped() {
    let dir = TempDir::new().unwrap();
    let plain = sample(&dir, "x.csv", 8, 4, 0.5, 1);
    let body = fs::read_to_string(&plain).unwrap();
    let headed = dir.path().join("h.csv");
    fs::write(&headed, format!("a,b,c,d\n{body}")).unwrap();
    let run = |p: &Path| hdsign(&["one-sample", "--x", path_str(p), "--stat", "cq1"]).stdout;
    assert_eq!(run(&plain), run(&headed));
}

#[test]
fn usage_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("p.csv");
    let out = path_str(&out_path);
    let cases: Vec<Vec<&str>> = vec![
        vec![
            "simulate",
            "--model",
            "ar1-gauss",
            "--grid",
            "10:1",
            "--reps",
            "0",
            "--out",
            out,
        ],
        vec![
            "simulate",
            "--model",
            "ar1-gauss",
            "--grid",
            "10",
            "--out",
            out,
        ],
        vec![
            "simulate",
            "--model",
            "ar1-gauss",
            "--grid",
            "10:1",
            "--tests",
            "wmw:signflip",
            "--out",
            out,
        ],
        vec!["two-sample", "--x", "a", "--y", "b", "--stat", "s"],
        vec!["one-sample", "--x", "a", "--stat", "s", "--alpha", "1.5"],
        vec!["nonsense"],
    ];
    for args in cases {
        let o = hdsign(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
}

#[test]
fn generate_round_trips_bit_exactly() {
    let dir = TempDir::new().unwrap();
    let path = sample(&dir, "x.csv", 7, 5, 1.25, 11);
    let m = hdsign::csvio::read_matrix_path(&path).unwrap();
    let spec = hdsign::generators::GeneratorSpec::spherical_t(5, 5.0)
        .with_shift(hdsign::generators::MeanShift::first_coordinate(1.25))
        .with_seed(11);
    assert_eq!(m, hdsign::generators::generate(&spec, 7).unwrap().data);

    let stdout = hdsign(&[
        "generate",
        "--model",
        "spherical-t5",
        "--n",
        "7",
        "--d",
        "5",
        "--c",
        "1.25",
        "--seed",
        "11",
    ]);
    assert_eq!(stdout.stdout, fs::read(&path).unwrap());
}

#[test]
fn selftest_passes_and_lists_every_check() {
    let out = hdsign(&["selftest"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "T_CQ1",
        "T_CQ2",
        "T_S",
        "T_SR",
        "T_WMW",
        "tr_sigma_sq",
        "tr_sigma_cross",
        "gamma1",
    ] {
        let line = text
            .lines()
            .find(|l| l.starts_with(name))
            .unwrap_or_else(|| panic!("{name}"));
        let dev: f64 = line.split_whitespace().nth(4).unwrap().parse().unwrap();
        assert!(dev <= 1e-10, "{line}");
    }
    assert!(text.ends_with("PASS\n"));

    let once = hdsign(&["selftest", "--trials", "1", "--seed", "3"]);
    assert_eq!(once.status.code(), Some(0));
    assert_eq!(
        once.stdout,
        hdsign(&["selftest", "--trials", "1", "--seed", "3"]).stdout
    );
}

#[test]
fn simulate_dimension_grid_and_replay() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().join("grid.csv");
    let out = path_str(&out_path);
    let o = hdsign(&[
        "simulate",
        "--model",
        "ar1-gauss",
        "--grid",
        "100:1.5,200:3,400:4.5,800:6,1600:7.5",
        "--tests",
        "wmw:asym,cq2:asym",
        "--reps",
        "200",
        "--seed",
        "1",
        "--out",
        out,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(&out_path).unwrap();
    let points = hdsign::montecarlo::parse_plot_data(&csv).unwrap();
    assert_eq!(points.len(), 10);
    assert!(points.iter().all(|p| p.replications == 200));

    let manifest = format!("{out}.manifest.json");
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&manifest).unwrap()).unwrap();
    for key in [
        "schema",
        "command",
        "version",
        "timestamp",
        "plan",
        "results",
        "seeds",
    ] {
        assert!(m.get(key).is_some(), "manifest lacks {key}");
    }

    let replay_path = dir.path().join("replay.csv");
    let o = hdsign(&[
        "simulate",
        "--replay",
        &manifest,
        "--out",
        path_str(&replay_path),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(&replay_path).unwrap(), csv.into_bytes());
}

#[test]
fn subsample_table_text_layout() {
    let dir = TempDir::new().unwrap();
    let a = sample(&dir, "a.csv", 40, 10, 0.0, 1);
    let b = sample(&dir, "b.csv", 40, 10, 3.0, 2);
    let o = hdsign(&[
        "subsample",
        "--a",
        path_str(&a),
        "--b",
        path_str(&b),
        "--fraction",
        "0.25",
        "--reps",
        "20",
        "--perms",
        "49",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("Implementation as in the rho-mixing setup"));
    assert!(text.contains("Permutation implementation"));
    assert_eq!(text.lines().filter(|l| l.starts_with("T_WMW")).count(), 2);

    let o = hdsign(&[
        "subsample",
        "--a",
        path_str(&a),
        "--b",
        path_str(&b),
        "--fraction",
        "0.05",
    ]);
    assert_eq!(o.status.code(), Some(3));

    let o = hdsign(&[
        "subsample",
        "--a",
        path_str(&a),
        "--b",
        path_str(&b),
        "--tests",
        "wmw:oracle",
    ]);
    assert_eq!(o.status.code(), Some(2));
}
