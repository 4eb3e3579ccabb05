use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fexp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fexp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn simulated(dir: &Path, seed: &str, shape: &str) -> String {
    let p = dir
        .join(format!("sim{seed}.csv"))
        .to_string_lossy()
        .into_owned();
    let o = fexp(&[
        "--seed", seed, "--output", &p, "simulate", "--tau", "0.1", "--shape", shape,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    p
}

#[test]
fn simulate_is_seeded() {
    let a = fexp(&["--seed", "7", "simulate", "--tau", "0.05", "--shape", "6,7"]);
    let b = fexp(&["--seed", "7", "simulate", "--tau", "0.05", "--shape", "6,7"]);
    let c = fexp(&["--seed", "8", "simulate", "--tau", "0.05", "--shape", "6,7"]);
    assert_eq!(code(&a), 0);
    assert_eq!(stdout(&a), stdout(&b));
    assert_ne!(stdout(&a), stdout(&c));
    let text = stdout(&a);
    assert!(text.starts_with("6,7\n"));
    assert_eq!(text.lines().count(), 7);

    let j = fexp(&[
        "--seed", "7", "--format", "json", "simulate", "--tau", "0.05", "--shape", "6,7", "--dist",
        "uniform",
    ]);
    let v: Value = serde_json::from_str(&stdout(&j)).unwrap();
    assert_eq!(v["rows"], 6);
    assert_eq!(v["values"][5].as_array().unwrap().len(), 7);
}

#[test]
fn grid_points_to_lattice() {
    let dir = tempfile::tempdir().unwrap();
    let pts = write(
        dir.path(),
        "pts.csv",
        "lat,lon,value\n0.5,-0.5,1\n0.5,-0.5,3\n1.5,-1.5,10\n1.5,-0.5,4\n9,9,100\n",
    );
    let o = fexp(&[
        "grid", "--points", &pts, "--bbox", "0,2,-2,0", "--shape", "2,2",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    // row 1 south, column 1 east
    assert_eq!(stdout(&o), "2,2\n2,NA\n4,10\n");

    let bad = write(dir.path(), "bad.csv", "lat,lon\n1,2\n");
    assert_eq!(
        code(&fexp(&[
            "grid", "--points", &bad, "--bbox", "0,2,-2,0", "--shape", "2,2"
        ])),
        2
    );
    assert_eq!(
        code(&fexp(&[
            "grid", "--points", &pts, "--bbox", "2,0,-2,0", "--shape", "2,2"
        ])),
        2
    );
}

#[test]
fn spectrum_cepstrum_predict_chain() {
    let dir = tempfile::tempdir().unwrap();
    let lat = simulated(dir.path(), "4", "24,24");
    let spec = dir.path().join("spec.csv").to_string_lossy().into_owned();
    let o = fexp(&[
        "-o",
        &spec,
        "spectrum",
        "--lattice",
        &lat,
        "--bandwidth",
        "2,2",
    ]);
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(&spec).unwrap();
    assert!(text.starts_with("2,2,6,6\n"));
    assert_eq!(text.lines().count(), 1 + 7 * 12);

    // the cepstrum from the grid file equals the one computed from the lattice
    let from_grid = fexp(&["cepstrum", "--spectrum", &spec]);
    let from_lattice = fexp(&["cepstrum", "--lattice", &lat, "--bandwidth", "2,2"]);
    assert_eq!(code(&from_grid), 0);
    let (a, b) = (stdout(&from_grid), stdout(&from_lattice));
    assert!(a.starts_with("6,6,row\n0,0,"));
    for (x, y) in a.lines().zip(b.lines()).skip(1) {
        let u: f64 = x.rsplit(',').next().unwrap().parse().unwrap();
        let v: f64 = y.rsplit(',').next().unwrap().parse().unwrap();
        assert!((u - v).abs() < 1e-12);
    }
    let ceps = write(dir.path(), "ceps.csv", &a);
    let ar = fexp(&["cepstrum", "--spectrum", &spec, "--emit", "ar"]);
    let ar_path = write(dir.path(), "ar.csv", &stdout(&ar));

    // a masked target predicted from either coefficient file agrees
    let mut rows: Vec<String> = fs::read_to_string(&lat)
        .unwrap()
        .lines()
        .map(String::from)
        .collect();
    let mut cells: Vec<&str> = rows[10].split(',').collect();
    cells[4] = "NA";
    rows[10] = cells.join(",");
    let holed = write(dir.path(), "holed.csv", &(rows.join("\n") + "\n"));
    let p1 = fexp(&[
        "predict",
        "--lattice",
        &holed,
        "--coeffs",
        &ceps,
        "--target",
        "10,5",
    ]);
    let p2 = fexp(&[
        "predict",
        "--lattice",
        &holed,
        "--coeffs",
        &ar_path,
        "--target",
        "10,5",
    ]);
    assert_eq!(code(&p1), 0, "{}", String::from_utf8_lossy(&p1.stderr));
    let v1: Value = serde_json::from_str(&stdout(&p1)).unwrap();
    let v2: Value = serde_json::from_str(&stdout(&p2)).unwrap();
    let (x1, x2) = (
        v1["predictions"][0]["value"].as_f64().unwrap(),
        v2["predictions"][0]["value"].as_f64().unwrap(),
    );
    assert!((x1 - x2).abs() < 1e-12);
    assert_eq!(v1["predictions"][0]["order"], "row");

    // observed target is a validation error; a col request against row coefficients too
    assert_eq!(
        code(&fexp(&[
            "predict",
            "--lattice",
            &holed,
            "--coeffs",
            &ceps,
            "--target",
            "10,6"
        ])),
        2
    );
    assert_eq!(
        code(&fexp(&[
            "predict",
            "--lattice",
            &holed,
            "--coeffs",
            &ceps,
            "--target",
            "10,5",
            "--order",
            "col"
        ])),
        2
    );

    // fitted sources with a sequence of targets
    let seq = fexp(&[
        "predict",
        "--lattice",
        &holed,
        "--bandwidth",
        "2,2",
        "--target",
        "10,5",
        "--target",
        "25,3",
        "--demean",
    ]);
    assert_eq!(code(&seq), 2, "the hole sits inside the fitting region");
    let seq = fexp(&[
        "predict",
        "--lattice",
        &holed,
        "--window",
        "0,1,0,1",
        "--target",
        "10,5",
        "--target",
        "25,3",
        "--fit-region",
        "11,1,24,24",
        "--demean",
    ]);
    assert_eq!(code(&seq), 0, "{}", String::from_utf8_lossy(&seq.stderr));
    let v: Value = serde_json::from_str(&stdout(&seq)).unwrap();
    assert_eq!(v["predictions"].as_array().unwrap().len(), 2);
    assert!(v["mean"].is_f64());
}

#[test]
fn ar_fit_and_order_select() {
    let dir = tempfile::tempdir().unwrap();
    let lat = simulated(dir.path(), "5", "30,30");
    let o = fexp(&["ar-fit", "--lattice", &lat, "--window", "0,1,0,1"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["lags"].as_array().unwrap().len(), 3);
    assert_eq!(v["n_p"], 29 * 29);
    assert!(v["sigma2"].as_f64().unwrap() > 0.5);

    let cands = write(
        dir.path(),
        "cands.txt",
        "# candidates\n0,1,0,1\n0,2,0,2\n0,3,0,3\n",
    );
    let o = fexp(&[
        "--format",
        "json",
        "order-select",
        "--lattice",
        &lat,
        "--candidates",
        &cands,
        "--criterion",
        "fpe",
    ]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["table"].as_array().unwrap().len(), 3);
    assert_eq!(v["criterion"], "fpe");
    let csv = fexp(&["order-select", "--lattice", &lat, "--candidates", &cands]);
    assert_eq!(stdout(&csv).lines().count(), 4);
    assert_eq!(
        code(&fexp(&[
            "order-select",
            "--lattice",
            &lat,
            "--candidates",
            &cands,
            "--criterion",
            "aic"
        ])),
        2
    );
}

#[test]
fn numerical_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let flat = write(
        dir.path(),
        "flat.csv",
        &format!("6,6\n{}", "1,1,1,1,1,1\n".repeat(6)),
    );
    let o = fexp(&["ar-fit", "--lattice", &flat, "--window", "0,1,0,1"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("singular"));
}

#[test]
fn validation_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.csv", "2,2\n1,2\n3\n");
    let o = fexp(&["ar-fit", "--lattice", &bad, "--window", "0,1,0,1"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
    assert_eq!(
        code(&fexp(&["simulate", "--tau", "0.5", "--shape", "4,4"])),
        2
    );
    assert_eq!(
        code(&fexp(&[
            "simulate", "--tau", "0.1", "--shape", "4,4", "--dist", "cauchy"
        ])),
        2
    );
    assert_eq!(
        code(&fexp(&[
            "ar-fit",
            "--lattice",
            "/nonexistent.csv",
            "--window",
            "0,1,0,1"
        ])),
        2
    );
    assert_eq!(code(&fexp(&["no-such-command"])), 2);
    assert_eq!(
        code(&fexp(&[
            "--format", "xml", "simulate", "--tau", "0", "--shape", "2,2"
        ])),
        2
    );
}

#[test]
fn benchmark_table_and_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "cfg.json",
        r#"[{"tau":0.05,"nstar":5,"dist":"normal","bandwidths":[[1,1]],"ar_orders":[1],"reps":20,"master_seed":1},
            {"tau":-0.05,"nstar":5,"dist":"normal","bandwidths":[[1,1]],"ar_orders":[1],"reps":20,"master_seed":1}]"#,
    );
    let out = dir.path().join("table.csv").to_string_lossy().into_owned();
    let o = fexp(&["--seed", "9", "-o", &out, "benchmark", "--config", &cfg]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(&out).unwrap();
    let mut lines = table.lines();
    assert_eq!(
        lines.next().unwrap(),
        "m1,m2,pstar,fexp_periodogram_tau0.05,fexp_periodogram_tau-0.05,fexp_ar_tau0.05,fexp_ar_tau-0.05,ar_tau0.05,ar_tau-0.05"
    );
    assert_eq!(lines.next().unwrap().split(',').count(), 9);
    let prov: Value =
        serde_json::from_str(&fs::read_to_string(format!("{out}.provenance.json")).unwrap())
            .unwrap();
    assert_eq!(prov["seed"], serde_json::json!([9, 9]));
    assert_eq!(prov["reps"], serde_json::json!([20, 20]));
    assert_eq!(prov["failures"], 0);

    // same seed, same table
    let again = fexp(&["--seed", "9", "benchmark", "--config", &cfg]);
    assert!(stdout(&again).starts_with(&table));

    let j = fexp(&[
        "--format",
        "json",
        "benchmark",
        "--config",
        &cfg,
        "--reps",
        "5",
    ]);
    let v: Value = serde_json::from_str(&stdout(&j)).unwrap();
    assert_eq!(v["reports"][0]["rows"].as_array().unwrap().len(), 3);
    assert_eq!(v["provenance"]["reps"], serde_json::json!([5, 5]));

    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"tau":0.3,"nstar":5,"dist":"normal","bandwidths":[[1,1]],"ar_orders":[1],"master_seed":1}"#,
    );
    assert_eq!(code(&fexp(&["benchmark", "--config", &bad])), 2);
    let missing = write(dir.path(), "missing.json", r#"{"tau":0.1}"#);
    assert_eq!(code(&fexp(&["benchmark", "--config", &missing])), 2);
}
