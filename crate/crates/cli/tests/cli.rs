use std::path::Path;
use std::process::{Command, Output};

fn dunkl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dunkl"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

#[test]
fn constants_for_one_multiplicity() {
    let o = dunkl(&["constants", "--d", "1", "--kappa", "1.0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    for key in [
        "d",
        "kappa",
        "gamma",
        "sphere_constant",
        "mehta_constant",
        "unit_ball_measure",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    // d = 1, kappa = 1: a(S^0) = 2, mu(B_1) = 2/3, 1/c = 2^{3/2} Gamma(3/2) = sqrt(2 pi)
    let num = |k: &str| v[k].as_f64().unwrap();
    assert_eq!(num("gamma"), 1.0);
    assert!((num("sphere_constant") - 2.0).abs() < 1e-14);
    assert!((num("unit_ball_measure") - 2.0 / 3.0).abs() < 1e-14);
    assert!((num("mehta_constant") * (2.0 * std::f64::consts::PI).sqrt() - 1.0).abs() < 1e-14);
    // 17 significant digits
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(
        text.contains("\"sphere_constant\": 2.0000000000000000e0"),
        "{text}"
    );
}

#[test]
fn zero_dimension_is_rejected() {
    let o = dunkl(&["constants", "--d", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("d must be ≥ 1"), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
}

fn config_file(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::Builder::new().suffix(".toml").tempfile().unwrap();
    std::io::Write::write_all(&mut f, text.as_bytes()).unwrap();
    f
}

#[test]
fn kappa_and_grid_are_exclusive() {
    let f = config_file("[constants]\nd = 2\nkappa = [1.0]\nkappa-grid = [0.5, 1.0]\n");
    let o = dunkl(&["--config", f.path().to_str().unwrap(), "constants"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("mutually exclusive"), "{}", stderr(&o));
}

#[test]
fn unknown_keys_and_bad_numbers_are_distinct_errors() {
    let f = config_file("[constants]\ndee = 2\n");
    let o = dunkl(&["--config", f.path().to_str().unwrap(), "constants"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("dee"), "{}", stderr(&o));

    let o = dunkl(&["constants", "--d", "two"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("two"), "{}", stderr(&o));

    let o = dunkl(&["frobnicate"]);
    assert_ne!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("frobnicate"), "{}", stderr(&o));
}

#[test]
fn command_line_overrides_file() {
    let f = config_file("[global]\nformat = \"csv\"\n[constants]\nd = 3\n");
    let o = dunkl(&[
        "--config",
        f.path().to_str().unwrap(),
        "constants",
        "--d",
        "2",
        "--kappa",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("id,d,kappa,gamma"));
    // one value per coordinate, gamma = 1
    assert!(lines
        .next()
        .unwrap()
        .contains(",2,5.0000000000000000e-1;5.0000000000000000e-1,1.0000000000000000e0,"));
}

#[test]
fn reruns_are_byte_identical() {
    let args = [
        "kernel-check",
        "--kappa",
        "0.7",
        "--grid-n",
        "7",
        "--threads",
        "3",
    ];
    let a = dunkl(&args);
    let b = dunkl(&[
        "kernel-check",
        "--kappa",
        "0.7",
        "--grid-n",
        "7",
        "--threads",
        "1",
    ]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let header = String::from_utf8_lossy(&a.stdout)
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert!(
        header.starts_with("id,x,y,E,E_imag_modulus,eigen_residual"),
        "{header}"
    );
}

#[test]
fn out_writes_the_file_and_nothing_else() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("heat.json");
    let o = dunkl(&[
        "heat-check",
        "--tests",
        "mass",
        "--kappa",
        "0.5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    let entries: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(entries, vec![std::ffi::OsString::from("heat.json")]);
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(v["all_pass"], true);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert!(r["values"]["defect"].as_f64().unwrap() < 1e-8);
        assert_eq!(r["flags"][0]["tolerance"].as_f64().unwrap(), 1e-8);
    }
}

#[test]
fn failed_run_leaves_no_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = dunkl(&[
        "maximal",
        "--f",
        "custom-csv",
        "--csv",
        "/nonexistent/table.csv",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn small_measure_sweep_has_no_support_violations() {
    let o = dunkl(&[
        "verify-measure",
        "--kappa-grid",
        "0.3,2.5",
        "--xy-grid=-2:2:5",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers().unwrap().clone();
    let col = headers
        .iter()
        .position(|h| h == "support_violations")
        .unwrap();
    let rows: Vec<_> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 50);
    assert!(rows.iter().all(|r| &r[col] == "0"));
}

#[test]
fn custom_table_maximal() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("hat.csv");
    std::fs::write(&table, "node,value\n-1,0\n0,1\n1,0\n").unwrap();
    let o = dunkl(&[
        "maximal",
        "--kappa",
        "0.5",
        "--f",
        "custom-csv",
        "--csv",
        table.to_str().unwrap(),
        "--x-grid",
        "0,2",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    let m0 = v["rows"][0]["values"]["maximal"].as_f64().unwrap();
    let m2 = v["rows"][1]["values"]["maximal"].as_f64().unwrap();
    // the hat peaks at the origin, so M f(0) = f(0) in the limit r -> 0; the
    // radius grid stops at 1e-3, where the average is 1 - O(r)
    assert!(m0 <= 1.0 && m0 > 1.0 - 1e-3, "{m0}");
    assert!(m2 > 0.0 && m2 < 0.5, "{m2}");
}

#[test]
fn counterexample_exit_status_reflects_flags() {
    // the slope tolerance flag is red, so the run exits 1 with its report written
    let o = dunkl(&[
        "fs-counterexample",
        "--kappa",
        "0",
        "--N",
        "4",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let v = json(&o);
    assert_eq!(v["all_pass"], false);
    let failed: Vec<_> = v["flags"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|f| f["pass"] == false)
        .map(|f| f["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["slope_relative_gap"]);
}

#[test]
fn report_aggregates_json_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert_eq!(
        dunkl(&["constants", "--kappa", "1", "--out", a.to_str().unwrap()])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        dunkl(&[
            "fs-counterexample",
            "--N",
            "3",
            "--format",
            "json",
            "--out",
            b.to_str().unwrap()
        ])
        .status
        .code(),
        Some(1)
    );
    let o = dunkl(&[
        "report",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let v = json(&o);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows[0]["params"]["experiment"], "constants");
    assert_eq!(rows[0]["values"]["all_pass"], true);
    assert_eq!(rows[1]["values"]["failed_names"], "slope_relative_gap");

    let o = dunkl(&["report", Path::new("/nonexistent.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
