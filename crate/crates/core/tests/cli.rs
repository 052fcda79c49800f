use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn nhsl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nhsl")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run(config: &Path) -> Output {
    nhsl(&["run", "--config", config.to_str().unwrap()])
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn golden() -> Value {
    read_json(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/lebesgue-grid-1k.json"))
}

#[test]
fn fixtures_list_and_generate() {
    let out = nhsl(&["fixtures", "list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["lebesgue-grid-1k", "cantor-like", "two-cluster"] {
        assert!(text.contains(name));
    }
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let out = nhsl(&[
            "fixtures",
            "generate",
            "cantor-like",
            "--seed",
            "7",
            "--out",
            d.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    assert_eq!(
        fs::read(a.join("measure.json")).unwrap(),
        fs::read(b.join("measure.json")).unwrap()
    );
    let out = nhsl(&["fixtures", "generate", "nope", "--out", a.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn zero_function_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "exp.json",
        r#"{"fixture": "lebesgue-grid-1k", "f": {"source": "zero"}, "seed": 0, "mode": "relaxed", "out": "out"}"#,
    );
    let out = run(&cfg);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let cert = read_json(&dir.path().join("out/certificate.json"));
    assert_eq!(cert["c_star"], 0.0);
    let fam = read_json(&dir.path().join("out/families.json"));
    let members: Vec<&Value> = fam["families"]
        .as_object()
        .unwrap()
        .values()
        .flat_map(|v| v.as_array().unwrap())
        .collect();
    assert_eq!(members.len(), 1);
    assert_eq!(members[0]["cell_id"], fam["root"]);
}

#[test]
fn lebesgue_run_matches_golden_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"fixture": "lebesgue-grid-1k", "seed": 3, "mode": "relaxed", "out": "out",
        "weights": [{"family": "power", "a": 0.5, "center": 0.5, "p": 2.0}]}"#;
    let cfg = write_config(dir.path(), "exp.json", body);
    let out = run(&cfg);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let o = dir.path().join("out");
    for f in [
        "lattice.json",
        "lattice_check.json",
        "families.json",
        "certificate.csv",
        "certificate.json",
        "characteristic_0.json",
        "characteristic_0_cells.csv",
        "summary.json",
    ] {
        assert!(o.join(f).exists(), "{f} missing");
    }
    let summary = read_json(&o.join("summary.json"));
    assert_eq!(summary["mode"], "relaxed");
    assert_eq!(summary["config_hash"].as_str().unwrap().len(), 64);
    for f in [
        "lattice.json",
        "families.json",
        "certificate.json",
        "characteristic_0.json",
    ] {
        assert_eq!(read_json(&o.join(f))["config_hash"], summary["config_hash"], "{f}");
    }
    let g = golden();
    for key in [
        "c_star",
        "recursion_constant",
        "lattice_cells",
        "family_members",
        "n_tsharp_constant",
    ] {
        let (a, b) = (summary["measured"][key].as_f64().unwrap(), g[key].as_f64().unwrap());
        assert!((a - b).abs() <= 1e-12 * b.abs(), "{key}: {a} vs golden {b}");
    }
    let csv = fs::read_to_string(o.join("certificate.csv")).unwrap();
    assert!(csv.starts_with("atom,x,lhs,rhs,ratio\n"));
    assert_eq!(csv.lines().count(), 1025);

    let copy = dir.path().join("first");
    fs::rename(&o, &copy).unwrap();
    assert_eq!(run(&cfg).status.code(), Some(0));
    let mut names: Vec<_> = fs::read_dir(&copy).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    for n in names {
        assert_eq!(
            fs::read(copy.join(&n)).unwrap(),
            fs::read(o.join(&n)).unwrap(),
            "{n:?} differs"
        );
    }
}

#[test]
fn missing_file_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "exp.json",
        r#"{"measure": "absent.json", "kernel": "k.json", "params": "p.json", "seed": 0, "mode": "relaxed", "out": "o"}"#,
    );
    let out = run(&cfg);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.json"));
    let out = nhsl(&["run", "--config", dir.path().join("none.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn mode_mismatch_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "exp.json",
        r#"{"fixture": "paper-small-1", "seed": 0, "mode": "relaxed", "out": "o"}"#,
    );
    assert_eq!(run(&cfg).status.code(), Some(1));
}

#[test]
fn bad_lattice_params_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(
        nhsl(&["fixtures", "generate", "two-cluster", "--out", d.to_str().unwrap()])
            .status
            .success()
    );
    fs::write(
        d.join("params.json"),
        r#"{"C0": 0.5, "A0": 4.0, "alpha": 200.0, "max_level": 3, "relaxed": true}"#,
    )
    .unwrap();
    let cfg = write_config(
        d,
        "exp.json",
        r#"{"measure": "measure.json", "kernel": "kernel.json", "params": "params.json",
            "seed": 0, "mode": "relaxed", "out": "o"}"#,
    );
    assert_eq!(run(&cfg).status.code(), Some(2));
    let out = nhsl(&[
        "lattice",
        "build",
        "--measure",
        d.join("measure.json").to_str().unwrap(),
        "--params",
        d.join("params.json").to_str().unwrap(),
        "--out",
        d.join("l.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn lattice_build_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(
        nhsl(&["fixtures", "generate", "cantor-like", "--out", d.to_str().unwrap()])
            .status
            .success()
    );
    let p = |f: &str| d.join(f).to_str().unwrap().to_string();
    let out = nhsl(&[
        "lattice",
        "build",
        "--measure",
        &p("measure.json"),
        "--params",
        &p("params.json"),
        "--lambda",
        &p("lambda.json"),
        "--out",
        &p("lattice.json"),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = nhsl(&["lattice", "check", &p("lattice.json")]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["pass"], true);
}

#[test]
fn sparse_run_and_weights() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(
        nhsl(&["fixtures", "generate", "lebesgue-grid-1k", "--out", d.to_str().unwrap()])
            .status
            .success()
    );
    let p = |f: &str| d.join(f).to_str().unwrap().to_string();
    let f: Vec<f64> = (0..1024).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
    fs::write(d.join("f.json"), serde_json::to_string(&f).unwrap()).unwrap();
    let out = nhsl(&[
        "sparse",
        "run",
        "--measure",
        &p("measure.json"),
        "--kernel",
        &p("kernel.json"),
        "--params",
        &p("params.json"),
        "--lambda",
        &p("lambda.json"),
        "--f",
        &p("f.json"),
        "--out",
        &p("cert"),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let cert = read_json(&d.join("cert/certificate.json"));
    assert!(cert["c_star"].as_f64().unwrap() > 0.0);
    assert!(!cert["K_per_root"].as_array().unwrap().is_empty());

    fs::write(d.join("w.csv"), "w\n".to_string() + &"2.5\n".repeat(1024)).unwrap();
    let out = nhsl(&[
        "weights",
        "characteristic",
        "--fixture",
        "lebesgue-grid-1k",
        "--weight",
        &p("w.csv"),
        "--p",
        "2",
        "--out",
        &p("ch"),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let ch = read_json(&d.join("ch/characteristic.json"));
    assert!((ch["value"].as_f64().unwrap() - 1.0).abs() <= 1e-12);
    assert!(d.join("ch").join(ch["per_cell_table_path"].as_str().unwrap()).exists());

    let out = nhsl(&[
        "weights",
        "norm-sweep",
        "--fixture",
        "lebesgue-grid-1k",
        "--family",
        "power",
        "--a-range",
        "-0.5:0.5:0.5",
        "--out",
        &p("sweep.csv"),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(d.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("a,characteristic,empirical_norm"));
    let a: Vec<f64> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(a, vec![-0.5, 0.0, 0.5]);
}
