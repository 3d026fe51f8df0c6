use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn curvlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curvlab")).current_dir(dir).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn certify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = curvlab(d, &["certify", "--model", "sphere", "--n", "4", "--set", "s0", "--out", "a.json"]);
    assert_eq!(code(&o), 0);
    let cert = json(&d.join("a.json"));
    assert!((cert["min_value"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(cert["status"], "PositiveDefiniteOnS");
    assert_eq!(cert["config_hash"].as_str().unwrap().len(), 64);

    let o = curvlab(d, &["certify", "--model", "cylinder", "--n", "5", "--set", "sprime", "--out", "b.json"]);
    assert_eq!(code(&o), 3);
    assert!(json(&d.join("b.json"))["min_value"].as_f64().unwrap().abs() < 1e-9);

    let mut args = vec!["certify", "--model", "diagonal", "--n", "4", "--set", "s0", "--out", "c.json", "--param", "1"];
    args.extend(["--param", "-1"].repeat(5));
    assert_eq!(code(&curvlab(d, &args)), 4);
}

#[test]
fn malformed_inputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.json"), "{\"kind\": ").unwrap();
    fs::write(d.join("unknown.json"), "{\"kind\": \"s7\"}").unwrap();
    let orbit3 = r#"{"kind":"orbit","element":{"re":[[0,1,0],[-1,0,0],[0,0,0]],"im":[[0,0,0],[0,0,0],[0,0,0]]}}"#;
    fs::write(d.join("orbit3.json"), orbit3).unwrap();
    fs::write(d.join("op.json"), r#"{"n": 4, "basis": "lex-xij-v1", "matrix": [[1.0]]}"#).unwrap();
    for args in [
        vec!["certify", "--model", "sphere", "--n", "4", "--set", "bad.json"],
        vec!["certify", "--model", "sphere", "--n", "4", "--set", "unknown.json"],
        vec!["certify", "--model", "sphere", "--n", "4", "--set", "orbit3.json"],
        vec!["certify", "--operator", "op.json", "--set", "s0"],
        vec!["certify", "--model", "nope", "--set", "s0"],
        vec!["glue", "--set", "bad.json"],
        vec!["report", "--set", "bad.json"],
    ] {
        let o = curvlab(d, &args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn operator_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let r = curvlab::curvature::CurvatureOperator::tangential_projector(5);
    let op = curvlab::io::OperatorJson::from_operator(&r);
    fs::write(d.join("cyl.json"), serde_json::to_string(&op).unwrap()).unwrap();
    let o = curvlab(d, &["certify", "--operator", "cyl.json", "--set", "s0", "--out", "c.json"]);
    assert_eq!(code(&o), 0);
    assert!((json(&d.join("c.json"))["min_value"].as_f64().unwrap() - 0.5).abs() < 1e-9);
}

#[test]
fn flow_examples() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = curvlab(d, &["flow", "--model", "sphere", "--n", "4", "--dt", "1e-4", "--t-max", "0.4", "--record-every", "100"]);
    assert_eq!(code(&o), 0);
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let tb = summary["blow_up_time"].as_f64().unwrap();
    assert!((tb - 1.0 / 3.0).abs() < 0.01 / 3.0, "{tb}");

    let o = curvlab(
        d,
        &[
            "flow", "--model", "cylinder", "--n", "5", "--dt", "1e-3", "--t-max", "0.2", "--record-every", "20",
            "--check-cone", "sprime", "--restarts", "4", "--out", "cyl.csv",
        ],
    );
    assert_eq!(code(&o), 0);
    let text = fs::read_to_string(d.join("cyl.csv")).unwrap();
    assert!(text.lines().nth(2).unwrap().ends_with(",qmin_sprime"));
    let rows = csv_rows(&d.join("cyl.csv"));
    assert!(rows.len() > 5);
    assert!(rows.iter().all(|r| r[3] >= -1e-6));

    let o = curvlab(d, &["flow", "--model", "zero", "--n", "4", "--t-max", "0.05", "--out", "zero.csv"]);
    assert_eq!(code(&o), 0);
    assert!(csv_rows(&d.join("zero.csv")).iter().all(|r| r[1] == 0.0 && r[2] == 0.0));
}

#[test]
fn degenerate_modes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // semisimple X₀₁ + 2X₂₃ in so(5)
    let mut re = vec![vec![0.0; 5]; 5];
    re[1][0] = 1.0;
    re[0][1] = -1.0;
    re[3][2] = 2.0;
    re[2][3] = -2.0;
    let x = serde_json::json!({"n": 5, "re": re, "im": vec![vec![0.0; 5]; 5]});
    fs::write(d.join("x.json"), x.to_string()).unwrap();
    let o = curvlab(d, &["degenerate", "--mode", "so", "--matrix", "x.json", "--out", "so.json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rep = json(&d.join("so.json"));
    assert_eq!(rep["mode"], "so");
    assert_eq!(rep["reduction"]["rank"], 2);
    assert!(rep["reduction"]["square_residual"].as_f64().unwrap() < 1e-8);

    // J₃ ⊕ J₁
    let mut j = vec![vec![0.0; 4]; 4];
    j[0][1] = 1.0;
    j[1][2] = 1.0;
    let y = serde_json::json!({"n": 4, "re": j, "im": vec![vec![0.0; 4]; 4]});
    fs::write(d.join("y.json"), y.to_string()).unwrap();
    let o = curvlab(d, &["degenerate", "--mode", "gl", "--matrix", "y.json", "--out", "gl.json"]);
    assert_eq!(code(&o), 0);
    let rep = json(&d.join("gl.json"));
    assert_eq!(rep["jordan"]["partition"], serde_json::json!([3, 1]));
    assert_eq!(rep["rank_one"]["rank"], 1);

    // J₃ ⊕ J₁ is not skew
    let o = curvlab(d, &["degenerate", "--mode", "so", "--matrix", "y.json"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn glue_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = curvlab(d, &["glue", "--background", "sphere", "--n", "5", "--set", "s0", "--eps", "0.5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let scan = fs::read_to_string(d.join("scan.csv")).unwrap();
    assert!(scan.lines().nth(2).unwrap() == "r,u,w,K_rad,K_sph,qmin,a_argmin");
    let rows = csv_rows(&d.join("scan.csv"));
    assert_eq!(rows.len(), 2000);
    assert!(rows.iter().all(|r| r[5] > 0.0));
    let profile = json(&d.join("profile.json"));
    assert!(profile["profile"]["r0"].as_f64().unwrap() > 0.0);

    let o = curvlab(d, &["glue", "--set", "sprime"]);
    assert_eq!(code(&o), 5);
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.contains("witness X(e0,e1) + i X(e0,e2)"));

    let o = curvlab(d, &["glue", "--set", "s0", "--d-scale", "1e3"]);
    assert_eq!(code(&o), 6);
    assert!(String::from_utf8_lossy(&o.stdout).contains("fails at grid point t ="));
}

#[test]
fn report_branches() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = curvlab(d, &["report", "--set", "s0", "--n", "5"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["branch"], "gluing");
    assert!((v["k"].as_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-6);
    let o = curvlab(d, &["report", "--set", "sprime", "--n", "5", "--out", "r.json"]);
    assert_eq!(code(&o), 0);
    let v = json(&d.join("r.json"));
    assert_eq!(v["branch"], "flow");
    assert_eq!(v["case"], "Isotropic");
}

#[test]
fn outputs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let runs: [(&[&str], &[&str]); 3] = [
        (&["certify", "--model", "quarter_pinched", "--n", "5", "--param", "0.3", "--set", "sprime", "--seed", "9"], &["certificate.json"]),
        (&["glue", "--n", "5", "--set", "s0", "--seed", "3"], &["profile.json", "scan.csv"]),
        (&["flow", "--model", "cylinder", "--n", "5", "--t-max", "0.05", "--check-cone", "s0", "--restarts", "4"], &["flow.csv"]),
    ];
    for (args, files) in runs {
        assert!(curvlab(a.path(), args).status.success());
        // a different worker count must not change the bytes
        let o = Command::new(env!("CARGO_BIN_EXE_curvlab")).current_dir(b.path()).env("CURVLAB_THREADS", "1").args(args).output().unwrap();
        assert!(o.status.success());
        for f in files {
            let x = fs::read(a.path().join(f)).unwrap();
            let y = fs::read(b.path().join(f)).unwrap();
            assert!(x == y, "{f} differs between runs");
        }
    }
    // the seed is recorded and changes the hash
    let o = curvlab(a.path(), &["certify", "--model", "sphere", "--n", "4", "--set", "s0", "--seed", "1", "--out", "s1.json"]);
    assert!(o.status.success());
    let o = curvlab(a.path(), &["certify", "--model", "sphere", "--n", "4", "--set", "s0", "--seed", "2", "--out", "s2.json"]);
    assert!(o.status.success());
    let (s1, s2) = (json(&a.path().join("s1.json")), json(&a.path().join("s2.json")));
    assert_eq!(s1["seed"], 1);
    assert_ne!(s1["config_hash"], s2["config_hash"]);
    let csv = fs::read_to_string(a.path().join("scan.csv")).unwrap();
    assert!(csv.starts_with("# config_hash=") && csv.lines().nth(1) == Some("# seed=3"));
}
