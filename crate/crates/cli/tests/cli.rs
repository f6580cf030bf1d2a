use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_wielandt"));
    c.env_remove("WIELANDT_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn diag_json(d: &[f64]) -> String {
    let n = d.len();
    let rows: Vec<String> = (0..n)
        .map(|i| {
            let row: Vec<String> = (0..n).map(|j| if i == j { d[i].to_string() } else { "0".into() }).collect();
            format!("[{}]", row.join(","))
        })
        .collect();
    format!(r#"{{"n":{n},"entries":[{}]}}"#, rows.join(","))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

struct Pair {
    _dir: TempDir,
    a: String,
    b: String,
    root: PathBuf,
}

fn pair(a: &str, b: &str) -> Pair {
    let dir = TempDir::new().unwrap();
    let root = dir.path().to_path_buf();
    Pair {
        a: write(&root, "A.json", a),
        b: write(&root, "B.json", b),
        root,
        _dir: dir,
    }
}

fn section4() -> Pair {
    pair(&diag_json(&[3.0, 1.0, 1.0]), &diag_json(&[0.0, 2.0, 1.0]))
}

fn aligned() -> Pair {
    pair(&diag_json(&[3.0, 2.0, 1.0]), &diag_json(&[3.0, 2.0, 1.0]))
}

#[test]
fn check_section4_slack_one() {
    let p = section4();
    let o = run(&["check", &p.a, &p.b, "--indices", "3"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["report"]["verdict"], "holds");
    assert!((v["report"]["slack"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(v["config"]["seed"], 0);
}

#[test]
fn check_equality_instance() {
    let p = aligned();
    let o = run(&["check", &p.a, &p.b, "--indices", "1,2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["report"]["verdict"], "equality");
}

#[test]
fn malformed_input_exits_2_without_output() {
    let p = pair("{not json", &diag_json(&[1.0, 2.0]));
    let o = run(&["check", &p.a, &p.b, "--indices", "1"]);
    assert_eq!(code(&o), 2);
    assert!(o.stdout.is_empty());

    let p = pair(r#"{"n":2,"entries":[[0,1],[0,0]]}"#, &diag_json(&[1.0, 2.0]));
    assert_eq!(code(&run(&["check", &p.a, &p.b, "--indices", "1"])), 2);

    let p = section4();
    assert_eq!(code(&run(&["check", &p.a, &p.b, "--indices", "3,1"])), 2);
    assert_eq!(code(&run(&["check", &p.a, &p.b, "--indices", "1,2,3"])), 2);
    assert_eq!(code(&run(&["check", &p.a, &p.b, "--indices", "1", "--tol", "0"])), 2);
}

#[test]
fn check_csv_and_human() {
    let p = section4();
    let o = run(&["check", &p.a, &p.b, "--indices", "3", "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), "indices,lhs,rhs,slack,verdict");
    assert!(text.lines().nth(1).unwrap().starts_with("3,2,3,1,holds"));

    let o = run(&["check", &p.a, &p.b, "--indices", "3", "--format", "human"]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("verdict: holds"));
}

#[test]
fn scan_counts_and_lidskii() {
    let p = section4();
    let o = run(&["scan", &p.a, &p.b]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["reports"].as_array().unwrap().len(), 6);
    assert_eq!(v["lidskii"]["majorization"]["holds"], true);

    let p = aligned();
    let v = stdout_json(&run(&["scan", &p.a, &p.b]));
    assert!(v["reports"].as_array().unwrap().iter().any(|r| r["verdict"] == "equality"));
    assert!(v["equality_count"].as_u64().unwrap() >= 2);
}

#[test]
fn scan_refuses_large_n() {
    let d: Vec<f64> = (0..20).map(f64::from).collect();
    let p = pair(&diag_json(&d), &diag_json(&d));
    let o = run(&["scan", &p.a, &p.b]);
    assert_eq!(code(&o), 2);
    assert!(o.stdout.is_empty());
    assert!(String::from_utf8_lossy(&o.stderr).contains("cap"));
}

#[test]
fn trace_crossing_example() {
    let p = pair(&diag_json(&[1.0, 0.0]), &diag_json(&[-1.0, 1.0]));
    let out = p.root.join("curves.csv");
    let o = run(&["trace", &p.a, &p.b, "--grid", "11", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,lambda_1,lambda_2");
    for line in lines {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!((f[1] - (1.0 - f[0]).max(f[0])).abs() < 1e-14);
    }
    let crossings: Value = serde_json::from_str(&std::fs::read_to_string(p.root.join("curves.crossings.json")).unwrap()).unwrap();
    let list = crossings.as_array().unwrap();
    assert_eq!(list.len(), 1);
    assert!((list[0]["t"].as_f64().unwrap() - 0.5).abs() < 1e-8);
    assert_eq!(list[0]["curves"], serde_json::json!([1, 2]));
}

#[test]
fn trace_constant_pencil_and_section4() {
    let p = pair(&diag_json(&[2.0, 1.0, -1.0]), &diag_json(&[0.0, 0.0, 0.0]));
    let side = p.root.join("x.json");
    let o = run(&["trace", &p.a, &p.b, "--crossings", side.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let csv = String::from_utf8(o.stdout).unwrap();
    for line in csv.lines().skip(1) {
        assert!(line.ends_with(",2,1,-1"), "{line}");
    }
    assert_eq!(std::fs::read_to_string(&side).unwrap().trim(), "[]");

    let p = section4();
    let o = run(&["trace", &p.a, &p.b, "--t-hi", "2", "--format", "json"]);
    let v = stdout_json(&o);
    let ts: Vec<f64> = v["crossings"].as_array().unwrap().iter().map(|c| c["t"].as_f64().unwrap()).collect();
    assert!(ts.iter().any(|t| (t - 1.0).abs() < 1e-7), "{ts:?}");
}

#[test]
fn certify_aligned_and_round_trip() {
    let p = aligned();
    let cert = p.root.join("cert.json");
    let o = run(&["certify", &p.a, &p.b, "--indices", "1,2", "--out", cert.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&cert).unwrap()).unwrap();
    assert_eq!(v["status"], "certified");
    assert_eq!(v["certificate"]["r"], 1);
    assert_eq!(v["conditions"]["consistent"], true);
    assert_eq!(v["maximal_t1"]["kind"], "infinite");

    let o = run(&["verify-cert", cert.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout_json(&o)["status"], "verified");

    // A tampered subspace fails verification.
    let mut bad = v["certificate"].clone();
    bad["subspaces"][0][1] = serde_json::json!([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0]]);
    let path = write(&p.root, "bad.json", &bad.to_string());
    let o = run(&["verify-cert", &path]);
    assert_eq!(code(&o), 1);
    assert_eq!(stdout_json(&o)["status"], "failed");

    let path = write(&p.root, "junk.json", r#"{"indices": [1]}"#);
    assert_eq!(code(&run(&["verify-cert", &path])), 2);
}

#[test]
fn certify_strict_instance_exits_3() {
    let p = section4();
    let o = run(&["certify", &p.a, &p.b, "--indices", "3"]);
    assert_eq!(code(&o), 3);
    assert_eq!(stdout_json(&o)["status"], "equality not detected");
}

#[test]
fn csv_rejected_for_certify() {
    let p = aligned();
    let o = run(&["certify", &p.a, &p.b, "--indices", "1", "--format", "csv"]);
    assert_eq!(code(&o), 2);
    assert!(o.stdout.is_empty());
}

#[test]
fn rates_section4() {
    let p = section4();
    let v = stdout_json(&run(&["rates", &p.a, &p.b]));
    assert_eq!(v["nu"], serde_json::json!([0.0, 2.0, 1.0]));
    assert_eq!(v["cluster_multiplicities"], serde_json::json!([1, 2]));
    assert_eq!(v["majorization"]["holds"], true);
}

fn real_entries(m: &Value) -> Vec<Vec<f64>> {
    m["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|row| row.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect())
        .collect()
}

#[test]
fn gen_example_s4() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("s4");
    let o = run(&["gen", "example-s4", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let a: Value = serde_json::from_str(&std::fs::read_to_string(out.join("A.json")).unwrap()).unwrap();
    let b: Value = serde_json::from_str(&std::fs::read_to_string(out.join("B.json")).unwrap()).unwrap();
    assert_eq!(real_entries(&a), real_entries(&serde_json::from_str(&diag_json(&[3.0, 1.0, 1.0])).unwrap()));
    assert_eq!(real_entries(&b), real_entries(&serde_json::from_str(&diag_json(&[0.0, 2.0, 1.0])).unwrap()));
    let m: Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["construction"]["expected"]["maximal_t1"], 1.0);
    assert_eq!(m["construction"]["assumptions_hold"], true);

    let a = out.join("A.json");
    let b = out.join("B.json");
    let v = stdout_json(&run(&[
        "check",
        a.to_str().unwrap(),
        b.to_str().unwrap(),
        "--indices",
        "3",
    ]));
    assert!((v["report"]["slack"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn gen_equality_block_certifies() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("eb");
    let o = run(&["gen", "equality-block", "--n", "5", "--k", "2", "--seed", "9", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let m: Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let idx: Vec<String> = m["construction"]["indices"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.to_string())
        .collect();
    assert_eq!(m["config"]["seed"], 9);
    let o = run(&[
        "certify",
        out.join("A.json").to_str().unwrap(),
        out.join("B.json").to_str().unwrap(),
        "--indices",
        &idx.join(","),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let v = stdout_json(&o);
    assert_eq!(v["certificate"]["r"], 1);
}

#[test]
fn gen_random_is_deterministic_and_env_seeded() {
    let dir = TempDir::new().unwrap();
    let first = dir.path().join("one");
    let second = dir.path().join("two");
    let third = dir.path().join("three");
    for out in [&first, &second] {
        let o = run(&["gen", "random", "--n", "4", "--seed", "1", "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
    }
    let o = bin()
        .args(["gen", "random", "--n", "4", "--out", third.to_str().unwrap()])
        .env("WIELANDT_SEED", "1")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    for name in ["A.json", "B.json", "manifest.json"] {
        let x = std::fs::read(first.join(name)).unwrap();
        assert_eq!(x, std::fs::read(second.join(name)).unwrap(), "{name}");
        assert_eq!(x, std::fs::read(third.join(name)).unwrap(), "{name}");
    }
    assert_eq!(code(&run(&["gen", "random"])), 2);
}

#[test]
fn search_r_rejects_k1_and_runs() {
    assert_eq!(code(&run(&["search-r", "--k", "1"])), 2);
    let o = run(&["search-r", "--n", "5", "--k", "2", "--trials", "2", "--seed", "3"]);
    assert_eq!(code(&o), 0);
    let v = stdout_json(&o);
    assert_eq!(v["summary"]["trials"], 2);
    assert_eq!(v["summary"]["candidates"], serde_json::json!([]));
}
