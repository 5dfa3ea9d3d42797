use std::path::Path;
use std::process::Command;

use serde_json::Value;

fn dps(args: &[&str], cwd: &Path) -> (i32, Vec<u8>, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_dps"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        out.stdout,
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn json(args: &[&str], cwd: &Path) -> Value {
    let (code, stdout, stderr) = dps(args, cwd);
    assert_eq!(code, 0, "{args:?}: {stderr}");
    serde_json::from_slice(&stdout).unwrap()
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn generated_states_round_trip_through_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    for (dim, p) in [(4, 0.3), (3, -0.4), (5, 0.9), (6, -0.15)] {
        let (p_s, dim_s) = (p.to_string(), dim.to_string());
        dps(&["gen", "dps", "--dim", &dim_s, "--p", &p_s, "--seed", "11", "--out", "s.json"], cwd);
        let r = json(&["analyze", "s.json"], cwd);
        assert_eq!(r["results"]["verdict"], "DPS");
        assert!((num(&r["results"]["p"]) - p).abs() < 1e-9, "{}", r["results"]["p"]);
    }
    dps(&["gen", "isotropic", "--da", "3", "--f", "0.6", "--out", "i.json"], cwd);
    let r = json(&["analyze", "i.json"], cwd);
    assert!((num(&r["results"]["p"]) - (9.0 * 0.6 - 1.0) / 8.0).abs() < 1e-9);
    dps(&["gen", "haar-pure", "--dim", "3", "--seed", "1", "--out", "h.json"], cwd);
    let r = json(&["analyze", "h.json"], cwd);
    assert!((num(&r["results"]["p"]) - 1.0).abs() < 1e-9);
}

#[test]
fn analyze_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    std::fs::write(
        cwd.join("mixed.json"),
        r#"{"dim": 3, "matrix": [[[0.3333333333333333, 0], [0, 0], [0, 0]],
            [[0, 0], [0.3333333333333333, 0], [0, 0]], [[0, 0], [0, 0], [0.3333333333333334, 0]]]}"#,
    )
    .unwrap();
    let r = json(&["analyze", "mixed.json"], cwd);
    assert_eq!(r["results"]["verdict"], "DPS");
    assert!(num(&r["results"]["p"]).abs() < 1e-12);

    // 0.7|0><0| + 0.3|+><+| in D = 3
    let m = |re: f64| format!("[{re}, 0]");
    let text = format!(
        r#"{{"dim": 3, "matrix": [[{}, {}, {}], [{}, {}, {}], [{}, {}, {}]]}}"#,
        m(0.85), m(0.15), m(0.0), m(0.15), m(0.15), m(0.0), m(0.0), m(0.0), m(0.0)
    );
    std::fs::write(cwd.join("mix.json"), text).unwrap();
    let r = json(&["analyze", "mix.json"], cwd);
    assert_eq!(r["results"]["verdict"], "NOT-DPS");
    assert!(num(&r["results"]["star_residual"]) > 1e-3);
    assert_eq!(r["results"]["p"], Value::Null);

    dps(&["gen", "dps", "--dim", "2", "--p", "0.5", "--out", "q.json"], cwd);
    let r = json(&["analyze", "q.json"], cwd);
    assert_eq!(r["results"]["invariant_ladder"], Value::Null);
    let keys: Vec<&String> = r.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["command", "args", "inputs_digest", "tolerances", "results", "checks"]);
}

#[test]
fn invalid_inputs_exit_with_input_code() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    std::fs::write(cwd.join("h.json"), r#"{"dim": 2, "matrix": [[[0.5, 0], [0.1, 0]], [[0, 0], [0.5, 0]]]}"#).unwrap();
    let (code, stdout, stderr) = dps(&["analyze", "h.json"], cwd);
    assert_eq!(code, 2);
    assert!(stdout.is_empty());
    assert!(stderr.contains("Hermiticity") && stderr.contains("1.000e-1"), "{stderr}");
    std::fs::write(cwd.join("t.json"), r#"{"dim": 2, "matrix": [[[0.5, 0], [0, 0]], [[0, 0], [0.6, 0]]]}"#).unwrap();
    let (code, _, stderr) = dps(&["analyze", "t.json"], cwd);
    assert_eq!(code, 2);
    assert!(stderr.contains("unit-trace"), "{stderr}");
    std::fs::write(cwd.join("x.json"), r#"{"dim": 2, "matrix": [], "extra": 1}"#).unwrap();
    assert_eq!(dps(&["analyze", "x.json"], cwd).0, 2);
    assert_eq!(dps(&["analyze", "missing.json"], cwd).0, 2);
    assert_eq!(dps(&["moments"], cwd).0, 2);
    assert_eq!(dps(&["fig1", "--grid", "1"], cwd).0, 2);
    // the loader tolerance is a flag
    assert_eq!(dps(&["--trace-tol", "0.2", "analyze", "t.json"], cwd).0, 0);
}

#[test]
fn domain_errors_exit_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    dps(&["gen", "dps", "--dim", "4", "--p", "0.3", "--out", "s.json"], cwd);
    dps(&["gen", "haar-pure", "--dim", "3", "--out", "h.json"], cwd);
    let (code, stdout, _) = dps(&["channel", "depolarize", "s.json", "--p", "-0.2", "--require-cp", "--out", "o.json"], cwd);
    assert_eq!(code, 3);
    assert!(stdout.is_empty() && !cwd.join("o.json").exists());
    assert_eq!(dps(&["channel", "depolarize", "s.json", "--p", "-0.2", "--out", "o.json"], cwd).0, 0);
    assert_eq!(dps(&["entanglement", "s.json", "--dims", "3", "2"], cwd).0, 3);
    assert_eq!(dps(&["distance", "s.json", "h.json"], cwd).0, 3);
    dps(&["gen", "dps", "--dim", "9", "--p", "0.5", "--out", "big.json"], cwd);
    assert_eq!(dps(&["moments", "big.json", "--m", "4", "--mode", "perm"], cwd).0, 3);
    std::fs::write(
        cwd.join("mix.json"),
        r#"{"dim": 4, "matrix": [[[0.5,0],[0,0],[0,0],[0,0]],[[0,0],[0.5,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[0,0]]]}"#,
    )
    .unwrap();
    assert_eq!(dps(&["distance", "mix.json", "s.json", "--method", "closed"], cwd).0, 3);
    assert_eq!(dps(&["distance", "mix.json", "s.json", "--method", "oracle"], cwd).0, 0);
}

#[test]
fn distance_examples() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    dps(&["gen", "dps", "--dim", "5", "--p", "0.4", "--seed", "1", "--out", "a.json"], cwd);
    dps(&["gen", "dps", "--dim", "5", "--p", "-0.1", "--seed", "2", "--out", "b.json"], cwd);
    let r = json(&["distance", "a.json", "a.json"], cwd);
    assert!((num(&r["results"]["fidelity"]) - 1.0).abs() < 1e-9);
    assert!(num(&r["results"]["trace_distance"]).abs() < 1e-9);
    let r = json(&["distance", "a.json", "b.json", "--method", "both"], cwd);
    assert!(num(&r["results"]["delta"]["fidelity"]) < 1e-8);
    assert!(num(&r["results"]["delta"]["trace_distance"]) < 1e-8);
    assert_eq!(r["checks"]["fuchs_chain"], true);

    dps(&["gen", "dps", "--dim", "5", "--p", "0.4", "--seed", "3", "--out", "c.json"], cwd);
    let r = json(&["distance", "a.json", "c.json"], cwd);
    let f = num(&r["results"]["f"]);
    assert!((num(&r["results"]["trace_distance"]) - 0.4 * (1.0 - f).sqrt()).abs() < 1e-10);
}

#[test]
fn entanglement_examples() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    // DPS over (|00> + |11>)/sqrt(2) in 3x3 with p = 1/3
    let p = 1.0 / 3.0;
    let mut m = vec![vec![[0.0, 0.0]; 9]; 9];
    for (i, row) in m.iter_mut().enumerate() {
        row[i][0] += (1.0 - p) / 9.0;
    }
    for a in [0, 4] {
        for b in [0, 4] {
            m[a][b][0] += p * h * h;
        }
    }
    let file = serde_json::json!({"dim": 9, "dims": [3, 3], "matrix": m});
    std::fs::write(cwd.join("bell.json"), serde_json::to_vec(&file).unwrap()).unwrap();
    let r = json(&["entanglement", "bell.json"], cwd);
    assert!((num(&r["results"]["ppt"]["negativity"]) - 5.0 / 54.0).abs() < 1e-12);
    assert_eq!(r["results"]["ppt"]["negative_count"], 1);
    assert_eq!(r["results"]["ppt"]["bound"], 3);
    let thresholds = r["results"]["dps"]["pair_thresholds"].as_array().unwrap();
    assert!(thresholds.iter().any(|t| (num(&t["threshold"]) - 2.0 / 11.0).abs() < 1e-9));
    assert!((num(&r["results"]["dps"]["max_entangled_pair_threshold"]) - 2.0 / 11.0).abs() < 1e-15);

    let mut product = vec![vec![[0.0, 0.0]; 4]; 4];
    product[0][0][0] = 1.0;
    let file = serde_json::json!({"dim": 4, "matrix": product});
    std::fs::write(cwd.join("prod.json"), serde_json::to_vec(&file).unwrap()).unwrap();
    let r = json(&["entanglement", "prod.json", "--dims", "2", "2"], cwd);
    assert!(num(&r["results"]["ppt"]["negativity"]).abs() < 1e-12);
    assert_eq!(r["results"]["ppt"]["entangled"], false);
    assert!(r["results"]["ppt"]["caveat"].is_string());
}

#[test]
fn channel_examples() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    dps(&["gen", "haar-pure", "--dim", "3", "--seed", "4", "--out", "h.json"], cwd);
    json(&["channel", "depolarize", "h.json", "--p", "0", "--out", "m.json"], cwd);
    let r = json(&["analyze", "m.json"], cwd);
    assert!(num(&r["results"]["coherence_norm"]) < 1e-12);

    let r = json(&["channel", "twirl", "--dim", "2", "--f", "0", "--out", "tw.json"], cwd);
    assert!((num(&r["results"]["p_hat"]) + 1.0 / 3.0).abs() < 1e-12);
    assert!(num(&r["results"]["depolarizing_deviation"]) < 1e-10);
    let r = json(&["channel", "twirl", "--channel", "tw.json"], cwd);
    assert!((num(&r["results"]["p_hat"]) + 1.0 / 3.0).abs() < 1e-12);

    let r = json(&["channel", "protocol1", "--state", "h.json", "--beta2", "0.5", "--out", "p.json"], cwd);
    assert!(num(&r["results"]["delta"]) < 1e-10);
    assert!(num(&r["results"]["literal_circuit_delta"]) > 1e-3);
    let r = json(&["analyze", "p.json"], cwd);
    assert!((num(&r["results"]["p"]) - 0.5).abs() < 1e-9);

    let r = json(&["channel", "recipe", "--dim", "2", "--f", "0.7", "--trials", "4000", "--seed", "9"], cwd);
    assert!(num(&r["results"]["z_score"]).abs() < 4.0);
    assert_eq!(r["seed"], 9);

    let r = json(&["isotropic", "--da", "3", "--f", "0.5", "--out", "iso.json"], cwd);
    assert_eq!(r["results"]["ppt"]["entangled"], true);
    let r = json(&["channel", "local", "iso.json", "--pa", "0.9", "--pb", "0.8"], cwd);
    assert_eq!(r["results"]["verdict"], "DPS");
    let r = json(&["schmidt", "iso.json"], cwd);
    assert_eq!(r["results"]["rank"], 3);
    let r = json(&["werner2q", "--p", "0.8", "--omega", "1.2"], cwd);
    assert_eq!(r["results"]["mu4_negative_predicted"], true);
    assert_eq!(r["results"]["ppt"]["entangled"], true);
}

#[test]
fn moments_examples() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    dps(&["gen", "haar-pure", "--dim", "3", "--out", "h.json"], cwd);
    let r = json(&["moments", "h.json", "--m", "2", "3"], cwd);
    for e in r["results"]["moments"].as_array().unwrap() {
        assert!((num(&e["value"]) - 1.0).abs() < 1e-12);
    }
    dps(&["gen", "dps", "--dim", "3", "--p", "-0.1", "--out", "n.json"], cwd);
    let r = json(&["moments", "n.json", "--assume-dps", "--mode", "perm"], cwd);
    assert!((num(&r["results"]["p"]) + 0.1).abs() < 1e-9);
    assert_eq!(r["results"]["sign_resolved"], true);
    let exact = json(&["moments", "n.json"], cwd);
    let mc = json(&["moments", "n.json", "--mode", "mc", "--shots", "100000", "--seed", "2"], cwd);
    for (e, m) in exact["results"]["moments"].as_array().unwrap().iter().zip(mc["results"]["moments"].as_array().unwrap()) {
        assert!((num(&e["value"]) - num(&m["value"])).abs() <= 3.0 * num(&m["std_error"]));
    }
    let r = json(&["moments", "n.json", "--mode", "mc", "--seed", "2", "--assume-dps"], cwd);
    assert!(num(&r["tolerances"]["t3"]) > 1e-8);
}

#[test]
fn fig1_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    let (code, stdout, _) = dps(&["fig1", "--dim", "9", "--grid", "5"], cwd);
    assert_eq!(code, 0);
    let text = String::from_utf8(stdout).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("p,f,bures,trace_distance,sqrt_one_minus_F"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 25);
    let at = |p: f64, f: f64| rows.iter().find(|r| (r[0] - p).abs() < 1e-15 && r[1] == f).unwrap();
    assert!((at(1.0, 0.0)[3] - 1.0).abs() < 1e-12);
    assert!((at(-1.0 / 80.0, 0.0)[3] - 1.0 / 80.0).abs() < 1e-12);
    for r in &rows {
        assert!(r[2] * r[2] / 2.0 <= r[3] + 1e-9 && r[3] <= r[4] + 1e-9);
    }
    let r = json(&["fig1", "--grid", "5", "--out", "s.csv"], cwd);
    assert_eq!(r["results"]["rows"], 25);
    assert_eq!(std::fs::read_to_string(cwd.join("s.csv")).unwrap(), text);
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cwd = dir.path();
    let a = dps(&["gen", "dps", "--dim", "4", "--p", "0.2", "--seed", "5"], cwd).1;
    let b = dps(&["gen", "dps", "--dim", "4", "--p", "0.2", "--seed", "5"], cwd).1;
    let c = dps(&["gen", "dps", "--dim", "4", "--p", "0.2", "--seed", "6"], cwd).1;
    assert_eq!(a, b);
    assert_ne!(a, c);
}
