use std::process::Command;

use elliptika_cli::run;
use serde_json::Value;

fn json(args: &[&str]) -> (i32, Value, String) {
    let mut all: Vec<&str> = args.to_vec();
    all.push("--json");
    let out = run(all);
    let v = serde_json::from_str(&out.stdout).unwrap_or(Value::Null);
    (out.code, v, out.stdout)
}

fn csv_rows(text: &str) -> Vec<(f64, f64)> {
    text.lines()
        .skip(1)
        .map(|l| {
            let (t, h) = l.split_once(',').unwrap();
            (t.parse().unwrap(), h.parse().unwrap())
        })
        .collect()
}

#[test]
fn reproduce_exit_codes() {
    assert_eq!(run(["reproduce", "log2d"]).code, 0);
    assert_eq!(run(["reproduce", "devlog3d"]).code, 0);
    let unknown = run(["reproduce", "svk3"]);
    assert_eq!(unknown.code, 2);
    assert!(unknown.stderr.contains("unknown case"));
    // both fixtures disagree with their published second derivatives
    assert_eq!(run(["reproduce", "svk"]).code, 1);
    assert_eq!(run(["reproduce", "voliso3d"]).code, 1);
}

#[test]
fn reproduce_rows() {
    let (_, r, _) = json(&["reproduce", "voliso3d", "--alpha", "0.2"]);
    let rows = r["rows"].as_array().unwrap();
    let get = |q: &str| rows.iter().find(|x| x["quantity"] == q).unwrap().clone();
    assert_eq!(get("xi . F^-T eta")["pass"], Value::Bool(true));
    assert_eq!(get("(dev log V xi) . F^-T eta")["pass"], Value::Bool(true));
    assert!(get("h''(0)")["computed"].as_f64().unwrap() < 0.0);
    assert_eq!(r["alpha"], 0.2);

    let text = run(["reproduce", "log2d", "--csv"]).stdout;
    assert!(text.starts_with("quantity,expected,computed,error,metric,tolerance,pass\n"));
    assert!(text.contains("h''(0) eigenvalue oracle,"));
}

#[test]
fn profile_of_log2d_peaks_at_zero() {
    let out = run(["profile", "log2d", "--t-min", "-0.02", "--t-max", "0.02", "--n", "101"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.starts_with("t,h\n"));
    let rows = csv_rows(&out.stdout);
    assert_eq!(rows.len(), 101);
    let (t_max, _) = rows.iter().copied().fold((0.0, f64::MIN), |a, b| if b.1 > a.1 { b } else { a });
    assert_eq!(t_max, 0.0);
    // 17 significant digits
    let first = out.stdout.lines().nth(1).unwrap();
    assert_eq!(first.split(',').next().unwrap(), "-2.0000000000000000e-2");
    // concave near zero, convex further out
    let wide = csv_rows(&run(["profile", "log2d", "--t-min", "-0.25", "--t-max", "0.25", "--n", "3"]).stdout);
    assert!(wide[0].1 > wide[1].1 && wide[2].1 > wide[1].1);
}

#[test]
fn profile_of_constant_energy_is_flat() {
    let out = run(["profile", "log2d", "--energy", "const:2.5", "--n", "11"]);
    assert_eq!(out.code, 0);
    assert!(csv_rows(&out.stdout).iter().all(|&(_, h)| h == 2.5));
}

#[test]
fn profile_errors() {
    assert_eq!(run(["profile", "log2d", "--n", "2"]).code, 2);
    let bad = run(["profile", "log2d", "--t-min", "-0.4", "--t-max", "0.1"]);
    assert_eq!(bad.code, 3);
    assert!(bad.stderr.contains("t = -0.4"), "{}", bad.stderr);
    assert_eq!(run(["profile"]).code, 2);
}

#[test]
fn profile_from_probe_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("probe.json");
    std::fs::write(&path, r#"{"f": [[0.5, 0.0], [0.0, 0.5]], "xi": [1.0, 0.0], "eta": [0.0, 1.0]}"#).unwrap();
    let p = path.to_str().unwrap();
    let out = run(["profile", "--probe", p, "--energy", "omega-svk", "--t-min", "-0.2", "--t-max", "0.2", "--n", "5"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let rows = csv_rows(&out.stdout);
    // ‖FᵀF − Id‖² = 2·(1/4 − 1)² + 2 (t/2)² + t⁴ + ...; symmetric in t
    assert_eq!(rows.len(), 5);
    assert!((rows[0].1 - rows[4].1).abs() < 1e-14);
    assert!(rows[2].1 > rows[0].1);
    assert_eq!(run(["profile", "--probe", p]).code, 2);
}

#[test]
fn scan_examples() {
    let (code, r, _) = json(&["scan", "exp-hencky-3d", "--mu", "1", "--kappa", "1", "--k", "0.25", "--F", "diag:1,e20,e15", "--seed", "7"]);
    assert_eq!(code, 1);
    assert_eq!(r["verdicts"][0]["satisfied"], Value::Bool(false));
    assert_eq!(r["seed"], 7);
    assert!(r["metrics"]["min_second_derivative"].as_f64().unwrap() < 0.0);
    assert_eq!(r["verdicts"][0]["worst_location"]["kind"], "probe");

    let (code, r, _) = json(&["scan", "hencky", "--F", "id"]);
    assert_eq!(code, 0);
    assert!(r["metrics"]["min_second_derivative"].as_f64().unwrap() >= 0.0);

    assert_eq!(run(["scan", "hencky", "--F", "diag:1,x,1"]).code, 2);
    assert_eq!(run(["scan", "nope"]).code, 2);
    assert_eq!(run(["scan", "omega-log-2d", "--F", "id:3"]).code, 2);
    assert_eq!(run(["scan", "hencky", "--F", "diag:1,-1,1"]).code, 3);
}

#[test]
fn scan_ihat_at_random_points() {
    let (code, r, _) = json(&["scan", "ihat", "--random-F", "50"]);
    assert_eq!(code, 0);
    assert_eq!(r["metrics"]["violations"], 0.0);
    assert_eq!(r["metrics"]["deformations"], 50.0);
}

#[test]
fn scan_is_independent_of_worker_count() {
    let args = ["scan", "exp-hencky-iso-3d", "--F", "diag:1,e5,e3", "--directions", "300"];
    let (_, a, _) = json(&[&args[..], &["--workers", "1"]].concat());
    let (_, b, _) = json(&[&args[..], &["--workers", "4"]].concat());
    assert_eq!(a["verdicts"], b["verdicts"]);
    assert_eq!(a["manifest"]["values"], b["manifest"]["values"]);
}

#[test]
fn check_examples() {
    let (code, r, _) = json(&["check", "criterion2d", "exp", "--k", "0.25"]);
    assert_eq!(code, 0);
    assert_eq!(r["verdicts"][0]["satisfied"], Value::Bool(true));

    let (code, r, _) = json(&["check", "criterion2d", "exp", "--k", "0.2"]);
    assert_eq!(code, 1);
    let eta = r["verdicts"][0]["worst_location"]["point"][0].as_f64().unwrap();
    assert!((eta - 3.125).abs() <= 1e-2, "{eta}");

    let (code, r, _) = json(&["check", "conv1d", "exp8"]);
    assert_eq!(code, 0);
    assert!((r["metrics"]["max_coefficient"].as_f64().unwrap() - 0.125).abs() < 1e-9);

    assert_eq!(run(["check", "sw", "exp-rate:0.1875"]).code, 0);
    assert_eq!(run(["check", "sw", "sin"]).code, 1);
    assert_eq!(run(["check", "mono", "neg"]).code, 1);
    assert_eq!(run(["check", "be", "omega-log-c", "--ordering"]).code, 0);
}

#[test]
fn check_errors() {
    assert_eq!(run(["check", "conv1d", "exp8", "--grid", "0:2:3"]).code, 2);
    assert_eq!(run(["check", "criterion2d", "cos"]).code, 2);
    assert_eq!(run(["check", "criterion2d", "exp", "--grid", "2:1:5"]).code, 2);
    assert_eq!(run(["check", "bogus", "exp"]).code, 2);
}

#[test]
fn search_examples() {
    let (code, r, _) = json(&["search", "omega-log", "--dim", "2", "--seeds", "200"]);
    assert_eq!(code, 0);
    assert_eq!(r["outcome"]["certified"], Value::Bool(true));
    assert_eq!(r["manifest"]["verdict"], "certified");

    let (code, r, _) = json(&["search", "omega-devlog", "--dim", "2", "--seeds", "40"]);
    assert_eq!(code, 1);
    assert_eq!(r["outcome"]["certified"], Value::Bool(false));
    assert!(r["outcome"]["verdict"]["second"].is_number());

    assert_eq!(run(["search", "omega-log", "--dim", "4"]).code, 2);
}

#[test]
fn json_round_trips_byte_identically() {
    for args in [
        vec!["reproduce", "devlog3d"],
        vec!["check", "sw", "exp-rate:0.1875"],
        vec!["scan", "hencky", "--F", "diag:1.5,0.7,e0.3", "--directions", "200"],
        vec!["search", "omega-devlog", "--dim", "3", "--seeds", "16"],
        vec!["profile", "svk", "--n", "7"],
    ] {
        let (_, _, text) = json(&args);
        let v: Value = serde_json::from_str(&text).unwrap();
        let mut again = serde_json::to_string_pretty(&v).unwrap();
        again.push('\n');
        assert_eq!(again, text, "{args:?}");
    }
}

#[test]
fn manifests_replay_exactly() {
    let dir = tempfile::tempdir().unwrap();
    for (i, args) in [
        vec!["scan", "exp-hencky-3d", "--F", "diag:1,e20,e15", "--directions", "300"],
        vec!["search", "omega-log", "--dim", "2"],
        vec!["check", "criterion2d", "exp", "--k", "0.2"],
        vec!["reproduce", "svk"],
    ]
    .into_iter()
    .enumerate()
    {
        let path = dir.path().join(format!("m{i}.json"));
        let p = path.to_str().unwrap().to_string();
        let mut with_out: Vec<String> = args.iter().map(|s| s.to_string()).collect();
        with_out.extend(["--seed".into(), "11".into(), "--json".into(), "--out".into(), p.clone()]);
        let first = run(with_out);
        assert!(first.stdout.is_empty());
        let stored: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(stored["manifest"]["seed"], 11);
        assert!(!stored["manifest"]["args"].as_array().unwrap().iter().any(|a| a == "--out" || a == "--json"));

        let (code, r, _) = json(&["replay", &p]);
        assert_eq!(code, 0, "{args:?}: {r}");
        assert_eq!(r["reproduced"], Value::Bool(true));
    }
}

#[test]
fn tampered_manifest_diverges() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let (_, r, _) = json(&["search", "omega-log", "--dim", "2"]);
    let mut manifest = r["manifest"].clone();
    let v = manifest["values"]["h''(0)"].as_f64().unwrap();
    manifest["values"]["h''(0)"] = serde_json::json!(f64::from_bits(v.to_bits() + 1));
    std::fs::write(&path, serde_json::to_string(&manifest).unwrap()).unwrap();
    let (code, out, _) = json(&["replay", path.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert_eq!(out["mismatched_values"], serde_json::json!(["h''(0)"]));
    assert_eq!(out["verdict_match"], Value::Bool(true));

    std::fs::write(&path, "{}").unwrap();
    assert_eq!(run(["replay", path.to_str().unwrap()]).code, 2);
    assert_eq!(run(["replay", "/nonexistent/manifest.json"]).code, 3);
}

#[test]
fn global_flags() {
    assert_eq!(run(["reproduce", "log2d", "--json", "--csv"]).code, 2);
    let help = run(["--help"]);
    assert_eq!(help.code, 0);
    assert!(help.stdout.contains("reproduce"));
    assert_eq!(run(["reproduce", "log2d", "--workers", "x"]).code, 2);
}

#[test]
fn binary_reads_seed_from_environment() {
    let bin = env!("CARGO_BIN_EXE_elliptika");
    let out = Command::new(bin)
        .args(["check", "mono", "exp", "--json"])
        .env("ELLIPTIKA_SEED", "123")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["manifest"]["seed"], 123);

    let out = Command::new(bin)
        .args(["check", "mono", "exp", "--json", "--seed", "5"])
        .env("ELLIPTIKA_SEED", "123")
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["manifest"]["seed"], 5);

    let out = Command::new(bin).args(["reproduce", "nope"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown case"));
}
