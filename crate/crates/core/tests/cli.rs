use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nordheim")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL_RUN: &str = "[grid]\nn = 24\nx_max = 16.0\n[solver]\ndt = 0.002\nt_end = 0.2\noutput_stride = 25\n";

#[test]
fn simulate_with_zero_end_time_writes_one_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "[grid]\nn = 32\n[solver]\nt_end = 0.0\n").unwrap();
    let out = bin(&["simulate", "--config", "c.toml", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let o = dir.path().join("o");
    let ts = std::fs::read_to_string(o.join("timeseries.csv")).unwrap();
    assert_eq!(ts.lines().count(), 2);
    assert!(ts.starts_with("t,N,E,S,D,m0,n02_eps,dist1,dist1circ,dS\n"));
    assert!(o.join("state_0.csv").exists());
    assert!(!o.join("state_1.csv").exists());
    assert!(o.join("plots/S.svg").exists());
    let m = json(&o.join("manifest.json"));
    assert_eq!(m["status"], "ok");
    assert_eq!(m["exit_code"], 0);
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
    let s = json(&o.join("summary.json"));
    assert_eq!(s["steps"], 0);
}

#[test]
fn simulate_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), SMALL_RUN).unwrap();
    for out in ["a", "b"] {
        let r = bin(&["simulate", "--config", "c.toml", "--out", out, "--threads", "1"], dir.path());
        assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    }
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let mut csvs = 0;
    for entry in std::fs::read_dir(&a).unwrap() {
        let name = entry.unwrap().file_name();
        if name.to_string_lossy().ends_with(".csv") {
            assert_eq!(std::fs::read(a.join(&name)).unwrap(), std::fs::read(b.join(&name)).unwrap(), "{name:?}");
            csvs += 1;
        }
    }
    assert!(csvs >= 3);
    let s = json(&a.join("summary.json"));
    assert!(s["drift"]["mass_drift"].as_f64().unwrap() < 1e-12);
}

#[test]
fn invalid_config_exits_2_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "[solver]\ndt = -0.5\n[grid]\nbogus = 1\n").unwrap();
    let out = bin(&["simulate", "--config", "c.toml", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("solver.dt") && err.contains("bogus"), "{err}");
    let m = json(&dir.path().join("o/manifest.json"));
    assert_eq!(m["status"], "invalid_config");
    assert_eq!(m["exit_code"], 2);
}

#[test]
fn missing_config_file_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["simulate", "--config", "nope.toml", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.toml"));
    assert_eq!(json(&dir.path().join("o/manifest.json"))["status"], "error");
}

#[test]
fn large_eta_predictor_is_disabled_with_warning() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{SMALL_RUN}[kernel]\nkind = \"eta_model\"\neta = 0.3\n[diagnostics]\npredictor = true\n");
    std::fs::write(dir.path().join("c.toml"), cfg).unwrap();
    let out = bin(&["simulate", "--config", "c.toml", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let m = json(&dir.path().join("o/manifest.json"));
    assert_eq!(m["warnings"].as_array().unwrap().len(), 1);
    assert!(json(&dir.path().join("o/summary.json"))["predictor"].is_null());
}

#[test]
fn equilibrium_prints_state() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["equilibrium", "--n", "1", "--temp-ratio", "0.5", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    for k in ["temp_ratio", "A", "kappa", "n0", "S_be"] {
        assert!(v[k].is_number(), "{k}");
    }
    assert!((v["n0"].as_f64().unwrap() - 0.3402).abs() < 1e-4);
    assert_eq!(v["A"], 1.0);
}

#[test]
fn kernel_table_lists_every_triple() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "[grid]\nn = 6\nx_max = 3.0\n").unwrap();
    let out = bin(&["kernel-table", "--config", "c.toml", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("o/kernel_table.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("i,j,k,x,y,z,w"));
    assert_eq!(lines.count(), 7 * (6 * 7 / 2));
    // hard spheres: min(sqrt x, sqrt x*, sqrt y, sqrt z) / sqrt(x y z) at (1, 1.5, 2)
    let row = csv.lines().find(|l| l.starts_with("2,3,4,")).unwrap();
    let w: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
    let want = 1.0 / (1.0f64 * 1.5 * 2.0).sqrt();
    assert!((w - want).abs() < 1e-10 * want, "{w} vs {want}");
}

#[test]
fn predict_bec_matches_library() {
    use nordheim::diagnostics::{bec_constants, bec_predict};
    use nordheim::measure::{make_two_bump_condensing, Grid};
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[kernel]\nkind = \"eta_model\"\neta = 0.1\n[grid]\nn = 128\nx_max = 8.0\nspacing = \"geometric\"\nratio = 1.025\n[initial]\nkind = \"two_bump\"\ntemp_ratio = 0.5\neps = 0.11\n";
    std::fs::write(dir.path().join("c.toml"), cfg).unwrap();
    let out = bin(&["predict-bec", "--config", "c.toml", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let g = std::sync::Arc::new(Grid::geometric(128, 8.0, 1.025).unwrap());
    let e = 0.5 / nordheim::equilibrium::c_star();
    let tb = make_two_bump_condensing(1.0, e, 0.5, 0.1, &g, Some(0.11)).unwrap();
    let c = bec_constants(tb.measure.mass(), tb.measure.energy(), 0.5, 0.1).unwrap();
    let p = bec_predict(&tb.measure, 0.0, &c, 0.11).unwrap();
    assert_eq!(v["prediction"]["condition_met"], p.condition_met);
    assert_eq!(v["prediction"]["n02"].as_f64().unwrap(), p.n02);
    assert_eq!(v["constants"]["alpha"].as_f64().unwrap(), c.alpha);
}

#[test]
fn predict_bec_rejects_hard_spheres() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["predict-bec", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn potential_scan_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["potential", "--eta", "0.5", "--rho-min", "0.1", "--rho-max", "10", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("o/potential.csv")).unwrap();
    assert!(csv.starts_with("rho,U\n"));
    assert_eq!(csv.lines().count(), 201);
    let s = json(&dir.path().join("o/potential_summary.json"));
    assert_eq!(s["positivity_ok"], true);
    assert!(s["roundtrip_max_rel_err"].as_f64().unwrap() < 1e-3);
}

#[test]
fn validate_with_small_budget_passes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.toml"),
        "[validate]\ntriples = 50\nmeasures = 3\nmc_samples = 10000\nmehler_inputs = 3\n",
    )
    .unwrap();
    let out = bin(&["validate", "--config", "c.toml", "--out", "o", "--seed", "9"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v = json(&dir.path().join("o/validate.json"));
    assert_eq!(v["passed"], true);
    assert_eq!(v["seed"], 9);
    assert_eq!(json(&dir.path().join("o/manifest.json"))["seed"], 9);
}
