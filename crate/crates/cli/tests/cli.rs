use serde_json::Value;
use std::path::Path;
use std::process::Command;

fn run(cmd: &str, config: &str, dir: &Path, extra: &[&str]) -> i32 {
    let cfg = dir.join("scenario.toml");
    std::fs::write(&cfg, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_warpbench"))
        .arg(cmd)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir)
        .args(extra)
        .output()
        .unwrap();
    out.status.code().unwrap()
}

fn summary(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{name}.json"))).unwrap()).unwrap()
}

fn table(dir: &Path, name: &str) -> (Vec<String>, Vec<csv::StringRecord>) {
    let mut r = csv::Reader::from_path(dir.join(format!("{name}.csv"))).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    (header, r.records().map(Result::unwrap).collect())
}

const EUCLID_ISO: &str = r#"
[manifold]
n = 3
profile = "euclidean"

[scenario]
name = "iso"
radii = [0.5, 1.0, 3.0]
"#;

#[test]
fn euclidean_isoperimetric_is_sharp() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("verify-isoperimetric", EUCLID_ISO, dir.path(), &[]), 0);
    let s = summary(dir.path(), "iso");
    assert_eq!(s["schema"], 1);
    assert_eq!(s["status"], "pass");
    let (h, rows) = table(dir.path(), "iso");
    let ratio = h.iter().position(|c| c == "ratio").unwrap();
    let thr = h.iter().position(|c| c == "threshold").unwrap();
    assert_eq!(rows.len(), 3);
    for row in rows {
        let a: f64 = row[ratio].parse().unwrap();
        let b: f64 = row[thr].parse().unwrap();
        assert!((a / b - 1.0).abs() < 1e-9);
        assert_eq!(&row[h.len() - 3], "abp_transport.isoperimetric_check");
    }
}

#[test]
fn hyperbolic_abp_is_not_gaugeable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[manifold]\nn = 3\nprofile = \"hyperbolic\"\n\n[scenario]\nname = \"h\"\n";
    assert_eq!(run("verify-abp", cfg, dir.path(), &[]), 2);
    let s = summary(dir.path(), "h");
    assert_eq!(s["error"]["kind"], "NotGaugeable");
    assert_eq!(s["exit_code"], 2);
}

#[test]
fn curvature_report_has_envelope_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[manifold]\nn = 3\nprofile = \"perturbed\"\n\n[scenario]\nname = \"c\"\nstride = 64\n";
    assert_eq!(run("report-curvature", cfg, dir.path(), &[]), 0);
    let (h, rows) = table(dir.path(), "c");
    assert_eq!(&h[..5], ["r", "ric_radial", "ric_tangential", "ric_minus", "lambda"]);
    assert!(rows.len() > 10);
    for row in &rows {
        let rm: f64 = row[3].parse().unwrap();
        let lam: f64 = row[4].parse().unwrap();
        assert!(rm >= 0.0 && 2.0 * lam >= rm * (1.0 - 1e-12));
    }
}

#[test]
fn reports_are_byte_identical_across_runs_and_workers() {
    let cfg = r#"
[manifold]
n = 3
profile = "cone"
a = 0.5

[scenario]
name = "sw"
sweep = "radius"
radii = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0]
"#;
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run("sweep", cfg, a.path(), &[]), 0);
    assert_eq!(run("sweep", cfg, b.path(), &["--parallel", "3"]), 0);
    for f in ["sw.csv", "sw.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn radius_sweep_on_nonnegative_profile() {
    let dir = tempfile::tempdir().unwrap();
    let radii: Vec<String> = (1..=20).map(|k| format!("{}", 0.25 * k as f64)).collect();
    let cfg = format!(
        "[manifold]\nn = 4\nprofile = \"cone\"\na = 0.7\n\n[scenario]\nname = \"r\"\nsweep = \"radius\"\nradii = [{}]\n",
        radii.join(", ")
    );
    assert_eq!(run("sweep", &cfg, dir.path(), &["--parallel", "2"]), 0);
    let (_, rows) = table(dir.path(), "r");
    assert_eq!(rows.len(), 20);
    assert!(rows.iter().all(|r| &r[3] == "true"));
    let s = summary(dir.path(), "r");
    assert_eq!(s["values"]["pass_count"], 20);
    assert_eq!(s["values"]["fail_count"], 0);
}

#[test]
fn empty_sweep_grid_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[manifold]\nn = 3\nprofile = \"euclidean\"\n\n[scenario]\nsweep = \"radius\"\nradii = []\n";
    assert_eq!(run("sweep", cfg, dir.path(), &[]), 4);
}

#[test]
fn k_tilde_bisection_brackets_monotonically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[manifold]\nn = 3\nprofile = \"euclidean\"\n\n[scenario]\nname = \"k\"\nsweep = \"k-tilde\"\n";
    assert_eq!(run("sweep", cfg, dir.path(), &[]), 0);
    let (_, rows) = table(dir.path(), "k");
    let mut last: Option<(f64, f64)> = None;
    for r in rows.iter().filter(|r| &r[1] == "bisect") {
        let lo: f64 = r[2].parse().unwrap();
        let hi: f64 = r[3].parse().unwrap();
        assert!(lo < hi && &r[6] == "true");
        if let Some((plo, phi)) = last {
            assert!(lo >= plo && hi <= phi);
        }
        last = Some((lo, hi));
    }
    let s = summary(dir.path(), "k");
    assert!(s["values"]["c1_witness"].as_f64().unwrap() < 1.0);
}

#[test]
fn green_bounds_write_a_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[manifold]\nn = 3\nprofile = \"perturbed\"\n\n[scenario]\nname = \"g\"\n";
    assert_eq!(run("verify-green-bounds", cfg, dir.path(), &[]), 0);
    let l: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("g.ledger.json")).unwrap()).unwrap();
    let entries = l.as_array().unwrap();
    assert!(entries.iter().all(|e| e["anchor"].is_string() && e["formula"].is_string()));
    let s = summary(dir.path(), "g");
    let c = s["values"]["c_star"].as_f64().unwrap();
    let (h, rows) = table(dir.path(), "g");
    let cal = h.iter().position(|c| c == "calibration").unwrap();
    assert!(rows.iter().filter(|r| &r[0] == "green").all(|r| r[cal].starts_with("c_green=")));
    assert!(c > 0.0);
}

#[test]
fn calibration_and_tolerance_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let code = run("verify-isoperimetric", EUCLID_ISO, dir.path(), &["--tol", "1e-3", "--calibration", "c_harnack=2.5"]);
    assert_eq!(code, 0);
    let s = summary(dir.path(), "iso");
    assert_eq!(s["tolerance"], 1e-3);
    assert_eq!(s["calibration"]["c_harnack"], 2.5);
    assert_eq!(run("verify-isoperimetric", EUCLID_ISO, dir.path(), &["--calibration", "c_bogus=1"]), 4);
    assert_eq!(run("verify-isoperimetric", EUCLID_ISO, dir.path(), &["--calibration", "c_green=-1"]), 4);
    assert_eq!(run("verify-isoperimetric", EUCLID_ISO, dir.path(), &["--tol", "0"]), 4);
}

#[test]
fn malformed_configs_exit_four() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run("report-kato", "[manifold]\nn = 3\nprofile = \"euclidean\"\nbogus = 1\n", dir.path(), &[]), 4);
    assert_eq!(run("report-kato", "[manifold]\nn = 3\nprofile = \"torus\"\n", dir.path(), &[]), 4);
    assert_eq!(run("report-kato", "[scenario]\nname = \"x\"\n", dir.path(), &[]), 4);
    let mismatch = "[manifold]\nn = 3\nprofile = \"euclidean\"\n\n[scenario]\ncommand = \"verify-abp\"\n";
    assert_eq!(run("report-kato", mismatch, dir.path(), &[]), 4);
    // dimension below 3 is caught when the manifold is built
    assert_eq!(run("report-kato", "[manifold]\nn = 2\nprofile = \"euclidean\"\n\n[scenario]\nname = \"d\"\n", dir.path(), &[]), 4);
    assert_eq!(summary(dir.path(), "d")["error"]["kind"], "DimensionTooLow");
}

#[test]
fn tabulated_profile_needs_a_tail() {
    let dir = tempfile::tempdir().unwrap();
    let r: Vec<String> = (0..=40).map(|k| format!("{}", k as f64 * 0.25)).collect();
    let body = format!("[manifold]\nn = 3\nprofile = \"tabulated\"\nr = [{0}]\nw = [{0}]\n", r.join(", "));
    assert_eq!(run("report-curvature", &body, dir.path(), &[]), 4);
    let with_tail = format!("{body}\n[tail]\nkind = \"power\"\np = 1.0\nc = 1.0\n\n[scenario]\nname = \"t\"\n");
    assert_eq!(run("report-curvature", &with_tail, dir.path(), &[]), 0);
}

#[test]
fn offcenter_euclidean_is_regular() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "[manifold]\nn = 3\nprofile = \"euclidean\"\n\n[scenario]\nname = \"o\"\ncenters = [0.0, 2.0]\nradii = [0.5, 1.0, 2.0]\nmesh = [256, 128]\n";
    assert_eq!(run("verify-offcenter", cfg, dir.path(), &[]), 0);
    let s = summary(dir.path(), "o");
    let v0 = s["values"]["v0_empirical"].as_f64().unwrap();
    assert!((v0 / (4.0 * std::f64::consts::PI / 3.0) - 1.0).abs() < 0.05);
    assert_eq!(table(dir.path(), "o").1.len(), 6);
}
