use std::fs::{self, File};
use std::path::Path;
use std::process::{Command, Output};

use metawkb_core::phase_space::read_wavefunction_csv;

fn metawkb(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metawkb"))
        .args(args)
        .env("METAWKB_OUTPUT_DIR", out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn lists_builtin_specs() {
    let dir = tempfile::tempdir().unwrap();
    let o = metawkb(&["list-specs"], dir.path());
    assert!(o.status.success());
    for name in ["free-exactness", "kho-profiles", "kho-slopes", "kho-lyapunov", "barrier-sweep", "integrable-exactness"] {
        assert!(stdout(&o).lines().any(|l| l == name), "{name}");
    }
    let show = metawkb(&["list-specs", "--show", "kho-profiles"], dir.path());
    assert!(stdout(&show).contains("hbar = 0.0008"));
}

#[test]
fn run_writes_report_into_env_directory() {
    let dir = tempfile::tempdir().unwrap();
    let o = metawkb(&["run", "kho-lyapunov"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("kho-lyapunov: PASS"));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], serde_json::Value::Bool(true));
    assert!(dir.path().join("lyapunov.csv").exists());
}

#[test]
fn breached_check_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("strict.toml");
    fs::write(
        &spec,
        r#"
name = "strict"
kind = "lyapunov"
hbar = 0.0008
[model]
model = "kho"
k = 2.0
[grid]
x_min = -8.0
x_max = 8.0
n_points = 8192
[checks]
lyapunov = [0.5, 0.001]
"#,
    )
    .unwrap();
    let o = metawkb(&["run", spec.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn invalid_input_exits_with_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = metawkb(&["run", "no-such-spec"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = metawkb(
        &["propagate", "--model", "free", "--hbar", "0.01", "--t", "1+", "--alpha", "0.5"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn propagate_and_exact_agree_for_free_particle() {
    let dir = tempfile::tempdir().unwrap();
    let common = ["--model", "free", "--hbar", "0.01", "--p0", "0.5", "--alpha", "0.5", "--t", "2", "--n-points", "4096"];
    let wkb_dir = dir.path().join("wkb");
    let exact_dir = dir.path().join("exact");
    let mut args = vec!["propagate", "--method", "extwkb"];
    args.extend(common);
    assert!(metawkb(&args, &wkb_dir).status.success());
    let mut args = vec!["exact"];
    args.extend(common);
    assert!(metawkb(&args, &exact_dir).status.success());
    let a = read_wavefunction_csv(File::open(wkb_dir.join("psi.csv")).unwrap()).unwrap();
    let b = read_wavefunction_csv(File::open(exact_dir.join("psi.csv")).unwrap()).unwrap();
    assert!(a.fidelity(&b).unwrap() > 1.0 - 1e-6);
    let meta: serde_json::Value = serde_json::from_slice(&fs::read(wkb_dir.join("metadata.json")).unwrap()).unwrap();
    assert!((meta["c_t"].as_f64().unwrap() - 2.0 / 2.0).abs() < 1e-9);
}

#[test]
fn thawed_and_kicked_sides() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["--model", "kho", "--hbar", "0.0008", "--theta", "0", "--n-points", "16384"];
    for t in ["2-", "2+"] {
        let mut args = vec!["propagate", "--method", "thawed", "--t", t];
        args.extend(base);
        let out = dir.path().join(t);
        let o = metawkb(&args, &out);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let meta: serde_json::Value = serde_json::from_slice(&fs::read(out.join("metadata.json")).unwrap()).unwrap();
        assert_eq!(meta["time"], serde_json::Value::String(t.to_string()));
        assert!(meta["branch_log"].as_array().unwrap().len() > 100);
    }
}

#[test]
fn manifold_and_lyapunov() {
    let dir = tempfile::tempdir().unwrap();
    let o = metawkb(&["manifold", "--model", "barrier", "--alpha", "1", "--t", "1", "--seeds", "11"], dir.path());
    assert!(o.status.success());
    let text = fs::read_to_string(dir.path().join("manifold.csv")).unwrap();
    assert_eq!(text.lines().count(), 12);
    // alpha = lambda: the line stretches by e^t
    let last = text.lines().last().unwrap();
    let dphi: f64 = last.split(',').nth(4).unwrap().parse().unwrap();
    assert!((dphi - 1f64.exp()).abs() < 1e-8);
    let o = metawkb(&["lyapunov"], dir.path());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["lyapunov"].as_f64().unwrap() - 0.83).abs() < 0.03);
}
