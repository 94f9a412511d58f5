use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::{json, Value};
use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
    out: PathBuf,
}

impl Run {
    fn json(&self, name: &str) -> Value {
        let text = std::fs::read_to_string(self.out.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        serde_json::from_str(&text).unwrap()
    }

    fn csv(&self, name: &str) -> Vec<csv::StringRecord> {
        csv::Reader::from_path(self.out.join(name)).unwrap().records().map(|r| r.unwrap()).collect()
    }
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string(cfg).unwrap()).unwrap();
    p
}

fn flocstab(dir: &TempDir, cmd: &str, cfg: Option<&Value>, extra: &[&str]) -> Run {
    let tag = format!("{cmd}-{}", std::fs::read_dir(dir.path()).unwrap().count());
    let out = dir.path().join(&tag);
    let mut c = Command::new(env!("CARGO_BIN_EXE_flocstab"));
    c.arg(cmd).arg("--out").arg(&out).args(extra);
    if let Some(cfg) = cfg {
        c.arg("--config").arg(write_config(dir.path(), &format!("{tag}.json"), cfg));
    }
    let o = c.output().unwrap();
    Run { code: o.status.code().unwrap(), stdout: String::from_utf8(o.stdout).unwrap(), out }
}

fn example1(b: f64) -> Value {
    json!({"schema_version": 1, "preset": "example1", "params": {"b": b}})
}

fn example2(a: f64, b: f64, c: f64) -> Value {
    json!({"schema_version": 1, "preset": "example2", "params": {"a": a, "b": b, "c": c, "d": 0.0}})
}

fn saturated() -> Value {
    json!({"schema_version": 1, "preset": "example1", "params": {"b": 2.5}, "aggregation": {"constant": 5.0}})
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn check_zero_unstable_example() {
    let dir = TempDir::new().unwrap();
    let r = flocstab(&dir, "check-zero", Some(&example1(2.5)), &["--grid", "200"]);
    assert_eq!(r.code, 0);
    let rep = &r.json("check_zero.json")["report"];
    assert_eq!(rep["verdict"], "unstable");
    let exact = 2.5 * (1.0 - (-1f64).exp());
    assert!((f(&rep["instability_integral"]) - exact).abs() < 1e-6 * exact);
    assert!(f(&rep["spectral_abscissa"]) > 0.0);
    assert!(r.stdout.contains("verdict: unstable"));
}

#[test]
fn check_zero_small_and_moderate_renewal() {
    let dir = TempDir::new().unwrap();
    // the margin of q + kf/2 − μ for Example 1 is 2b
    for (b, integral) in [(0.3, 0.3 * 0.632120558829), (1.0, 0.632120558829)] {
        let r = flocstab(&dir, "check-zero", Some(&example1(b)), &[]);
        assert_eq!(r.code, 0);
        let rep = &r.json("check_zero.json")["report"];
        assert_eq!(rep["verdict"], "inconclusive");
        assert!((f(&rep["stability_margin"]) - 2.0 * b).abs() < 1e-12);
        assert!((f(&rep["instability_integral"]) - integral).abs() < 1e-6);
        assert!(f(&rep["spectral_abscissa"]) < 0.0);
    }
}

#[test]
fn steady_example2_converges_to_the_zero_state() {
    let dir = TempDir::new().unwrap();
    let r = flocstab(&dir, "steady", Some(&example2(0.5, 0.05, 0.1)), &[]);
    assert_eq!(r.code, 2);
    let j = r.json("steady_state.json");
    assert_eq!(j["existence"]["c1_holds"], true);
    assert_eq!(j["existence"]["c2_holds"], true);
    for run in j["runs"].as_array().unwrap() {
        let s = &run["summary"];
        assert_eq!(s["converged"], true);
        assert_eq!(s["trivial"], true);
        assert!(f(&s["phi_residual"]) < 1e-8);
        assert!(f(&s["f_residual"]) < 1e-5);
    }
    assert_eq!(r.csv("steady_state.csv").len(), 101);
}

#[test]
fn steady_without_renewal_reports_the_trivial_state() {
    let dir = TempDir::new().unwrap();
    let n = 32;
    let cfg = json!({
        "schema_version": 1,
        "custom": {
            "x1": 1.0,
            "g": vec![1.0; n + 1],
            "mu": vec![1.0; n + 1],
            "q": vec![0.0; n + 1],
            "kf": vec![0.0; n + 1],
        }
    });
    let r = flocstab(&dir, "steady", Some(&cfg), &[]);
    assert_eq!(r.code, 2);
    assert!(r.stdout.contains("trivial: true"));
}

#[test]
fn steady_nontrivial_state() {
    let dir = TempDir::new().unwrap();
    let r = flocstab(&dir, "steady", Some(&saturated()), &[]);
    assert_eq!(r.code, 0, "{}", r.stdout);
    let j = r.json("steady_state.json");
    assert_eq!(j["distinct"].as_array().unwrap().len(), 1);
    let p: Vec<f64> = r.csv("steady_state.csv").iter().map(|rec| rec[3].parse().unwrap()).collect();
    assert!(p.iter().all(|&v| v >= 0.0) && p.iter().any(|&v| v > 0.1));
}

#[test]
fn configuration_errors_exit_with_three() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"schema_version\": 1,").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_flocstab"))
        .args(["steady", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path().join("x"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
    for cfg in [
        json!({"schema_version": 2, "preset": "example1", "params": {"b": 1.0}}),
        json!({"schema_version": 1, "preset": "example1", "params": {"b": 1.0}, "typo": 1}),
        json!({"schema_version": 1, "preset": "example1", "params": {"a": 1.0}}),
        json!({"schema_version": 1, "preset": "example3"}),
        json!({"schema_version": 1, "preset": "example1", "params": {"b": -1.0}}),
        json!({"schema_version": 1, "preset": "example2", "params": {"a": 1, "b": 0.1, "c": 0.5}, "aggregation": {"constant": 1.0}}),
        json!({"schema_version": 1, "preset": "example2", "params": {"a": 1, "b": 0.1, "c": 0.5}, "sweep": {"b_values": []}}),
    ] {
        assert_eq!(flocstab(&dir, "check-zero", Some(&cfg), &[]).code, 3, "{cfg}");
    }
    assert_eq!(flocstab(&dir, "check-zero", Some(&example1(1.0)), &["--grid", "8"]).code, 3);
    assert_eq!(flocstab(&dir, "no-such-command", None, &[]).code, 3);
}

#[test]
fn check_steady_feasible_point_and_large_renewal() {
    let dir = TempDir::new().unwrap();
    let r = flocstab(&dir, "check-steady", Some(&example2(1.0, 0.1, 0.5)), &[]);
    assert_eq!(r.code, 0);
    let rep = &r.json("check_steady.json")["report"];
    assert_eq!(rep["verdict"], "stable");
    assert!(f(&rep["k_0"]) < 0.0 && f(&rep["a12_0"]) < 1.0 && f(&rep["a21_0"]) < 1.0);

    // q = b (x + 1), so scaling b scales q; the steady state is kept
    let s = flocstab(&dir, "steady", Some(&example2(1.0, 0.1, 0.5)), &[]);
    let mut cfg = example2(1.0, 5.0, 0.5);
    cfg["pstar_csv"] = json!(s.out.join("steady_state.csv"));
    let r = flocstab(&dir, "check-steady", Some(&cfg), &[]);
    assert_eq!(r.code, 0);
    let rep = &r.json("check_steady.json")["report"];
    assert_ne!(rep["verdict"], "stable");
    assert!(f(&rep["a21_0"]) >= 1.0 || f(&rep["k_0"]) >= 0.0);
}

#[test]
fn reloaded_steady_state_reproduces_the_report() {
    let dir = TempDir::new().unwrap();
    let s = flocstab(&dir, "steady", Some(&saturated()), &[]);
    assert_eq!(s.code, 0);
    let mut cfg = saturated();
    cfg["k_trace"] = json!([0.0, -0.5, -2.0]);
    let direct = flocstab(&dir, "check-steady", Some(&cfg), &[]);
    cfg["pstar_csv"] = json!(s.out.join("steady_state.csv"));
    let loaded = flocstab(&dir, "check-steady", Some(&cfg), &[]);
    assert_eq!(direct.code, 0);
    assert_eq!(loaded.code, 0);
    let (a, b) = (direct.json("check_steady.json"), loaded.json("check_steady.json"));
    assert_eq!(a["report"], b["report"]);
    let (ta, tb) = (direct.csv("k_trace.csv"), loaded.csv("k_trace.csv"));
    for (x, y) in ta.iter().zip(&tb) {
        for k in 0..6 {
            let (x, y): (f64, f64) = (x[k].parse().unwrap(), y[k].parse().unwrap());
            assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }
}

#[test]
fn check_steady_at_zero_matches_check_zero() {
    let dir = TempDir::new().unwrap();
    let zero = dir.path().join("zero.csv");
    let mut text = String::from("node,x,f_star,p_star\n");
    for i in 0..=100 {
        text += &format!("{i},{},0,0\n", i as f64 / 100.0);
    }
    std::fs::write(&zero, text).unwrap();
    let mut cfg = example1(2.5);
    cfg["pstar_csv"] = json!(zero);
    let steady = flocstab(&dir, "check-steady", Some(&cfg), &[]);
    let z = flocstab(&dir, "check-zero", Some(&example1(2.5)), &[]);
    let (s, z) = (steady.json("check_steady.json"), z.json("check_zero.json"));
    assert_eq!(s["report"]["instability_integral"], z["report"]["instability_integral"]);
    assert_eq!(s["report"]["verdict"], z["report"]["verdict"]);
    assert_eq!(s["report"]["spectral_abscissa"], z["report"]["spectral_abscissa"]);

    let mut short = example1(2.5);
    short["pstar_csv"] = json!(zero);
    assert_eq!(flocstab(&dir, "check-steady", Some(&short), &["--grid", "50"]).code, 3);
}

fn numbers(r: &Run) -> Vec<f64> {
    r.csv("diagnostics.csv").iter().map(|rec| rec[1].parse().unwrap()).collect()
}

#[test]
fn simulate_follows_the_regimes() {
    let dir = TempDir::new().unwrap();
    let mut cfg = example1(0.3);
    cfg["simulation"] = json!({"t_end": 20.0, "record_every": 50});
    let r = flocstab(&dir, "simulate", Some(&cfg), &[]);
    assert_eq!(r.code, 0);
    let n = numbers(&r);
    assert!(n[n.len() - 1] < 1e-6 * n[0]);

    let mut cfg = example1(2.5);
    cfg["simulation"] = json!({"t_end": 10.0, "record_every": 50});
    let r = flocstab(&dir, "simulate", Some(&cfg), &[]);
    assert_eq!(r.code, 0);
    let n = numbers(&r);
    assert!(r.json("simulate.json")["blow_up"] == true || n[n.len() - 1] > 10.0 * n[0]);

    let mut cfg = example1(2.5);
    cfg["simulation"] = json!({"initial": "zero", "t_end": 0.5});
    let r = flocstab(&dir, "simulate", Some(&cfg), &[]);
    assert_eq!(r.code, 0);
    assert!(r.csv("trajectory.csv").iter().all(|rec| &rec[3] == "0"));
}

#[test]
fn sweep_singleton_and_infeasible_row() {
    let dir = TempDir::new().unwrap();
    let mut cfg = example2(0.5, 0.05, 0.1);
    cfg["sweep"] = json!({"a_values": [1.0], "b_values": [0.1], "c_values": [0.5]});
    let r = flocstab(&dir, "sweep", Some(&cfg), &["--grid", "32"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.csv("sweep.csv").len(), 1);
    assert!(r.out.join("sweep.svg").exists());

    cfg["sweep"] = json!({"a_values": [0.5, 1.0], "b_values": [0.0], "c_values": [0.0, 0.5, 1.0]});
    let r = flocstab(&dir, "sweep", Some(&cfg), &["--grid", "32"]);
    assert_eq!(r.code, 0);
    let j = r.json("sweep_summary.json");
    assert!(j["summaries"].as_array().unwrap().iter().all(|s| s["feasible_count"] == 0 && s["area"] == 0.0));
    assert_eq!(r.csv("sweep.csv").len(), 6);
}

#[test]
fn sweep_is_deterministic_and_shrinks_with_a() {
    let dir = TempDir::new().unwrap();
    let mut cfg = example2(0.5, 0.05, 0.1);
    cfg["sweep"] = json!({"a_values": [0.5, 1.0, 2.0], "b_values": [0.0, 0.15, 0.3, 0.45, 0.6], "c_values": [0.0, 0.5, 1.0, 1.5]});
    let r1 = flocstab(&dir, "sweep", Some(&cfg), &["--grid", "40", "--jobs", "3"]);
    let r2 = flocstab(&dir, "sweep", Some(&cfg), &["--grid", "40", "--jobs", "1"]);
    assert_eq!(r1.code, 0);
    let read = |r: &Run| std::fs::read(r.out.join("sweep.csv")).unwrap();
    assert_eq!(read(&r1), read(&r2));
    let areas: Vec<f64> =
        r1.json("sweep_summary.json")["summaries"].as_array().unwrap().iter().map(|s| f(&s["area"])).collect();
    assert!(areas[0] > 0.0 && areas[0] > areas[1] && areas[1] > areas[2], "{areas:?}");
}

#[test]
fn example1_sweep_over_b() {
    let dir = TempDir::new().unwrap();
    let mut cfg = example1(1.0);
    cfg["sweep"] = json!({"example1_b_values": [0.5, 1.0, 2.0, 3.0]});
    let r = flocstab(&dir, "sweep", Some(&cfg), &["--grid", "50"]);
    assert_eq!(r.code, 0);
    let rows = r.csv("sweep_example1.csv");
    let verdicts: Vec<&str> = rows.iter().map(|rec| rec.get(5).unwrap()).collect();
    assert_eq!(verdicts, ["inconclusive", "inconclusive", "unstable", "unstable"]);
}
