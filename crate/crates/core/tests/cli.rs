use std::ffi::OsStr;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn base() -> Value {
    json!({
        "dim": 1, "nx": 32, "lx": 1.0, "tau": 2e-3, "t_end": 0.02,
        "thresholds": 32, "lambda": 1.0,
        "density": {"kind": "uniform", "rho0": 1.0, "rho1": 1.0, "gbar": 0.5},
        "compat_l": 5.0,
        "initial": {"kind": "cosine", "params": {"a": 0.1}},
        "snapshot_every": 5
    })
}

fn write_config(dir: &Path, name: &str, doc: &Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, doc.to_string()).unwrap();
    path
}

fn simulate(args: &[&OsStr]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_simulate"))
        .args(args)
        .output()
        .unwrap()
}

fn run_config(doc: &Value, extra: &[&str]) -> (Output, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", doc);
    let out = dir.path().join("out");
    let mut args = vec![
        "--config".as_ref(),
        cfg.as_os_str(),
        "--out".as_ref(),
        out.as_os_str(),
    ];
    args.extend(extra.iter().map(OsStr::new));
    (simulate(&args), dir)
}

#[test]
fn normal_run_writes_all_outputs() {
    let (o, dir) = run_config(&base(), &[]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let out = dir.path().join("out");

    let series = std::fs::read_to_string(out.join("timeseries.csv")).unwrap();
    let mut lines = series.lines();
    assert_eq!(
        lines.next().unwrap(),
        "step,t,mass,V,E,D_cum,U_mean,orlicz_budget,newton_iters,residual"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 11);
    let last: Vec<&str> = rows[10].split(',').collect();
    assert_eq!(last[0], "10");
    assert_eq!(last[1].parse::<f64>().unwrap(), 10.0 * 2e-3);
    assert!(last[2].contains('e'));

    for step in [0, 5, 10] {
        let snap = std::fs::read_to_string(out.join(format!("snapshot_{step}.csv"))).unwrap();
        assert_eq!(
            snap.lines().next().unwrap(),
            "cell_index,x,u,s,active_level"
        );
        assert_eq!(snap.lines().count(), 33);
    }
    for step in [0, 10] {
        let mem = std::fs::read_to_string(out.join(format!("memory_{step}.csv"))).unwrap();
        assert_eq!(mem.lines().next().unwrap(), "cell_index,r,xi");
        assert_eq!(mem.lines().count(), 1 + 32 * 32);
    }

    let summary: Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    for key in [
        "u_bar",
        "decay_rate_fit",
        "decay_rate_bound",
        "orlicz_budget_total",
        "lp_budget_total",
        "dissipation_total",
        "steady_time",
        "omega_bar_series",
        "config_echo",
    ] {
        assert!(summary.get(key).is_some(), "missing {key}");
    }
    assert_eq!(summary["config_echo"]["nx"], 32);
    assert_eq!(summary["omega_bar_series"].as_array().unwrap().len(), 3);
}

#[test]
fn two_dimensional_snapshot_has_y_column() {
    let mut doc = base();
    doc["dim"] = 2.into();
    doc["nx"] = 6.into();
    doc["ny"] = 5.into();
    let (o, dir) = run_config(&doc, &[]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let snap = std::fs::read_to_string(dir.path().join("out/snapshot_0.csv")).unwrap();
    assert_eq!(
        snap.lines().next().unwrap(),
        "cell_index,x,y,u,s,active_level"
    );
    assert_eq!(snap.lines().count(), 31);
}

#[test]
fn reruns_are_bit_identical() {
    let (a, da) = run_config(&base(), &[]);
    let (b, db) = run_config(&base(), &[]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    for file in ["timeseries.csv", "snapshot_10.csv", "memory_10.csv"] {
        let x = std::fs::read(da.path().join("out").join(file)).unwrap();
        let y = std::fs::read(db.path().join("out").join(file)).unwrap();
        assert_eq!(x, y, "{file} differs between runs");
    }
}

#[test]
fn validate_only_writes_nothing() {
    let (o, dir) = run_config(&base(), &["--validate-only"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("config ok"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn bad_configs_exit_with_2() {
    let mut unknown = base();
    unknown["colour"] = "blue".into();
    let mut negative_tau = base();
    negative_tau["tau"] = (-1.0).into();
    let mut no_stop = base();
    no_stop.as_object_mut().unwrap().remove("t_end");
    let mut bad_density = base();
    bad_density["density"]["rho0"] = 2.0.into();
    for doc in [unknown, negative_tau, no_stop, bad_density] {
        let (o, _dir) = run_config(&doc, &["--validate-only"]);
        assert_eq!(o.status.code(), Some(2), "{doc}");
    }

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("broken.json");
    std::fs::write(&cfg, "{ not json").unwrap();
    let o = simulate(&["--config".as_ref(), cfg.as_os_str()]);
    assert_eq!(o.status.code(), Some(2));

    let o = simulate(&["--bogus-flag".as_ref()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn virgin_memory_is_rejected_with_3() {
    let mut doc = base();
    doc["memory_mode"] = "virgin_clamped".into();
    let (o, dir) = run_config(&doc, &[]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    let cells = err.lines().filter(|l| l.contains("C2 violated")).count();
    assert_eq!(cells, 32);
    assert!(!dir.path().join("out/timeseries.csv").exists());
}

#[test]
fn starved_solver_exits_with_4() {
    let mut doc = base();
    doc["solver"] = json!({"tol_abs": 1e-300, "tol_rel": 1e-300, "max_newton": 1, "max_relax": 1});
    let (o, _dir) = run_config(&doc, &[]);
    assert_eq!(
        o.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn io_failures_exit_with_5() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    let o = simulate(&["--config".as_ref(), missing.as_os_str()]);
    assert_eq!(o.status.code(), Some(5));

    // output path blocked by a regular file
    let cfg = write_config(dir.path(), "cfg.json", &base());
    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, "").unwrap();
    let out = blocker.join("out");
    let o = simulate(&[
        "--config".as_ref(),
        cfg.as_os_str(),
        "--out".as_ref(),
        out.as_os_str(),
    ]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn out_dir_from_config_is_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    let mut doc = base();
    doc["out_dir"] = "results".into();
    let cfg = write_config(dir.path(), "cfg.json", &doc);
    let o = simulate(&["--config".as_ref(), cfg.as_os_str()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("results/summary.json").exists());
}

#[test]
fn tau_refinement_writes_table() {
    let (o, dir) = run_config(&base(), &["--tau-refine", "3"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let table = std::fs::read_to_string(dir.path().join("out/tau_refinement.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(
        lines.next().unwrap(),
        "level,tau,tau_fine,diff_inf_end,diff_inf_max,ratio"
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').filter_map(|x| x.parse().ok()).collect())
        .collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[1][3] < rows[0][3]);

    let (o, _dir) = run_config(&base(), &["--tau-refine", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn shipped_scenarios_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let o = simulate(&[
                "--config".as_ref(),
                path.as_os_str(),
                "--validate-only".as_ref(),
            ]);
            assert_eq!(o.status.code(), Some(0), "{}", path.display());
            seen += 1;
        }
    }
    assert!(seen >= 2);
}
