use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use biharm_cli::CliError;
use serde_json::Value;
use tempfile::TempDir;

fn biharm(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_biharm"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("BIHARM_OUT")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const RADIAL_Q2: &str = r#"{
  "q": 2.0,
  "poly": { "a": [1.0, 1.0, 1.0], "b": [0.0, 0.0, 0.0], "c": 1.0, "eps_quartic": 0.1 },
  "kernel_variant": "shifted",
  "grid": { "radial": { "r_max": 50.0, "n": 200, "grading": 2.0 } },
  "seed": 5
}"#;

#[test]
fn theorem_one_solve_then_verify() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("thm1");
    let o = biharm(&["solve", "--preset", "thm1"], &out);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = json(&out.join("report.json"));
    let dirs: Vec<&Value> = report["growth_fits"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| &f["direction"])
        .collect();
    assert!(dirs.iter().any(|d| d[0] == 1.0));
    assert!(dirs.iter().any(|d| d[1] == 1.0));
    assert_eq!(json(&out.join("continuation.json")).as_array().unwrap().len(), 3);
    let header = fs::read_to_string(out.join("profile.csv")).unwrap();
    assert!(header.starts_with("x1,rho,value\n"));

    let cfg = out.join("config.json");
    let profile = out.join("profile.csv");
    let checked = dir.path().join("verify");
    let o = biharm(
        &[
            "verify",
            "--config",
            cfg.to_str().unwrap(),
            "--profile",
            profile.to_str().unwrap(),
        ],
        &checked,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&checked.join("verify.json"));
    let poho = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "pohozaev_residual")
        .unwrap();
    assert_eq!(poho["status"], "not_applicable");

    // Doubling the profile breaks the integral identity.
    let text = fs::read_to_string(&profile).unwrap();
    let mut lines = text.lines();
    let mut doubled = format!("{}\n", lines.next().unwrap());
    for l in lines {
        let (coords, val) = l.rsplit_once(',').unwrap();
        doubled += &format!("{coords},{}\n", 2.0 * val.parse::<f64>().unwrap() + 1.0);
    }
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, doubled).unwrap();
    let failed = dir.path().join("failed");
    let o = biharm(
        &[
            "verify",
            "--config",
            cfg.to_str().unwrap(),
            "--profile",
            bad.to_str().unwrap(),
        ],
        &failed,
    );
    assert_eq!(code(&o), 3);
    assert_eq!(json(&failed.join("verify.json"))["passed"], false);
}

#[test]
fn nonexistence_regime_exits_with_divergence() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("q05.json");
    fs::write(&cfg, RADIAL_Q2.replace("\"q\": 2.0", "\"q\": 0.5")).unwrap();
    let out = dir.path().join("out");
    let o = biharm(&["solve", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(code(&o), 2);
    let r = json(&out.join("report.json"));
    assert!(r["diverged"].as_str().unwrap().contains("no positive entire solution"));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{\"q\": 2.0,").unwrap();
    assert_eq!(
        code(&biharm(&["solve", "--config", cfg.to_str().unwrap()], dir.path())),
        1
    );
    fs::write(&cfg, RADIAL_Q2.replace("\"c\": 1.0", "\"c\": -1.0")).unwrap();
    assert_eq!(
        code(&biharm(&["solve", "--config", cfg.to_str().unwrap()], dir.path())),
        1
    );
    assert_eq!(code(&biharm(&["solve", "--preset", "nope"], dir.path())), 1);
    assert_eq!(code(&biharm(&["solve"], dir.path())), 1);
    assert_eq!(code(&biharm(&["frobnicate"], dir.path())), 1);
}

#[test]
fn profile_shape_mismatch_exits_with_one() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, RADIAL_Q2).unwrap();
    let csv = dir.path().join("p.csv");
    fs::write(&csv, "r,value\n0,0\n1,1\n").unwrap();
    let o = biharm(
        &[
            "verify",
            "--config",
            cfg.to_str().unwrap(),
            "--profile",
            csv.to_str().unwrap(),
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 1);
}

#[test]
fn exact_q7_verifies() {
    let dir = TempDir::new().unwrap();
    let o = biharm(&["verify", "--exact-q7"], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(json(&dir.path().join("verify.json"))["passed"], true);
}

#[test]
fn shoot_modes() {
    let dir = TempDir::new().unwrap();
    let exact = dir.path().join("q7");
    assert_eq!(code(&biharm(&["shoot", "--q", "7", "--exact-start"], &exact)), 0);
    let s = json(&exact.join("shoot.json"));
    assert!(s["max_rel_deviation"].as_f64().unwrap() < 1e-6);
    assert!(fs::read_to_string(exact.join("trajectory.csv"))
        .unwrap()
        .starts_with("r,u,du,w,dw\n"));

    for (q, want) in [("2", 4.0 / 3.0), ("5", 1.0)] {
        let out = dir.path().join(format!("b{q}"));
        assert_eq!(code(&biharm(&["shoot", "--q", q, "--bisect"], &out)), 0);
        let s = json(&out.join("shoot.json"));
        assert!(s["w0_critical"].as_f64().unwrap() > 0.0);
        let power = s["fits"]
            .as_array()
            .unwrap()
            .iter()
            .find(|f| f["model"] == "power")
            .unwrap();
        let e = power["exponent"].as_f64().unwrap();
        assert!((e / want - 1.0).abs() < 0.03, "q = {q}: {e}");
    }

    let single = dir.path().join("single");
    assert_eq!(code(&biharm(&["shoot", "--q", "2", "--w0", "0"], &single)), 0);
    assert!(json(&single.join("shoot.json"))["outcome"]["touched_zero"].is_object());
    assert_eq!(code(&biharm(&["shoot", "--q", "1", "--bisect"], dir.path())), 1);
}

#[test]
fn bracket_failure_maps_to_four() {
    let e = CliError::Core(biharm_core::Error::BracketNotFound {
        w0_max: 1e12,
        outcome: "x".into(),
    });
    assert_eq!(e.exit_code(), 4);
}

fn sweep_file(dir: &Path, q: &str, kappa2: &str) -> String {
    let p = dir.join("sweep.json");
    let text = format!(
        r#"{{
  "base": {{
    "q": 2.0,
    "poly": {{ "a": [1.0, 1.0, 1.0], "b": [0.0, 0.0, 0.0], "c": 1.0, "eps_quartic": 0.0 }},
    "kernel_variant": "shifted",
    "grid": {{ "axisymmetric": {{ "x1_max": 16.0, "n_x1": 64, "rho_max": 16.0, "n_rho": 64, "grading": 2.0, "azimuthal_order": 32 }} }}
  }},
  "q": [{q}],
  "kappa1": [1.0],
  "kappa2": [{kappa2}],
  "eps": [0.1]
}}"#
    );
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn rows(out: &Path) -> Vec<csv::StringRecord> {
    let mut rd = csv::Reader::from_path(out.join("sweep.csv")).unwrap();
    assert_eq!(
        rd.headers().unwrap().iter().collect::<Vec<_>>(),
        [
            "q",
            "kappa1",
            "kappa2",
            "eps",
            "converged",
            "iters",
            "beta",
            "alpha",
            "exp_e1",
            "exp_e2",
            "status"
        ]
    );
    rd.records().map(|r| r.unwrap()).collect()
}

#[test]
fn sweep_grid() {
    let dir = TempDir::new().unwrap();
    let cfg = sweep_file(dir.path(), "5, 2, 3", "4, 1.5, 2");
    let out = dir.path().join("out");
    assert_eq!(code(&biharm(&["sweep", "--config", &cfg, "--threads", "2"], &out)), 0);
    let rows = rows(&out);
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| &r[4] == "true"));
    // Ordered by parameter tuple.
    let keys: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r[0].parse().unwrap(), r[2].parse().unwrap()))
        .collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(keys, sorted);
    assert_eq!(fs::read_dir(out.join("points")).unwrap().count(), 9);
}

#[test]
fn empty_sweep_writes_header_only() {
    let dir = TempDir::new().unwrap();
    let cfg = sweep_file(dir.path(), "", "2");
    let out = dir.path().join("out");
    assert_eq!(code(&biharm(&["sweep", "--config", &cfg], &out)), 0);
    assert!(rows(&out).is_empty());
}

#[test]
fn sweep_isolates_failed_points() {
    let dir = TempDir::new().unwrap();
    let cfg = sweep_file(dir.path(), "1, 2", "2");
    let out = dir.path().join("out");
    assert_eq!(code(&biharm(&["sweep", "--config", &cfg], &out)), 0);
    let rows = rows(&out);
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][4], "false");
    assert!(rows[0][10].starts_with("diverged"));
    assert_eq!(&rows[1][4], "true");
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, RADIAL_Q2).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(
        code(&biharm(
            &["solve", "--config", cfg.to_str().unwrap(), "--threads", "1"],
            &a
        )),
        0
    );
    assert_eq!(
        code(&biharm(
            &["solve", "--config", cfg.to_str().unwrap(), "--threads", "3"],
            &b
        )),
        0
    );
    for f in ["report.json", "profile.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn seed_flag_and_env_output_dir() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, RADIAL_Q2).unwrap();
    let out = dir.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_biharm"))
        .args(["solve", "--config", cfg.to_str().unwrap(), "--seed", "99"])
        .env("BIHARM_OUT", &out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(json(&out.join("config.json"))["seed"], 99);
}
