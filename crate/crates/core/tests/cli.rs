use std::path::Path;
use std::process::{Command, Output};

use idstress::dgp::{sample_d1, Marginal};
use idstress::encoders::EncoderRecipe;
use idstress::io::write_dataset;
use idstress::rng::Rng;

fn idstress(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_idstress"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("small.json");
    std::fs::write(
        &path,
        r#"{
  "version": 1,
  "name": "small",
  "dgps": [{"class": "d1"}, {"class": "d2"}],
  "encoders": [{"class": "e1"}, {"class": "e3"}],
  "metrics": ["mcc_p", "mcc_s"],
  "grid": {"d": [3], "n": [200], "rho": [0.3], "kappa": [4.0]},
  "seeds": [0, 1]
}"#,
    )
    .unwrap();
    path
}

#[test]
fn run_writes_all_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    let o = idstress(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["small_results.csv", "small_summary.csv", "small_pivot.csv", "small_results.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let long = std::fs::read_to_string(out.join("small_results.csv")).unwrap();
    // 2 dgps x 2 encoders x 2 metrics x 2 seeds
    assert_eq!(long.lines().count(), 1 + 16);
    assert!(long.starts_with("experiment,cell,dgp,encoder,"));
}

#[test]
fn bad_configs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"version": 3, "seeds": [], "grid": {"d": [1]}}"#).unwrap();
    let o = idstress(&["run", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("version") && err.contains("seeds") && err.contains("grid.d"), "{err}");

    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(idstress(&["run", bad.to_str().unwrap()], dir.path()).status.code(), Some(2));
    assert_eq!(idstress(&["run", "missing.json"], dir.path()).status.code(), Some(2));
    assert_eq!(idstress(&["preset", "nope"], dir.path()).status.code(), Some(2));
    assert_eq!(idstress(&["properties", bad.to_str().unwrap()], dir.path()).status.code(), Some(2));
}

#[test]
fn preset_list_and_print() {
    let dir = tempfile::tempdir().unwrap();
    let o = idstress(&["preset", "list"], dir.path());
    assert_eq!(stdout(&o).lines().count(), 8);
    let o = idstress(&["preset", "null-phase", "--print-config"], dir.path());
    assert!(o.status.success());
    let cfg: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(cfg["name"], "null-phase");
}

#[test]
fn preset_run_is_byte_stable_and_timing_is_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str, timing: bool| {
        let out = dir.path().join(sub);
        let mut args = vec!["preset", "sanity", "--seeds", "0,1", "--out", out.to_str().unwrap()];
        if timing {
            args.push("--timing");
        }
        assert!(idstress(&args, dir.path()).status.success());
        out
    };
    let (a, b, t) = (run("a", false), run("b", false), run("t", true));
    for f in ["sanity_results.csv", "sanity_summary.csv", "sanity_pivot.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    let timed = std::fs::read_to_string(t.join("sanity_results.csv")).unwrap();
    assert!(timed.lines().next().unwrap().ends_with(",wall_ms"));
}

#[test]
fn diagnose_reports_markdown_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let s = sample_d1(4, 40, Marginal::Normal, &Rng::new(3, 0)).unwrap();
    let ds = EncoderRecipe::NullGaussian { m: 8 }.build(&s, &Rng::new(3, 1)).unwrap();
    let files = write_dataset(dir.path(), "pair", &ds, Some(&s.spec), Some(3)).unwrap();
    let (z, zhat) = (files.factors.to_str().unwrap(), files.codes.to_str().unwrap());

    let o = idstress(&["diagnose", "--z", z, "--zhat", zhat, "--null-seeds", "2"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let md = stdout(&o);
    assert!(md.contains("m/n = 0.2000"), "{md}");
    assert!(md.contains("[WARN] overparametrisation ratio"));

    let o = idstress(
        &["diagnose", "--z", z, "--zhat", zhat, "--null-seeds", "2", "--json", "--metrics", "mcc_p,mcc_s"],
        dir.path(),
    );
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["metrics"].as_array().unwrap().len(), 2);
    let ids: Vec<&str> = report["checklist"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["id"].as_str().unwrap())
        .collect();
    assert!(ids.contains(&"ratio") && ids.contains(&"null_baseline"));

    let o = idstress(&["diagnose", "--z", z, "--zhat", z], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("header"));
}

#[test]
fn oracle_curves() {
    let dir = tempfile::tempdir().unwrap();
    let o = idstress(&["oracle", "null-floor", "--grid", "m=10", "--grid", "n=100,1000"], dir.path());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("m,n,floor"));
    let floor: f64 = lines.next().unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!((floor - (2.0 * 10f64.ln() / 100.0).sqrt()).abs() < 1e-12);

    let o = idstress(
        &["oracle", "mixing-curve", "--grid", "rho=-0.5:0.5:0.25", "--grid", "epsilon=0.5,1"],
        dir.path(),
    );
    assert_eq!(stdout(&o).lines().count(), 1 + 10);
    let o = idstress(&["oracle", "mixing-curve", "--grid", "rho=0.1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn strict_properties_exit_on_violation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("suite.json");
    // MCC-P on P4 at a high m/n is a guaranteed violation and runs quickly.
    std::fs::write(
        &cfg,
        r#"{"seeds": [0, 1], "metrics": ["mcc_p"], "properties": ["P4"],
            "null": {"d": 3, "dim_ratios": [1], "sample_ratios": [0.1, 0.2]}}"#,
    )
    .unwrap();
    let out = dir.path().join("props");
    let o = idstress(&["properties", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], dir.path());
    assert!(o.status.success());
    assert_eq!(stdout(&o), "metric,P4\nmcc_p,violated\n");
    assert!(out.join("properties.json").exists() && out.join("verdicts.csv").exists());
    let o = idstress(&["properties", cfg.to_str().unwrap(), "--strict"], dir.path());
    assert_eq!(o.status.code(), Some(3));
}
