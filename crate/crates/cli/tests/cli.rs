use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn flowsched(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowsched"))
        .args(args)
        .arg("--out")
        .arg(out)
        .arg("--jobs")
        .arg("2")
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn run_known_on_two_parallel_links() {
    let dir = tempfile::tempdir().unwrap();
    let d1 = scenario("d1.toml");
    let out = flowsched(&["run-known", "--config", d1.to_str().unwrap()], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_str(&read(dir.path(), "summary.json")).unwrap();
    assert_eq!(summary["expected_cost"], 2.0);
    assert_eq!(summary["is_nash"], true);
    let bound = summary["convergence_bound"].as_u64().unwrap();
    assert!(summary["circles"].as_u64().unwrap() <= bound + 1);
    let assignment = read(dir.path(), "assignment.csv");
    assert_eq!(assignment.lines().count(), 3);
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn disconnected_commodity_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("broken.toml");
    std::fs::write(
        &cfg,
        r#"
seed = 1
vertices = ["a", "b", "c"]
edges = [{ from = "a", to = "b", coefficients = [1.0, 0.0] }]
commodities = [{ source = "a", dest = "b" }, { source = "a", dest = "c" }]
"#,
    )
    .unwrap();
    let out = flowsched(&["run-known", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("commodity 1") && err.contains("a -> c"), "{err}");
    assert!(!dir.path().join("out/manifest.json").exists());
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("typo.toml");
    std::fs::write(&cfg, "seed = 1\nvertice = [\"a\"]\n").unwrap();
    let out = flowsched(&["bound", "--config", cfg.to_str().unwrap()], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("vertice"));
}

#[test]
fn poa_study_rows_account_for_every_sample() {
    let dir = tempfile::tempdir().unwrap();
    let out = flowsched(&["poa-study", "--samples", "100", "--orders", "2", "--seed", "3"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read(dir.path(), "poa_records.csv").lines().count() - 1;
    let stdout = String::from_utf8_lossy(&out.stdout);
    let skipped: usize = stdout
        .split(", ")
        .find_map(|s| s.strip_suffix(" skipped"))
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(rows + skipped, 100);
    let counted: u64 = read(dir.path(), "histogram.csv")
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(counted as usize, rows);
}

#[test]
fn regret_study_writes_one_family_per_multiplier() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario("desk_noisy.toml");
    let out = flowsched(
        &[
            "regret-study",
            "--config",
            cfg.to_str().unwrap(),
            "--g-multipliers",
            "0.5,1,2",
            "--horizon",
            "2000",
            "--replications",
            "2",
            "--trace",
            "--plot",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let aggregate = read(dir.path(), "aggregate.csv");
    let mut gs: Vec<&str> = aggregate.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    gs.dedup();
    assert_eq!(gs.len(), 3);
    assert_eq!(read(dir.path(), "trace.csv").lines().count(), 2001);
    assert!(read(dir.path(), "regret_over_log.svg").starts_with("<svg"));
}

#[test]
fn schedule_preview_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["schedule-preview", "--g", "5", "--n", "3", "--k", "2", "--horizon", "5000"];
    assert!(flowsched(&args, a.path()).status.success());
    assert!(flowsched(&args, b.path()).status.success());
    assert_eq!(read(a.path(), "schedule.csv"), read(b.path(), "schedule.csv"));
}

#[test]
fn invalid_schedule_parameters_fail() {
    let dir = tempfile::tempdir().unwrap();
    let out = flowsched(&["schedule-preview", "--g", "0", "--n", "3", "--k", "2", "--horizon", "100"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}
