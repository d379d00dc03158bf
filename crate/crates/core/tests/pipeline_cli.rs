//! End-to-end checks of the `fairlist` binary: per-stage exit codes,
//! idempotence and the persisted artefacts.

use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fairlist::calllog::write_events;
use fairlist::metrics::{load_report, ReportFormat};
use fairlist::recommender::write_items;
use fairlist::simulator::synthetic::{generate_synthetic, SyntheticWorkloadSpec};
use tempfile::TempDir;

const BASE_CONFIG: &str = "[paths]\nlogs = [\"calls.csv\"]\nitems = \"items.csv\"\noutput_dir = \"out\"\n\
                           [clustering]\nk = 2\n[classifier]\nmode = \"oracle\"\n\
                           [simulation]\ndepth_mode = \"sample-depth\"\nseed = 9\n";

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        let dir = tempfile::tempdir().expect("tempdir");
        let w = generate_synthetic(&SyntheticWorkloadSpec::skewed(), 4).expect("workload");
        let events: Vec<_> = w.events().cloned().collect();
        write_events(File::create(dir.path().join("calls.csv")).unwrap(), &events).unwrap();
        write_items(File::create(dir.path().join("items.csv")).unwrap(), &w.items).unwrap();
        fs::write(dir.path().join("fairlist.toml"), BASE_CONFIG).unwrap();
        Workspace { dir }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    fn out(&self, rel: &str) -> PathBuf {
        self.path("out").join(rel)
    }

    fn run(&self, args: &[&str]) -> Output {
        let config = self.path("fairlist.toml");
        Command::new(env!("CARGO_BIN_EXE_fairlist"))
            .arg("--config")
            .arg(&config)
            .args(args)
            .env_remove("FAIRLIST_OUTPUT_DIR")
            .output()
            .expect("run fairlist")
    }

    fn stages(&self, stages: &[&str], extra: &[&str]) {
        for s in stages {
            let mut args = vec![*s];
            args.extend_from_slice(extra);
            let o = self.run(&args);
            assert_eq!(o.status.code(), Some(0), "{s} failed: {}", String::from_utf8_lossy(&o.stderr));
        }
    }
}

fn read(path: &Path) -> Vec<u8> {
    fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn code(o: &Output) -> Option<i32> {
    o.status.code()
}

#[test]
fn ingest_is_idempotent() {
    let ws = Workspace::new();
    ws.stages(&["ingest"], &[]);
    let first = read(&ws.out("ingest/events.csv"));
    let traffic = read(&ws.out("ingest/traffic.json"));
    ws.stages(&["ingest"], &[]);
    assert_eq!(first, read(&ws.out("ingest/events.csv")));
    assert_eq!(traffic, read(&ws.out("ingest/traffic.json")));
}

#[test]
fn ingest_of_only_malformed_rows_exits_2() {
    let ws = Workspace::new();
    fs::write(ws.path("bad.csv"), "caller_id,timestamp\nx,not-a-time\ny,\n").unwrap();
    let o = ws.run(&["--set", "paths.logs=[\"bad.csv\"]", "ingest"]);
    assert_eq!(code(&o), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn missing_config_exits_1() {
    let o = Command::new(env!("CARGO_BIN_EXE_fairlist"))
        .args(["--config", "/nonexistent/fairlist.toml", "ingest"])
        .output()
        .unwrap();
    assert_eq!(code(&o), Some(1));
}

#[test]
fn unknown_subcommand_exits_1() {
    let o = Command::new(env!("CARGO_BIN_EXE_fairlist")).arg("frobnicate").output().unwrap();
    assert_eq!(code(&o), Some(1));
}

#[test]
fn cluster_honors_explicit_k_and_is_deterministic() {
    let ws = Workspace::new();
    ws.stages(&["ingest", "cluster"], &["--set", "clustering.k=3"]);
    let meta: serde_json::Value = serde_json::from_slice(&read(&ws.out("cluster/metadata.json"))).unwrap();
    assert_eq!(meta["k"], 3);
    let assignment = read(&ws.out("cluster/assignment.csv"));
    ws.stages(&["cluster"], &["--set", "clustering.k=3"]);
    assert_eq!(assignment, read(&ws.out("cluster/assignment.csv")));
}

#[test]
fn cluster_with_no_engaged_users_exits_3() {
    let ws = Workspace::new();
    ws.stages(&["ingest"], &[]);
    let o = ws.run(&["--set", "thresholds.min_calls=100000", "cluster"]);
    assert_eq!(code(&o), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn simulate_without_a_plan_exits_4() {
    let ws = Workspace::new();
    ws.stages(&["ingest", "cluster", "train"], &[]);
    let o = ws.run(&["simulate"]);
    assert_eq!(code(&o), Some(4), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn single_variant_run_and_report_notice() {
    let ws = Workspace::new();
    let only_3c = ["--set", "simulation.variants=[\"3c\"]"];
    ws.stages(&["ingest", "cluster", "train", "plan", "simulate"], &only_3c);

    let outcomes: Vec<_> = fs::read_dir(ws.out("simulate"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv") && !n.ends_with(".lists.csv"))
        .collect();
    let mut sorted = outcomes.clone();
    sorted.sort();
    assert_eq!(sorted, ["3c.cluster-0.csv", "3c.cluster-1.csv"]);

    let manifest: serde_json::Value = serde_json::from_slice(&read(&ws.out("simulate/manifest.json"))).unwrap();
    assert_eq!(manifest["seed"], 9);
    assert_eq!(manifest["config_hash"].as_str().map(str::len), Some(64));

    let o = ws.run(&[only_3c[0], only_3c[1], "report"]);
    assert_eq!(code(&o), Some(0));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("user_pref"), "expected a notice about the missing reference: {stderr}");
}

#[test]
fn report_missing_reference_outcome_exits_5() {
    let ws = Workspace::new();
    ws.stages(&["all"], &[]);
    fs::remove_file(ws.out("simulate/user_pref.cluster-0.csv")).unwrap();
    let o = ws.run(&["report"]);
    assert_eq!(code(&o), Some(5), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn report_files_round_trip() {
    let ws = Workspace::new();
    ws.stages(&["all"], &["--set", "report.format=\"structured\""]);
    let structured = load_report(&ws.out("report"), "run", ReportFormat::Structured).unwrap();
    ws.stages(&["report"], &["--set", "report.format=\"delimited\""]);
    let delimited = load_report(&ws.out("report"), "run", ReportFormat::Delimited).unwrap();
    assert_eq!(structured.gini_by_variant, delimited.gini_by_variant);
    assert_eq!(structured.hhi_distribution, delimited.hhi_distribution);
    assert_eq!(structured.nrmse_by_variant_cluster, delimited.nrmse_by_variant_cluster);
}
