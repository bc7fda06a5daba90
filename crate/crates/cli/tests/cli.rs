use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use coflow_cli::{
    emit, read_csv, run, ExperimentConfig, ExperimentReport, ReportFormat, WeightChoice, Workload,
};
use coflow_core::model::{Coflow, CoflowInstance};
use coflow_core::relaxations::lp_lower_bound;
use coflow_core::schedulers::{SchedulerKind, SlotConfig};
use coflow_core::workload::{SyntheticConfig, WorkloadKind};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
}

fn config(workload: Workload, schedulers: Vec<SchedulerKind>, reps: usize) -> ExperimentConfig {
    ExperimentConfig {
        workload,
        schedulers,
        repetitions: reps,
        seed: 5,
        weights: WeightChoice::Unit,
        workers: None,
        slot: SlotConfig::default(),
    }
}

fn coflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coflow"))
        .args(args)
        .output()
        .unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn dense_smoke_run_validates_every_schedule() {
    let synthetic = SyntheticConfig {
        n_ports: 8,
        n_coflows: 20,
        kind: WorkloadKind::Dense,
        ..Default::default()
    };
    let report = run(&config(
        Workload::Synthetic(synthetic),
        SchedulerKind::ALL.to_vec(),
        5,
    ))
    .unwrap();
    assert_eq!(report.rows.len(), 25);
    assert!(
        report.rows.iter().all(|r| r.valid),
        "{:?}",
        report.rows.iter().find(|r| !r.valid)
    );
    assert!(report.violations.is_empty(), "{:?}", report.violations);
    for r in &report.rows {
        assert!(r.ratio_to_lb.unwrap() >= 1.0 - 1e-9);
        assert_eq!(r.coflow_completions.len(), 20);
    }
    let ids: Vec<usize> = report.rows.iter().map(|r| r.instance_id).collect();
    assert!(ids.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(report.summary.len(), 5);
}

#[test]
fn single_coflow_totals_agree() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.json");
    let c = Coflow::new([(0, 1, 3.0), (1, 0, 2.0), (1, 1, 1.0)], 2.0, 1.0).unwrap();
    let inst = CoflowInstance::new(2, vec![c]).unwrap();
    std::fs::write(&path, inst.to_json().unwrap()).unwrap();
    let report = run(&config(
        Workload::File(path),
        SchedulerKind::ALL.to_vec(),
        1,
    ))
    .unwrap();
    for r in &report.rows {
        assert_eq!(
            r.total_weighted_completion,
            Some(4.0 + 2.0),
            "{}",
            r.scheduler
        );
    }
}

#[test]
fn sized_diagonal_varys_total() {
    let report = run(&config(
        Workload::File(fixture("diagonal_sized.json")),
        vec![SchedulerKind::Varys],
        1,
    ))
    .unwrap();
    assert_eq!(report.rows[0].total_weighted_completion, Some(12.0));
}

#[test]
fn report_formats() {
    let report = run(&config(
        Workload::File(fixture("diagonal_unit.json")),
        vec![SchedulerKind::LpOvLs],
        1,
    ))
    .unwrap();
    assert_eq!(report.rows[0].ratio_to_lpovls, Some(1.0));

    let mut csv = Vec::new();
    emit(&report, ReportFormat::Csv, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert_eq!(
        text.lines().next().unwrap(),
        "instance_id,scheduler,total_weighted_completion,lp_lower_bound,ratio_to_lb,ratio_to_lpovls,wall_ms,valid"
    );
    let rows = read_csv(text.as_bytes()).unwrap();
    assert_eq!(
        rows[0].total_weighted_completion,
        report.rows[0].total_weighted_completion
    );
    assert_eq!(rows[0].scheduler, SchedulerKind::LpOvLs);

    let mut json = Vec::new();
    emit(&report, ReportFormat::Json, &mut json).unwrap();
    let parsed = ExperimentReport::from_json(std::str::from_utf8(&json).unwrap()).unwrap();
    assert_eq!(parsed, report);

    let empty = ExperimentReport {
        rows: vec![],
        summary: vec![],
        violations: vec![],
    };
    assert!(emit(&empty, ReportFormat::Csv, Vec::new()).is_err());
}

#[test]
fn config_is_checked() {
    let w = Workload::File(fixture("diagonal_unit.json"));
    assert!(run(&config(w.clone(), vec![SchedulerKind::Varys], 0)).is_err());
    assert!(run(&config(w, vec![], 1)).is_err());
}

#[test]
fn trace_run_records_refused_slotted_runs() {
    let trace = fixture("trace_small.csv");
    let w = Workload::Trace {
        path: trace,
        n_ports: 8,
        min_flows: 2,
        mode: coflow_core::workload::ReleaseMode::WithReleases,
    };
    let report = run(&config(
        w,
        vec![SchedulerKind::LpOvLs, SchedulerKind::LpIiGb],
        1,
    ))
    .unwrap();
    assert!(report.rows[0].valid);
    assert!(!report.rows[1].valid);
    assert!(report.rows[1].error.as_ref().unwrap().contains("rescale"));
    assert!(report.violations.is_empty());
}

#[test]
fn gen_schedule_validate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    let sched = dir.path().join("sched.json");
    let out = coflow(&[
        "gen",
        "--n-ports",
        "4",
        "--coflows",
        "6",
        "--seed",
        "3",
        "--out",
        path_str(&inst),
    ]);
    assert!(out.status.success());
    let parsed = CoflowInstance::from_json(&std::fs::read_to_string(&inst).unwrap()).unwrap();
    assert_eq!((parsed.n_ports(), parsed.len()), (4, 6));

    for name in [
        "lp-ov-ls",
        "lp-ov-ls-online",
        "varys",
        "lp-ii-gb",
        "lp-ov-gb",
    ] {
        let out = coflow(&[
            "schedule",
            path_str(&inst),
            "--scheduler",
            name,
            "--out",
            path_str(&sched),
        ]);
        assert!(
            out.status.success(),
            "{name}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let out = coflow(&["validate", path_str(&inst), path_str(&sched)]);
        assert_eq!(out.status.code(), Some(0), "{name}");
    }

    let text = std::fs::read_to_string(&sched).unwrap();
    let mut value: serde_json::Value = serde_json::from_str(&text).unwrap();
    let rate = &mut value["segments"][0]["rates"][0]["rate"];
    *rate = serde_json::json!(rate.as_f64().unwrap() * 3.0);
    std::fs::write(&sched, value.to_string()).unwrap();
    let out = coflow(&["validate", path_str(&inst), path_str(&sched)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn lp_bound_and_oracle_verbs() {
    let path = fixture("diagonal_sized.json");
    let out = coflow(&["lp-bound", path_str(&path)]);
    assert!(out.status.success());
    let printed: f64 = String::from_utf8(out.stdout)
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    let inst = CoflowInstance::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(printed, lp_lower_bound(&inst).unwrap());

    let out = coflow(&["oracle", path_str(&path)]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("optimal total 11"));

    let out = coflow(&["oracle", path_str(&path), "--max-total-demand", "4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_input_exits_with_two() {
    assert_eq!(
        coflow(&["lp-bound", "/nonexistent/instance.json"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        coflow(&["run", "--schedulers", "fifo"]).status.code(),
        Some(2)
    );
    assert_eq!(
        coflow(&["run", "--workload", "trace"]).status.code(),
        Some(2)
    );
    assert_eq!(
        coflow(&["run", "--reps", "0", "--coflows", "3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(coflow(&["gen", "--n-ports", "0"]).status.code(), Some(2));
}

#[test]
fn run_verb_writes_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    let json = dir.path().join("r.json");
    let base = [
        "run",
        "--n-ports",
        "3",
        "--coflows",
        "5",
        "--reps",
        "2",
        "--weights",
        "random",
        "--workers",
        "1",
    ];
    let out = coflow(&[&base[..], &["--out", path_str(&csv)]].concat());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        std::fs::read_to_string(&csv).unwrap().lines().count(),
        1 + 2 * 5
    );

    let out = coflow(
        &[
            &base[..],
            &[
                "--zero-release",
                "--format",
                "json",
                "--out",
                path_str(&json),
            ],
        ]
        .concat(),
    );
    assert!(out.status.success());
    let report = ExperimentReport::from_json(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(report.rows.len(), 10);
    assert!(report.rows.iter().all(|r| r.valid));
}
