//! Experiment runner: builds instances, runs schedulers, validates every
//! schedule and reports totals against the LP lower bound.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use coflow_core::model::CoflowInstance;
use coflow_core::relaxations::solve_ordering_lp;
use coflow_core::schedulers::{
    lp_ii_gb_with, lp_ov_gb_with, lp_ov_ls_online, lp_ov_ls_with, varys, ResolveMode, Schedule,
    SchedulerKind, SlotConfig,
};
use coflow_core::sim::validate;
use coflow_core::verify::{check_ratio_bound, check_structural_bound};
use coflow_core::workload::{
    assign_weights, generate, ingest_trace, read_trace, ReleaseMode, SyntheticConfig, WeightMode,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use coflow_core::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Workload {
    Synthetic(SyntheticConfig),
    Trace {
        path: PathBuf,
        n_ports: usize,
        min_flows: usize,
        mode: ReleaseMode,
    },
    /// The same instance file for every repetition.
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightChoice {
    Unit,
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub workload: Workload,
    pub schedulers: Vec<SchedulerKind>,
    pub repetitions: usize,
    pub seed: u64,
    pub weights: WeightChoice,
    /// Worker threads; `None` uses every core.
    pub workers: Option<usize>,
    pub slot: SlotConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::Argument("repetitions must be at least 1".into()));
        }
        if self.schedulers.is_empty() {
            return Err(Error::Argument("select at least one scheduler".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Argument("workers must be at least 1".into()));
        }
        if let Workload::Synthetic(c) = &self.workload {
            c.validate()?;
        }
        Ok(())
    }
}

/// One scheduler run on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleReport {
    pub instance_id: usize,
    pub scheduler: SchedulerKind,
    /// `None` when the scheduler failed.
    pub total_weighted_completion: Option<f64>,
    pub lp_lower_bound: f64,
    pub ratio_to_lb: Option<f64>,
    pub ratio_to_lpovls: Option<f64>,
    pub wall_ms: f64,
    pub valid: bool,
    pub coflow_completions: Vec<f64>,
    /// Scheduler failure or validation finding, if any.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulerSummary {
    pub scheduler: SchedulerKind,
    pub runs: usize,
    pub valid_runs: usize,
    /// Means over valid runs; `None` when there are none.
    pub mean_total: Option<f64>,
    pub mean_ratio_to_lb: Option<f64>,
    pub mean_ratio_to_lpovls: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub rows: Vec<ScheduleReport>,
    pub summary: Vec<SchedulerSummary>,
    /// Broken hard invariants: invalid schedules, internal failures, and
    /// list-scheduling ratios or per-coflow bounds beyond what is proven.
    pub violations: Vec<String>,
}

impl ExperimentReport {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Instance `rep` of the experiment together with the seeds it derives from.
pub fn build_instance(config: &ExperimentConfig, rep: usize) -> Result<CoflowInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(rep as u64);
    let instance_seed: u64 = rng.gen();
    let weight_seed: u64 = rng.gen();
    let inst = match &config.workload {
        Workload::Synthetic(c) => generate(&SyntheticConfig {
            seed: instance_seed,
            ..c.clone()
        })?,
        Workload::Trace {
            path,
            n_ports,
            min_flows,
            mode,
        } => ingest_trace(&read_trace(path)?, *n_ports, *mode, *min_flows)?,
        Workload::File(path) => CoflowInstance::from_json(&std::fs::read_to_string(path)?)?,
    };
    match config.weights {
        WeightChoice::Unit => assign_weights(&inst, WeightMode::Unit),
        WeightChoice::Random => assign_weights(&inst, WeightMode::UniformRandom(weight_seed)),
    }
}

struct Timed {
    schedule: Result<Schedule>,
    wall_ms: f64,
}

fn timed(f: impl FnOnce() -> Result<Schedule>) -> Timed {
    let start = Instant::now();
    let schedule = f();
    Timed {
        schedule,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    }
}

/// Runs every selected scheduler on one instance.
pub fn run_instance(
    instance_id: usize,
    instance: &CoflowInstance,
    schedulers: &[SchedulerKind],
    slot: SlotConfig,
) -> Result<(Vec<ScheduleReport>, Vec<String>)> {
    let lp_start = Instant::now();
    let lp = solve_ordering_lp(instance)?;
    let lp_ms = lp_start.elapsed().as_secs_f64() * 1e3;
    let bound = lp.objective;

    let baseline = timed(|| lp_ov_ls_with(instance, &lp));
    let baseline_total = baseline
        .schedule
        .as_ref()
        .ok()
        .map(|s| s.total_weighted_completion(instance));

    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for &kind in schedulers {
        let run = match kind {
            SchedulerKind::LpOvLs => Timed {
                schedule: match &baseline.schedule {
                    Ok(s) => Ok(s.clone()),
                    Err(_) => lp_ov_ls_with(instance, &lp),
                },
                wall_ms: baseline.wall_ms + lp_ms,
            },
            SchedulerKind::LpOvGb => {
                let mut t = timed(|| lp_ov_gb_with(instance, &lp));
                t.wall_ms += lp_ms;
                t
            }
            SchedulerKind::LpOvLsOnline => {
                timed(|| lp_ov_ls_online(instance, ResolveMode::OnArrival))
            }
            SchedulerKind::Varys => timed(|| varys(instance)),
            SchedulerKind::LpIiGb => timed(|| lp_ii_gb_with(instance, slot)),
        };
        let tag = format!("instance {instance_id}, {kind}");
        let row = match run.schedule {
            Ok(schedule) => {
                let total = schedule.total_weighted_completion(instance);
                let report = validate(&schedule, instance)?;
                let mut error = None;
                if !report.ok {
                    let first = &report.violations[0];
                    let msg = format!(
                        "{} violations, first {} at {} by {}",
                        report.violations.len(),
                        first.kind,
                        first.location,
                        first.magnitude
                    );
                    violations.push(format!("{tag}: invalid schedule: {msg}"));
                    error = Some(msg);
                }
                let ratio_to_lb = total / bound;
                if report.ok && ratio_to_lb < 1.0 - 1e-9 {
                    violations.push(format!("{tag}: total {total} below the LP bound {bound}"));
                }
                if kind == SchedulerKind::LpOvLs {
                    let th = check_ratio_bound(instance, &schedule, bound);
                    if !th.holds {
                        violations.push(format!("{tag}: ratio {} exceeds {}", th.ratio, th.factor));
                    }
                    let st = check_structural_bound(instance, &schedule, &lp.ordering)?;
                    if let Some(v) = st.violations.first() {
                        violations.push(format!(
                            "{tag}: coflow {} completes at {} beyond {}",
                            v.coflow, v.value, v.bound
                        ));
                    }
                }
                ScheduleReport {
                    instance_id,
                    scheduler: kind,
                    total_weighted_completion: Some(total),
                    lp_lower_bound: bound,
                    ratio_to_lb: Some(ratio_to_lb),
                    ratio_to_lpovls: baseline_total.map(|b| total / b),
                    wall_ms: run.wall_ms,
                    valid: report.ok,
                    coflow_completions: schedule.coflow_completions,
                    error,
                }
            }
            Err(e) => {
                if matches!(e, Error::Internal(_)) {
                    violations.push(format!("{tag}: {e}"));
                }
                ScheduleReport {
                    instance_id,
                    scheduler: kind,
                    total_weighted_completion: None,
                    lp_lower_bound: bound,
                    ratio_to_lb: None,
                    ratio_to_lpovls: None,
                    wall_ms: run.wall_ms,
                    valid: false,
                    coflow_completions: Vec::new(),
                    error: Some(e.to_string()),
                }
            }
        };
        rows.push(row);
    }
    Ok((rows, violations))
}

fn summarize(rows: &[ScheduleReport], schedulers: &[SchedulerKind]) -> Vec<SchedulerSummary> {
    schedulers
        .iter()
        .map(|&kind| {
            let mine: Vec<&ScheduleReport> = rows.iter().filter(|r| r.scheduler == kind).collect();
            let valid: Vec<&&ScheduleReport> = mine.iter().filter(|r| r.valid).collect();
            let mean = |f: fn(&ScheduleReport) -> Option<f64>| {
                let xs: Vec<f64> = valid.iter().filter_map(|r| f(r)).collect();
                (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
            };
            SchedulerSummary {
                scheduler: kind,
                runs: mine.len(),
                valid_runs: valid.len(),
                mean_total: mean(|r| r.total_weighted_completion),
                mean_ratio_to_lb: mean(|r| r.ratio_to_lb),
                mean_ratio_to_lpovls: mean(|r| r.ratio_to_lpovls),
            }
        })
        .collect()
}

/// Runs the experiment. Repetitions run in parallel; rows come back ordered by
/// instance id, then by the configured scheduler order.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let mut schedulers = config.schedulers.clone();
    schedulers.dedup();
    let job = |rep: usize| -> Result<(Vec<ScheduleReport>, Vec<String>)> {
        let inst = build_instance(config, rep)?;
        run_instance(rep, &inst, &schedulers, config.slot)
    };
    let results: Vec<Result<(Vec<ScheduleReport>, Vec<String>)>> = match config.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::Internal(e.to_string()))?
            .install(|| (0..config.repetitions).into_par_iter().map(job).collect()),
        None => (0..config.repetitions).into_par_iter().map(job).collect(),
    };
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for r in results {
        let (mut rr, mut vv) = r?;
        rows.append(&mut rr);
        violations.append(&mut vv);
    }
    let summary = summarize(&rows, &schedulers);
    Ok(ExperimentReport {
        rows,
        summary,
        violations,
    })
}

pub const CSV_HEADER: [&str; 8] = [
    "instance_id",
    "scheduler",
    "total_weighted_completion",
    "lp_lower_bound",
    "ratio_to_lb",
    "ratio_to_lpovls",
    "wall_ms",
    "valid",
];

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    instance_id: usize,
    scheduler: SchedulerKind,
    total_weighted_completion: Option<f64>,
    lp_lower_bound: f64,
    ratio_to_lb: Option<f64>,
    ratio_to_lpovls: Option<f64>,
    wall_ms: f64,
    valid: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

pub fn write_csv(rows: &[ScheduleReport], out: impl Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.serialize(CsvRow {
            instance_id: r.instance_id,
            scheduler: r.scheduler,
            total_weighted_completion: r.total_weighted_completion,
            lp_lower_bound: r.lp_lower_bound,
            ratio_to_lb: r.ratio_to_lb,
            ratio_to_lpovls: r.ratio_to_lpovls,
            wall_ms: (r.wall_ms * 1e3).round() / 1e3,
            valid: r.valid,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Reads rows written by [`write_csv`]; completions and errors are not part of
/// the CSV layout and come back empty.
pub fn read_csv(input: impl std::io::Read) -> Result<Vec<ScheduleReport>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(String::from).collect();
    if header != CSV_HEADER {
        return Err(Error::Argument(format!("unexpected CSV header {header:?}")));
    }
    r.deserialize::<CsvRow>()
        .map(|row| {
            let row = row?;
            Ok(ScheduleReport {
                instance_id: row.instance_id,
                scheduler: row.scheduler,
                total_weighted_completion: row.total_weighted_completion,
                lp_lower_bound: row.lp_lower_bound,
                ratio_to_lb: row.ratio_to_lb,
                ratio_to_lpovls: row.ratio_to_lpovls,
                wall_ms: row.wall_ms,
                valid: row.valid,
                coflow_completions: Vec::new(),
                error: None,
            })
        })
        .collect()
}

pub fn emit(report: &ExperimentReport, format: ReportFormat, out: impl Write) -> Result<()> {
    if report.rows.is_empty() {
        return Err(Error::Argument("nothing to report".into()));
    }
    match format {
        ReportFormat::Csv => write_csv(&report.rows, out),
        ReportFormat::Json => {
            let mut out = out;
            out.write_all(report.to_json()?.as_bytes())?;
            out.write_all(b"\n")?;
            Ok(())
        }
    }
}
