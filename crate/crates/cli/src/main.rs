use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use coflow_cli::{emit, run, ExperimentConfig, ReportFormat, WeightChoice, Workload};
use coflow_core::model::CoflowInstance;
use coflow_core::relaxations::lp_lower_bound;
use coflow_core::schedulers::{Schedule, SchedulerKind, SlotConfig};
use coflow_core::sim::validate;
use coflow_core::verify::{oracle_opt, OracleLimits};
use coflow_core::workload::{
    assign_weights, generate, ReleaseMode, SyntheticConfig, WeightMode, WorkloadKind,
};
use coflow_core::Error;

#[derive(Parser)]
#[command(
    name = "coflow",
    version,
    about = "Coflow scheduling on a non-blocking switch"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a synthetic instance as JSON.
    Gen(GenArgs),
    /// Run schedulers over repeated instances and report the results.
    Run(RunArgs),
    /// Run one scheduler on an instance file and emit the schedule as JSON.
    Schedule {
        instance: PathBuf,
        #[arg(long, default_value = "lp-ov-ls")]
        scheduler: SchedulerKind,
        #[arg(long, default_value_t = 1.0)]
        slot_unit: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a tiny integer instance exactly.
    Oracle {
        instance: PathBuf,
        #[arg(long)]
        max_ports: Option<usize>,
        #[arg(long)]
        max_total_demand: Option<u32>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a schedule file against an instance.
    Validate {
        instance: PathBuf,
        schedule: PathBuf,
    },
    /// Print the LP lower bound on total weighted completion time.
    LpBound { instance: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum WorkloadArg {
    Dense,
    Combined,
    Trace,
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightsArg {
    Unit,
    Random,
}

impl From<WeightsArg> for WeightChoice {
    fn from(w: WeightsArg) -> Self {
        match w {
            WeightsArg::Unit => WeightChoice::Unit,
            WeightsArg::Random => WeightChoice::Random,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct SyntheticArgs {
    #[arg(long, value_enum, default_value = "dense")]
    workload: WorkloadArg,
    /// Switch size; 8 by default, 16 with --paper-scale.
    #[arg(long)]
    n_ports: Option<usize>,
    /// Coflows per instance; 40 by default, 160 with --paper-scale.
    #[arg(long)]
    coflows: Option<usize>,
    #[arg(long)]
    zero_release: bool,
    #[arg(long, value_enum, default_value = "unit")]
    weights: WeightsArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    paper_scale: bool,
}

impl SyntheticArgs {
    fn config(&self, seed: u64) -> Result<SyntheticConfig, Error> {
        let kind = match self.workload {
            WorkloadArg::Dense => WorkloadKind::Dense,
            WorkloadArg::Combined => WorkloadKind::Combined,
            WorkloadArg::Trace => {
                return Err(Error::Argument("trace is not a synthetic workload".into()))
            }
        };
        let (n, k) = if self.paper_scale { (16, 160) } else { (8, 40) };
        let config = SyntheticConfig {
            n_ports: self.n_ports.unwrap_or(n),
            n_coflows: self.coflows.unwrap_or(k),
            kind,
            interarrival_range: if self.zero_release {
                None
            } else {
                SyntheticConfig::default().interarrival_range
            },
            seed,
            ..SyntheticConfig::default()
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    synthetic: SyntheticArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    synthetic: SyntheticArgs,
    /// Trace file, required with --workload trace.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Rack count of the trace.
    #[arg(long, default_value_t = 150)]
    trace_ports: usize,
    #[arg(long, default_value_t = 0)]
    filter_min_flows: usize,
    /// Instance file used for every repetition instead of a generated workload.
    #[arg(long, conflicts_with = "trace")]
    instance: Option<PathBuf>,
    /// Comma-separated scheduler names.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "lp-ov-ls,lp-ov-ls-online,varys,lp-ii-gb,lp-ov-gb"
    )]
    schedulers: Vec<SchedulerKind>,
    /// Repetitions; 20 by default, 100 with --paper-scale.
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    slot_unit: f64,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    BadInput(String),
    Invariant(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Internal(_) => Failure::Invariant(e.to_string()),
            _ => Failure::BadInput(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::BadInput(e.to_string())
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_instance(path: &Path) -> Result<CoflowInstance, Failure> {
    Ok(CoflowInstance::from_json(&std::fs::read_to_string(path)?)?)
}

fn write_text(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    let mut out = output(path)?;
    writeln!(out, "{text}")?;
    out.flush()?;
    Ok(())
}

fn gen(args: GenArgs) -> Result<(), Failure> {
    let s = &args.synthetic;
    let inst = generate(&s.config(s.seed)?)?;
    let inst = match s.weights {
        WeightsArg::Unit => inst,
        WeightsArg::Random => assign_weights(&inst, WeightMode::UniformRandom(s.seed))?,
    };
    write_text(args.out.as_deref(), &inst.to_json()?)
}

fn run_experiment(args: RunArgs) -> Result<(), Failure> {
    let s = &args.synthetic;
    let workload = match (s.workload, &args.trace, &args.instance) {
        (_, _, Some(path)) => Workload::File(path.clone()),
        (WorkloadArg::Trace, Some(path), None) => Workload::Trace {
            path: path.clone(),
            n_ports: args.trace_ports,
            min_flows: args.filter_min_flows,
            mode: if s.zero_release {
                ReleaseMode::ZeroReleases
            } else {
                ReleaseMode::WithReleases
            },
        },
        (WorkloadArg::Trace, None, None) => {
            return Err(Failure::BadInput(
                "--workload trace needs --trace <file>".into(),
            ))
        }
        (_, Some(_), None) => {
            return Err(Failure::BadInput("--trace needs --workload trace".into()))
        }
        (_, None, None) => Workload::Synthetic(s.config(s.seed)?),
    };
    let config = ExperimentConfig {
        workload,
        schedulers: args.schedulers.clone(),
        repetitions: args.reps.unwrap_or(if s.paper_scale { 100 } else { 20 }),
        seed: s.seed,
        weights: s.weights.into(),
        workers: args.workers,
        slot: SlotConfig {
            unit: args.slot_unit,
        },
    };
    let report = run(&config)?;
    let format = match args.format {
        FormatArg::Csv => ReportFormat::Csv,
        FormatArg::Json => ReportFormat::Json,
    };
    let mut out = output(args.out.as_deref())?;
    emit(&report, format, &mut out)?;
    out.flush()?;
    for row in report
        .rows
        .iter()
        .filter_map(|r| r.error.as_ref().map(|e| (r, e)))
    {
        eprintln!(
            "instance {}, {}: {}",
            row.0.instance_id, row.0.scheduler, row.1
        );
    }
    for s in &report.summary {
        eprintln!(
            "{:<16} valid {}/{}  mean total {}  mean ratio to LB {}  normalized {}",
            s.scheduler.name(),
            s.valid_runs,
            s.runs,
            fmt_opt(s.mean_total),
            fmt_opt(s.mean_ratio_to_lb),
            fmt_opt(s.mean_ratio_to_lpovls)
        );
    }
    if report.violations.is_empty() {
        Ok(())
    } else {
        Err(Failure::Invariant(report.violations.join("\n")))
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.4}"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => gen(args),
        Command::Run(args) => run_experiment(args),
        Command::Schedule {
            instance,
            scheduler,
            slot_unit,
            out,
        } => (|| {
            let inst = read_instance(&instance)?;
            let sched = scheduler.run_with_slot(&inst, SlotConfig { unit: slot_unit })?;
            write_text(out.as_deref(), &sched.to_json()?)
        })(),
        Command::Oracle {
            instance,
            max_ports,
            max_total_demand,
            out,
        } => (|| {
            let inst = read_instance(&instance)?;
            let defaults = OracleLimits::default();
            let limits = OracleLimits {
                max_ports: max_ports.unwrap_or(defaults.max_ports),
                max_total_demand: max_total_demand.unwrap_or(defaults.max_total_demand),
            };
            let res = oracle_opt(&inst, limits)?;
            eprintln!(
                "optimal total {} ({} states)",
                res.optimal_value, res.explored_states
            );
            write_text(out.as_deref(), &res.optimal_schedule.to_json()?)
        })(),
        Command::Validate { instance, schedule } => (|| {
            let inst = read_instance(&instance)?;
            let sched = Schedule::from_json(&std::fs::read_to_string(&schedule)?)?;
            let report = validate(&sched, &inst)?;
            write_text(
                None,
                &serde_json::to_string_pretty(&report).map_err(Error::from)?,
            )?;
            if report.ok {
                Ok(())
            } else {
                Err(Failure::Invariant(format!(
                    "{} violations",
                    report.violations.len()
                )))
            }
        })(),
        Command::LpBound { instance } => (|| {
            let inst = read_instance(&instance)?;
            write_text(None, &lp_lower_bound(&inst)?.to_string())
        })(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invariant(msg)) => {
            eprintln!("invariant violation: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::BadInput(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
