//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on a domain error (reported as one JSON line
//! on stderr), 2 on a usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::counting::{expected_loss_curve, CoinDistribution, LossKind, Method};
use crate::curve::{CurveObservation, ModelSizeCurve, PowerLawCurve};
use crate::error::{Error, Result};
use crate::fitting::{apply_cutoff, bootstrap_ci, fit_with_floor, select_composite, FitSpec, FloorMode};
use crate::io::{
    labels_csv, observations_to_string, parse_fit_report, plot_data_csv, read_observations, to_json, FitReportDocument,
    SegmentationDocument,
};
use crate::projection::{improvement_per_doubling, project, ProjectionResult};
use crate::regions::{segment, GuessBaseline, SegmentOptions};
use crate::sharding::plan_shards;

#[derive(Debug, Parser)]
#[command(
    name = "lcurve",
    version,
    about = "Fit, segment and project power-law learning curves"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Plan geometrically growing training shards and a validation split.
    Plan(PlanArgs),
    /// Fit a learning curve to an observations CSV.
    Fit(FitArgs),
    /// Split a curve into small-data, power-law and irreducible regions.
    Segment(SegmentArgs),
    /// Data, model size and relative compute needed for a target loss.
    Project(ProjectArgs),
    /// Generate a learning curve from a built-in learner.
    Simulate(SimulateArgs),
    /// Log-log plot data for observations and a fitted curve.
    Plotdata(PlotArgs),
}

#[derive(Debug, Args)]
struct PlanArgs {
    #[arg(long)]
    total: u64,
    #[arg(long, default_value_t = 0.001)]
    smallest: f64,
    #[arg(long, default_value_t = 2.0)]
    ratio: f64,
    #[arg(long, default_value_t = 0.5)]
    max: f64,
    #[arg(long, default_value_t = 0.05)]
    val: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// `free`, `zero` or `fixed:<gamma>`.
    #[arg(long, default_value = "zero", value_parser = parse_floor)]
    floor: FloorMode,
    /// Keep only the best observation per shard size.
    #[arg(long)]
    composite: bool,
    /// Number of bootstrap resamples; 0 disables intervals.
    #[arg(long, default_value_t = 0)]
    bootstrap: usize,
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Drop observations with shard size above this.
    #[arg(long)]
    cutoff: Option<u64>,
}

#[derive(Debug, Clone, Copy)]
enum BaselineSpec {
    CrossEntropy(u64),
    TopK(u64, u64),
    Value(f64),
}

#[derive(Debug, Args)]
struct SegmentArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// `xent:<classes>`, `topk:<classes>,<k>` or `value:<loss>`.
    #[arg(long, value_parser = parse_baseline)]
    baseline: BaselineSpec,
    #[arg(long, default_value_t = 0.05)]
    plateau_tol: f64,
    #[arg(long, default_value_t = 0.01)]
    floor_tol: f64,
    /// Also write per-point labels as CSV.
    #[arg(long)]
    labels_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ProjectArgs {
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    #[arg(long, allow_negative_numbers = true)]
    beta: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    gamma: f64,
    #[arg(long, requires = "sizing_beta", allow_negative_numbers = true)]
    sizing_alpha: Option<f64>,
    #[arg(long, requires = "sizing_alpha", allow_negative_numbers = true)]
    sizing_beta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    target: f64,
    /// Reference data size, normally the largest observed shard.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    reference: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum LearnerKind {
    Counting,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value = "counting")]
    learner: LearnerKind,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// `l1`, `l2` or `kl`.
    #[arg(long, default_value = "l1", value_parser = parse_loss)]
    loss: LossKind,
    /// `closed`, `binomial` or `mc:<trials>`.
    #[arg(long, default_value = "binomial", value_parser = parse_method)]
    method: MethodSpec,
    /// Comma-separated training-set sizes.
    #[arg(long, value_delimiter = ',', required = true)]
    shards: Vec<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy)]
enum MethodSpec {
    Closed,
    Binomial,
    MonteCarlo(u64),
}

#[derive(Debug, Args)]
struct PlotArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Fit-report JSON produced by `fit`.
    #[arg(long)]
    fit: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_floor(s: &str) -> std::result::Result<FloorMode, String> {
    match s {
        "free" => Ok(FloorMode::Free),
        "zero" => Ok(FloorMode::Zero),
        _ => match s.strip_prefix("fixed:") {
            Some(g) => g
                .parse::<f64>()
                .map(FloorMode::Fixed)
                .map_err(|_| format!("bad floor value {g:?}")),
            None => Err("expected free, zero or fixed:<gamma>".into()),
        },
    }
}

fn parse_baseline(s: &str) -> std::result::Result<BaselineSpec, String> {
    let bad = || format!("bad baseline {s:?}; expected xent:K, topk:K,k or value:x");
    let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
    match kind {
        "xent" => rest.parse().map(BaselineSpec::CrossEntropy).map_err(|_| bad()),
        "topk" => {
            let (classes, k) = rest.split_once(',').ok_or_else(bad)?;
            Ok(BaselineSpec::TopK(
                classes.parse().map_err(|_| bad())?,
                k.parse().map_err(|_| bad())?,
            ))
        }
        "value" => rest.parse().map(BaselineSpec::Value).map_err(|_| bad()),
        _ => Err(bad()),
    }
}

fn parse_loss(s: &str) -> std::result::Result<LossKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_method(s: &str) -> std::result::Result<MethodSpec, String> {
    match s {
        "closed" => Ok(MethodSpec::Closed),
        "binomial" => Ok(MethodSpec::Binomial),
        _ => match s.strip_prefix("mc:") {
            Some(n) => n
                .parse()
                .map(MethodSpec::MonteCarlo)
                .map_err(|_| format!("bad trial count {n:?}")),
            None => Err("expected closed, binomial or mc:<trials>".into()),
        },
    }
}

#[derive(Serialize)]
struct ErrorDocument<'a> {
    code: &'a str,
    message: String,
    context: serde_json::Value,
}

#[derive(Serialize)]
struct PerDoubling {
    improvement_per_doubling: f64,
    loss_halving_data_factor: f64,
}

#[derive(Serialize)]
struct ProjectDocument {
    #[serde(flatten)]
    result: ProjectionResult,
    per_doubling: PerDoubling,
}

fn read_observation_file(path: &Path) -> Result<Vec<CurveObservation>> {
    let file = fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_observations(file)
}

fn require_nonempty(obs: Vec<CurveObservation>) -> Result<Vec<CurveObservation>> {
    if obs.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    Ok(obs)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Writes to `out` if given, otherwise to stdout.
fn emit(out: Option<&Path>, contents: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => write_file(path, contents),
        None => Ok(stdout.write_all(contents.as_bytes())?),
    }
}

fn run_plan(a: &PlanArgs, stdout: &mut dyn Write) -> Result<()> {
    let plan = plan_shards(a.total, a.smallest, a.ratio, a.max, a.val, a.seed)?;
    let text = to_json(&plan)?;
    if let Some(path) = &a.out {
        write_file(path, &text)?;
    }
    stdout.write_all(text.as_bytes())?;
    Ok(())
}

fn run_fit(a: &FitArgs, stdout: &mut dyn Write) -> Result<()> {
    let mut obs = require_nonempty(read_observation_file(&a.input)?)?;
    if a.composite {
        obs = select_composite(&obs);
    }
    if let Some(max) = a.cutoff {
        obs = apply_cutoff(&obs, max);
    }
    let report = if a.bootstrap > 0 {
        bootstrap_ci(&obs, FitSpec::Learning(a.floor), a.bootstrap, a.confidence, a.seed)?
    } else {
        fit_with_floor(&obs, a.floor)?
    };
    stdout.write_all(to_json(&FitReportDocument::from(&report))?.as_bytes())?;
    Ok(())
}

fn run_segment(a: &SegmentArgs, stdout: &mut dyn Write) -> Result<()> {
    let obs = require_nonempty(read_observation_file(&a.input)?)?;
    let baseline = match a.baseline {
        BaselineSpec::CrossEntropy(k) => GuessBaseline::cross_entropy(k)?,
        BaselineSpec::TopK(classes, k) => GuessBaseline::top_k_error(classes, k)?,
        BaselineSpec::Value(v) => GuessBaseline::custom(v)?,
    };
    let options = SegmentOptions {
        plateau_tolerance: a.plateau_tol,
        floor_improvement_threshold: a.floor_tol,
    };
    let s = segment(&obs, &baseline, options)?;
    if let Some(path) = &a.labels_out {
        write_file(path, &labels_csv(&obs, &s)?)?;
    }
    stdout.write_all(to_json(&SegmentationDocument::new(&baseline, &s))?.as_bytes())?;
    Ok(())
}

fn run_project(a: &ProjectArgs, stdout: &mut dyn Write) -> Result<()> {
    let learning = PowerLawCurve::new(a.alpha, a.beta, a.gamma)?;
    let sizing = match (a.sizing_alpha, a.sizing_beta) {
        (Some(ap), Some(bp)) => Some(ModelSizeCurve::new(ap, bp)?),
        _ => None,
    };
    let result = project(&learning, sizing.as_ref(), a.target, a.reference)?;
    let doc = ProjectDocument {
        result,
        per_doubling: PerDoubling {
            improvement_per_doubling: improvement_per_doubling(&learning)?,
            loss_halving_data_factor: learning.halving_factor(),
        },
    };
    stdout.write_all(to_json(&doc)?.as_bytes())?;
    Ok(())
}

fn run_simulate(a: &SimulateArgs, stdout: &mut dyn Write) -> Result<()> {
    let LearnerKind::Counting = a.learner;
    let coin = CoinDistribution::new(a.p)?;
    let method = match a.method {
        MethodSpec::Closed => Method::ClosedForm,
        MethodSpec::Binomial => Method::BinomialSum,
        MethodSpec::MonteCarlo(trials) => Method::MonteCarlo { trials, seed: a.seed },
    };
    let obs = expected_loss_curve(&a.shards, &coin, a.loss, method)?;
    emit(a.out.as_deref(), &observations_to_string(&obs)?, stdout)
}

fn run_plotdata(a: &PlotArgs, stdout: &mut dyn Write) -> Result<()> {
    let obs = require_nonempty(read_observation_file(&a.input)?)?;
    let text = fs::read_to_string(&a.fit).map_err(|e| Error::Io(format!("{}: {e}", a.fit.display())))?;
    let fit = parse_fit_report(&text)?;
    emit(a.out.as_deref(), &plot_data_csv(&obs, &fit)?, stdout)
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Plan(_) => "plan",
            Command::Fit(_) => "fit",
            Command::Segment(_) => "segment",
            Command::Project(_) => "project",
            Command::Simulate(_) => "simulate",
            Command::Plotdata(_) => "plotdata",
        }
    }

    fn run(&self, stdout: &mut dyn Write) -> Result<()> {
        match self {
            Command::Plan(a) => run_plan(a, stdout),
            Command::Fit(a) => run_fit(a, stdout),
            Command::Segment(a) => run_segment(a, stdout),
            Command::Project(a) => run_project(a, stdout),
            Command::Simulate(a) => run_simulate(a, stdout),
            Command::Plotdata(a) => run_plotdata(a, stdout),
        }
    }
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = sink.write_all(rendered.as_bytes());
            return if code == 0 { 0 } else { 2 };
        }
    };
    match cli.command.run(stdout) {
        Ok(()) => 0,
        Err(e) => {
            let doc = ErrorDocument {
                code: e.code(),
                message: e.to_string(),
                context: serde_json::json!({ "command": cli.command.name() }),
            };
            let line = serde_json::to_string(&doc).unwrap_or_else(|_| format!("{{\"code\":\"{}\"}}", e.code()));
            let _ = writeln!(stderr, "{line}");
            1
        }
    }
}
