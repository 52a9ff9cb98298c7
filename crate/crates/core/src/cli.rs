//! Batch command line: argument parsing, run manifests and output files.
//!
//! Every command resolves its flags into a plan, computes all outputs in
//! memory and only then writes them, followed by `manifest.json`. A failed
//! command leaves nothing behind. The manifest records the resolved plan,
//! so `rerun` reproduces the outputs byte for byte. The worker count is
//! not part of the plan.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::attention_flow::build_network;
use crate::empirical::{
    community_exponents, default_checkpoints, distinct_users, growth_curve_with_network,
    parse_events, sessionize, Session, DEFAULT_SESSION_GAP,
};
use crate::error::{Error, Result};
use crate::inference::{infer, InferredParams, ObservedExponents};
use crate::levy_sampler::{StepLawParams, DEFAULT_L_MAX, DEFAULT_L_MIN};
use crate::plot::{loglog_svg, Series};
use crate::scaling::{
    build_response_surface, default_lambda_grid, default_p_grid, sweep_cell, write_points_csv,
    ExponentSet, ResponseSurface, SweepSettings, DEFAULT_SEED,
};
use crate::simulation::{run_session, write_session_jsonl, SimConfig, DEFAULT_MAX_TICKS};
use crate::with_jobs;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const OUT_DIR_ENV: &str = "LEVY_ATTENTION_OUT";

#[derive(Debug, Parser)]
#[command(name = "levy-attention", version, about = "Interactive Lévy-flight attention model: simulate, sweep, infer, analyze")]
pub struct Cli {
    /// Output directory.
    #[arg(long, global = true, env = OUT_DIR_ENV, default_value = "out")]
    pub out: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one session and export trajectories and the flow network.
    Simulate(SimulateArgs),
    /// Sweep community sizes at one (p, lambda) and fit the exponents.
    Sweep(SweepArgs),
    /// Build the exponent response surface over a (p, lambda) grid.
    Surface(SurfaceArgs),
    /// Infer (p, lambda) from observed exponents and a surface.
    Infer(InferArgs),
    /// Sessionize an event log and fit community exponents.
    Analyze(AnalyzeArgs),
    /// Reproduce a previous run from its manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Minimum jump length.
    #[arg(long, default_value_t = DEFAULT_L_MIN)]
    pub l_min: f64,
    /// Maximum jump length.
    #[arg(long, default_value_t = DEFAULT_L_MAX)]
    pub l_max: f64,
    /// Tick cap per session.
    #[arg(long, default_value_t = DEFAULT_MAX_TICKS)]
    pub max_ticks: u64,
    /// Do not seed the origin with one resource unit.
    #[arg(long)]
    pub no_seed_origin: bool,
    /// Skip the walkers' deposit trial at the origin before the first tick.
    #[arg(long)]
    pub no_origin_trial: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Number of walkers.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Deposit probability per arrival.
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    /// Flight exponent.
    #[arg(long, default_value_t = 2.0)]
    pub lambda: f64,
    /// Random seed.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepGrid {
    /// Community sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "64,128,256,512,1024,2048,4096")]
    pub n_list: Vec<usize>,
    /// Sessions per size.
    #[arg(long, default_value_t = 5)]
    pub replicates: usize,
    /// Master seed.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub model: ModelArgs,
}

impl SweepGrid {
    fn settings(&self) -> SweepSettings {
        SweepSettings {
            n_list: self.n_list.clone(),
            replicates: self.replicates,
            master_seed: self.seed,
            l_min: self.model.l_min,
            l_max: self.model.l_max,
            seed_origin: !self.model.no_seed_origin,
            origin_trial: !self.model.no_origin_trial,
            max_ticks: self.model.max_ticks,
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    #[arg(long, default_value_t = 2.0)]
    pub lambda: f64,
    #[command(flatten)]
    pub grid: SweepGrid,
    /// Also write a log-log scatter of A, D, E against N.
    #[arg(long)]
    pub svg: bool,
    /// Worker threads (default: all cores). Never changes results.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SurfaceArgs {
    /// JSON file holding `p_grid`, `lambda_grid` and `settings`; replaces
    /// the grid and sweep flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// p grid, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.15,0.25,0.35,0.45,0.55,0.65,0.75,0.85,0.95")]
    pub p_grid: Vec<f64>,
    /// lambda grid, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1.1,1.3,1.5,1.7,1.9,2.1,2.3,2.5,2.7,2.9")]
    pub lambda_grid: Vec<f64>,
    #[command(flatten)]
    pub grid: SweepGrid,
    /// Worker threads (default: all cores). Never changes results.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    /// Response surface JSON written by `surface`.
    #[arg(long)]
    pub surface: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    /// Exponents JSON written by `analyze` (or `sweep`).
    #[arg(long, conflicts_with_all = ["alpha", "beta", "theta"])]
    pub exponents: Option<PathBuf>,
    /// Likelihood width; does not affect the inferred cell.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Event log CSV with header `user_id,timestamp,resource_id`.
    #[arg(long)]
    pub input: PathBuf,
    /// Inactivity gap in seconds that closes a session.
    #[arg(long, default_value_t = DEFAULT_SESSION_GAP)]
    pub gap: f64,
    /// Collapse consecutive repeats of a resource within a session.
    #[arg(long)]
    pub drop_self_loops: bool,
    /// User-count checkpoints, comma separated (default: powers of two).
    #[arg(long, value_delimiter = ',')]
    pub checkpoints: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    /// Manifest of the run to reproduce.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Worker threads (default: all cores). Never changes results.
    #[arg(long)]
    pub jobs: Option<usize>,
}

/// A fully resolved command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "config", rename_all = "lowercase")]
pub enum RunPlan {
    Simulate(SimConfig),
    Sweep {
        p: f64,
        lambda: f64,
        settings: SweepSettings,
        svg: bool,
    },
    Surface(SurfacePlan),
    Infer {
        observed: ObservedExponents,
        surface: PathBuf,
        sigma: f64,
    },
    Analyze {
        input: PathBuf,
        gap: f64,
        drop_self_loops: bool,
        checkpoints: Option<Vec<usize>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfacePlan {
    pub p_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    pub settings: SweepSettings,
}

impl Default for SurfacePlan {
    fn default() -> Self {
        SurfacePlan {
            p_grid: default_p_grid(),
            lambda_grid: default_lambda_grid(),
            settings: SweepSettings::default(),
        }
    }
}

impl RunPlan {
    pub fn name(&self) -> &'static str {
        match self {
            RunPlan::Simulate(_) => "simulate",
            RunPlan::Sweep { .. } => "sweep",
            RunPlan::Surface(_) => "surface",
            RunPlan::Infer { .. } => "infer",
            RunPlan::Analyze { .. } => "analyze",
        }
    }

    pub fn master_seed(&self) -> Option<u64> {
        match self {
            RunPlan::Simulate(cfg) => Some(cfg.rng_seed),
            RunPlan::Sweep { settings, .. } => Some(settings.master_seed),
            RunPlan::Surface(plan) => Some(plan.settings.master_seed),
            RunPlan::Infer { .. } | RunPlan::Analyze { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    #[serde(flatten)]
    pub plan: RunPlan,
    pub master_seed: Option<u64>,
    pub tool_version: String,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
    }
}

/// One file to be written into the output directory.
pub struct Output {
    pub name: &'static str,
    pub bytes: Vec<u8>,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("cannot read {}: {e}", path.display()),
        ))
    })
}

fn absolute(path: &Path) -> Result<PathBuf> {
    std::path::absolute(path).map_err(Error::from)
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn model_config(n: usize, p: f64, lambda: f64, seed: u64, model: &ModelArgs) -> Result<SimConfig> {
    let cfg = SimConfig {
        n_walkers: n,
        p,
        step_law: StepLawParams::new(lambda, model.l_min, model.l_max)?,
        seed_origin: !model.no_seed_origin,
        origin_trial: !model.no_origin_trial,
        max_ticks: model.max_ticks,
        rng_seed: seed,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Turns parsed flags into a plan; `None` for `rerun`, whose plan comes
/// from its manifest.
pub fn resolve(command: &Command) -> Result<Option<(RunPlan, Option<usize>)>> {
    let resolved = match command {
        Command::Simulate(a) => (
            RunPlan::Simulate(model_config(a.n, a.p, a.lambda, a.seed, &a.model)?),
            None,
        ),
        Command::Sweep(a) => (
            RunPlan::Sweep {
                p: a.p,
                lambda: a.lambda,
                settings: a.grid.settings(),
                svg: a.svg,
            },
            a.jobs,
        ),
        Command::Surface(a) => {
            let plan = match &a.config {
                Some(path) => serde_json::from_str::<SurfacePlan>(&read_text(path)?)
                    .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?,
                None => SurfacePlan {
                    p_grid: a.p_grid.clone(),
                    lambda_grid: a.lambda_grid.clone(),
                    settings: a.grid.settings(),
                },
            };
            (RunPlan::Surface(plan), a.jobs)
        }
        Command::Infer(a) => {
            let observed = match (&a.exponents, a.alpha, a.beta, a.theta) {
                (Some(path), ..) => {
                    let ex: ExponentSet = serde_json::from_str(&read_text(path)?)
                        .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
                    ObservedExponents::from_exponent_set(&ex)
                }
                (None, Some(al), Some(be), Some(th)) => ObservedExponents::new(al, be, th)?,
                _ => {
                    return Err(Error::param(
                        "give --alpha, --beta and --theta, or --exponents FILE",
                    ))
                }
            };
            (
                RunPlan::Infer {
                    observed,
                    surface: absolute(&a.surface)?,
                    sigma: a.sigma,
                },
                None,
            )
        }
        Command::Analyze(a) => (
            RunPlan::Analyze {
                input: absolute(&a.input)?,
                gap: a.gap,
                drop_self_loops: a.drop_self_loops,
                checkpoints: a.checkpoints.clone(),
            },
            None,
        ),
        Command::Rerun(_) => return Ok(None),
    };
    Ok(Some(resolved))
}

/// Computes every output of `plan` in memory.
pub fn execute(plan: &RunPlan, jobs: Option<usize>) -> Result<Vec<Output>> {
    match plan {
        RunPlan::Simulate(cfg) => {
            let res = run_session(cfg)?;
            let net = build_network(&res.trajectories);
            let mut session = Vec::new();
            write_session_jsonl(cfg, &res, &mut session)?;
            let mut edges = Vec::new();
            net.write_edge_csv(&mut edges)?;
            let mut sites = Vec::new();
            res.space.write_csv(&mut sites)?;
            let metrics = serde_json::json!({
                "metrics": net.metrics(cfg.n_walkers),
                "t_end": res.t_end,
                "truncated": res.truncated,
            });
            Ok(vec![
                Output { name: "session.jsonl", bytes: session },
                Output { name: "edges.csv", bytes: edges },
                Output { name: "sites.csv", bytes: sites },
                Output { name: "metrics.json", bytes: json_bytes(&metrics)? },
            ])
        }
        RunPlan::Sweep {
            p,
            lambda,
            settings,
            svg,
        } => {
            let outcome = with_jobs(jobs, || sweep_cell(*p, *lambda, (0, 0), settings))??;
            let mut points = Vec::new();
            write_points_csv(&outcome.points, &mut points)?;
            let mut outputs = vec![
                Output { name: "points.csv", bytes: points },
                Output { name: "exponents.json", bytes: json_bytes(&outcome.exponents)? },
            ];
            if *svg {
                let ex = &outcome.exponents;
                let live: Vec<_> = outcome.points.iter().filter(|pt| pt.activity > 0).collect();
                let col = |f: fn(&&crate::scaling::SweepPoint) -> (f64, f64)| {
                    live.iter().map(f).collect::<Vec<_>>()
                };
                let plot = loglog_svg(
                    &format!("p={p} lambda={lambda}"),
                    "N",
                    &[
                        Series { name: "A", points: col(|pt| (pt.n_walkers as f64, pt.activity as f64)), fit: Some(&ex.alpha) },
                        Series { name: "D", points: col(|pt| (pt.n_walkers as f64, pt.diversity as f64)), fit: Some(&ex.beta) },
                        Series { name: "E", points: col(|pt| (pt.n_walkers as f64, pt.edges as f64)), fit: Some(&ex.gamma) },
                    ],
                );
                outputs.push(Output { name: "sweep.svg", bytes: plot.into_bytes() });
            }
            Ok(outputs)
        }
        RunPlan::Surface(plan) => {
            let build = with_jobs(jobs, || {
                build_response_surface(&plan.p_grid, &plan.lambda_grid, &plan.settings)
            })??;
            let mut points = Vec::new();
            write_points_csv(&build.points, &mut points)?;
            Ok(vec![
                Output { name: "surface.json", bytes: build.surface.to_json()?.into_bytes() },
                Output { name: "points.csv", bytes: points },
            ])
        }
        RunPlan::Infer {
            observed,
            surface,
            sigma,
        } => {
            if !(*sigma > 0.0) {
                return Err(Error::param("sigma must be positive"));
            }
            let surface = ResponseSurface::from_json(&read_text(surface)?)?;
            let inferred: InferredParams = infer(observed, &surface)?;
            Ok(vec![Output { name: "inferred.json", bytes: json_bytes(&inferred)? }])
        }
        RunPlan::Analyze {
            input,
            gap,
            drop_self_loops,
            checkpoints,
        } => {
            let text = read_text(input)?;
            let events = parse_events(text.as_bytes())?;
            let mut sessions = sessionize(&events, *gap)?;
            if *drop_self_loops {
                sessions = sessions.into_iter().map(Session::without_self_loops).collect();
            }
            let checkpoints = checkpoints
                .clone()
                .unwrap_or_else(|| default_checkpoints(distinct_users(&sessions)));
            let (curve, net) = growth_curve_with_network(&sessions, &checkpoints)?;
            let exponents = community_exponents(&curve)?;
            let mut growth = Vec::new();
            curve.write_csv(&mut growth)?;
            let mut edges = Vec::new();
            net.write_edge_csv(&mut edges)?;
            Ok(vec![
                Output { name: "growth.csv", bytes: growth },
                Output { name: "exponents.json", bytes: json_bytes(&exponents)? },
                Output { name: "edges.csv", bytes: edges },
            ])
        }
    }
}

/// Writes the outputs and then the manifest into `dir`.
pub fn write_run(dir: &Path, plan: &RunPlan, outputs: &[Output]) -> Result<RunManifest> {
    let manifest = RunManifest {
        plan: plan.clone(),
        master_seed: plan.master_seed(),
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        outputs: outputs.iter().map(|o| o.name.to_owned()).collect(),
    };
    fs::create_dir_all(dir)?;
    for o in outputs {
        fs::write(dir.join(o.name), &o.bytes)?;
    }
    fs::write(dir.join(MANIFEST_FILE), json_bytes(&manifest)?)?;
    Ok(manifest)
}

pub fn run(cli: &Cli) -> Result<RunManifest> {
    let (plan, jobs) = match resolve(&cli.command)? {
        Some(resolved) => resolved,
        None => {
            let Command::Rerun(a) = &cli.command else {
                unreachable!("only rerun resolves to no plan")
            };
            (RunManifest::load(&a.manifest)?.plan, a.jobs)
        }
    };
    let outputs = execute(&plan, jobs)?;
    write_run(&cli.out, &plan, &outputs)
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(manifest) => {
            for name in manifest.outputs.iter().chain([&MANIFEST_FILE.to_owned()]) {
                println!("{}", cli.out.join(name).display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
