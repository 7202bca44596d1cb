//! The `stopgo` command-line front end.
//!
//! Every command reads an optional TOML config, applies flag overrides,
//! computes its results in memory and only then writes artifacts, each one
//! atomically, into the output directory.

pub mod config;
mod output;

use std::fs::File;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::RngExt;
use serde::Serialize;
use thiserror::Error;

use stopgo_core::info::{write_info_csv, GridSpec, InfoMode, InfoSettings, ModelPrior, Objective};
use stopgo_core::likelihood::simulate_dataset;
use stopgo_core::search::{baseline_search, run_gpucbpe, DesignGrid, SearchConfig, StopReason};
use stopgo_core::selection::{bootstrap_odds, exclusion_filter, likelihood_odds, parameter_posterior, DesignJson};
use stopgo_core::surface::{argmax, SurfaceSpec};
use stopgo_core::{perfect_stranger_schedule, rng, GameDesign, GridResolution, ModelId, ModelParams, ParamGrid, SessionDataset};

use config::{BootstrapSpec, ParamsSpec, RunConfig, Strategy};

pub use output::write_atomic;

pub const SURFACE_FILE: &str = "surface.csv";
pub const TRACE_FILE: &str = "trace.csv";
pub const RESULT_FILE: &str = "result.json";
pub const SESSION_FILE: &str = "session.csv";
pub const ODDS_FILE: &str = "odds.json";
pub const BOOTSTRAP_FILE: &str = "bootstrap.csv";
pub const POSTERIOR_FILE: &str = "posterior.csv";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] stopgo_core::Error),

    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 0 success, 1 config or parse, 2 resource refusal, 3 empty data.
    pub fn exit_code(&self) -> i32 {
        fn core(e: &stopgo_core::Error) -> i32 {
            match e {
                stopgo_core::Error::EnumerationCap { .. } => 2,
                stopgo_core::Error::EmptyDataset => 3,
                stopgo_core::Error::Objective { source, .. } => core(source),
                _ => 1,
            }
        }
        match self {
            CliError::Core(e) => core(e),
            CliError::Config(_) | CliError::Output { .. } => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "stopgo", version, about = "Optimal experimental design for the Stop-Go game")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (default: current directory).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Simulated datasets per model in sampled mode.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Comma-separated model ids.
    #[arg(long, global = true, value_delimiter = ',')]
    pub models: Vec<ModelId>,
    #[arg(long, global = true)]
    pub mode: Option<InfoMode>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate the information objective on every design.
    Surface,
    /// Search the design grid for the most informative design.
    Search {
        /// gpucbpe, grid_scan or random.
        #[arg(long)]
        strategy: Option<Strategy>,
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Simulate one session from a model.
    Simulate {
        #[arg(long)]
        model: Option<ModelId>,
        /// `sample` or `epsilon0,alpha,delta,pi_per`.
        #[arg(long)]
        params: Option<String>,
        #[arg(long = "a")]
        a: Option<f64>,
        #[arg(long)]
        pi: Option<f64>,
        #[arg(long)]
        players: Option<usize>,
        #[arg(long)]
        rounds: Option<usize>,
    },
    /// Likelihood odds of the models on collected sessions.
    Select {
        /// Session CSV; repeat for several sessions of one design.
        #[arg(long = "input")]
        inputs: Vec<PathBuf>,
        #[arg(long = "a")]
        a: Option<f64>,
        #[arg(long)]
        pi: Option<f64>,
        /// `sizes=10,20,40,reps=50`
        #[arg(long)]
        bootstrap: Option<BootstrapSpec>,
        /// `model=ID`
        #[arg(long, value_parser = config::parse_posterior)]
        posterior: Option<ModelId>,
    },
}

/// What a successful run produced.
#[derive(Debug, Clone)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub message: String,
}

/// Settings shared by every command after merging config and flags.
struct Common {
    seed: u64,
    out: PathBuf,
    models: Option<Vec<ModelId>>,
    mode: InfoMode,
    k: usize,
    n_players: usize,
    n_rounds: usize,
    resolution: GridResolution,
    cfg: RunConfig,
}

impl Common {
    fn resolve(args: &CommonArgs) -> Result<(Self, Option<usize>), CliError> {
        let cfg = match &args.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let common = Self {
            seed: args.seed.or(cfg.seed).unwrap_or(0),
            out: args.out.clone().or(cfg.out.clone()).unwrap_or_else(|| PathBuf::from(".")),
            models: Some(args.models.clone()).filter(|m| !m.is_empty()).or(cfg.models.clone()),
            mode: args.mode.or(cfg.mode).unwrap_or(InfoMode::Sampled),
            k: args.k.or(cfg.k).unwrap_or(10_000),
            n_players: cfg.n_players.unwrap_or(10),
            n_rounds: cfg.n_rounds.unwrap_or(3),
            resolution: cfg.param_grid.unwrap_or_default(),
            cfg,
        };
        if common.k == 0 {
            return Err(CliError::Config("k must be positive".into()));
        }
        let threads = args.threads.or(common.cfg.threads);
        if threads == Some(0) {
            return Err(CliError::Config("threads must be positive".into()));
        }
        Ok((common, threads))
    }

    fn design_grid(&self) -> Result<DesignGrid, CliError> {
        match self.cfg.design_grid {
            Some(g) => Ok(DesignGrid::new(g.n_a, g.n_pi)?),
            None => Ok(DesignGrid::standard()),
        }
    }

    fn surface_spec(&self) -> Result<SurfaceSpec, CliError> {
        let models = self.models.clone().unwrap_or_else(|| ModelId::CLASSIC.to_vec());
        let prior = match &self.cfg.prior {
            Some(w) => ModelPrior::new(w.clone())?,
            None => ModelPrior::uniform(models.len())?,
        };
        let objective = match &self.cfg.objective {
            Some(s) => s.parse::<Objective>()?,
            None => Objective::default_for(models.len()),
        };
        let settings = InfoSettings::with(models, prior, objective, GridSpec::Resolution(self.resolution))?;
        let mut spec = SurfaceSpec::new(settings);
        spec.mode = self.mode;
        spec.k = self.k;
        spec.n_players = self.n_players;
        spec.n_rounds = self.n_rounds;
        if let Some(cap) = self.cfg.enumeration_cap {
            spec.enumeration_cap = cap;
        }
        Ok(spec)
    }
}

/// Runs one parsed invocation.
pub fn run(cli: &Cli) -> Result<Report, CliError> {
    let (common, threads) = Common::resolve(&cli.common)?;
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Config(format!("cannot start {n} threads: {e}")))?;
            pool.install(|| dispatch(&cli.command, &common))
        }
        None => dispatch(&cli.command, &common),
    }
}

/// Parses `args` (program name first) and runs them.
pub fn run_args<I, T>(args: I) -> Result<Report, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Config(e.to_string()))?;
    run(&cli)
}

fn dispatch(command: &Command, c: &Common) -> Result<Report, CliError> {
    match command {
        Command::Surface => cmd_surface(c),
        Command::Search { strategy, budget } => cmd_search(c, *strategy, *budget),
        Command::Simulate {
            model,
            params,
            a,
            pi,
            players,
            rounds,
        } => cmd_simulate(c, *model, params.as_deref(), design_arg(*a, *pi)?, *players, *rounds),
        Command::Select {
            inputs,
            a,
            pi,
            bootstrap,
            posterior,
        } => cmd_select(c, inputs, design_arg(*a, *pi)?, bootstrap.clone(), *posterior),
    }
}

fn design_arg(a: Option<f64>, pi: Option<f64>) -> Result<Option<GameDesign>, CliError> {
    match (a, pi) {
        (Some(a), Some(pi)) => Ok(Some(GameDesign::new(a, pi)?)),
        (None, None) => Ok(None),
        _ => Err(CliError::Config("--a and --pi must be given together".into())),
    }
}

fn checked_design(d: GameDesign) -> Result<GameDesign, CliError> {
    Ok(GameDesign::new(d.a, d.pi)?)
}

fn cmd_surface(c: &Common) -> Result<Report, CliError> {
    let spec = c.surface_spec()?;
    let grid = c.design_grid()?;
    let points = spec.evaluate_grid(&grid, c.seed)?;
    let best = &points[argmax(&points).expect("grid is non-empty")];
    let mut buf = Vec::new();
    write_info_csv(&points, &mut buf)?;
    let file = write_atomic(&c.out, SURFACE_FILE, &buf)?;
    Ok(Report {
        files: vec![file],
        message: format!(
            "argmax A={:.4} pi={:.4} value={:.6}{}",
            best.design.a,
            best.design.pi,
            best.value,
            if best.saturated { " (saturated)" } else { "" }
        ),
    })
}

#[derive(Serialize)]
struct TraceCsvRow {
    step: usize,
    kind: String,
    #[serde(rename = "A")]
    a: f64,
    pi: f64,
    objective_value: f64,
    posterior_max: Option<f64>,
    regret: Option<f64>,
    stopped: bool,
}

#[derive(Serialize)]
struct SearchResult {
    strategy: String,
    argmax: DesignJson,
    value: f64,
    evaluations: usize,
    stopped_by: String,
}

fn search_config(c: &Common, budget: Option<usize>) -> SearchConfig {
    let s = c.cfg.search.clone().unwrap_or_default();
    let d = SearchConfig::default();
    SearchConfig {
        n_init: s.n_init.unwrap_or(d.n_init),
        beta: s.beta.or(d.beta),
        delta_c: s.delta_c.unwrap_or(d.delta_c),
        stop_threshold: s.stop_threshold.unwrap_or(d.stop_threshold),
        stop_repeats: s.stop_repeats.unwrap_or(d.stop_repeats),
        use_stop_rule: s.use_stop_rule.unwrap_or(d.use_stop_rule),
        budget: budget.or(s.budget).unwrap_or(d.budget),
        refit_every: s.refit_every.unwrap_or(d.refit_every),
        noise_var: s.noise_var.or(d.noise_var),
    }
}

fn cmd_search(c: &Common, strategy: Option<Strategy>, budget: Option<usize>) -> Result<Report, CliError> {
    let section = c.cfg.search.clone().unwrap_or_default();
    let strategy = strategy.or(section.strategy).unwrap_or(Strategy::Gpucbpe);
    let spec = c.surface_spec()?;
    let grid = c.design_grid()?;
    let schedule = spec.schedule(c.seed)?;

    // Each design is evaluated at most once; the regret pass fills the cache.
    let mut cache: Vec<Option<f64>> = vec![None; grid.len()];
    let mut value_at = |i: usize, d: &GameDesign| -> stopgo_core::Result<f64> {
        if let Some(v) = cache[i] {
            return Ok(v);
        }
        let v = spec.evaluate(d, i, c.seed, &schedule)?.value;
        cache[i] = Some(v);
        Ok(v)
    };
    let true_max = if section.regret.unwrap_or(false) {
        let mut m = f64::NEG_INFINITY;
        for i in 0..grid.len() {
            let d = grid.design(i);
            let v = value_at(i, &d).map_err(|e| stopgo_core::Error::Objective {
                a: d.a,
                pi: d.pi,
                source: Box::new(e),
            })?;
            m = m.max(v);
        }
        Some(m)
    } else {
        None
    };

    let (rows, result) = match strategy.baseline() {
        None => {
            let config = search_config(c, budget);
            let out = run_gpucbpe(&mut value_at, &grid, &config, true_max)?;
            let rows: Vec<TraceCsvRow> = out
                .trace
                .iter()
                .map(|r| TraceCsvRow {
                    step: r.step,
                    kind: r.kind.to_string(),
                    a: r.design.a,
                    pi: r.design.pi,
                    objective_value: r.value,
                    posterior_max: r.posterior_max,
                    regret: r.regret,
                    stopped: r.stopped,
                })
                .collect();
            let value = out
                .trace
                .iter()
                .find(|r| r.index == out.argmax)
                .map_or(out.posterior.mean[out.argmax], |r| r.value);
            let result = SearchResult {
                strategy: "gpucbpe".into(),
                argmax: grid.design(out.argmax).into(),
                value,
                evaluations: out.evaluations(),
                stopped_by: stop_name(out.stopped_by),
            };
            (rows, result)
        }
        Some(b) => {
            let budget = budget.or(section.budget).unwrap_or(grid.len());
            let out = baseline_search(&mut value_at, &grid, b, budget, c.seed, true_max)?;
            let n = out.order.len();
            let mut best = f64::NEG_INFINITY;
            let rows = out
                .order
                .iter()
                .zip(&out.values)
                .enumerate()
                .map(|(s, (&i, &v))| {
                    best = best.max(v);
                    let d = grid.design(i);
                    TraceCsvRow {
                        step: s + 1,
                        kind: b.to_string(),
                        a: d.a,
                        pi: d.pi,
                        objective_value: v,
                        posterior_max: None,
                        regret: out.regret.as_ref().map(|r| r[s]),
                        stopped: s + 1 == n,
                    }
                })
                .collect();
            let result = SearchResult {
                strategy: b.to_string(),
                argmax: grid.design(out.best).into(),
                value: best,
                evaluations: n,
                stopped_by: stop_name(if n == grid.len() {
                    StopReason::Exhausted
                } else {
                    StopReason::Budget
                }),
            };
            (rows, result)
        }
    };

    let mut trace = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        trace.serialize(r).map_err(stopgo_core::Error::from)?;
    }
    let trace = trace.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
    let mut json = serde_json::to_string_pretty(&result).expect("plain data serializes");
    json.push('\n');
    let files = vec![
        write_atomic(&c.out, TRACE_FILE, &trace)?,
        write_atomic(&c.out, RESULT_FILE, json.as_bytes())?,
    ];
    Ok(Report {
        files,
        message: format!(
            "argmax A={:.4} pi={:.4} value={:.6} after {} evaluations ({})",
            result.argmax.a, result.argmax.pi, result.value, result.evaluations, result.stopped_by
        ),
    })
}

fn stop_name(r: StopReason) -> String {
    serde_json::to_value(r)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

fn parse_params(s: &str) -> Result<ParamsSpec, CliError> {
    if s.trim() == "sample" {
        return Ok(ParamsSpec::Sample(config::SampleTag::Sample));
    }
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Config(format!("--params `{s}`: {e}")))?;
    match v[..] {
        [e, a, d, p] => Ok(ParamsSpec::Fixed(ModelParams::new(e, a, d, p))),
        _ => Err(CliError::Config(format!(
            "--params `{s}` needs four values: epsilon0,alpha,delta,pi_per"
        ))),
    }
}

fn cmd_simulate(
    c: &Common,
    model: Option<ModelId>,
    params: Option<&str>,
    design: Option<GameDesign>,
    players: Option<usize>,
    rounds: Option<usize>,
) -> Result<Report, CliError> {
    let section = c.cfg.simulate.clone().unwrap_or_default();
    let model = model
        .or(section.model)
        .ok_or_else(|| CliError::Config("simulate needs a model".into()))?;
    let design = match design.or(section.design) {
        Some(d) => checked_design(d)?,
        None => GameDesign::classic(),
    };
    let spec = match params {
        Some(s) => parse_params(s)?,
        None => section.params.unwrap_or(ParamsSpec::Sample(config::SampleTag::Sample)),
    };
    let params = match spec {
        ParamsSpec::Fixed(p) => p,
        ParamsSpec::Sample(_) => {
            let grid = ParamGrid::with_resolution(&design, c.resolution)?;
            let mut r = rng::stream(c.seed, "simulate/params");
            grid.points()[r.random_range(0..grid.len())]
        }
    };
    let n_players = players.unwrap_or(c.n_players);
    let n_rounds = rounds.unwrap_or(c.n_rounds);
    let schedule = perfect_stranger_schedule(n_players, n_rounds, rng::derive_seed(c.seed, "schedule"))?;
    let data = simulate_dataset(model, &params, &design, &schedule, c.seed)?;
    let file = write_atomic(&c.out, SESSION_FILE, data.to_csv_string().as_bytes())?;
    Ok(Report {
        files: vec![file],
        message: format!(
            "{} records from {model} with epsilon0={} alpha={} delta={} pi_per={}",
            data.len(),
            params.epsilon0,
            params.alpha,
            params.delta,
            params.pi_per
        ),
    })
}

fn cmd_select(
    c: &Common,
    inputs: &[PathBuf],
    design: Option<GameDesign>,
    bootstrap: Option<BootstrapSpec>,
    posterior: Option<ModelId>,
) -> Result<Report, CliError> {
    let section = c.cfg.select.clone().unwrap_or_default();
    let inputs = if inputs.is_empty() {
        section.inputs.clone().unwrap_or_default()
    } else {
        inputs.to_vec()
    };
    if inputs.is_empty() {
        return Err(CliError::Config("select needs at least one --input".into()));
    }
    let design = match design.or(section.design) {
        Some(d) => checked_design(d)?,
        None => return Err(CliError::Config("select needs the session design (--a and --pi)".into())),
    };
    let bootstrap = bootstrap.or(section.bootstrap);
    let posterior = posterior.or(section.posterior);
    if (bootstrap.is_some() || posterior.is_some()) && inputs.len() != 1 {
        return Err(CliError::Config("bootstrap and posterior take a single input".into()));
    }
    let models = c.models.clone().unwrap_or_else(|| ModelId::ALL.to_vec());

    let mut sessions = Vec::with_capacity(inputs.len());
    for path in &inputs {
        let f = File::open(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let raw = SessionDataset::read_csv(design, f).map_err(|e| match e {
            stopgo_core::Error::Parse { row, message } => {
                CliError::Config(format!("{}: row {row}: {message}", path.display()))
            }
            other => other.into(),
        })?;
        sessions.push(exclusion_filter(&raw));
    }
    let grid = GridSpec::Resolution(c.resolution);
    let report = likelihood_odds(&sessions, &models, &grid)?;

    let mut artifacts: Vec<(&str, Vec<u8>)> = Vec::new();
    let mut json = serde_json::to_string_pretty(&report).expect("plain data serializes");
    json.push('\n');
    artifacts.push((ODDS_FILE, json.into_bytes()));
    if let Some(b) = &bootstrap {
        let curve = bootstrap_odds(&sessions[0], &models, &grid, &b.sizes, b.reps, c.seed)?;
        let mut buf = Vec::new();
        curve.write_csv(&mut buf)?;
        artifacts.push((BOOTSTRAP_FILE, buf));
    }
    if let Some(m) = posterior {
        let pg = ParamGrid::with_resolution(&design, c.resolution)?;
        let post = parameter_posterior(&sessions[0], m, &pg)?;
        let mut buf = Vec::new();
        post.write_csv(&mut buf)?;
        artifacts.push((POSTERIOR_FILE, buf));
    }
    let files = artifacts
        .iter()
        .map(|(name, bytes)| write_atomic(&c.out, name, bytes))
        .collect::<Result<Vec<_>, _>>()?;
    let odds: Vec<String> = report
        .models
        .iter()
        .map(|m| format!("{}={:.4e}", m.id, m.odds))
        .collect();
    Ok(Report {
        files,
        message: format!(
            "best {} on {} matches; odds {}{}",
            report.best(),
            report.matches_used,
            odds.join(" "),
            if report.ties { " (tie)" } else { "" }
        ),
    })
}
