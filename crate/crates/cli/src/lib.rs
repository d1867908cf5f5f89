//! Command-line front end for `slowthink-core`.
//!
//! Every subcommand writes its CSV tables, optional SVG plots and a
//! `manifest.json` into the output directory, prints the tables to stdout,
//! and exits 0 only when all of its checks pass.

pub mod config;
pub mod recipes;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use slowthink_core::bounds::{self, BoundInput, BoundKind};
use slowthink_core::calibration::{self, ExpansionTrace, TraceStats};
use slowthink_core::hsic::{self, HsicConfig, SampleSet};
use slowthink_core::report::fmt_float;
use slowthink_core::sim;
use slowthink_core::{
    row, AnswerModel, DecayModel, Manifest, PlotSpec, ProcessConfig, SelectionRule,
    SelectorModel, Series, StrategySpec, Table, WrongModel,
};

use config::RunConfig;
use recipes::{Outcome, Preset, RecipeError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "slowthink", version, about = "Correctness bounds, simulation and calibration for test-time search strategies")]
pub struct Cli {
    /// TOML run configuration; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory for CSV, SVG and manifest files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate closed-form success bounds.
    Bounds(BoundsArgs),
    /// Monte Carlo simulation of strategies, checked against their bounds.
    Simulate(SimulateArgs),
    /// Exact check of the Fano lower bound on random channel sequences.
    FanoSuite(FanoArgs),
    /// Budget matching between BoN and a tree search.
    Calibrate(CalibrateArgs),
    /// Gaussian-kernel HSIC between two feature files.
    Hsic(HsicArgs),
    /// Exponential and linear fits to (length, value) points.
    Fit(FitArgs),
    /// Run a named reproduction preset.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ProcessArgs {
    /// λ_τ of the exponential decay law.
    #[arg(long = "lambda")]
    pub lambda_tau: Option<f64>,
    /// Comma-separated per-layer step probabilities instead of --lambda.
    #[arg(long, value_delimiter = ',', conflicts_with = "lambda_tau")]
    pub table: Option<Vec<f64>>,
    /// Ideal reasoning path length.
    #[arg(long = "L")]
    pub path_length: Option<usize>,
    /// ideal, constant or noisy.
    #[arg(long)]
    pub selector: Option<String>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub noise_std: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub margin: f64,
    #[arg(long)]
    pub answer_space: Option<u32>,
    /// Noise std of BoN reward scores.
    #[arg(long)]
    pub score_noise: Option<f64>,
    #[arg(long)]
    pub lambda_delta: Option<f64>,
}

impl ProcessArgs {
    /// Config-file process with these flags applied on top.
    fn resolve(&self, base: Option<&ProcessConfig>) -> Result<ProcessConfig, CliError> {
        let mut cfg = match base {
            Some(b) => b.clone(),
            None => ProcessConfig::new(
                DecayModel::exponential(1.0).map_err(CliError::from_display)?,
                SelectorModel::Ideal,
                2,
            ),
        };
        if let Some(l) = self.lambda_tau {
            cfg.decay = DecayModel::exponential(l).map_err(CliError::from_display)?;
        }
        if let Some(t) = &self.table {
            cfg.decay = DecayModel::tabulated(t.clone()).map_err(CliError::from_display)?;
        }
        if let Some(l) = self.path_length {
            cfg.path_length = l;
        }
        if let Some(kind) = &self.selector {
            cfg.selector = match kind.as_str() {
                "ideal" => Ok(SelectorModel::Ideal),
                "constant" => SelectorModel::constant(self.epsilon.ok_or_else(|| {
                    CliError::Usage("--selector constant needs --epsilon".into())
                })?),
                "noisy" | "noisy_score" => SelectorModel::noisy_score(
                    self.noise_std.ok_or_else(|| {
                        CliError::Usage("--selector noisy needs --noise-std".into())
                    })?,
                    self.margin,
                ),
                other => return Err(CliError::Usage(format!("unknown selector `{other}`"))),
            }
            .map_err(CliError::from_display)?;
        } else if let Some(eps) = self.epsilon {
            cfg.selector = SelectorModel::constant(eps).map_err(CliError::from_display)?;
        } else if let Some(noise) = self.noise_std {
            cfg.selector =
                SelectorModel::noisy_score(noise, self.margin).map_err(CliError::from_display)?;
        }
        if let Some(a) = self.answer_space {
            cfg.answer = AnswerModel::new(a).map_err(CliError::from_display)?;
        }
        if let Some(s) = self.score_noise {
            cfg.score_noise_std = s;
        }
        if let Some(ld) = self.lambda_delta {
            cfg.wrong = Some(WrongModel::new(ld).map_err(CliError::from_display)?);
        }
        cfg.validate().map_err(CliError::from_display)?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub process: ProcessArgs,
    /// Bound name (single, beam, beam_exact, bon, mcts_best, mcts_best_exact,
    /// mcts_worst, mcts_worst_exact) or `all`.
    #[arg(long, default_value = "all")]
    pub strategy: String,
    #[arg(long, default_value_t = 2)]
    pub k: u64,
    #[arg(long, default_value_t = 2)]
    pub b: u64,
    #[arg(long, default_value_t = 2)]
    pub n: u64,
    /// Layer for the lookahead distinguishability bound (needs --lambda-delta).
    #[arg(long)]
    pub layer: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct StrategyArgs {
    /// single, bon, beam, mcts_best, mcts_worst or lookahead.
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long, default_value_t = 2)]
    pub k: u64,
    #[arg(long, default_value_t = 2)]
    pub b: u64,
    #[arg(long, default_value_t = 4)]
    pub n: u64,
    #[arg(long, default_value = "orm_max")]
    pub rule: SelectionRule,
    #[arg(long, default_value_t = 0)]
    pub gamma: usize,
    /// Do not count lookahead rollout steps toward the budget.
    #[arg(long)]
    pub no_rollout_cost: bool,
}

impl StrategyArgs {
    fn build(&self, name: &str) -> Result<StrategySpec, CliError> {
        Ok(match name {
            "single" => StrategySpec::SinglePath,
            "bon" => StrategySpec::Bon {
                n: self.n,
                rule: self.rule,
            },
            "beam" => StrategySpec::Beam {
                k: self.k,
                b: self.b,
            },
            "mcts_best" => StrategySpec::MctsBest { b: self.b },
            "mcts_worst" => StrategySpec::MctsWorst { b: self.b },
            "lookahead" => StrategySpec::Lookahead {
                b: self.b,
                gamma: self.gamma,
                count_rollout: !self.no_rollout_cost,
            },
            other => return Err(CliError::Usage(format!("unknown strategy `{other}`"))),
        })
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub process: ProcessArgs,
    #[command(flatten)]
    pub strategy: StrategyArgs,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run BoN at each of these N (comma-separated) and plot success versus N.
    #[arg(long, value_delimiter = ',', conflicts_with = "strategy")]
    pub sweep_n: Option<Vec<u64>>,
    /// `b,p,L` statistics whose reasonable-N range is marked on the sweep plot.
    #[arg(long)]
    pub thresholds: Option<TraceStats>,
}

#[derive(Debug, Args)]
pub struct FanoArgs {
    #[arg(long)]
    pub instances: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub min_support: Option<usize>,
    #[arg(long)]
    pub max_support: Option<usize>,
    #[arg(long)]
    pub max_len: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Line-delimited JSON expansion traces.
    #[arg(long, conflicts_with_all = ["stats", "from_strategy"])]
    pub traces: Option<PathBuf>,
    /// Averaged statistics `b,p,L`.
    #[arg(long, conflicts_with = "from_strategy")]
    pub stats: Option<TraceStats>,
    /// Use the structural trace of a simulated strategy.
    #[arg(long)]
    pub from_strategy: Option<String>,
    #[command(flatten)]
    pub strategy: StrategyArgs,
    #[arg(long = "L", default_value_t = 3)]
    pub path_length: usize,
    /// Also write the generated traces to this file.
    #[arg(long)]
    pub write_traces: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HsicArgs {
    #[arg(long)]
    pub x: PathBuf,
    #[arg(long)]
    pub y: PathBuf,
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Normalize by the mean `length` column of the --y file.
    #[arg(long, conflicts_with = "mean_length")]
    pub per_token: bool,
    #[arg(long)]
    pub mean_length: Option<f64>,
    /// Shuffle count for a permutation test.
    #[arg(long)]
    pub permutation_test: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Compute per-group HSIC over `group_id` and fit its decay in length.
    #[arg(long)]
    pub by_group: bool,
    /// Write an SVG of the per-group fit.
    #[arg(long)]
    pub plot: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV with a header row.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub x_col: Option<String>,
    #[arg(long)]
    pub y_col: Option<String>,
    #[arg(long)]
    pub plot: bool,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    pub preset: Preset,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub b: Option<u64>,
    #[arg(long = "L")]
    pub path_length: Option<usize>,
    #[arg(long)]
    pub instances: Option<usize>,
    #[arg(long)]
    pub shuffles: Option<usize>,
    #[arg(long)]
    pub repetitions: Option<usize>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    Recipe(#[from] RecipeError),
    #[error("{0}")]
    Module(String),
}

impl CliError {
    fn from_display(e: impl std::fmt::Display) -> Self {
        CliError::Module(e.to_string())
    }
}

/// What a subcommand produced, before it is written out.
struct Run {
    outcome: Outcome,
    resolved: serde_json::Value,
    seed: Option<u64>,
    summary: Vec<String>,
}

impl Run {
    fn new(outcome: Outcome, resolved: serde_json::Value) -> Self {
        Run {
            outcome,
            resolved,
            seed: None,
            summary: Vec::new(),
        }
    }
}

/// Parses `argv` (program name first), runs, and returns the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match execute(&cli, &argv) {
        Ok(passed) => {
            if passed {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

fn execute(cli: &Cli, argv: &[OsString]) -> Result<bool, CliError> {
    let started = Instant::now();
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.validate()?;
    let out_dir = cli.out.clone().unwrap_or_else(|| cfg.out.clone());

    let (name, run) = match &cli.command {
        Command::Bounds(a) => ("bounds", bounds_cmd(a, &cfg)?),
        Command::Simulate(a) => ("simulate", simulate_cmd(a, &cfg)?),
        Command::FanoSuite(a) => ("fano-suite", fano_cmd(a, &cfg)?),
        Command::Calibrate(a) => ("calibrate", calibrate_cmd(a)?),
        Command::Hsic(a) => ("hsic", hsic_cmd(a, &cfg)?),
        Command::Fit(a) => ("fit", fit_cmd(a)?),
        Command::Reproduce(a) => ("reproduce", reproduce_cmd(a, &cfg)?),
    };

    std::fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Module(format!("{}: {e}", out_dir.display())))?;
    let mut outputs = run.outcome.write(&out_dir).map_err(CliError::from_display)?;
    print_run(&run);
    let passed = run.outcome.passed();
    outputs.push("manifest.json".into());
    let manifest = Manifest {
        tool: "slowthink".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: name.into(),
        argv: argv
            .iter()
            .skip(1)
            .map(|a| a.to_string_lossy().into_owned())
            .collect(),
        config: run.resolved,
        seed: run.seed,
        outputs,
        checks_passed: passed,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    };
    manifest
        .write(out_dir.join("manifest.json"))
        .map_err(CliError::from_display)?;
    Ok(passed)
}

fn print_run(run: &Run) {
    let many = run.outcome.tables.len() > 1;
    for (name, table) in &run.outcome.tables {
        if many {
            println!("# {name}");
        }
        print!("{}", table.to_csv_string().unwrap_or_default());
    }
    for line in &run.summary {
        println!("{line}");
    }
    for c in &run.outcome.checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        println!("{status} {}: {}", c.name, c.detail);
    }
}

fn bounds_cmd(a: &BoundsArgs, cfg: &RunConfig) -> Result<Run, CliError> {
    let process = a.process.resolve(cfg.process.as_ref())?;
    let kinds: Vec<BoundKind> = if a.strategy == "all" {
        BoundKind::ALL.to_vec()
    } else {
        vec![a.strategy.parse().map_err(CliError::Usage)?]
    };
    let input = BoundInput {
        decay: process.decay.clone(),
        selector: process.selector,
        path_length: process.path_length,
        k: a.k,
        b: a.b,
        n: a.n,
    };
    let mut t = Table::new(["quantity", "L", "k", "b", "n", "value", "log_value", "vacuous", "note"]);
    let single = kinds.len() == 1;
    for kind in kinds {
        match input.evaluate(kind) {
            Ok(v) => t.push(row![
                kind.name(),
                input.path_length,
                input.k,
                input.b,
                input.n,
                v.value(),
                v.log_value,
                v.is_vacuous(),
                ""
            ]),
            // A lone requested bound that cannot be evaluated is an error;
            // in the `all` listing it is reported in place.
            Err(e) if single => return Err(CliError::from_display(e)),
            Err(e) => t.push(row![
                kind.name(),
                input.path_length,
                input.k,
                input.b,
                input.n,
                "",
                "",
                "",
                e.to_string()
            ]),
        }
        .map_err(CliError::from_display)?;
    }
    if let (Some(layer), Some(wrong)) = (a.layer, &process.wrong) {
        let lambda_tau = process.decay.lambda_tau().ok_or_else(|| {
            CliError::Usage("the lookahead bound needs an exponential decay (--lambda)".into())
        })?;
        let v = bounds::lookahead_distinguishability_bound(lambda_tau, wrong, layer)
            .map_err(CliError::from_display)?;
        let g = bounds::optimal_rollout(wrong, layer);
        for (q, value) in [("lookahead_distinguishable", v), ("optimal_rollout", g)] {
            t.push(row![q, input.path_length, "", "", "", value, "", "", format!("layer {}", fmt_float(layer))])
                .map_err(CliError::from_display)?;
        }
    }
    let mut outcome = Outcome::default();
    outcome.tables.push(("bounds".into(), t));
    Ok(Run::new(
        outcome,
        json!({ "process": process, "k": a.k, "b": a.b, "n": a.n, "strategy": a.strategy, "layer": a.layer }),
    ))
}

fn simulate_cmd(a: &SimulateArgs, cfg: &RunConfig) -> Result<Run, CliError> {
    let process = a.process.resolve(cfg.process.as_ref())?;
    let trials = a.trials.unwrap_or(cfg.trials);
    let seed = a.seed.unwrap_or(cfg.seed);
    let mut strategies: Vec<StrategySpec> = match (&a.sweep_n, &a.strategy.strategy) {
        (Some(ns), _) => ns
            .iter()
            .map(|&n| StrategySpec::Bon {
                n,
                rule: a.strategy.rule,
            })
            .collect(),
        (None, Some(name)) => vec![a.strategy.build(name)?],
        (None, None) => cfg.strategies.clone(),
    };
    if strategies.is_empty() {
        strategies.push(StrategySpec::SinglePath);
    }

    let mut t = Table::new([
        "strategy", "trials", "successes", "estimate", "ci_low", "ci_high", "mean_steps",
        "mean_calls", "bound", "verdict",
    ]);
    let mut outcome = Outcome::default();
    let mut curve = Vec::new();
    let mut bound_curve = Vec::new();
    for s in &strategies {
        let rep = sim::monte_carlo(&process, s, trials, seed).map_err(CliError::from_display)?;
        let bound = s.matching_bound(&process).ok().flatten().map(|b| b.value());
        let verdict = bound.map(|b| sim::verify_bounds(&rep, b));
        t.push(row![
            s.to_string(),
            rep.trials,
            rep.successes,
            rep.estimate,
            rep.ci_low,
            rep.ci_high,
            rep.mean_steps,
            rep.mean_calls,
            bound,
            verdict.map_or("n/a".to_string(), |v| v.to_string())
        ])
        .map_err(CliError::from_display)?;
        if let Some(v) = verdict {
            outcome.checks.push(recipes::Check {
                name: format!("bound_{s}"),
                passed: v.passed(),
                detail: format!(
                    "ci_low {} vs bound {}",
                    fmt_float(rep.ci_low),
                    fmt_float(bound.unwrap_or(f64::NAN))
                ),
            });
        }
        if let StrategySpec::Bon { n, .. } = s {
            curve.push((*n as f64, rep.estimate));
            if let Some(b) = bound {
                bound_curve.push((*n as f64, b.min(1.0)));
            }
        }
    }
    outcome.tables.push(("simulate".into(), t));
    if a.sweep_n.is_some() && !curve.is_empty() {
        let mut series = vec![Series::line(format!("BoN {}", a.strategy.rule.name()), curve)];
        if !bound_curve.is_empty() {
            series.push(Series::line("bound", bound_curve));
        }
        let vlines = a
            .thresholds
            .map(|st| {
                let r = calibration::reasonable_n_range(&st);
                vec![(r.low, "N_res".to_string()), (r.high, "N_call".to_string())]
            })
            .unwrap_or_default();
        outcome.plots.push((
            "simulate".into(),
            PlotSpec {
                title: "BoN success versus N".into(),
                x_label: "N".into(),
                y_label: "success".into(),
                series,
                vlines,
            },
        ));
    }
    let mut run = Run::new(
        outcome,
        json!({ "process": process, "strategies": strategies, "trials": trials, "seed": seed, "thresholds": a.thresholds }),
    );
    run.seed = Some(seed);
    Ok(run)
}

fn fano_cmd(a: &FanoArgs, cfg: &RunConfig) -> Result<Run, CliError> {
    let mut fano = cfg.fano.clone();
    if let Some(v) = a.instances {
        fano.instances = v;
    }
    if let Some(v) = a.seed {
        fano.seed = v;
    }
    if let Some(v) = a.min_support {
        fano.min_support = v;
    }
    if let Some(v) = a.max_support {
        fano.max_support = v;
    }
    if let Some(v) = a.max_len {
        fano.max_len = v;
    }
    let outcome = recipes::fano_suite(&fano)?;
    let mut run = Run::new(outcome, json!({ "fano": fano }));
    run.seed = Some(fano.seed);
    Ok(run)
}

fn calibrate_cmd(a: &CalibrateArgs) -> Result<Run, CliError> {
    let (source, stats) = if let Some(path) = &a.traces {
        let stats = calibration::ingest_traces(path).map_err(CliError::from_display)?;
        (path.display().to_string(), stats)
    } else if let Some(stats) = a.stats {
        ("stats".to_string(), stats)
    } else if let Some(name) = &a.from_strategy {
        let strategy = a.strategy.build(name)?;
        let trace = ExpansionTrace::from_strategy(strategy.to_string(), &strategy, a.path_length);
        if let Some(path) = &a.write_traces {
            let file = std::fs::File::create(path)
                .map_err(|e| CliError::Module(format!("{}: {e}", path.display())))?;
            calibration::write_traces(file, std::slice::from_ref(&trace))
                .map_err(CliError::from_display)?;
        }
        let stats = calibration::summarize(&[trace]).map_err(CliError::from_display)?;
        (strategy.to_string(), stats)
    } else {
        return Err(CliError::Usage(
            "calibrate needs --traces, --stats or --from-strategy".into(),
        ));
    };
    let range = calibration::reasonable_n_range(&stats);
    let ints = range.integer_candidates();
    let mut t = Table::new([
        "source", "avg_b", "avg_p", "avg_l", "n_call", "n_res", "n_low_int", "n_high_int", "inverted",
    ]);
    t.push(row![
        source.as_str(),
        stats.avg_b,
        stats.avg_p,
        stats.avg_l,
        range.high,
        range.low,
        *ints.start(),
        *ints.end(),
        range.inverted
    ])
    .map_err(CliError::from_display)?;
    let mut outcome = Outcome::default();
    outcome.tables.push(("calibrate".into(), t));
    let mut run = Run::new(outcome, json!({ "source": source, "stats": stats }));
    run.summary.push(format!(
        "N_call = {}, N_res = {}, reasonable integer N: {}..={}{}",
        fmt_float(range.high),
        fmt_float(range.low),
        ints.start(),
        ints.end(),
        if range.inverted { " (inverted: avg_l < 1)" } else { "" }
    ));
    Ok(run)
}

fn hsic_cmd(a: &HsicArgs, cfg: &RunConfig) -> Result<Run, CliError> {
    let hcfg = match a.sigma {
        Some(s) => HsicConfig::new(s).map_err(CliError::from_display)?,
        None => cfg.hsic,
    };
    let x = hsic::read_feature_csv(&a.x).map_err(CliError::from_display)?;
    let y = hsic::read_feature_csv(&a.y).map_err(CliError::from_display)?;
    let seed = a.seed.unwrap_or(cfg.seed);
    let mut outcome = Outcome::default();
    let resolved = json!({
        "x": a.x, "y": a.y, "hsic": hcfg, "per_token": a.per_token, "mean_length": a.mean_length,
        "permutation_test": a.permutation_test, "seed": seed, "by_group": a.by_group,
    });
    if a.by_group {
        let t = per_group_hsic(&x, &y, &hcfg)?;
        let points: Vec<(f64, f64)> = t
            .rows
            .iter()
            .map(|r| (r[2].parse().unwrap_or(f64::NAN), r[4].parse().unwrap_or(f64::NAN)))
            .collect();
        outcome.tables.push(("hsic_groups".into(), t));
        if points.len() >= 3 {
            let (exp, lin) = hsic::fit_decay(&points).map_err(CliError::from_display)?;
            let (fits, plot) = recipes::fit_outputs(&points, &exp, &lin)?;
            outcome.tables.push(("hsic_fit".into(), fits));
            if a.plot {
                outcome.plots.push(("hsic_fit".into(), plot));
            }
        }
        return Ok(Run::new(outcome, resolved));
    }

    let value = hsic::hsic(&x, &y, &hcfg).map_err(CliError::from_display)?;
    let mean_length = match (a.mean_length, a.per_token) {
        (Some(m), _) => Some(m),
        (None, true) => Some(y.mean_length().ok_or_else(|| {
            CliError::Usage("--per-token needs a `length` column in the --y file".into())
        })?),
        (None, false) => None,
    };
    let per_token = mean_length
        .map(|m| hsic::per_token_hsic(value, m))
        .transpose()
        .map_err(CliError::from_display)?;
    let perm = a
        .permutation_test
        .map(|n| hsic::permutation_test(&x, &y, &hcfg, n, seed))
        .transpose()
        .map_err(CliError::from_display)?;
    let mut t = Table::new([
        "n", "sigma", "hsic", "mean_length", "per_token_hsic", "shuffles", "null_q95", "p_value",
    ]);
    t.push(row![
        x.len(),
        hcfg.sigma,
        value,
        mean_length,
        per_token,
        perm.as_ref().map(|p| p.shuffles),
        perm.as_ref().map(|p| p.null_q95),
        perm.as_ref().map(|p| p.p_value)
    ])
    .map_err(CliError::from_display)?;
    outcome.tables.push(("hsic".into(), t));
    let mut run = Run::new(outcome, resolved);
    run.seed = perm.is_some().then_some(seed);
    Ok(run)
}

/// HSIC within each `group_id` of `y`, normalized by the group's mean length.
fn per_group_hsic(x: &SampleSet, y: &SampleSet, cfg: &HsicConfig) -> Result<Table, CliError> {
    let groups = y
        .group_ids()
        .ok_or_else(|| CliError::Usage("--by-group needs a `group_id` column in --y".into()))?;
    let lengths = y
        .lengths()
        .ok_or_else(|| CliError::Usage("--by-group needs a `length` column in --y".into()))?;
    if x.len() != y.len() {
        return Err(CliError::Usage("--x and --y must have the same rows".into()));
    }
    let mut order: Vec<&str> = Vec::new();
    for g in groups {
        if !order.contains(&g.as_str()) {
            order.push(g);
        }
    }
    let mut t = Table::new(["group_id", "n", "mean_length", "hsic", "per_token_hsic"]);
    for g in order {
        let idx: Vec<usize> = (0..groups.len()).filter(|&i| groups[i] == g).collect();
        if idx.len() < 2 {
            continue;
        }
        let gx = x.permuted(&idx);
        let gy = y.permuted(&idx);
        let mean = idx.iter().map(|&i| lengths[i] as f64).sum::<f64>() / idx.len() as f64;
        let v = hsic::hsic(&gx, &gy, cfg).map_err(CliError::from_display)?;
        let pt = hsic::per_token_hsic(v, mean).map_err(CliError::from_display)?;
        t.push(row![g, idx.len(), mean, v, pt]).map_err(CliError::from_display)?;
    }
    Ok(t)
}

fn fit_cmd(a: &FitArgs) -> Result<Run, CliError> {
    let points = hsic::read_points_csv(&a.input, a.x_col.as_deref(), a.y_col.as_deref())
        .map_err(CliError::from_display)?;
    let (exp, lin) = hsic::fit_decay(&points).map_err(CliError::from_display)?;
    let (fits, plot) = recipes::fit_outputs(&points, &exp, &lin)?;
    let mut residuals = Table::new(["x", "y", "exponential", "linear", "exponential_residual", "linear_residual"]);
    for (i, &(x, y)) in points.iter().enumerate() {
        residuals
            .push(row![x, y, exp.predict(x), lin.predict(x), exp.residuals[i], lin.residuals[i]])
            .map_err(CliError::from_display)?;
    }
    let mut outcome = Outcome::default();
    outcome.tables.push(("fit".into(), fits));
    outcome.tables.push(("fit_points".into(), residuals));
    if a.plot {
        outcome.plots.push(("fit".into(), plot));
    }
    Ok(Run::new(
        outcome,
        json!({ "input": a.input, "x_col": a.x_col, "y_col": a.y_col }),
    ))
}

fn reproduce_cmd(a: &ReproduceArgs, cfg: &RunConfig) -> Result<Run, CliError> {
    let mut p = cfg.recipe.clone();
    if let Some(v) = a.trials {
        p.trials = v;
    }
    if let Some(v) = a.seed {
        p.seed = v;
    }
    if let Some(v) = a.b {
        p.b = v;
    }
    if let Some(v) = a.path_length {
        p.path_length = v;
    }
    if let Some(v) = a.instances {
        p.instances = v;
    }
    if let Some(v) = a.shuffles {
        p.shuffles = v;
    }
    if let Some(v) = a.repetitions {
        p.repetitions = v;
    }
    let outcome = recipes::run(a.preset, &p)?;
    let mut run = Run::new(outcome, json!({ "preset": a.preset.name(), "params": p }));
    run.seed = Some(p.seed);
    Ok(run)
}

/// Reads a manifest and returns the argv that reproduces it into `out`.
pub fn replay_argv(manifest: &Path, out: &Path) -> Result<Vec<String>, CliError> {
    let m = Manifest::read(manifest).map_err(CliError::from_display)?;
    let mut argv = vec!["slowthink".to_string()];
    let mut skip = false;
    for arg in m.argv {
        if skip {
            skip = false;
            continue;
        }
        if arg == "--out" {
            skip = true;
            continue;
        }
        if arg.starts_with("--out=") {
            continue;
        }
        argv.push(arg);
    }
    argv.push("--out".into());
    argv.push(out.display().to_string());
    Ok(argv)
}
