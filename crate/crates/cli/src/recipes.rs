//! Named reproduction presets. Each returns its tables, plots and
//! pass/fail checks; the caller decides where to write them.

use std::path::Path;

use serde::{Deserialize, Serialize};
use slowthink_core::bounds::{self, CostCase};
use slowthink_core::calibration::{self, ExpansionTrace, TraceStats};
use slowthink_core::hsic::{self, HsicConfig};
use slowthink_core::info::{run_fano_suite, FanoSuiteConfig};
use slowthink_core::report::{fmt_float, ReportError, Series};
use slowthink_core::sim::{self, MonteCarloReport};
use slowthink_core::{
    row, AnswerModel, DecayModel, PlotSpec, ProcessConfig, SelectionRule, SelectorModel,
    StrategySpec, Table, WrongModel,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RecipeError {
    #[error(transparent)]
    Sim(#[from] slowthink_core::SimError),
    #[error(transparent)]
    Bounds(#[from] slowthink_core::BoundsError),
    #[error(transparent)]
    Calibration(#[from] slowthink_core::CalibrationError),
    #[error(transparent)]
    Decay(#[from] slowthink_core::DecayError),
    #[error(transparent)]
    Info(#[from] slowthink_core::InfoError),
    #[error(transparent)]
    Hsic(#[from] slowthink_core::HsicError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Table1,
    Calibration,
    Fano,
    Dominance,
    SpotCheck,
    Nmin,
    Fig3,
    Lookahead,
    Hsic,
    InfluenceOfK,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Table1 => "table1",
            Preset::Calibration => "calibration",
            Preset::Fano => "fano",
            Preset::Dominance => "dominance",
            Preset::SpotCheck => "spot-check",
            Preset::Nmin => "nmin",
            Preset::Fig3 => "fig3",
            Preset::Lookahead => "lookahead",
            Preset::Hsic => "hsic",
            Preset::InfluenceOfK => "influence-of-k",
        }
    }
}

/// Knobs shared by the presets; each preset reads the ones it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecipeParams {
    pub trials: u64,
    pub seed: u64,
    pub b: u64,
    pub path_length: usize,
    pub instances: usize,
    pub shuffles: usize,
    pub repetitions: usize,
}

impl Default for RecipeParams {
    fn default() -> Self {
        RecipeParams {
            trials: 100_000,
            seed: 0,
            b: 4,
            path_length: 2,
            instances: 1000,
            shuffles: 1000,
            repetitions: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub tables: Vec<(String, Table)>,
    pub plots: Vec<(String, PlotSpec)>,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    fn check(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail,
        });
    }

    pub fn checks_table(&self) -> Table {
        let mut t = Table::new(["check", "passed", "detail"]);
        for c in &self.checks {
            t.push(row![c.name.as_str(), c.passed, c.detail.as_str()])
                .expect("three columns");
        }
        t
    }

    /// Writes `<name>.csv`, `<name>.svg` and `checks.csv`; returns the file names.
    pub fn write(&self, dir: &Path) -> Result<Vec<String>, ReportError> {
        let mut written = Vec::new();
        for (name, table) in &self.tables {
            let file = format!("{name}.csv");
            table.write_csv(dir.join(&file))?;
            written.push(file);
        }
        for (name, plot) in &self.plots {
            let file = format!("{name}.svg");
            slowthink_core::report::emit_plot(plot, dir.join(&file))?;
            written.push(file);
        }
        if !self.checks.is_empty() {
            self.checks_table().write_csv(dir.join("checks.csv"))?;
            written.push("checks.csv".into());
        }
        Ok(written)
    }
}

pub fn run(preset: Preset, p: &RecipeParams) -> Result<Outcome, RecipeError> {
    match preset {
        Preset::Table1 => table1(p.b, p.path_length),
        Preset::Calibration => calibration_reproduction(),
        Preset::Fano => fano(p.instances, p.seed),
        Preset::Dominance => dominance(p.trials, p.seed),
        Preset::SpotCheck => spot_check(p.trials, p.seed),
        Preset::Nmin => nmin(),
        Preset::Fig3 => fig3(p.trials, p.seed),
        Preset::Lookahead => lookahead(p.trials, p.seed),
        Preset::Hsic => hsic_pipeline(p.repetitions, p.shuffles, p.seed),
        Preset::InfluenceOfK => influence_of_k(p.trials, p.seed),
    }
}

fn rel_err(got: f64, want: f64) -> f64 {
    ((got - want) / want).abs()
}

/// Cost cells of BoN and MCTS at one `(b, L)`, with numeric `N_min`.
pub fn table1(b: u64, path_length: usize) -> Result<Outcome, RecipeError> {
    let mut out = Outcome::default();
    let mut t = Table::new(["case", "b", "L", "bon_cost", "mcts_cost", "n_min", "n_min_closed_form"]);
    for entry in bounds::cost_table(b, path_length) {
        let numeric = bounds::n_min(b, path_length, entry.case)?;
        let closed = bounds::n_min_closed_form(b, path_length, entry.case);
        t.push(row![
            entry.case.to_string(),
            b,
            path_length,
            entry.bon_cost,
            entry.mcts_cost,
            numeric,
            closed
        ])?;
        out.check(
            &format!("n_min_{}", entry.case),
            rel_err(numeric, closed) <= 1e-9,
            format!("numeric {} vs closed form {}", fmt_float(numeric), fmt_float(closed)),
        );
    }
    out.tables.push(("table1".into(), t));
    Ok(out)
}

/// Published `(b, p, L)` and the reported `Ñ_call`, `Ñ_res` per dataset.
pub const PUBLISHED_SETTINGS: [(&str, f64, f64, f64, f64, f64); 3] = [
    ("gsm8k", 4.26, 4.54, 3.11, 19.40, 6.23),
    ("prontoqa", 1.67, 9.45, 4.00, 15.77, 3.94),
    ("game24", 4.56, 3.99, 3.00, 18.24, 6.08),
];

pub const CALIBRATION_TOLERANCE: f64 = 0.01;

pub fn calibration_reproduction() -> Result<Outcome, RecipeError> {
    let mut out = Outcome::default();
    let mut t = Table::new([
        "dataset",
        "avg_b",
        "avg_p",
        "avg_l",
        "n_call",
        "n_res",
        "published_n_call",
        "published_n_res",
        "rel_err_call",
        "rel_err_res",
    ]);
    for (name, b, p, l, want_call, want_res) in PUBLISHED_SETTINGS {
        let stats = TraceStats::new(b, p, l)?;
        let (call, res) = (calibration::n_call(&stats), calibration::n_res(&stats));
        let (ec, er) = (rel_err(call, want_call), rel_err(res, want_res));
        t.push(row![name, b, p, l, call, res, want_call, want_res, ec, er])?;
        out.check(
            &format!("calibration_{name}"),
            ec <= CALIBRATION_TOLERANCE && er <= CALIBRATION_TOLERANCE,
            format!("relative errors {} / {}", fmt_float(ec), fmt_float(er)),
        );
    }
    out.tables.push(("calibration".into(), t));
    Ok(out)
}

pub fn fano(instances: usize, seed: u64) -> Result<Outcome, RecipeError> {
    fano_suite(&FanoSuiteConfig {
        instances,
        seed,
        ..FanoSuiteConfig::default()
    })
}

pub fn fano_suite(cfg: &FanoSuiteConfig) -> Result<Outcome, RecipeError> {
    let instances = cfg.instances;
    let result = run_fano_suite(cfg).map_err(RecipeError::Invalid)?;
    let mut out = Outcome::default();
    let mut rows = Table::new([
        "instance",
        "len",
        "t_support",
        "p_error",
        "lower_bound",
        "h_b",
        "satisfied",
    ]);
    for r in &result.rows {
        let rep = &r.report;
        rows.push(row![
            r.instance,
            r.len,
            rep.t_support,
            rep.lhs,
            rep.rhs,
            rep.h_b,
            rep.bound_satisfied().unwrap_or(true)
        ])?;
    }
    let mut summary = Table::new([
        "generated",
        "admissible",
        "violations",
        "mi_only_instances",
        "mi_only_failures",
    ]);
    summary.push(row![
        result.generated,
        result.rows.len(),
        result.violations,
        result.mi_only_instances,
        result.mi_only_failures
    ])?;
    out.check(
        "fano_bound",
        result.passed(instances),
        format!(
            "{} admissible of {} generated, {} violations",
            result.rows.len(),
            result.generated,
            result.violations
        ),
    );
    out.tables.push(("fano_instances".into(), rows));
    out.tables.push(("fano_summary".into(), summary));
    Ok(out)
}

fn mc_columns() -> [&'static str; 5] {
    ["trials", "successes", "estimate", "ci_low", "ci_high"]
}

fn mc_cells(r: &MonteCarloReport) -> Vec<String> {
    row![r.trials, r.successes, r.estimate, r.ci_low, r.ci_high]
}

/// The Monte Carlo grid checked against the exact-form bounds.
pub fn dominance_grid() -> Vec<(f64, usize, StrategySpec)> {
    let mut strategies = vec![StrategySpec::SinglePath];
    for (k, b) in [(2, 2), (4, 2), (4, 4)] {
        strategies.push(StrategySpec::Beam { k, b });
    }
    for n in [2, 4, 8, 16] {
        strategies.push(StrategySpec::Bon {
            n,
            rule: SelectionRule::OrmMax,
        });
    }
    for b in [2, 4] {
        strategies.push(StrategySpec::MctsBest { b });
    }
    strategies.push(StrategySpec::MctsWorst { b: 2 });
    let mut grid = Vec::new();
    for lambda in [0.5, 1.0] {
        for len in [2, 3, 5] {
            for s in &strategies {
                grid.push((lambda, len, s.clone()));
            }
        }
    }
    grid
}

pub fn dominance(trials: u64, seed: u64) -> Result<Outcome, RecipeError> {
    let mut out = Outcome::default();
    let mut headers = vec!["lambda_tau", "L", "strategy"];
    headers.extend(mc_columns());
    headers.extend(["bound", "verdict"]);
    let mut t = Table::new(headers);
    let mut failures = Vec::new();
    let grid = dominance_grid();
    for (i, (lambda, len, strategy)) in grid.iter().enumerate() {
        let cfg = ProcessConfig::new(DecayModel::exponential(*lambda)?, SelectorModel::Ideal, *len);
        let rep = sim::monte_carlo(&cfg, strategy, trials, seed.wrapping_add(i as u64))?;
        let bound = strategy
            .matching_bound(&cfg)?
            .ok_or_else(|| RecipeError::Invalid(format!("no bound for {strategy}")))?
            .value();
        let verdict = sim::verify_bounds(&rep, bound);
        if !verdict.passed() {
            failures.push(format!("{strategy} at lambda={lambda}, L={len}"));
        }
        let mut cells = row![*lambda, *len, strategy.to_string()];
        cells.extend(mc_cells(&rep));
        cells.extend(row![bound, verdict.to_string()]);
        t.push(cells)?;
    }
    out.check(
        "bound_dominance",
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} cells, no failures", grid.len())
        } else {
            format!("failures: {}", failures.join("; "))
        },
    );
    out.tables.push(("dominance".into(), t));
    Ok(out)
}

pub fn spot_check(trials: u64, seed: u64) -> Result<Outcome, RecipeError> {
    let cfg = ProcessConfig::new(DecayModel::exponential(1.0)?, SelectorModel::Ideal, 2);
    let rep = sim::monte_carlo(&cfg, &StrategySpec::SinglePath, trials, seed)?;
    let exact = bounds::single_path_bound(&cfg.decay, 2)?.value();
    let mut out = Outcome::default();
    let mut headers = vec!["strategy"];
    headers.extend(mc_columns());
    headers.push("exact");
    let mut t = Table::new(headers);
    let mut cells = row!["single"];
    cells.extend(mc_cells(&rep));
    cells.push(fmt_float(exact));
    t.push(cells)?;
    out.check(
        "single_path_ci_contains_exact",
        rep.ci_low <= exact && exact <= rep.ci_high,
        format!(
            "[{}, {}] vs {}",
            fmt_float(rep.ci_low),
            fmt_float(rep.ci_high),
            fmt_float(exact)
        ),
    );
    out.tables.push(("spot_check".into(), t));
    Ok(out)
}

pub fn nmin() -> Result<Outcome, RecipeError> {
    let mut out = Outcome::default();
    let mut t = Table::new(["case", "b", "L", "n_min", "closed_form", "rel_err"]);
    let mut worst = 0.0f64;
    for case in [CostCase::Best, CostCase::Worst] {
        for b in 2..=4 {
            for len in 1..=5 {
                let numeric = bounds::n_min(b, len, case)?;
                let closed = bounds::n_min_closed_form(b, len, case);
                let err = rel_err(numeric, closed);
                worst = worst.max(err);
                t.push(row![case.to_string(), b, len, numeric, closed, err])?;
            }
        }
    }
    out.check(
        "n_min_scaling",
        worst <= 1e-9,
        format!("largest relative error {}", fmt_float(worst)),
    );
    out.tables.push(("nmin".into(), t));
    Ok(out)
}

/// Process used for the BoN-versus-tree comparison: the first two steps are
/// certain and the third succeeds with probability `e^{-1}`.
pub fn fig3_process(answer_space_size: u32) -> Result<ProcessConfig, RecipeError> {
    let decay = DecayModel::tabulated(vec![1.0, 1.0, (-1f64).exp()])?;
    let mut cfg = ProcessConfig::new(decay, SelectorModel::noisy_score(1.0, 1.0)?, 3);
    cfg.score_noise_std = 1.0;
    cfg.answer = AnswerModel::new(answer_space_size)?;
    Ok(cfg)
}

pub const FIG3_MAX_N: u64 = 16;
pub const FIG3_MATCH_TOLERANCE: f64 = 0.02;

pub fn fig3(trials: u64, seed: u64) -> Result<Outcome, RecipeError> {
    let mut out = Outcome::default();
    let open = fig3_process(1000)?;
    let binary = fig3_process(1)?;
    let mut sweep = Table::new(["rule", "answer_space", "n", "estimate", "ci_low", "ci_high"]);
    let mut series = Vec::new();
    let mut sweep_for = |cfg: &ProcessConfig, rule: SelectionRule| -> Result<Vec<MonteCarloReport>, RecipeError> {
        let mut reports = Vec::new();
        for n in 1..=FIG3_MAX_N {
            let rep = sim::monte_carlo(cfg, &StrategySpec::Bon { n, rule }, trials, seed)?;
            sweep.push(row![
                rule.name(),
                cfg.answer.answer_space_size,
                n,
                rep.estimate,
                rep.ci_low,
                rep.ci_high
            ])?;
            reports.push(rep);
        }
        Ok(reports)
    };
    let vote = sweep_for(&open, SelectionRule::OrmVote)?;
    let max = sweep_for(&open, SelectionRule::OrmMax)?;
    let sc = sweep_for(&binary, SelectionRule::SelfConsistency)?;
    let curve = |reps: &[MonteCarloReport]| -> Vec<(f64, f64)> {
        reps.iter().enumerate().map(|(i, r)| ((i + 1) as f64, r.estimate)).collect()
    };
    series.push(Series::line("BoN orm_vote", curve(&vote)));
    series.push(Series::line("BoN orm_max", curve(&max)));
    series.push(Series::line("BoN self_consistency (binary)", curve(&sc)));

    // Significant drops or rises between consecutive N.
    let drops = |reps: &[MonteCarloReport]| {
        reps.windows(2).filter(|w| w[1].ci_high < w[0].ci_low).count()
    };
    let rises = |reps: &[MonteCarloReport]| {
        reps.windows(2).filter(|w| w[1].ci_low > w[0].ci_high).count()
    };
    out.check(
        "orm_vote_nondecreasing",
        drops(&vote) == 0,
        format!("{} significant decreases over N=1..{FIG3_MAX_N}", drops(&vote)),
    );
    out.check(
        "orm_max_nondecreasing",
        drops(&max) == 0,
        format!("{} significant decreases over N=1..{FIG3_MAX_N}", drops(&max)),
    );
    let per_path = sc[0].estimate;
    out.check(
        "self_consistency_nonincreasing",
        rises(&sc) == 0 && per_path < 0.5,
        format!(
            "per-path success {}, {} significant increases",
            fmt_float(per_path),
            rises(&sc)
        ),
    );

    let mut env_table = Table::new([
        "envelope",
        "estimate",
        "ci_low",
        "ci_high",
        "avg_b",
        "avg_p",
        "avg_l",
        "n_res",
        "n_call",
        "closest_n",
        "bon_estimate",
        "abs_gap",
    ]);
    let mut vlines = Vec::new();
    for (i, envelope) in [StrategySpec::MctsBest { b: 2 }, StrategySpec::MctsWorst { b: 2 }]
        .into_iter()
        .enumerate()
    {
        let env = sim::monte_carlo(&open, &envelope, trials, seed.wrapping_add(1 + i as u64))?;
        let trace = ExpansionTrace::from_strategy("sim", &envelope, open.path_length);
        let stats = calibration::summarize(&[trace])?;
        let range = calibration::reasonable_n_range(&stats);
        let mut best: Option<(u64, f64)> = None;
        for n in range.integer_candidates() {
            let bon = sim::monte_carlo(
                &open,
                &StrategySpec::Bon {
                    n,
                    rule: SelectionRule::OrmMax,
                },
                trials,
                seed,
            )?;
            if best.is_none_or(|(_, e)| (bon.estimate - env.estimate).abs() < (e - env.estimate).abs()) {
                best = Some((n, bon.estimate));
            }
        }
        let (n, bon) = best.ok_or_else(|| {
            RecipeError::Invalid(format!("no integer N in [{}, {}]", range.low, range.high))
        })?;
        let gap = (bon - env.estimate).abs();
        env_table.push(row![
            envelope.to_string(),
            env.estimate,
            env.ci_low,
            env.ci_high,
            stats.avg_b,
            stats.avg_p,
            stats.avg_l,
            range.low,
            range.high,
            n,
            bon,
            gap
        ])?;
        out.check(
            &format!("bon_matches_{}", envelope.name()),
            gap <= FIG3_MATCH_TOLERANCE,
            format!(
                "N={n} in [{}, {}]: BoN {} vs envelope {}",
                fmt_float(range.low),
                fmt_float(range.high),
                fmt_float(bon),
                fmt_float(env.estimate)
            ),
        );
        let x = (1.0, FIG3_MAX_N as f64);
        series.push(Series::line(
            envelope.to_string(),
            vec![(x.0, env.estimate), (x.1, env.estimate)],
        ));
        vlines.push((range.low, format!("N_res {}", envelope.name())));
        vlines.push((range.high, format!("N_call {}", envelope.name())));
    }
    out.tables.push(("fig3_sweep".into(), sweep));
    out.tables.push(("fig3_envelopes".into(), env_table));
    out.plots.push((
        "fig3".into(),
        PlotSpec {
            title: "BoN success versus N".into(),
            x_label: "N".into(),
            y_label: "success".into(),
            series,
            vlines,
        },
    ));
    Ok(out)
}

/// `(λ_δ, layer)` pairs with `ln 2λ_δ > layer + 1`.
pub fn lookahead_cases() -> Vec<(f64, usize)> {
    let mut cases = Vec::new();
    for exponent in [3.0f64, 4.0] {
        let lambda_delta = exponent.exp() / 2.0;
        for layer in 1.. {
            if (2.0 * lambda_delta).ln() <= layer as f64 + 1.0 {
                break;
            }
            cases.push((lambda_delta, layer));
        }
    }
    cases
}

pub const LOOKAHEAD_MAX_GAMMA: usize = 8;

pub fn lookahead(trials: u64, seed: u64) -> Result<Outcome, RecipeError> {
    let mut out = Outcome::default();
    let decay = DecayModel::exponential(1.0)?;
    let mut t = Table::new([
        "lambda_delta",
        "layer",
        "gamma",
        "estimate",
        "ci_low",
        "ci_high",
        "analytic",
    ]);
    let mut series = Vec::new();
    for (lambda_delta, layer) in lookahead_cases() {
        let wrong = WrongModel::new(lambda_delta)?;
        let gamma_star = bounds::optimal_rollout(&wrong, layer as f64);
        let expected = ((2.0 * lambda_delta).ln() - layer as f64).max(0.0);
        out.check(
            &format!("optimal_rollout_l{layer}_ld{}", fmt_float(lambda_delta)),
            gamma_star == expected,
            format!("{} vs {}", fmt_float(gamma_star), fmt_float(expected)),
        );
        let mut curve = Vec::new();
        for gamma in 0..=LOOKAHEAD_MAX_GAMMA {
            let rep = sim::lookahead_selection_success(&decay, &wrong, layer, gamma, trials, seed)?;
            let depth = (layer + gamma) as f64;
            let separable =
                bounds::lookahead_distinguishability_bound(1.0, &wrong, depth).map_or(0.0, |v| v.max(0.0));
            t.push(row![
                lambda_delta,
                layer,
                gamma,
                rep.estimate,
                rep.ci_low,
                rep.ci_high,
                0.5 + separable / 2.0
            ])?;
            curve.push((gamma as f64, rep.estimate));
        }
        let peak = curve
            .iter()
            .copied()
            .reduce(|a, b| if b.1 > a.1 { b } else { a })
            .map(|p| p.0)
            .unwrap_or(0.0);
        out.check(
            &format!("lookahead_peak_l{layer}_ld{}", fmt_float(lambda_delta)),
            (peak - gamma_star).abs() <= 1.0,
            format!("simulated peak at {peak}, optimal rollout {}", fmt_float(gamma_star)),
        );
        series.push(Series::line(
            format!("l={layer}, ln 2ld={}", fmt_float((2.0 * lambda_delta).ln())),
            curve,
        ));
    }
    out.tables.push(("lookahead".into(), t));
    out.plots.push((
        "lookahead".into(),
        PlotSpec {
            title: "Pairwise selection success versus rollout length".into(),
            x_label: "gamma".into(),
            y_label: "selection success".into(),
            series,
            vlines: Vec::new(),
        },
    ));
    Ok(out)
}

pub const HSIC_SAMPLES: usize = 200;
pub const HSIC_NULL_SIGMA: f64 = 1.0;
pub const PLANTED_RATE: f64 = 0.05;

pub fn hsic_pipeline(repetitions: usize, shuffles: usize, seed: u64) -> Result<Outcome, RecipeError> {
    let mut out = Outcome::default();
    let default_cfg = HsicConfig::default();

    let constant = hsic::SampleSet::from_rows(&vec![vec![3.0, -1.0]; 20])?;
    let mut r = slowthink_core::rng::stream(seed, u64::MAX);
    let other = hsic::gaussian_samples(20, 2, &mut r)?;
    let zero = hsic::hsic(&constant, &other, &default_cfg)?;
    out.check("hsic_constant_zero", zero == 0.0, format!("hsic = {}", fmt_float(zero)));

    let cfg = HsicConfig::new(HSIC_NULL_SIGMA)?;
    let mut perm = Table::new(["repetition", "statistic", "null_q95", "p_value", "below_q95"]);
    let mut below = 0;
    for rep in 0..repetitions {
        let mut r = slowthink_core::rng::stream(seed, 2 * rep as u64);
        let x = hsic::gaussian_samples(HSIC_SAMPLES, 2, &mut r)?;
        let y = hsic::gaussian_samples(HSIC_SAMPLES, 2, &mut r)?;
        let test = hsic::permutation_test(&x, &y, &cfg, shuffles, seed.wrapping_add(rep as u64))?;
        below += usize::from(test.below_q95());
        perm.push(row![rep, test.statistic, test.null_q95, test.p_value, test.below_q95()])?;
    }
    let needed = (0.9 * repetitions as f64).ceil() as usize;
    out.check(
        "hsic_independent_below_null_q95",
        below >= needed,
        format!("{below} of {repetitions} repetitions (need {needed})"),
    );

    let points = hsic::planted_decay_points(1.0, PLANTED_RATE, 0.05, 50, (1.0, 50.0), seed);
    let (exp, lin) = hsic::fit_decay(&points)?;
    let rate_err = rel_err(exp.params[1], PLANTED_RATE);
    out.check(
        "planted_decay_rate",
        rate_err <= 0.1,
        format!("fitted rate {} (relative error {})", fmt_float(exp.params[1]), fmt_float(rate_err)),
    );
    out.check(
        "exponential_beats_linear",
        exp.r2 > lin.r2,
        format!("r2 {} vs {}", fmt_float(exp.r2), fmt_float(lin.r2)),
    );
    let (fits, plot) = fit_outputs(&points, &exp, &lin)?;
    out.tables.push(("hsic_permutation".into(), perm));
    out.tables.push(("hsic_fit".into(), fits));
    out.plots.push(("hsic_fit".into(), plot));
    Ok(out)
}

/// Fit summary table and scatter-with-fits plot.
pub fn fit_outputs(
    points: &[(f64, f64)],
    exp: &hsic::FitResult,
    lin: &hsic::FitResult,
) -> Result<(Table, PlotSpec), RecipeError> {
    let mut t = Table::new(["model", "param_a", "param_b", "r2"]);
    t.push(row!["exponential", exp.params[0], exp.params[1], exp.r2])?;
    t.push(row!["linear", lin.params[0], lin.params[1], lin.r2])?;
    let curve = |f: &hsic::FitResult| points.iter().map(|&(x, _)| (x, f.predict(x))).collect();
    let plot = PlotSpec {
        title: "Decay fit".into(),
        x_label: "length".into(),
        y_label: "value".into(),
        series: vec![
            Series::points("data", points.to_vec()),
            Series::line("exponential fit", curve(exp)),
            Series::line("linear fit", curve(lin)),
        ],
        vlines: Vec::new(),
    };
    Ok((t, plot))
}

pub const INFLUENCE_KS: [u64; 7] = [2, 3, 4, 6, 8, 12, 16];

/// Beam width sweep at fixed `b = 2` under a noisy selector.
pub fn influence_of_k(trials: u64, seed: u64) -> Result<Outcome, RecipeError> {
    let cfg = fig3_process(1000)?;
    let mut out = Outcome::default();
    let mut headers = vec!["k", "b"];
    headers.extend(mc_columns());
    headers.push("mean_steps");
    let mut t = Table::new(headers);
    let mut curve = Vec::new();
    for k in INFLUENCE_KS {
        let rep = sim::monte_carlo(&cfg, &StrategySpec::Beam { k, b: 2 }, trials, seed)?;
        let mut cells = row![k, 2u64];
        cells.extend(mc_cells(&rep));
        cells.push(fmt_float(rep.mean_steps));
        t.push(cells)?;
        curve.push((k as f64, rep.estimate));
    }
    out.tables.push(("influence_of_k".into(), t));
    out.plots.push((
        "influence_of_k".into(),
        PlotSpec {
            title: "Beam success versus k (b = 2)".into(),
            x_label: "k".into(),
            y_label: "success".into(),
            series: vec![Series::line("beam", curve)],
            vlines: Vec::new(),
        },
    ));
    Ok(out)
}
