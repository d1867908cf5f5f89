//! Monte Carlo simulation of search strategies over the synthetic
//! step-correctness process.
//!
//! A step sampled under an incorrect parent is always incorrect. Under a
//! correct parent, step `l` is correct with probability `p(l)` from the
//! [`DecayModel`], independently across siblings.
//!
//! Selection follows the [`SelectorModel`]: `Ideal` and `Constant` act as one
//! Bernoulli(`ε`) event per selection, drawn only when a correct candidate is
//! present, and a failed selection commits to incorrect steps. `NoisyScore`
//! draws a score `margin·[correct] + noise_std·Z` for every candidate and
//! keeps the highest.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{self, BoundValue, BoundsError, CostCase};
use crate::decay::{AnswerModel, DecayError, DecayModel, SelectorModel, WrongModel};
use crate::rng;

/// Largest leaf count the worst-case MCTS envelope will materialize.
pub const MAX_TREE_LEAVES: u64 = 1_000_000;

/// Two-sided 95% standard normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Decay(#[from] DecayError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error("decay model is not monotone: {0}")]
    NonMonotoneDecay(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("complete tree with {leaves} leaves exceeds the node budget of {limit}")]
    NodeBudget { leaves: String, limit: u64 },
}

/// The synthetic generation process shared by every strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessConfig {
    pub decay: DecayModel,
    pub selector: SelectorModel,
    #[serde(default)]
    pub answer: AnswerModel,
    pub path_length: usize,
    /// Std of the Gaussian noise on BoN reward scores.
    #[serde(default)]
    pub score_noise_std: f64,
    /// When present, lookahead evaluates rollouts with the distinguishability
    /// model instead of the selector.
    #[serde(default)]
    pub wrong: Option<WrongModel>,
}

impl ProcessConfig {
    pub fn new(decay: DecayModel, selector: SelectorModel, path_length: usize) -> Self {
        ProcessConfig {
            decay,
            selector,
            answer: AnswerModel::default(),
            path_length,
            score_noise_std: 0.0,
            wrong: None,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.decay.check()?;
        self.decay
            .validate()
            .map_err(|v| SimError::NonMonotoneDecay(v.to_string()))?;
        self.selector.check()?;
        self.answer.check()?;
        if let Some(w) = &self.wrong {
            w.check()?;
        }
        if self.path_length == 0 {
            return Err(SimError::Config("path length must be at least 1".into()));
        }
        if let Some(max) = self.decay.max_layer() {
            if max < self.path_length {
                return Err(DecayError::LayerOutOfRange {
                    layer: self.path_length,
                    max,
                }
                .into());
            }
        }
        if !(self.score_noise_std.is_finite() && self.score_noise_std >= 0.0) {
            return Err(SimError::Config(format!(
                "score_noise_std must be nonnegative, got {}",
                self.score_noise_std
            )));
        }
        Ok(())
    }

    fn p(&self, layer: usize) -> Result<f64, SimError> {
        Ok(self.decay.step_correct_prob(layer)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    SelfConsistency,
    OrmVote,
    OrmMax,
}

impl SelectionRule {
    pub fn name(&self) -> &'static str {
        match self {
            SelectionRule::SelfConsistency => "self_consistency",
            SelectionRule::OrmVote => "orm_vote",
            SelectionRule::OrmMax => "orm_max",
        }
    }
}

impl std::str::FromStr for SelectionRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "self_consistency" | "sc" => Ok(SelectionRule::SelfConsistency),
            "orm_vote" => Ok(SelectionRule::OrmVote),
            "orm_max" => Ok(SelectionRule::OrmMax),
            other => Err(format!("unknown selection rule `{other}`")),
        }
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrategySpec {
    SinglePath,
    Bon {
        n: u64,
        rule: SelectionRule,
    },
    Beam {
        k: u64,
        b: u64,
    },
    /// Beam search with `k = b`.
    MctsBest {
        b: u64,
    },
    /// Complete `b`-ary tree of depth `L`.
    MctsWorst {
        b: u64,
    },
    Lookahead {
        b: u64,
        gamma: usize,
        /// Count rollout steps toward the generation budget.
        #[serde(default = "default_true")]
        count_rollout: bool,
    },
}

impl StrategySpec {
    pub fn name(&self) -> &'static str {
        match self {
            StrategySpec::SinglePath => "single",
            StrategySpec::Bon { .. } => "bon",
            StrategySpec::Beam { .. } => "beam",
            StrategySpec::MctsBest { .. } => "mcts_best",
            StrategySpec::MctsWorst { .. } => "mcts_worst",
            StrategySpec::Lookahead { .. } => "lookahead",
        }
    }

    pub fn validate(&self, cfg: &ProcessConfig) -> Result<(), SimError> {
        let positive = |v: u64, name: &str| {
            if v == 0 {
                Err(SimError::Config(format!("{name} must be at least 1")))
            } else {
                Ok(())
            }
        };
        match *self {
            StrategySpec::SinglePath => Ok(()),
            StrategySpec::Bon { n, .. } => positive(n, "N"),
            StrategySpec::Beam { k, b } => {
                positive(b, "b")?;
                if k < b {
                    return Err(SimError::Config(format!("beam needs k >= b, got k={k}, b={b}")));
                }
                Ok(())
            }
            StrategySpec::MctsBest { b } => positive(b, "b"),
            StrategySpec::MctsWorst { b } => {
                positive(b, "b")?;
                let leaves = (b as f64).powi(cfg.path_length as i32);
                if leaves > MAX_TREE_LEAVES as f64 {
                    return Err(SimError::NodeBudget {
                        leaves: format!("{b}^{}", cfg.path_length),
                        limit: MAX_TREE_LEAVES,
                    });
                }
                Ok(())
            }
            StrategySpec::Lookahead { b, gamma, .. } => {
                positive(b, "b")?;
                if let Some(max) = cfg.decay.max_layer() {
                    if max < cfg.path_length + gamma {
                        return Err(DecayError::LayerOutOfRange {
                            layer: cfg.path_length + gamma,
                            max,
                        }
                        .into());
                    }
                }
                Ok(())
            }
        }
    }

    /// Upper bound on the success probability of this strategy, when one exists.
    ///
    /// Tree strategies use the exact width-expansion product, BoN uses its
    /// (possibly vacuous) closed form, lookahead has none.
    pub fn matching_bound(&self, cfg: &ProcessConfig) -> Result<Option<BoundValue>, BoundsError> {
        let (d, s, len) = (&cfg.decay, &cfg.selector, cfg.path_length);
        Ok(match *self {
            StrategySpec::SinglePath => Some(bounds::single_path_bound(d, len)?),
            StrategySpec::Bon { n, .. } => Some(bounds::bon_bound(d, s, len, n)?),
            StrategySpec::Beam { k, b } => {
                Some(bounds::width_expansion_bound_exact(d, s, len, k, b)?)
            }
            StrategySpec::MctsBest { b } => {
                Some(bounds::width_expansion_bound_exact(d, s, len, b, b)?)
            }
            StrategySpec::MctsWorst { b } => Some(bounds::mcts_worst_bound_exact(d, s, len, b)?),
            StrategySpec::Lookahead { .. } => None,
        })
    }
}

impl std::fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StrategySpec::SinglePath => write!(f, "single"),
            StrategySpec::Bon { n, rule } => write!(f, "bon(n={n},rule={})", rule.name()),
            StrategySpec::Beam { k, b } => write!(f, "beam(k={k},b={b})"),
            StrategySpec::MctsBest { b } => write!(f, "mcts_best(b={b})"),
            StrategySpec::MctsWorst { b } => write!(f, "mcts_worst(b={b})"),
            StrategySpec::Lookahead { b, gamma, .. } => write!(f, "lookahead(b={b},gamma={gamma})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialResult {
    pub success: bool,
    pub steps_generated: u64,
    pub model_calls: u64,
}

fn bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    rng.random::<f64>() < p
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Child correctness: an incorrect parent always yields an incorrect step.
fn child<R: Rng + ?Sized>(rng: &mut R, parent: bool, p: f64) -> bool {
    parent && bernoulli(rng, p)
}

/// Keeps `keep` nodes out of `pool`, returning their correctness.
fn keep_nodes<R: Rng + ?Sized>(
    selector: &SelectorModel,
    pool_size: u64,
    pool: &[bool],
    keep: usize,
    rng: &mut R,
) -> Vec<bool> {
    let keep = keep.min(pool.len());
    match *selector {
        SelectorModel::NoisyScore { noise_std, margin } => {
            let mut scored: Vec<(f64, bool)> = pool
                .iter()
                .map(|&c| (if c { margin } else { 0.0 } + noise_std * gaussian(rng), c))
                .collect();
            if keep == 1 {
                let best = scored
                    .iter()
                    .copied()
                    .reduce(|a, b| if b.0 > a.0 { b } else { a })
                    .map(|(_, c)| c);
                return best.into_iter().collect();
            }
            scored.sort_by(|a, b| b.0.total_cmp(&a.0));
            scored.into_iter().take(keep).map(|(_, c)| c).collect()
        }
        SelectorModel::Ideal | SelectorModel::Constant { .. } => {
            let correct = pool.iter().filter(|&&c| c).count();
            if correct == 0 {
                return vec![false; keep];
            }
            let eps = selector.success_prob(pool_size);
            if eps < 1.0 && !bernoulli(rng, eps) {
                return vec![false; keep];
            }
            let mut out = vec![true; keep.min(correct)];
            out.resize(keep, false);
            out
        }
    }
}

/// Samples a full path; returns whether every step was correct.
fn sample_path<R: Rng + ?Sized>(cfg: &ProcessConfig, rng: &mut R) -> Result<bool, SimError> {
    let mut ok = true;
    for l in 1..=cfg.path_length {
        ok = child(rng, ok, cfg.p(l)?);
        if !ok {
            break;
        }
    }
    Ok(ok)
}

/// One sampled response.
pub fn run_single_path<R: Rng + ?Sized>(
    cfg: &ProcessConfig,
    rng: &mut R,
) -> Result<TrialResult, SimError> {
    Ok(TrialResult {
        success: sample_path(cfg, rng)?,
        steps_generated: cfg.path_length as u64,
        model_calls: 1,
    })
}

/// Uniform choice among the keys achieving the maximum value.
fn argmax_key<R: Rng + ?Sized, K: Copy>(
    entries: impl IntoIterator<Item = (K, f64)>,
    rng: &mut R,
) -> Option<K> {
    let mut best: Vec<K> = Vec::new();
    let mut best_value = f64::NEG_INFINITY;
    for (key, value) in entries {
        if value > best_value {
            best_value = value;
            best.clear();
            best.push(key);
        } else if value == best_value {
            best.push(key);
        }
    }
    match best.len() {
        0 => None,
        1 => Some(best[0]),
        n => Some(best[rng.random_range(0..n)]),
    }
}

/// Best-of-N: `n` independent responses and one final selection.
pub fn run_bon<R: Rng + ?Sized>(
    cfg: &ProcessConfig,
    n: u64,
    rule: SelectionRule,
    rng: &mut R,
) -> Result<TrialResult, SimError> {
    if n == 0 {
        return Err(SimError::Config("N must be at least 1".into()));
    }
    let wrong_labels = cfg.answer.answer_space_size;
    let mut paths: Vec<(bool, u32, f64)> = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let correct = sample_path(cfg, rng)?;
        let label = if correct {
            0
        } else {
            rng.random_range(1..=wrong_labels)
        };
        let score = if correct { 1.0 } else { 0.0 } + cfg.score_noise_std * gaussian(rng);
        paths.push((correct, label, score));
    }

    let success = match rule {
        SelectionRule::SelfConsistency | SelectionRule::OrmVote => {
            let mut tally: BTreeMap<u32, f64> = BTreeMap::new();
            for &(_, label, score) in &paths {
                let weight = if rule == SelectionRule::OrmVote { score } else { 1.0 };
                *tally.entry(label).or_insert(0.0) += weight;
            }
            argmax_key(tally, rng) == Some(0)
        }
        SelectionRule::OrmMax => {
            let chosen = argmax_key(paths.iter().enumerate().map(|(i, p)| (i, p.2)), rng);
            chosen.is_some_and(|i| paths[i].0)
        }
    };
    Ok(TrialResult {
        success,
        steps_generated: n * cfg.path_length as u64,
        model_calls: n,
    })
}

/// Beam search sampling `k` steps per layer and keeping `b`.
pub fn run_beam<R: Rng + ?Sized>(
    cfg: &ProcessConfig,
    k: u64,
    b: u64,
    rng: &mut R,
) -> Result<TrialResult, SimError> {
    StrategySpec::Beam { k, b }.validate(cfg)?;
    let mut retained = vec![true];
    let mut candidates = Vec::with_capacity(k as usize);
    for l in 1..=cfg.path_length {
        let p = cfg.p(l)?;
        candidates.clear();
        for j in 0..k as usize {
            let parent = retained[j % retained.len()];
            candidates.push(child(rng, parent, p));
        }
        retained = keep_nodes(&cfg.selector, b, &candidates, b as usize, rng);
    }
    let chosen = keep_nodes(&cfg.selector, b, &retained, 1, rng);
    let steps = k * cfg.path_length as u64;
    Ok(TrialResult {
        success: chosen.first().copied().unwrap_or(false),
        steps_generated: steps,
        model_calls: steps,
    })
}

/// `Σ_{l=1..L} b^l`.
pub fn complete_tree_steps(b: u64, path_length: usize) -> u64 {
    (1..=path_length as u32).map(|l| b.pow(l)).sum()
}

/// MCTS envelopes: best case is beam search with `k = b`; worst case
/// materializes the complete `b`-ary tree and selects once per layer among
/// its `b^l` nodes.
pub fn run_mcts_envelope<R: Rng + ?Sized>(
    cfg: &ProcessConfig,
    b: u64,
    case: CostCase,
    rng: &mut R,
) -> Result<TrialResult, SimError> {
    match case {
        CostCase::Best => run_beam(cfg, b, b, rng),
        CostCase::Worst => {
            StrategySpec::MctsWorst { b }.validate(cfg)?;
            let steps = complete_tree_steps(b, cfg.path_length);
            let mut level = vec![true];
            let mut success = true;
            for l in 1..=cfg.path_length {
                let p = cfg.p(l)?;
                let mut next = Vec::with_capacity(level.len() * b as usize);
                for &parent in &level {
                    for _ in 0..b {
                        next.push(child(rng, parent, p));
                    }
                }
                let picked = keep_nodes(&cfg.selector, next.len() as u64, &next, 1, rng);
                if !picked.first().copied().unwrap_or(false) {
                    success = false;
                    break;
                }
                level = next;
            }
            Ok(TrialResult {
                success,
                steps_generated: steps,
                model_calls: steps,
            })
        }
    }
}

/// Whether rollout evaluation at `depth` tells a correct candidate apart from
/// every wrong one: the correct rollout still looks τ-correct and each wrong
/// rollout already looks δ-wrong.
fn rollout_views<R: Rng + ?Sized>(
    decay: &DecayModel,
    wrong: &WrongModel,
    candidates: &[bool],
    depth: usize,
    rng: &mut R,
) -> Result<(Option<usize>, bool), SimError> {
    let p_good = decay.step_correct_prob(depth)?;
    let p_bad = wrong.wrong_prob(depth as f64);
    let mut visible_good = None;
    let mut all_wrong_visible = true;
    for (i, &c) in candidates.iter().enumerate() {
        if c {
            if bernoulli(rng, p_good) && visible_good.is_none() {
                visible_good = Some(i);
            }
        } else if !bernoulli(rng, p_bad) {
            all_wrong_visible = false;
        }
    }
    Ok((visible_good, all_wrong_visible))
}

/// Lookahead search: `b` candidates per layer, each scored after `gamma`
/// rollout steps; the best candidate is committed and rollouts discarded.
pub fn run_lookahead<R: Rng + ?Sized>(
    cfg: &ProcessConfig,
    b: u64,
    gamma: usize,
    count_rollout: bool,
    rng: &mut R,
) -> Result<TrialResult, SimError> {
    StrategySpec::Lookahead {
        b,
        gamma,
        count_rollout,
    }
    .validate(cfg)?;
    let mut committed = true;
    let mut candidates = Vec::with_capacity(b as usize);
    for l in 1..=cfg.path_length {
        let p = cfg.p(l)?;
        candidates.clear();
        for _ in 0..b {
            candidates.push(child(rng, committed, p));
        }
        committed = match &cfg.wrong {
            Some(wrong) => {
                let (good, separable) = rollout_views(&cfg.decay, wrong, &candidates, l + gamma, rng)?;
                match good {
                    Some(i) if separable => candidates[i],
                    _ => candidates[rng.random_range(0..candidates.len())],
                }
            }
            None => {
                // Endpoint correctness after the rollout chain.
                let mut endpoints = Vec::with_capacity(candidates.len());
                for &c in &candidates {
                    let mut ok = c;
                    for depth in l + 1..=l + gamma {
                        if !ok {
                            break;
                        }
                        ok = child(rng, ok, cfg.p(depth)?);
                    }
                    endpoints.push(ok);
                }
                select_by_endpoint(&cfg.selector, &candidates, &endpoints, rng)
            }
        };
    }
    let generated = cfg.path_length as u64 * b;
    let steps = if count_rollout {
        generated * (1 + gamma as u64)
    } else {
        generated
    };
    Ok(TrialResult {
        success: committed,
        steps_generated: steps,
        model_calls: steps,
    })
}

/// Picks one candidate from its rollout endpoint and returns the candidate's
/// own correctness.
fn select_by_endpoint<R: Rng + ?Sized>(
    selector: &SelectorModel,
    candidates: &[bool],
    endpoints: &[bool],
    rng: &mut R,
) -> bool {
    match *selector {
        SelectorModel::NoisyScore { noise_std, margin } => {
            let scores: Vec<(usize, f64)> = endpoints
                .iter()
                .map(|&e| if e { margin } else { 0.0 } + noise_std * gaussian(rng))
                .enumerate()
                .collect();
            argmax_key(scores, rng).is_some_and(|i| candidates[i])
        }
        SelectorModel::Ideal | SelectorModel::Constant { .. } => {
            match endpoints.iter().position(|&e| e) {
                Some(i) => {
                    let eps = selector.success_prob(candidates.len() as u64);
                    (eps >= 1.0 || bernoulli(rng, eps)) && candidates[i]
                }
                None => candidates[rng.random_range(0..candidates.len())],
            }
        }
    }
}

/// One pairwise lookahead selection at `layer`: a correct and a wrong
/// candidate are evaluated after `gamma` rollout steps; the correct one is
/// chosen when distinguishable, otherwise by a fair coin.
///
/// Draw order is fixed, so trials with the same stream are coupled across
/// `gamma` values.
pub fn lookahead_pair_selection<R: Rng + ?Sized>(
    decay: &DecayModel,
    wrong: &WrongModel,
    layer: usize,
    gamma: usize,
    rng: &mut R,
) -> Result<bool, SimError> {
    let depth = layer + gamma;
    let looks_good = bernoulli(rng, decay.step_correct_prob(depth)?);
    let looks_bad = bernoulli(rng, wrong.wrong_prob(depth as f64));
    let coin = bernoulli(rng, 0.5);
    Ok((looks_good && looks_bad) || coin)
}

pub fn run_trial<R: Rng + ?Sized>(
    cfg: &ProcessConfig,
    strategy: &StrategySpec,
    rng: &mut R,
) -> Result<TrialResult, SimError> {
    match *strategy {
        StrategySpec::SinglePath => run_single_path(cfg, rng),
        StrategySpec::Bon { n, rule } => run_bon(cfg, n, rule, rng),
        StrategySpec::Beam { k, b } => run_beam(cfg, k, b, rng),
        StrategySpec::MctsBest { b } => run_mcts_envelope(cfg, b, CostCase::Best, rng),
        StrategySpec::MctsWorst { b } => run_mcts_envelope(cfg, b, CostCase::Worst, rng),
        StrategySpec::Lookahead {
            b,
            gamma,
            count_rollout,
        } => run_lookahead(cfg, b, gamma, count_rollout, rng),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub trials: u64,
    pub successes: u64,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean_steps: f64,
    pub mean_calls: f64,
    pub seed: u64,
}

impl MonteCarloReport {
    fn from_counts(trials: u64, successes: u64, steps: u64, calls: u64, seed: u64) -> Self {
        let (ci_low, ci_high) = wilson_interval(successes, trials);
        let estimate = successes as f64 / trials as f64;
        MonteCarloReport {
            trials,
            successes,
            estimate,
            ci_low: ci_low.min(estimate),
            ci_high: ci_high.max(estimate),
            mean_steps: steps as f64 / trials as f64,
            mean_calls: calls as f64 / trials as f64,
            seed,
        }
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

/// Wilson score interval at 95%.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Runs `trials` independent trials; trial `i` draws from stream
/// `(master_seed, i)`, so the report is identical however the work is split.
pub fn monte_carlo(
    cfg: &ProcessConfig,
    strategy: &StrategySpec,
    trials: u64,
    master_seed: u64,
) -> Result<MonteCarloReport, SimError> {
    cfg.validate()?;
    strategy.validate(cfg)?;
    if trials == 0 {
        return Err(SimError::Config("trials must be at least 1".into()));
    }
    let (successes, steps, calls) = (0..trials)
        .into_par_iter()
        .map(|i| run_trial(cfg, strategy, &mut rng::stream(master_seed, i)))
        .try_fold(
            || (0u64, 0u64, 0u64),
            |acc, r| r.map(|t| (acc.0 + t.success as u64, acc.1 + t.steps_generated, acc.2 + t.model_calls)),
        )
        .try_reduce(|| (0, 0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1, a.2 + b.2)))?;
    Ok(MonteCarloReport::from_counts(
        trials, successes, steps, calls, master_seed,
    ))
}

/// Estimates the pairwise lookahead selection success at `(layer, gamma)`.
pub fn lookahead_selection_success(
    decay: &DecayModel,
    wrong: &WrongModel,
    layer: usize,
    gamma: usize,
    trials: u64,
    master_seed: u64,
) -> Result<MonteCarloReport, SimError> {
    if trials == 0 {
        return Err(SimError::Config("trials must be at least 1".into()));
    }
    let successes = (0..trials)
        .into_par_iter()
        .map(|i| {
            lookahead_pair_selection(decay, wrong, layer, gamma, &mut rng::stream(master_seed, i))
                .map(u64::from)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(MonteCarloReport::from_counts(
        trials,
        successes,
        2 * (1 + gamma as u64) * trials,
        2 * (1 + gamma as u64) * trials,
        master_seed,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        })
    }
}

/// Pass unless the estimate's Wilson lower limit exceeds `bound`.
pub fn verify_bounds(report: &MonteCarloReport, bound: f64) -> Verdict {
    if report.ci_low <= bound {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

/// Structural expansion events `(node_depth, children_sampled)` of one run.
///
/// The best-case MCTS envelope expands only the deepest leaf, `b` children at
/// a time; the worst case expands every internal node of the complete tree.
pub fn expansion_events(strategy: &StrategySpec, path_length: usize) -> Vec<(u32, u64)> {
    let depths = 0..path_length as u32;
    match *strategy {
        StrategySpec::SinglePath => depths.map(|d| (d, 1)).collect(),
        StrategySpec::Bon { n, .. } => std::iter::once((0, n))
            .chain((1..path_length as u32).flat_map(|d| (0..n).map(move |_| (d, 1))))
            .collect(),
        StrategySpec::Beam { k, b } => {
            let mut events = vec![(0, k)];
            let parents = b.min(k);
            for d in 1..path_length as u32 {
                for j in 0..parents {
                    let children = k / parents + u64::from(j < k % parents);
                    events.push((d, children));
                }
            }
            events
        }
        StrategySpec::MctsBest { b } => depths.map(|d| (d, b)).collect(),
        StrategySpec::MctsWorst { b } => depths
            .flat_map(|d| (0..b.pow(d)).map(move |_| (d, b)))
            .collect(),
        StrategySpec::Lookahead {
            b,
            gamma,
            count_rollout,
        } => {
            let mut events = Vec::new();
            for d in depths {
                events.push((d, b));
                if count_rollout {
                    for _ in 0..b {
                        events.extend((1..=gamma as u32).map(|g| (d + g, 1)));
                    }
                }
            }
            events
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(decay: DecayModel, len: usize) -> ProcessConfig {
        ProcessConfig::new(decay, SelectorModel::Ideal, len)
    }

    fn ones(n: usize) -> DecayModel {
        DecayModel::tabulated(vec![1.0; n]).unwrap()
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(99)
    }

    #[test]
    fn certain_and_impossible_single_paths() {
        let mut r = rng();
        let sure = cfg(ones(3), 3);
        let never = cfg(DecayModel::tabulated(vec![0.0, 0.0]).unwrap(), 2);
        for _ in 0..100 {
            let t = run_single_path(&sure, &mut r).unwrap();
            assert!(t.success);
            assert_eq!((t.steps_generated, t.model_calls), (3, 1));
            assert!(!run_single_path(&never, &mut r).unwrap().success);
        }
        let tiny = cfg(DecayModel::exponential(1e-300).unwrap(), 2);
        assert!(!run_single_path(&tiny, &mut r).unwrap().success);
    }

    #[test]
    fn bon_all_correct_paths() {
        let mut r = rng();
        let c = cfg(ones(1), 1);
        for rule in [SelectionRule::SelfConsistency, SelectionRule::OrmVote, SelectionRule::OrmMax] {
            let t = run_bon(&c, 5, rule, &mut r).unwrap();
            assert!(t.success);
            assert_eq!((t.steps_generated, t.model_calls), (5, 5));
        }
    }

    #[test]
    fn beam_rejects_k_below_b() {
        let c = cfg(ones(2), 2);
        assert!(matches!(run_beam(&c, 1, 2, &mut rng()), Err(SimError::Config(_))));
    }

    #[test]
    fn beam_with_certain_steps() {
        let c = cfg(ones(2), 2);
        let t = run_beam(&c, 4, 2, &mut rng()).unwrap();
        assert!(t.success);
        assert_eq!(t.steps_generated, 8);
    }

    #[test]
    fn worst_case_tree_counts() {
        let c = cfg(ones(1), 1);
        let t = run_mcts_envelope(&c, 3, CostCase::Worst, &mut rng()).unwrap();
        assert!(t.success);
        assert_eq!(t.steps_generated, 3);
        assert_eq!(complete_tree_steps(2, 3), 14);
        let deep = cfg(DecayModel::exponential(1.0).unwrap(), 21);
        assert!(matches!(
            run_mcts_envelope(&deep, 2, CostCase::Worst, &mut rng()),
            Err(SimError::NodeBudget { .. })
        ));
    }

    #[test]
    fn lookahead_with_certain_steps() {
        let c = cfg(ones(10), 3);
        for gamma in 0..=7 {
            let t = run_lookahead(&c, 2, gamma, true, &mut rng()).unwrap();
            assert!(t.success);
            assert_eq!(t.steps_generated, 3 * 2 * (1 + gamma as u64));
        }
        let t = run_lookahead(&c, 2, 4, false, &mut rng()).unwrap();
        assert_eq!(t.steps_generated, 6);
        assert!(run_lookahead(&c, 2, 8, true, &mut rng()).is_err());
    }

    #[test]
    fn parametric_keep_semantics() {
        let mut r = rng();
        let kept = keep_nodes(&SelectorModel::Ideal, 3, &[false, true, false], 2, &mut r);
        assert_eq!(kept, vec![true, false]);
        let never = SelectorModel::constant(0.0).unwrap();
        assert_eq!(keep_nodes(&never, 3, &[true, true, true], 2, &mut r), vec![false, false]);
        assert_eq!(keep_nodes(&SelectorModel::Ideal, 2, &[false, false], 2, &mut r), vec![false, false]);
    }

    #[test]
    fn wilson_interval_edges() {
        let (lo, hi) = wilson_interval(100, 100);
        assert!(lo > 0.96 && hi == 1.0);
        let (lo, hi) = wilson_interval(0, 1);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.7);
        let (lo, hi) = wilson_interval(1, 1);
        assert!(lo < 0.3);
        assert_eq!(hi, 1.0);
    }

    #[test]
    fn verify_bounds_examples() {
        let mk = |estimate: f64, lo: f64, hi: f64| MonteCarloReport {
            trials: 1000,
            successes: 0,
            estimate,
            ci_low: lo,
            ci_high: hi,
            mean_steps: 0.0,
            mean_calls: 0.0,
            seed: 0,
        };
        assert_eq!(verify_bounds(&mk(0.04, 0.038, 0.042), 0.0498), Verdict::Pass);
        assert_eq!(verify_bounds(&mk(0.9, 0.89, 0.91), 0.5), Verdict::Fail);
        assert_eq!(verify_bounds(&mk(1.0, 0.99, 1.0), 1.0), Verdict::Pass);
    }

    #[test]
    fn monte_carlo_single_trial_and_certain_config() {
        let c = cfg(ones(2), 2);
        let rep = monte_carlo(&c, &StrategySpec::SinglePath, 1, 5).unwrap();
        assert_eq!(rep.estimate, 1.0);
        let rep = monte_carlo(&c, &StrategySpec::SinglePath, 100, 5).unwrap();
        assert_eq!(rep.estimate, 1.0);
        assert!(rep.ci_low > 0.96);
        let half = cfg(DecayModel::tabulated(vec![0.5]).unwrap(), 1);
        let rep = monte_carlo(&half, &StrategySpec::SinglePath, 1, 5).unwrap();
        assert!(rep.estimate == 0.0 || rep.estimate == 1.0);
        assert!(rep.ci_low <= rep.estimate && rep.estimate <= rep.ci_high);
    }

    #[test]
    fn monte_carlo_rejects_bad_inputs() {
        let c = cfg(DecayModel::tabulated(vec![0.5, 0.7]).unwrap(), 2);
        assert!(matches!(
            monte_carlo(&c, &StrategySpec::SinglePath, 10, 0),
            Err(SimError::NonMonotoneDecay(_))
        ));
        let short = cfg(ones(2), 3);
        assert!(monte_carlo(&short, &StrategySpec::SinglePath, 10, 0).is_err());
        let ok = cfg(ones(2), 2);
        assert!(monte_carlo(&ok, &StrategySpec::SinglePath, 0, 0).is_err());
    }

    #[test]
    fn expansion_events_shapes() {
        let worst = expansion_events(&StrategySpec::MctsWorst { b: 2 }, 3);
        assert_eq!(worst.len(), 7);
        assert!(worst.iter().all(|&(_, c)| c == 2));
        let best = expansion_events(&StrategySpec::MctsBest { b: 3 }, 4);
        assert_eq!(best, vec![(0, 3), (1, 3), (2, 3), (3, 3)]);
        let beam = expansion_events(&StrategySpec::Beam { k: 5, b: 2 }, 2);
        assert_eq!(beam, vec![(0, 5), (1, 3), (1, 2)]);
        let bon = expansion_events(&StrategySpec::Bon { n: 3, rule: SelectionRule::OrmMax }, 2);
        assert_eq!(bon.iter().map(|e| e.1).sum::<u64>(), 6);
    }

    #[test]
    fn strategy_labels() {
        assert_eq!(StrategySpec::Beam { k: 4, b: 2 }.to_string(), "beam(k=4,b=2)");
        assert_eq!(
            StrategySpec::Bon { n: 8, rule: SelectionRule::OrmVote }.to_string(),
            "bon(n=8,rule=orm_vote)"
        );
        assert_eq!("sc".parse::<SelectionRule>().unwrap(), SelectionRule::SelfConsistency);
        assert_eq!("orm-max".parse::<SelectionRule>().unwrap(), SelectionRule::OrmMax);
    }
}
