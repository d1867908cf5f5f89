//! Closed-form correctness bounds and cost formulas for search strategies.
//!
//! Every product is accumulated as a sum of logarithms: the factor
//! `e^{-L(L+1)/2}` underflows `f64` near `L ≈ 38`. Simplified bounds are
//! returned unclipped and may exceed 1; [`BoundValue::is_vacuous`] flags that.
//!
//! Tabulated decay models evaluate the same formulas with `Π ξ(l)` in place
//! of `λ_τ^L e^{-L(L+1)/2}` (the relaxed forms).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decay::{DecayError, DecayModel, SelectorModel, WrongModel};

/// Largest candidate pool a `NoisyScore` selector is evaluated on.
pub const MAX_NOISY_CANDIDATES: u64 = 1_000_000;

/// Bisection tolerance on `ln N` for [`n_min`].
pub const N_MIN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error(transparent)]
    Decay(#[from] DecayError),
    #[error("{name} must be at least 1")]
    ZeroCount { name: &'static str },
    #[error(
        "lambda_tau = {lambda_tau} clips at layer 1 (lambda_tau * e^-1 > 1); use the exact width-expansion form"
    )]
    ClippingRegime { lambda_tau: f64 },
    #[error("candidate count {base}^{exponent} exceeds the NoisyScore limit of {MAX_NOISY_CANDIDATES}")]
    CandidateOverflow { base: u64, exponent: u32 },
    #[error("layer {layer} is below ln(lambda_tau) = {min}")]
    BelowClipLayer { layer: f64, min: f64 },
    #[error("{0}")]
    Precondition(String),
}

/// A bound held in log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    pub log_value: f64,
}

impl BoundValue {
    pub fn from_log(log_value: f64) -> Self {
        BoundValue { log_value }
    }

    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }

    /// True when the bound is at least 1 and therefore says nothing.
    pub fn is_vacuous(&self) -> bool {
        self.log_value >= 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostCase {
    Best,
    Worst,
}

impl std::fmt::Display for CostCase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CostCase::Best => "best",
            CostCase::Worst => "worst",
        })
    }
}

impl std::str::FromStr for CostCase {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "best" => Ok(CostCase::Best),
            "worst" => Ok(CostCase::Worst),
            other => Err(format!("unknown case `{other}` (expected best or worst)")),
        }
    }
}

/// Step-count cost of BoN and MCTS for one envelope case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostEntry {
    pub case: CostCase,
    pub bon_cost: f64,
    pub mcts_cost: f64,
}

/// Parameters shared by the bound formulas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundInput {
    pub decay: DecayModel,
    pub selector: SelectorModel,
    pub path_length: usize,
    /// Samples per layer for width expansion.
    pub k: u64,
    /// Retained candidates per layer, or MCTS branching factor.
    pub b: u64,
    /// BoN path count.
    pub n: u64,
}

/// Which closed form to evaluate on a [`BoundInput`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    SinglePath,
    WidthExact,
    WidthSimplified,
    Bon,
    MctsBest,
    MctsBestExact,
    MctsWorst,
    MctsWorstExact,
}

impl BoundKind {
    pub const ALL: [BoundKind; 8] = [
        BoundKind::SinglePath,
        BoundKind::WidthExact,
        BoundKind::WidthSimplified,
        BoundKind::Bon,
        BoundKind::MctsBest,
        BoundKind::MctsBestExact,
        BoundKind::MctsWorst,
        BoundKind::MctsWorstExact,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            BoundKind::SinglePath => "single",
            BoundKind::WidthExact => "beam_exact",
            BoundKind::WidthSimplified => "beam",
            BoundKind::Bon => "bon",
            BoundKind::MctsBest => "mcts_best",
            BoundKind::MctsBestExact => "mcts_best_exact",
            BoundKind::MctsWorst => "mcts_worst",
            BoundKind::MctsWorstExact => "mcts_worst_exact",
        }
    }
}

impl std::str::FromStr for BoundKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BoundKind::ALL
            .into_iter()
            .find(|k| k.name() == s.replace('-', "_"))
            .ok_or_else(|| format!("unknown bound `{s}`"))
    }
}

impl BoundInput {
    pub fn evaluate(&self, kind: BoundKind) -> Result<BoundValue, BoundsError> {
        let (d, s, l) = (&self.decay, &self.selector, self.path_length);
        match kind {
            BoundKind::SinglePath => single_path_bound(d, l),
            BoundKind::WidthExact => width_expansion_bound_exact(d, s, l, self.k, self.b),
            BoundKind::WidthSimplified => {
                width_expansion_bound_simplified(d, s, l, self.k, self.b)
            }
            BoundKind::Bon => bon_bound(d, s, l, self.n),
            BoundKind::MctsBest => mcts_best_bound(d, s, l, self.b),
            BoundKind::MctsBestExact => width_expansion_bound_exact(d, s, l, self.b, self.b),
            BoundKind::MctsWorst => mcts_worst_bound(d, s, l, self.b),
            BoundKind::MctsWorstExact => mcts_worst_bound_exact(d, s, l, self.b),
        }
    }
}

fn nonzero(value: u64, name: &'static str) -> Result<(), BoundsError> {
    if value == 0 {
        Err(BoundsError::ZeroCount { name })
    } else {
        Ok(())
    }
}

fn nonzero_len(path_length: usize) -> Result<(), BoundsError> {
    nonzero(path_length as u64, "path length L")
}

/// `Σ_{l=1..L} ln p(l)`.
fn log_path_product(decay: &DecayModel, path_length: usize) -> Result<f64, BoundsError> {
    nonzero_len(path_length)?;
    (1..=path_length)
        .map(|l| decay.log_step_correct_prob(l))
        .sum::<Result<f64, _>>()
        .map_err(Into::into)
}

/// The simplified forms assume `λ_τ e^{-l} ≤ 1` for every layer.
fn require_unclipped(decay: &DecayModel) -> Result<(), BoundsError> {
    if let Some(lambda_tau) = decay.lambda_tau() {
        if lambda_tau.ln() > 1.0 {
            return Err(BoundsError::ClippingRegime { lambda_tau });
        }
    }
    Ok(())
}

fn log_selector(selector: &SelectorModel, candidates: u64) -> f64 {
    selector.success_prob(candidates).ln()
}

/// `ln(1 − (1 − p)^k)` without cancellation.
fn log_at_least_one(p: f64, k: f64) -> f64 {
    if p >= 1.0 {
        return 0.0;
    }
    (-(k * (-p).ln_1p()).exp_m1()).ln()
}

/// Upper bound for a single sampled path: `Π p(l)`.
pub fn single_path_bound(decay: &DecayModel, path_length: usize) -> Result<BoundValue, BoundsError> {
    log_path_product(decay, path_length).map(BoundValue::from_log)
}

/// `Π_{l=1..L} ε_b · [1 − (1 − p(l))^k]`.
pub fn width_expansion_bound_exact(
    decay: &DecayModel,
    selector: &SelectorModel,
    path_length: usize,
    k: u64,
    b: u64,
) -> Result<BoundValue, BoundsError> {
    nonzero_len(path_length)?;
    nonzero(k, "k")?;
    nonzero(b, "b")?;
    let log_eps = log_selector(selector, b);
    let mut total = 0.0;
    for l in 1..=path_length {
        let p = decay.step_correct_prob(l)?;
        total += log_eps + log_at_least_one(p, k as f64);
    }
    Ok(BoundValue::from_log(total))
}

/// `ε_b^L k^L λ_τ^L e^{-L(L+1)/2}`; may exceed 1.
pub fn width_expansion_bound_simplified(
    decay: &DecayModel,
    selector: &SelectorModel,
    path_length: usize,
    k: u64,
    b: u64,
) -> Result<BoundValue, BoundsError> {
    require_unclipped(decay)?;
    nonzero(k, "k")?;
    nonzero(b, "b")?;
    let len = path_length as f64;
    let log = len * log_selector(selector, b)
        + len * (k as f64).ln()
        + log_path_product(decay, path_length)?;
    Ok(BoundValue::from_log(log))
}

/// `ε_N N^L λ_τ^L e^{-L(L+1)/2}`.
pub fn bon_bound(
    decay: &DecayModel,
    selector: &SelectorModel,
    path_length: usize,
    n: u64,
) -> Result<BoundValue, BoundsError> {
    require_unclipped(decay)?;
    nonzero(n, "N")?;
    let log = log_selector(selector, n) + log_bon_unscaled(decay, path_length, n as f64)?;
    Ok(BoundValue::from_log(log))
}

/// `L ln N + Σ ln p(l)`, with real-valued `N` for equality solving.
fn log_bon_unscaled(decay: &DecayModel, path_length: usize, n: f64) -> Result<f64, BoundsError> {
    Ok(path_length as f64 * n.ln() + log_path_product(decay, path_length)?)
}

/// Best-case MCTS: the simplified width-expansion bound with `k = b`.
pub fn mcts_best_bound(
    decay: &DecayModel,
    selector: &SelectorModel,
    path_length: usize,
    b: u64,
) -> Result<BoundValue, BoundsError> {
    width_expansion_bound_simplified(decay, selector, path_length, b, b)
}

fn layer_candidates(
    selector: &SelectorModel,
    b: u64,
    layer: usize,
) -> Result<Option<u64>, BoundsError> {
    let exponent = layer as u32;
    match b.checked_pow(exponent) {
        Some(c) if !matches!(selector, SelectorModel::NoisyScore { .. }) => Ok(Some(c)),
        Some(c) if c <= MAX_NOISY_CANDIDATES => Ok(Some(c)),
        // Ideal and Constant selectors do not depend on the pool size.
        None if !matches!(selector, SelectorModel::NoisyScore { .. }) => Ok(None),
        _ => Err(BoundsError::CandidateOverflow { base: b, exponent }),
    }
}

/// `Σ_{l=1..L} ln ε_{b^l}`, evaluated literally one factor per layer.
fn log_worst_selection(
    selector: &SelectorModel,
    path_length: usize,
    b: u64,
) -> Result<f64, BoundsError> {
    let mut total = 0.0;
    for l in 1..=path_length {
        total += match layer_candidates(selector, b, l)? {
            Some(c) => log_selector(selector, c),
            None => log_selector(selector, u64::MAX),
        };
    }
    Ok(total)
}

/// Worst-case MCTS: `λ_τ^L (e/b)^{-L(L+1)/2} Π_{l=1..L} ε_{b^l}`.
pub fn mcts_worst_bound(
    decay: &DecayModel,
    selector: &SelectorModel,
    path_length: usize,
    b: u64,
) -> Result<BoundValue, BoundsError> {
    require_unclipped(decay)?;
    nonzero(b, "b")?;
    let len = path_length as f64;
    let log = len * (len + 1.0) / 2.0 * (b as f64).ln()
        + log_path_product(decay, path_length)?
        + log_worst_selection(selector, path_length, b)?;
    Ok(BoundValue::from_log(log))
}

/// Worst-case MCTS before the `1 − (1 − p)^k ≤ kp` relaxation:
/// `Π_{l=1..L} ε_{b^l} [1 − (1 − p(l))^{b^l}]`.
pub fn mcts_worst_bound_exact(
    decay: &DecayModel,
    selector: &SelectorModel,
    path_length: usize,
    b: u64,
) -> Result<BoundValue, BoundsError> {
    nonzero_len(path_length)?;
    nonzero(b, "b")?;
    let mut total = log_worst_selection(selector, path_length, b)?;
    for l in 1..=path_length {
        let p = decay.step_correct_prob(l)?;
        let k = (b as f64).powi(l as i32);
        total += log_at_least_one(p, k);
    }
    Ok(BoundValue::from_log(total))
}

/// Smallest BoN path count whose bound matches the MCTS envelope bound,
/// solved by bisection on `ln N` with ideal selectors on both sides.
///
/// Under ideal selectors the solutions are `b` (best) and `b^{(L+1)/2}`
/// (worst); see [`n_min_closed_form`].
pub fn n_min(b: u64, path_length: usize, case: CostCase) -> Result<f64, BoundsError> {
    nonzero(b, "b")?;
    nonzero_len(path_length)?;
    // λ_τ cancels from both sides; any unclipped value works.
    let decay = DecayModel::exponential(1.0)?;
    let ideal = SelectorModel::Ideal;
    let target = match case {
        CostCase::Best => mcts_best_bound(&decay, &ideal, path_length, b)?,
        CostCase::Worst => mcts_worst_bound(&decay, &ideal, path_length, b)?,
    }
    .log_value;
    let gap = |log_n: f64| -> Result<f64, BoundsError> {
        Ok(log_bon_unscaled(&decay, path_length, log_n.exp())? - target)
    };

    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    if gap(lo)? >= 0.0 {
        return Ok(1.0);
    }
    while gap(hi)? < 0.0 {
        hi *= 2.0;
    }
    while hi - lo > N_MIN_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if gap(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

/// Closed-form solutions of the bound equalities under ideal selectors.
pub fn n_min_closed_form(b: u64, path_length: usize, case: CostCase) -> f64 {
    let b = b as f64;
    match case {
        CostCase::Best => b,
        CostCase::Worst => b.powf((path_length as f64 + 1.0) / 2.0),
    }
}

/// Step counts behind the asymptotic cost comparison of BoN and MCTS.
pub fn cost_table(b: u64, path_length: usize) -> [CostEntry; 2] {
    let (bf, len) = (b as f64, path_length as f64);
    [
        CostEntry {
            case: CostCase::Best,
            bon_cost: bf * len,
            mcts_cost: bf * len,
        },
        CostEntry {
            case: CostCase::Worst,
            bon_cost: len * bf.powf(len / 2.0),
            mcts_cost: bf.powf(len),
        },
    ]
}

/// Lower bound on the chance that a τ-correct and a δ-wrong step evaluated at
/// `layer` are distinguishable: `λ_τ e^{-l} − λ_τ λ_δ e^{-2l}`.
pub fn lookahead_distinguishability_bound(
    lambda_tau: f64,
    wrong: &WrongModel,
    layer: f64,
) -> Result<f64, BoundsError> {
    if !(lambda_tau.is_finite() && lambda_tau > 0.0) {
        return Err(DecayError::NonPositiveLambda(lambda_tau).into());
    }
    wrong.check()?;
    if layer < lambda_tau.ln() {
        return Err(BoundsError::BelowClipLayer {
            layer,
            min: lambda_tau.ln(),
        });
    }
    let decay = (-layer).exp();
    Ok(lambda_tau * decay - lambda_tau * wrong.lambda_delta * decay * decay)
}

/// Rollout depth maximizing the distinguishability bound at `layer`:
/// `max(ln(2λ_δ) − l, 0)`.
pub fn optimal_rollout(wrong: &WrongModel, layer: f64) -> f64 {
    ((2.0 * wrong.lambda_delta).ln() - layer).max(0.0)
}
