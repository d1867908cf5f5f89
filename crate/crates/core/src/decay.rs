//! Step-correctness decay laws, selector reliability models and the answer
//! model used by the voting strategies.
//!
//! A [`DecayModel`] gives the probability that the step at layer `l` is
//! τ-correct given a τ-correct prefix. The exponential law is
//! `min(λ_τ·e^{-l}, 1)`; the tabulated law is any explicit sequence of
//! probabilities and stands in for the relaxed monotone form `ξ(l, τ)`.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Monte Carlo sample count behind every `NoisyScore` success probability.
pub const NOISY_SCORE_SAMPLES: usize = 100_000;

/// Fixed seed for the `NoisyScore` estimator, so cached values are reproducible.
const NOISY_SCORE_SEED: u64 = 0x5e1e_c7ed_5c0e_0001;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecayError {
    #[error("lambda_tau must be positive and finite, got {0}")]
    NonPositiveLambda(f64),
    #[error("lambda_delta must be positive and finite, got {0}")]
    NonPositiveLambdaDelta(f64),
    #[error("table entry {index} = {value} is outside [0, 1]")]
    TableValueOutOfRange { index: usize, value: f64 },
    #[error("tabulated decay model needs at least one entry")]
    EmptyTable,
    #[error("layer {layer} is outside the model domain 1..={max}")]
    LayerOutOfRange { layer: usize, max: usize },
    #[error("epsilon must lie in [0, 1], got {0}")]
    EpsilonOutOfRange(f64),
    #[error("noise_std must be nonnegative and finite, got {0}")]
    NegativeNoise(f64),
    #[error("margin must be positive and finite, got {0}")]
    NonPositiveMargin(f64),
    #[error("answer space size must be at least 1")]
    EmptyAnswerSpace,
}

/// Per-layer probability law for generating a τ-correct step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecayModel {
    Exponential {
        lambda_tau: f64,
        #[serde(default)]
        tau_label: String,
    },
    Tabulated {
        table: Vec<f64>,
        #[serde(default)]
        tau_label: String,
    },
}

/// Position of the first monotonicity break in a tabulated model.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayViolation {
    /// 1-based layer whose value exceeds its predecessor.
    pub layer: usize,
    pub previous: f64,
    pub value: f64,
}

impl fmt::Display for DecayViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "decay increases at layer {}: {} -> {}",
            self.layer, self.previous, self.value
        )
    }
}

impl DecayModel {
    pub fn exponential(lambda_tau: f64) -> Result<Self, DecayError> {
        let model = DecayModel::Exponential {
            lambda_tau,
            tau_label: String::new(),
        };
        model.check()?;
        Ok(model)
    }

    /// Builds a tabulated model. Entries must lie in `[0, 1]`; monotonicity
    /// is checked separately by [`DecayModel::validate`].
    pub fn tabulated(table: Vec<f64>) -> Result<Self, DecayError> {
        let model = DecayModel::Tabulated {
            table,
            tau_label: String::new(),
        };
        model.check()?;
        Ok(model)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        match &mut self {
            DecayModel::Exponential { tau_label, .. } | DecayModel::Tabulated { tau_label, .. } => {
                *tau_label = label.into()
            }
        }
        self
    }

    pub fn tau_label(&self) -> &str {
        match self {
            DecayModel::Exponential { tau_label, .. } | DecayModel::Tabulated { tau_label, .. } => {
                tau_label
            }
        }
    }

    /// Field-level invariants (used after deserialization as well).
    pub fn check(&self) -> Result<(), DecayError> {
        match self {
            DecayModel::Exponential { lambda_tau, .. } => {
                if !(lambda_tau.is_finite() && *lambda_tau > 0.0) {
                    return Err(DecayError::NonPositiveLambda(*lambda_tau));
                }
            }
            DecayModel::Tabulated { table, .. } => {
                if table.is_empty() {
                    return Err(DecayError::EmptyTable);
                }
                for (i, &v) in table.iter().enumerate() {
                    if !(0.0..=1.0).contains(&v) {
                        return Err(DecayError::TableValueOutOfRange {
                            index: i + 1,
                            value: v,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Largest layer index the model is defined on, `None` when unbounded.
    pub fn max_layer(&self) -> Option<usize> {
        match self {
            DecayModel::Exponential { .. } => None,
            DecayModel::Tabulated { table, .. } => Some(table.len()),
        }
    }

    /// `λ_τ` for exponential models.
    pub fn lambda_tau(&self) -> Option<f64> {
        match self {
            DecayModel::Exponential { lambda_tau, .. } => Some(*lambda_tau),
            DecayModel::Tabulated { .. } => None,
        }
    }

    /// Probability that step `layer` is τ-correct given a τ-correct prefix.
    pub fn step_correct_prob(&self, layer: usize) -> Result<f64, DecayError> {
        match self {
            DecayModel::Exponential { lambda_tau, .. } => {
                self.log_step_correct_prob(layer)?;
                Ok((lambda_tau * (-(layer as f64)).exp()).min(1.0))
            }
            DecayModel::Tabulated { table, .. } => {
                self.log_step_correct_prob(layer)?;
                Ok(table[layer - 1])
            }
        }
    }

    /// Natural log of [`DecayModel::step_correct_prob`]; `-inf` for zero.
    pub fn log_step_correct_prob(&self, layer: usize) -> Result<f64, DecayError> {
        match self {
            DecayModel::Exponential { lambda_tau, .. } => {
                if layer == 0 {
                    return Err(DecayError::LayerOutOfRange {
                        layer,
                        max: usize::MAX,
                    });
                }
                Ok((lambda_tau.ln() - layer as f64).min(0.0))
            }
            DecayModel::Tabulated { table, .. } => {
                if layer == 0 || layer > table.len() {
                    return Err(DecayError::LayerOutOfRange {
                        layer,
                        max: table.len(),
                    });
                }
                Ok(table[layer - 1].ln())
            }
        }
    }

    /// Checks that the evaluated sequence is nonincreasing over the domain.
    pub fn validate(&self) -> Result<(), DecayViolation> {
        match self {
            // λ e^{-l} is strictly decreasing and the clip at 1 preserves that.
            DecayModel::Exponential { .. } => Ok(()),
            DecayModel::Tabulated { table, .. } => {
                for (i, pair) in table.windows(2).enumerate() {
                    if pair[1] > pair[0] {
                        return Err(DecayViolation {
                            layer: i + 2,
                            previous: pair[0],
                            value: pair[1],
                        });
                    }
                }
                Ok(())
            }
        }
    }
}

/// Wrongness law: a step at layer `l` is δ-wrong with probability
/// `max(1 − λ_δ·e^{-l}, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WrongModel {
    pub lambda_delta: f64,
    #[serde(default)]
    pub delta_label: String,
}

impl WrongModel {
    pub fn new(lambda_delta: f64) -> Result<Self, DecayError> {
        let model = WrongModel {
            lambda_delta,
            delta_label: String::new(),
        };
        model.check()?;
        Ok(model)
    }

    pub fn check(&self) -> Result<(), DecayError> {
        if self.lambda_delta.is_finite() && self.lambda_delta > 0.0 {
            Ok(())
        } else {
            Err(DecayError::NonPositiveLambdaDelta(self.lambda_delta))
        }
    }

    /// Probability that a step evaluated at (possibly fractional) depth is δ-wrong.
    pub fn wrong_prob(&self, depth: f64) -> f64 {
        (1.0 - self.lambda_delta * (-depth).exp()).clamp(0.0, 1.0)
    }
}

/// Reliability of the value function that picks among candidates.
///
/// `ε_b` is read as conditional on at least one τ-correct candidate being
/// present among the `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SelectorModel {
    Ideal,
    Constant { epsilon: f64 },
    NoisyScore { noise_std: f64, margin: f64 },
}

impl SelectorModel {
    pub fn constant(epsilon: f64) -> Result<Self, DecayError> {
        let s = SelectorModel::Constant { epsilon };
        s.check()?;
        Ok(s)
    }

    pub fn noisy_score(noise_std: f64, margin: f64) -> Result<Self, DecayError> {
        let s = SelectorModel::NoisyScore { noise_std, margin };
        s.check()?;
        Ok(s)
    }

    pub fn check(&self) -> Result<(), DecayError> {
        match *self {
            SelectorModel::Ideal => Ok(()),
            SelectorModel::Constant { epsilon } => {
                if (0.0..=1.0).contains(&epsilon) {
                    Ok(())
                } else {
                    Err(DecayError::EpsilonOutOfRange(epsilon))
                }
            }
            SelectorModel::NoisyScore { noise_std, margin } => {
                if !(noise_std.is_finite() && noise_std >= 0.0) {
                    Err(DecayError::NegativeNoise(noise_std))
                } else if !(margin.is_finite() && margin > 0.0) {
                    Err(DecayError::NonPositiveMargin(margin))
                } else {
                    Ok(())
                }
            }
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            SelectorModel::Ideal => "ideal",
            SelectorModel::Constant { .. } => "constant",
            SelectorModel::NoisyScore { .. } => "noisy_score",
        }
    }

    pub fn is_ideal(&self) -> bool {
        matches!(self, SelectorModel::Ideal)
    }

    /// `ε_b`: probability that a τ-correct candidate is selected out of `b`.
    ///
    /// For `NoisyScore` this is the chance that one candidate scored
    /// `margin + noise` beats `b − 1` candidates scored `noise`, estimated
    /// with [`NOISY_SCORE_SAMPLES`] seeded draws and memoized.
    pub fn success_prob(&self, b: u64) -> f64 {
        let b = b.max(1);
        match *self {
            SelectorModel::Ideal => 1.0,
            SelectorModel::Constant { epsilon } => epsilon,
            SelectorModel::NoisyScore { noise_std, margin } => {
                noisy_score_success(noise_std, margin, b)
            }
        }
    }
}

type NoisyKey = (u64, u64, u64);

fn noisy_cache() -> &'static Mutex<HashMap<NoisyKey, f64>> {
    static CACHE: OnceLock<Mutex<HashMap<NoisyKey, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn noisy_score_success(noise_std: f64, margin: f64, b: u64) -> f64 {
    if b == 1 || noise_std == 0.0 {
        return 1.0;
    }
    let key = (noise_std.to_bits(), margin.to_bits(), b);
    if let Some(&p) = noisy_cache().lock().expect("cache poisoned").get(&key) {
        return p;
    }
    let p = estimate_noisy_score(margin / noise_std, b);
    noisy_cache()
        .lock()
        .expect("cache poisoned")
        .insert(key, p);
    p
}

/// Each sample draws the correct candidate's standardized noise `z` and a
/// uniform `u` standing for the maximum of the `b − 1` competitors: the
/// correct candidate wins iff `u < Φ(z + margin/σ)^{b−1}`. The same draws are
/// reused for every `b`, so the estimate is exactly nonincreasing in `b`.
fn estimate_noisy_score(standardized_margin: f64, b: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(NOISY_SCORE_SEED);
    let competitors = (b - 1) as f64;
    let mut wins = 0usize;
    for _ in 0..NOISY_SCORE_SAMPLES {
        let z: f64 = rng.sample(StandardNormal);
        let u: f64 = rng.random();
        let log_beat_one = std_normal_cdf(z + standardized_margin).ln();
        if u.ln() < competitors * log_beat_one {
            wins += 1;
        }
    }
    wins as f64 / NOISY_SCORE_SAMPLES as f64
}

pub(crate) fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Label model for voting strategies: correct paths answer label 0, incorrect
/// paths answer uniformly over `1..=answer_space_size`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerModel {
    pub answer_space_size: u32,
}

impl AnswerModel {
    pub fn new(answer_space_size: u32) -> Result<Self, DecayError> {
        let m = AnswerModel { answer_space_size };
        m.check()?;
        Ok(m)
    }

    pub fn check(&self) -> Result<(), DecayError> {
        if self.answer_space_size >= 1 {
            Ok(())
        } else {
            Err(DecayError::EmptyAnswerSpace)
        }
    }
}

impl Default for AnswerModel {
    fn default() -> Self {
        AnswerModel {
            answer_space_size: 1,
        }
    }
}
