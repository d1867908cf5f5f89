//! Exact discrete information quantities for the snowball-error argument.
//!
//! All quantities are in nats. A [`FiniteJoint`] is the joint law of the
//! hidden thought `t_l` and the emitted step `r_l` for one layer; a
//! [`ChannelSequence`] stacks one joint per layer.

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

/// Mass tolerance when validating distributions.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Slack allowed when comparing the two sides of an inequality.
pub const COMPARISON_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InfoError {
    #[error("support sizes must be at least 2, got {t_size}x{r_size}")]
    SupportTooSmall { t_size: usize, r_size: usize },
    #[error("expected {expected} probabilities, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },
    #[error("probability at position {index} is negative or not finite: {value}")]
    InvalidEntry { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, not 1 within {MASS_TOLERANCE}")]
    MassMismatch { sum: f64 },
    #[error("{axis} symbol {index} has zero marginal probability; remove it from the support")]
    ZeroMarginal { axis: &'static str, index: usize },
    #[error("distribution is empty")]
    Empty,
    #[error("channel sequence needs at least one layer")]
    EmptySequence,
    #[error("layer {l} is outside {min}..={max}")]
    LayerOutOfRange { l: usize, min: usize, max: usize },
    #[error("rows have unequal lengths")]
    RaggedRows,
}

fn check_mass(values: &[f64]) -> Result<f64, InfoError> {
    let mut sum = 0.0;
    for (index, &value) in values.iter().enumerate() {
        if !(value.is_finite() && value >= 0.0) {
            return Err(InfoError::InvalidEntry { index, value });
        }
        sum += value;
    }
    if (sum - 1.0).abs() > MASS_TOLERANCE {
        return Err(InfoError::MassMismatch { sum });
    }
    Ok(sum)
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

/// Shannon entropy `−Σ p ln p`, with `0 ln 0 = 0`.
pub fn entropy(dist: &[f64]) -> Result<f64, InfoError> {
    if dist.is_empty() {
        return Err(InfoError::Empty);
    }
    check_mass(dist)?;
    Ok(entropy_unchecked(dist))
}

fn entropy_unchecked(dist: &[f64]) -> f64 {
    (-dist.iter().map(|&p| plogp(p)).sum::<f64>()).max(0.0)
}

/// Binary entropy `H_b(p)` in nats.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -(plogp(p) + plogp(1.0 - p))
    }
}

/// Joint law `p(t, r)` over finite supports, stored row-major by `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteJoint {
    t_size: usize,
    r_size: usize,
    probs: Vec<f64>,
}

impl FiniteJoint {
    /// Validates to [`MASS_TOLERANCE`] and renormalizes once.
    pub fn new(t_size: usize, r_size: usize, probs: Vec<f64>) -> Result<Self, InfoError> {
        if t_size < 2 || r_size < 2 {
            return Err(InfoError::SupportTooSmall { t_size, r_size });
        }
        if probs.len() != t_size * r_size {
            return Err(InfoError::ShapeMismatch {
                expected: t_size * r_size,
                actual: probs.len(),
            });
        }
        let sum = check_mass(&probs)?;
        let probs: Vec<f64> = probs.into_iter().map(|p| p / sum).collect();
        let joint = FiniteJoint {
            t_size,
            r_size,
            probs,
        };
        if let Some(index) = joint.t_marginal().iter().position(|&p| p <= 0.0) {
            return Err(InfoError::ZeroMarginal { axis: "t", index });
        }
        if let Some(index) = joint.r_marginal().iter().position(|&p| p <= 0.0) {
            return Err(InfoError::ZeroMarginal { axis: "r", index });
        }
        Ok(joint)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, InfoError> {
        let r_size = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != r_size) {
            return Err(InfoError::RaggedRows);
        }
        FiniteJoint::new(rows.len(), r_size, rows.concat())
    }

    /// Draws a joint uniformly from the simplex (Dirichlet with unit weights).
    pub fn random<R: Rng + ?Sized>(t_size: usize, r_size: usize, rng: &mut R) -> Self {
        assert!(t_size >= 2 && r_size >= 2, "support sizes must be at least 2");
        let draws: Vec<f64> = (0..t_size * r_size)
            .map(|_| rng.sample::<f64, _>(Exp1).max(f64::MIN_POSITIVE))
            .collect();
        let total: f64 = draws.iter().sum();
        FiniteJoint {
            t_size,
            r_size,
            probs: draws.into_iter().map(|d| d / total).collect(),
        }
    }

    /// Perfect channel `t = r`, uniform over `size` symbols.
    pub fn perfect(size: usize) -> Result<Self, InfoError> {
        let mut probs = vec![0.0; size * size];
        for i in 0..size {
            probs[i * size + i] = 1.0 / size as f64;
        }
        FiniteJoint::new(size, size, probs)
    }

    /// Product of two marginals.
    pub fn independent(t: &[f64], r: &[f64]) -> Result<Self, InfoError> {
        let probs = t
            .iter()
            .flat_map(|&pt| r.iter().map(move |&pr| pt * pr))
            .collect();
        FiniteJoint::new(t.len(), r.len(), probs)
    }

    pub fn t_size(&self) -> usize {
        self.t_size
    }

    pub fn r_size(&self) -> usize {
        self.r_size
    }

    pub fn p(&self, t: usize, r: usize) -> f64 {
        self.probs[t * self.r_size + r]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn t_marginal(&self) -> Vec<f64> {
        self.probs.chunks(self.r_size).map(|row| row.iter().sum()).collect()
    }

    pub fn r_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.r_size];
        for row in self.probs.chunks(self.r_size) {
            for (acc, &p) in out.iter_mut().zip(row) {
                *acc += p;
            }
        }
        out
    }

    /// `H(t)`.
    pub fn t_entropy(&self) -> f64 {
        entropy_unchecked(&self.t_marginal())
    }

    /// `H(t | r)`: the information loss of this layer.
    pub fn conditional_entropy(&self) -> f64 {
        let pr = self.r_marginal();
        let mut h = 0.0;
        for t in 0..self.t_size {
            for (r, &p_r) in pr.iter().enumerate() {
                let p = self.p(t, r);
                if p > 0.0 {
                    h -= p * (p / p_r).ln();
                }
            }
        }
        h.max(0.0)
    }

    /// `I(t; r)`.
    pub fn mutual_information(&self) -> f64 {
        let (pt, pr) = (self.t_marginal(), self.r_marginal());
        let mut i = 0.0;
        for (t, &p_t) in pt.iter().enumerate() {
            for (r, &p_r) in pr.iter().enumerate() {
                let p = self.p(t, r);
                if p > 0.0 {
                    i += p * (p / (p_t * p_r)).ln();
                }
            }
        }
        i.max(0.0)
    }

    /// Error of the maximum-a-posteriori decoder `r ↦ argmax_t p(t, r)`,
    /// the smallest `P(t̂ ≠ t)` any decoder achieves.
    pub fn map_decoder_error(&self) -> f64 {
        let hit: f64 = (0..self.r_size)
            .map(|r| {
                (0..self.t_size)
                    .map(|t| self.p(t, r))
                    .fold(0.0_f64, f64::max)
            })
            .sum();
        (1.0 - hit).clamp(0.0, 1.0)
    }
}

pub fn conditional_entropy(joint: &FiniteJoint) -> f64 {
    joint.conditional_entropy()
}

pub fn mutual_information(joint: &FiniteJoint) -> f64 {
    joint.mutual_information()
}

pub fn map_decoder_error(joint: &FiniteJoint) -> f64 {
    joint.map_decoder_error()
}

/// One joint per reasoning layer, `l = 1..=L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSequence {
    layers: Vec<FiniteJoint>,
}

impl ChannelSequence {
    pub fn new(layers: Vec<FiniteJoint>) -> Result<Self, InfoError> {
        if layers.is_empty() {
            return Err(InfoError::EmptySequence);
        }
        Ok(ChannelSequence { layers })
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn layers(&self) -> &[FiniteJoint] {
        &self.layers
    }

    /// 1-based layer access.
    pub fn layer(&self, l: usize) -> Result<&FiniteJoint, InfoError> {
        if l == 0 || l > self.layers.len() {
            return Err(InfoError::LayerOutOfRange {
                l,
                min: 1,
                max: self.layers.len(),
            });
        }
        Ok(&self.layers[l - 1])
    }

    /// Mutual information is nonincreasing over layers `1..=l`.
    pub fn mi_nonincreasing_through(&self, l: usize) -> bool {
        let mi: Vec<f64> = self.layers[..l.min(self.layers.len())]
            .iter()
            .map(FiniteJoint::mutual_information)
            .collect();
        mi.windows(2).all(|w| w[1] <= w[0])
    }

    /// `H(t_l)` is at least the mean of the earlier `H(t_i)`.
    pub fn entropy_growth_at(&self, l: usize) -> bool {
        if l < 2 || l > self.layers.len() {
            return false;
        }
        let earlier: f64 = self.layers[..l - 1].iter().map(FiniteJoint::t_entropy).sum();
        self.layers[l - 1].t_entropy() >= earlier / (l - 1) as f64
    }
}

/// Snowball error `H_{<l}(t|r) = Σ_{i<l} H(t_i | r_i)`, for `2 ≤ l ≤ L+1`.
pub fn snowball(seq: &ChannelSequence, l: usize) -> Result<f64, InfoError> {
    if l < 2 || l > seq.len() + 1 {
        return Err(InfoError::LayerOutOfRange {
            l,
            min: 2,
            max: seq.len() + 1,
        });
    }
    Ok(seq.layers[..l - 1]
        .iter()
        .map(FiniteJoint::conditional_entropy)
        .sum())
}

fn require_comparison_layer(seq: &ChannelSequence, l: usize) -> Result<(), InfoError> {
    if l < 2 || l > seq.len() {
        return Err(InfoError::LayerOutOfRange {
            l,
            min: 2,
            max: seq.len(),
        });
    }
    Ok(())
}

/// Outcome of checking `H(t_l | r_l) ≥ H_{<l}(t|r) / (l − 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoLossReport {
    pub l: usize,
    /// Mutual information nonincreasing over layers `1..=l`.
    pub mi_nonincreasing: bool,
    /// `H(t_l)` at least the mean of the earlier thought entropies.
    pub entropy_growth: bool,
    /// `H(t_l | r_l)`.
    pub lhs: f64,
    /// `H_{<l} / (l − 1)`.
    pub rhs: f64,
    pub inequality_holds: bool,
}

impl InfoLossReport {
    pub fn assumptions_met(&self) -> bool {
        self.mi_nonincreasing && self.entropy_growth
    }

    /// `None` when the assumptions fail and nothing is claimed.
    pub fn claim(&self) -> Option<bool> {
        self.assumptions_met().then_some(self.inequality_holds)
    }
}

pub fn check_info_loss_inequality(
    seq: &ChannelSequence,
    l: usize,
) -> Result<InfoLossReport, InfoError> {
    require_comparison_layer(seq, l)?;
    let lhs = seq.layers[l - 1].conditional_entropy();
    let rhs = snowball(seq, l)? / (l - 1) as f64;
    Ok(InfoLossReport {
        l,
        mi_nonincreasing: seq.mi_nonincreasing_through(l),
        entropy_growth: seq.entropy_growth_at(l),
        lhs,
        rhs,
        inequality_holds: lhs + COMPARISON_SLACK >= rhs,
    })
}

/// Exact MAP error at layer `l` against the Fano-style lower bound
/// `[H_{<l}/(l−1) − H_b(e_l)] / ln(|T_l| − 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FanoReport {
    pub l: usize,
    pub t_support: usize,
    /// `P(e_l)` of the MAP decoder.
    pub lhs: f64,
    /// `None` when `|T_l| = 2` and the bound is undefined.
    pub rhs: Option<f64>,
    pub h_b: f64,
    pub mi_nonincreasing: bool,
    pub entropy_growth: bool,
    pub assumption_holds: bool,
}

impl FanoReport {
    /// Whether `lhs ≥ rhs`; `None` for an undefined bound.
    pub fn bound_satisfied(&self) -> Option<bool> {
        self.rhs.map(|rhs| self.lhs + COMPARISON_SLACK >= rhs)
    }

    /// A violation is a failed bound on an instance meeting the assumptions.
    pub fn is_violation(&self) -> bool {
        self.assumption_holds && self.bound_satisfied() == Some(false)
    }
}

pub fn fano_check(seq: &ChannelSequence, l: usize) -> Result<FanoReport, InfoError> {
    require_comparison_layer(seq, l)?;
    let layer = &seq.layers[l - 1];
    let lhs = layer.map_decoder_error();
    let h_b = binary_entropy(lhs);
    let t_support = layer.t_size();
    let rhs = if t_support > 2 {
        let mean_loss = snowball(seq, l)? / (l - 1) as f64;
        Some((mean_loss - h_b) / ((t_support - 1) as f64).ln())
    } else {
        None
    };
    let mi_nonincreasing = seq.mi_nonincreasing_through(l);
    let entropy_growth = seq.entropy_growth_at(l);
    Ok(FanoReport {
        l,
        t_support,
        lhs,
        rhs,
        h_b,
        mi_nonincreasing,
        entropy_growth,
        assumption_holds: mi_nonincreasing && entropy_growth,
    })
}

/// Random-instance driver for the Fano check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FanoSuiteConfig {
    /// Number of admissible instances to collect.
    pub instances: usize,
    pub min_support: usize,
    pub max_support: usize,
    pub max_len: usize,
    pub seed: u64,
    /// Upper limit on generated sequences before giving up.
    pub max_generated: usize,
}

impl Default for FanoSuiteConfig {
    fn default() -> Self {
        FanoSuiteConfig {
            instances: 1000,
            min_support: 3,
            max_support: 6,
            max_len: 8,
            seed: 0,
            max_generated: 2_000_000,
        }
    }
}

impl FanoSuiteConfig {
    pub fn check(&self) -> Result<(), String> {
        if self.min_support < 3 {
            return Err("min_support must be at least 3 for a defined bound".into());
        }
        if self.max_support < self.min_support {
            return Err("max_support must be at least min_support".into());
        }
        if self.max_len < 2 {
            return Err("max_len must be at least 2".into());
        }
        if self.instances == 0 {
            return Err("instances must be positive".into());
        }
        Ok(())
    }
}

/// One generated instance, evaluated at its last layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FanoSuiteRow {
    pub instance: u64,
    pub len: usize,
    pub report: FanoReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FanoSuiteResult {
    /// Admissible instances in generation order.
    pub rows: Vec<FanoSuiteRow>,
    pub generated: usize,
    pub violations: usize,
    /// Instances meeting only the mutual-information condition.
    pub mi_only_instances: usize,
    /// Bound failures among `mi_only_instances`.
    pub mi_only_failures: usize,
}

impl FanoSuiteResult {
    pub fn passed(&self, wanted: usize) -> bool {
        self.violations == 0 && self.rows.len() >= wanted
    }
}

/// Random sequence number `index` under the suite seed.
pub fn random_sequence(cfg: &FanoSuiteConfig, index: u64) -> ChannelSequence {
    let mut rng = rng::stream(cfg.seed, index);
    let len = rng.random_range(2..=cfg.max_len);
    let layers = (0..len)
        .map(|_| {
            let t = rng.random_range(cfg.min_support..=cfg.max_support);
            let r = rng.random_range(cfg.min_support..=cfg.max_support);
            FiniteJoint::random(t, r, &mut rng)
        })
        .collect();
    ChannelSequence { layers }
}

/// Generates sequences until `cfg.instances` satisfy both assumptions (MI
/// nonincreasing and thought-entropy growth) at their last layer, and
/// checks the Fano bound on each.
pub fn run_fano_suite(cfg: &FanoSuiteConfig) -> Result<FanoSuiteResult, String> {
    cfg.check()?;
    const CHUNK: usize = 8192;
    let mut result = FanoSuiteResult {
        rows: Vec::with_capacity(cfg.instances),
        generated: 0,
        violations: 0,
        mi_only_instances: 0,
        mi_only_failures: 0,
    };
    while result.rows.len() < cfg.instances && result.generated < cfg.max_generated {
        let start = result.generated as u64;
        let end = (result.generated + CHUNK).min(cfg.max_generated) as u64;
        let batch: Vec<FanoSuiteRow> = (start..end)
            .into_par_iter()
            .map(|index| {
                let seq = random_sequence(cfg, index);
                let len = seq.len();
                let report = fano_check(&seq, len).expect("generated layer in range");
                FanoSuiteRow {
                    instance: index,
                    len,
                    report,
                }
            })
            .collect();
        for row in batch {
            if result.rows.len() >= cfg.instances {
                break;
            }
            result.generated += 1;
            if row.report.mi_nonincreasing {
                result.mi_only_instances += 1;
                if row.report.bound_satisfied() == Some(false) {
                    result.mi_only_failures += 1;
                }
            }
            if row.report.assumption_holds {
                if row.report.is_violation() {
                    result.violations += 1;
                }
                result.rows.push(row);
            }
        }
    }
    Ok(result)
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn fixed_3x3() -> FiniteJoint {
        FiniteJoint::from_rows(&[
            vec![0.10, 0.05, 0.15],
            vec![0.20, 0.05, 0.05],
            vec![0.02, 0.08, 0.30],
        ])
        .unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert!(close(entropy(&[0.25; 4]).unwrap(), 4f64.ln(), 1e-15));
        assert_eq!(entropy(&[1.0, 0.0, 0.0]).unwrap(), 0.0);
        assert!(close(entropy(&[0.5, 0.25, 0.25]).unwrap(), 1.5 * LN_2, 1e-15));
        assert!(entropy(&[0.5, 0.6]).is_err());
        assert!(entropy(&[1.5, -0.5]).is_err());
        assert!(entropy(&[]).is_err());
    }

    #[test]
    fn joint_validation() {
        assert!(matches!(
            FiniteJoint::new(2, 2, vec![0.5, 0.5, 0.0, 0.0]),
            Err(InfoError::ZeroMarginal { axis: "t", index: 1 })
        ));
        assert!(matches!(
            FiniteJoint::new(2, 2, vec![0.5, 0.0, 0.5, 0.0]),
            Err(InfoError::ZeroMarginal { axis: "r", index: 1 })
        ));
        assert!(FiniteJoint::new(2, 2, vec![0.3; 4]).is_err());
        assert!(FiniteJoint::new(1, 2, vec![0.5, 0.5]).is_err());
        assert!(FiniteJoint::new(2, 2, vec![0.25; 3]).is_err());
        let nearly = FiniteJoint::new(2, 2, vec![0.25, 0.25, 0.25, 0.25 + 5e-13]).unwrap();
        assert!(close(nearly.probs().iter().sum::<f64>(), 1.0, 1e-15));
    }

    #[test]
    fn conditional_entropy_examples() {
        assert!(FiniteJoint::perfect(3).unwrap().conditional_entropy().abs() < 1e-15);
        let ind = FiniteJoint::independent(&[0.5, 0.5], &[0.5, 0.5]).unwrap();
        assert!(close(ind.conditional_entropy(), LN_2, 1e-15));
        assert!(close(fixed_3x3().conditional_entropy(), 0.907_708_245_546_413_4, 1e-13));
    }

    #[test]
    fn mutual_information_examples() {
        let ind = FiniteJoint::independent(&[0.2, 0.3, 0.5], &[0.6, 0.4]).unwrap();
        assert!(ind.mutual_information().abs() < 1e-15);
        assert!(close(FiniteJoint::perfect(5).unwrap().mutual_information(), 5f64.ln(), 1e-14));
        let j = FiniteJoint::from_rows(&[
            vec![0.05, 0.10, 0.02],
            vec![0.12, 0.03, 0.08],
            vec![0.07, 0.15, 0.05],
            vec![0.10, 0.13, 0.10],
        ])
        .unwrap();
        assert!(close(j.mutual_information(), 0.071_340_126_585_427_69, 1e-13));
        assert!(close(j.conditional_entropy(), 1.287_296_672_144_295, 1e-13));
    }

    #[test]
    fn map_decoder_examples() {
        assert!(FiniteJoint::perfect(4).unwrap().map_decoder_error().abs() < 1e-15);
        let ind = FiniteJoint::independent(&[0.5, 0.5], &[0.3, 0.7]).unwrap();
        assert!(close(ind.map_decoder_error(), 0.5, 1e-15));
        assert!(close(fixed_3x3().map_decoder_error(), 0.42, 1e-15));
    }

    #[test]
    fn snowball_examples() {
        let perfect = ChannelSequence::new(vec![FiniteJoint::perfect(3).unwrap(); 4]).unwrap();
        for l in 2..=5 {
            assert!(snowball(&perfect, l).unwrap().abs() < 1e-15);
        }
        let ind = FiniteJoint::independent(&[0.5, 0.5], &[0.5, 0.5]).unwrap();
        let seq = ChannelSequence::new(vec![ind.clone(), ind]).unwrap();
        assert!(close(snowball(&seq, 3).unwrap(), 2.0 * LN_2, 1e-15));
        assert!(snowball(&seq, 1).is_err());
        assert!(snowball(&seq, 4).is_err());
    }

    #[test]
    fn info_loss_identical_layers_hold_with_equality() {
        let seq = ChannelSequence::new(vec![fixed_3x3(); 4]).unwrap();
        let rep = check_info_loss_inequality(&seq, 4).unwrap();
        assert!(rep.assumptions_met());
        assert!(close(rep.lhs, rep.rhs, 1e-14));
        assert_eq!(rep.claim(), Some(true));
    }

    #[test]
    fn info_loss_perfect_then_independent() {
        let seq = ChannelSequence::new(vec![
            FiniteJoint::perfect(3).unwrap(),
            FiniteJoint::independent(&[1.0 / 3.0; 3], &[1.0 / 3.0; 3]).unwrap(),
        ])
        .unwrap();
        let rep = check_info_loss_inequality(&seq, 2).unwrap();
        assert!(rep.mi_nonincreasing && rep.entropy_growth);
        assert!(close(rep.lhs, 3f64.ln(), 1e-14));
        assert!(rep.rhs.abs() < 1e-15);
        assert_eq!(rep.claim(), Some(true));
    }

    #[test]
    fn info_loss_flags_unmet_assumptions() {
        // MI increases from layer 1 to layer 2: no claim is made.
        let seq = ChannelSequence::new(vec![
            FiniteJoint::independent(&[0.5, 0.5], &[0.5, 0.5]).unwrap(),
            FiniteJoint::perfect(2).unwrap(),
        ])
        .unwrap();
        let rep = check_info_loss_inequality(&seq, 2).unwrap();
        assert!(!rep.mi_nonincreasing);
        assert_eq!(rep.claim(), None);
        assert!(!rep.inequality_holds);
        assert!(check_info_loss_inequality(&seq, 1).is_err());
    }

    #[test]
    fn fano_all_perfect() {
        let seq = ChannelSequence::new(vec![FiniteJoint::perfect(4).unwrap(); 3]).unwrap();
        let rep = fano_check(&seq, 3).unwrap();
        assert_eq!(rep.lhs, 0.0);
        assert!(rep.rhs.unwrap() <= 0.0);
        assert_eq!(rep.bound_satisfied(), Some(true));
    }

    #[test]
    fn fano_independent_uniform_ternary() {
        let u = [1.0 / 3.0; 3];
        let layer = FiniteJoint::independent(&u, &u).unwrap();
        let seq = ChannelSequence::new(vec![layer.clone(), layer]).unwrap();
        let rep = fano_check(&seq, 2).unwrap();
        assert!(close(rep.lhs, 2.0 / 3.0, 1e-15));
        // rhs = (ln 3 − H_b(2/3)) / ln 2
        let expected = (3f64.ln() - binary_entropy(2.0 / 3.0)) / LN_2;
        assert!(close(rep.rhs.unwrap(), expected, 1e-14));
        assert!(rep.assumption_holds);
        assert_eq!(rep.bound_satisfied(), Some(true));
    }

    #[test]
    fn fano_binary_support_is_undefined() {
        let seq = ChannelSequence::new(vec![FiniteJoint::perfect(2).unwrap(); 2]).unwrap();
        let rep = fano_check(&seq, 2).unwrap();
        assert_eq!(rep.rhs, None);
        assert_eq!(rep.bound_satisfied(), None);
        assert!(!rep.is_violation());
    }

    #[test]
    fn fano_suite_small_run() {
        let cfg = FanoSuiteConfig {
            instances: 50,
            seed: 11,
            ..FanoSuiteConfig::default()
        };
        let res = run_fano_suite(&cfg).unwrap();
        assert!(res.passed(50), "{} violations", res.violations);
        assert_eq!(res, run_fano_suite(&cfg).unwrap());
        assert!(res.rows.iter().all(|r| r.report.assumption_holds));
    }
}
