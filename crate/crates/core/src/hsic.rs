//! Gaussian-kernel HSIC, per-token normalization and decay-curve fitting.

use std::path::Path;

use ndarray::{Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

pub const DEFAULT_SIGMA: f64 = 50.0;

#[derive(Debug, Error)]
pub enum HsicError {
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error("row count mismatch: {left} vs {right}")]
    RowMismatch { left: usize, right: usize },
    #[error("{field} must be positive, got {value}")]
    NonPositive { field: &'static str, value: f64 },
    #[error("non-finite feature at row {row}")]
    NonFinite { row: usize },
    #[error("{0} per-row entries do not match the row count")]
    MetadataLength(&'static str),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Paired sample rows with optional grouping and token lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    vectors: Array2<f64>,
    group_ids: Option<Vec<String>>,
    lengths: Option<Vec<u32>>,
}

impl SampleSet {
    pub fn new(vectors: Array2<f64>) -> Result<Self, HsicError> {
        if vectors.nrows() < 2 {
            return Err(HsicError::TooFewSamples {
                min: 2,
                got: vectors.nrows(),
            });
        }
        if let Some((row, _)) = vectors
            .axis_iter(Axis(0))
            .enumerate()
            .find(|(_, r)| r.iter().any(|v| !v.is_finite()))
        {
            return Err(HsicError::NonFinite { row });
        }
        Ok(SampleSet {
            vectors,
            group_ids: None,
            lengths: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, HsicError> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some((row, _)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
            return Err(HsicError::Parse {
                path: "<rows>".into(),
                message: format!("row {row} has {} features, expected {d}", rows[row].len()),
            });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let vectors = Array2::from_shape_vec((rows.len(), d), flat)
            .map_err(|e| HsicError::Fit(e.to_string()))?;
        SampleSet::new(vectors)
    }

    pub fn with_group_ids(mut self, ids: Vec<String>) -> Result<Self, HsicError> {
        if ids.len() != self.len() {
            return Err(HsicError::MetadataLength("group id"));
        }
        self.group_ids = Some(ids);
        Ok(self)
    }

    pub fn with_lengths(mut self, lengths: Vec<u32>) -> Result<Self, HsicError> {
        if lengths.len() != self.len() {
            return Err(HsicError::MetadataLength("length"));
        }
        if lengths.contains(&0) {
            return Err(HsicError::NonPositive {
                field: "length",
                value: 0.0,
            });
        }
        self.lengths = Some(lengths);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn vectors(&self) -> &Array2<f64> {
        &self.vectors
    }

    pub fn group_ids(&self) -> Option<&[String]> {
        self.group_ids.as_deref()
    }

    pub fn lengths(&self) -> Option<&[u32]> {
        self.lengths.as_deref()
    }

    pub fn mean_length(&self) -> Option<f64> {
        self.lengths
            .as_ref()
            .map(|l| l.iter().map(|&v| v as f64).sum::<f64>() / l.len() as f64)
    }

    /// Rows reordered so that row `i` is the old row `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> SampleSet {
        SampleSet {
            vectors: self.vectors.select(Axis(0), perm),
            group_ids: self
                .group_ids
                .as_ref()
                .map(|g| perm.iter().map(|&i| g[i].clone()).collect()),
            lengths: self
                .lengths
                .as_ref()
                .map(|l| perm.iter().map(|&i| l[i]).collect()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HsicConfig {
    pub sigma: f64,
}

impl Default for HsicConfig {
    fn default() -> Self {
        HsicConfig {
            sigma: DEFAULT_SIGMA,
        }
    }
}

impl HsicConfig {
    pub fn new(sigma: f64) -> Result<Self, HsicError> {
        let cfg = HsicConfig { sigma };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<(), HsicError> {
        if self.sigma.is_finite() && self.sigma > 0.0 {
            Ok(())
        } else {
            Err(HsicError::NonPositive {
                field: "sigma",
                value: self.sigma,
            })
        }
    }
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `K_ij = exp(−‖x_i − x_j‖² / (2σ²))`.
pub fn gaussian_gram(x: &SampleSet, cfg: &HsicConfig) -> Result<Array2<f64>, HsicError> {
    cfg.check()?;
    let n = x.len();
    let scale = 2.0 * cfg.sigma * cfg.sigma;
    let mut k = Array2::<f64>::ones((n, n));
    for i in 0..n {
        for j in 0..i {
            let v = (-sq_dist(x.vectors.row(i), x.vectors.row(j)) / scale).exp();
            k[[i, j]] = v;
            k[[j, i]] = v;
        }
    }
    Ok(k)
}

/// `H K H` for `H = I − 11ᵀ/n`.
fn center(k: &Array2<f64>) -> Array2<f64> {
    let n = k.nrows() as f64;
    let row_means = k.sum_axis(Axis(1)) / n;
    let col_means = k.sum_axis(Axis(0)) / n;
    let grand = row_means.sum() / n;
    let mut c = k.clone();
    for ((i, j), v) in c.indexed_iter_mut() {
        *v = *v - row_means[i] - col_means[j] + grand;
    }
    c
}

fn check_pair(x: &SampleSet, y: &SampleSet) -> Result<(), HsicError> {
    if x.len() != y.len() {
        return Err(HsicError::RowMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    Ok(())
}

fn statistic(kc: &Array2<f64>, l: &Array2<f64>) -> f64 {
    let n = kc.nrows() as f64;
    let s: f64 = kc.iter().zip(l.iter()).map(|(a, b)| a * b).sum();
    (s / ((n - 1.0) * (n - 1.0))).max(0.0)
}

fn permuted_statistic(kc: &Array2<f64>, l: &Array2<f64>, perm: &[usize]) -> f64 {
    let n = kc.nrows();
    let mut s = 0.0;
    for i in 0..n {
        let pi = perm[i];
        for j in 0..n {
            s += kc[[i, j]] * l[[pi, perm[j]]];
        }
    }
    let n = n as f64;
    (s / ((n - 1.0) * (n - 1.0))).max(0.0)
}

/// Biased HSIC estimate `trace(KHLH) / (n−1)²`, clamped at zero.
///
/// Evaluated as `⟨HKH, HLH⟩`, which equals the trace form and is exactly zero
/// when either side is constant.
pub fn hsic(x: &SampleSet, y: &SampleSet, cfg: &HsicConfig) -> Result<f64, HsicError> {
    check_pair(x, y)?;
    let kc = center(&gaussian_gram(x, cfg)?);
    let l = center(&gaussian_gram(y, cfg)?);
    Ok(statistic(&kc, &l))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationTest {
    pub statistic: f64,
    pub shuffles: usize,
    /// Empirical 95th percentile of the shuffled statistics.
    pub null_q95: f64,
    /// `(1 + #{null ≥ statistic}) / (1 + shuffles)`.
    pub p_value: f64,
}

impl PermutationTest {
    pub fn below_q95(&self) -> bool {
        self.statistic < self.null_q95
    }
}

/// Permutation null obtained by shuffling the rows of `y`; shuffle `i` uses
/// stream `(seed, i)`.
pub fn permutation_test(
    x: &SampleSet,
    y: &SampleSet,
    cfg: &HsicConfig,
    shuffles: usize,
    seed: u64,
) -> Result<PermutationTest, HsicError> {
    check_pair(x, y)?;
    if shuffles == 0 {
        return Err(HsicError::NonPositive {
            field: "shuffles",
            value: 0.0,
        });
    }
    let kc = center(&gaussian_gram(x, cfg)?);
    let l = center(&gaussian_gram(y, cfg)?);
    let observed = statistic(&kc, &l);
    let n = x.len();
    let mut null: Vec<f64> = (0..shuffles as u64)
        .into_par_iter()
        .map(|i| {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng::stream(seed, i));
            permuted_statistic(&kc, &l, &perm)
        })
        .collect();
    let exceed = null.iter().filter(|&&v| v >= observed).count();
    null.sort_by(f64::total_cmp);
    let idx = ((0.95 * shuffles as f64).ceil() as usize).clamp(1, shuffles) - 1;
    Ok(PermutationTest {
        statistic: observed,
        shuffles,
        null_q95: null[idx],
        p_value: (1 + exceed) as f64 / (1 + shuffles) as f64,
    })
}

pub fn per_token_hsic(value: f64, mean_length: f64) -> Result<f64, HsicError> {
    if !(mean_length.is_finite() && mean_length > 0.0) {
        return Err(HsicError::NonPositive {
            field: "mean_length",
            value: mean_length,
        });
    }
    Ok(value / mean_length)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `a·e^{−c·x}`, params `[a, c]`.
    ExponentialDecay,
    /// `a + b·x`, params `[a, b]`.
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    pub params: Vec<f64>,
    pub r2: f64,
    pub residuals: Vec<f64>,
}

impl FitResult {
    pub fn predict(&self, x: f64) -> f64 {
        match self.model {
            FitModel::ExponentialDecay => self.params[0] * (-self.params[1] * x).exp(),
            FitModel::Linear => self.params[0] + self.params[1] * x,
        }
    }

    fn build(model: FitModel, params: Vec<f64>, points: &[(f64, f64)]) -> Self {
        let mut fit = FitResult {
            model,
            params,
            r2: 0.0,
            residuals: Vec::new(),
        };
        fit.residuals = points.iter().map(|&(x, y)| y - fit.predict(x)).collect();
        let mean = points.iter().map(|p| p.1).sum::<f64>() / points.len() as f64;
        let ss_tot: f64 = points.iter().map(|p| (p.1 - mean).powi(2)).sum();
        let ss_res: f64 = fit.residuals.iter().map(|r| r * r).sum();
        fit.r2 = if ss_tot > 0.0 {
            1.0 - ss_res / ss_tot
        } else if ss_res == 0.0 {
            1.0
        } else {
            f64::NEG_INFINITY
        };
        fit
    }
}

/// Ordinary least squares `y = a + b·x`.
fn ols(points: &[(f64, f64)]) -> Result<(f64, f64), HsicError> {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return Err(HsicError::Fit("x values must not all coincide".into()));
    }
    let slope = sxy / sxx;
    Ok((my - slope * mx, slope))
}

/// Exponential fit (log-linear regression over positive y) and linear fit.
/// Both `r²` values are measured on the original y scale over all points.
pub fn fit_decay(points: &[(f64, f64)]) -> Result<(FitResult, FitResult), HsicError> {
    if points.len() < 3 {
        return Err(HsicError::Fit(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|p| !(p.0.is_finite() && p.1.is_finite())) {
        return Err(HsicError::Fit("points must be finite".into()));
    }
    let logged: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.1 > 0.0)
        .map(|&(x, y)| (x, y.ln()))
        .collect();
    if logged.len() < 3 {
        return Err(HsicError::Fit(format!(
            "need at least 3 positive y values for the exponential fit, got {}",
            logged.len()
        )));
    }
    let (ln_a, neg_c) = ols(&logged)?;
    let (a, b) = ols(points)?;
    Ok((
        FitResult::build(FitModel::ExponentialDecay, vec![ln_a.exp(), -neg_c], points),
        FitResult::build(FitModel::Linear, vec![a, b], points),
    ))
}

/// `n` rows of `d` independent standard normals.
pub fn gaussian_samples<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<SampleSet, HsicError> {
    let v = Array2::from_shape_simple_fn((n, d), || rng.sample::<f64, _>(StandardNormal));
    SampleSet::new(v)
}

/// `count` points `y = a·e^{−c·x}·(1 + noise·Z)` at evenly spaced `x` in `[x0, x1]`.
pub fn planted_decay_points(
    a: f64,
    c: f64,
    noise: f64,
    count: usize,
    (x0, x1): (f64, f64),
    seed: u64,
) -> Vec<(f64, f64)> {
    let mut r = rng::stream(seed, 0);
    let step = if count > 1 { (x1 - x0) / (count - 1) as f64 } else { 0.0 };
    (0..count)
        .map(|i| {
            let x = x0 + step * i as f64;
            let z: f64 = r.sample(StandardNormal);
            (x, a * (-c * x).exp() * (1.0 + noise * z))
        })
        .collect()
}

fn find_column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim().eq_ignore_ascii_case(name))
}

/// Reads a feature CSV. A `group_id` and a `length` column are recognized by
/// header name; every other column is a real feature.
pub fn read_feature_csv(path: impl AsRef<Path>) -> Result<SampleSet, HsicError> {
    let path = path.as_ref();
    let parse_err = |message: String| HsicError::Parse {
        path: path.display().to_string(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let group_col = find_column(&headers, "group_id");
    let length_col = find_column(&headers, "length");
    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|&i| Some(i) != group_col && Some(i) != length_col)
        .collect();
    if feature_cols.is_empty() {
        return Err(parse_err("no feature columns".into()));
    }
    let (mut rows, mut groups, mut lengths) = (Vec::new(), Vec::new(), Vec::new());
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let field = |c: usize| record.get(c).unwrap_or("").trim();
        let mut row = Vec::with_capacity(feature_cols.len());
        for &c in &feature_cols {
            row.push(
                field(c)
                    .parse::<f64>()
                    .map_err(|e| parse_err(format!("line {line}, column `{}`: {e}", &headers[c])))?,
            );
        }
        rows.push(row);
        if let Some(c) = group_col {
            groups.push(field(c).to_string());
        }
        if let Some(c) = length_col {
            lengths.push(
                field(c)
                    .parse::<u32>()
                    .map_err(|e| parse_err(format!("line {line}, column `length`: {e}")))?,
            );
        }
    }
    let mut set = SampleSet::from_rows(&rows)?;
    if group_col.is_some() {
        set = set.with_group_ids(groups)?;
    }
    if length_col.is_some() {
        set = set.with_lengths(lengths)?;
    }
    Ok(set)
}

/// Reads `(x, y)` points from a CSV with headers, by column name or, when a
/// name is absent, from the first two columns.
pub fn read_points_csv(
    path: impl AsRef<Path>,
    x_col: Option<&str>,
    y_col: Option<&str>,
) -> Result<Vec<(f64, f64)>, HsicError> {
    let path = path.as_ref();
    let parse_err = |message: String| HsicError::Parse {
        path: path.display().to_string(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let column = |name: Option<&str>, fallback: usize| match name {
        Some(n) => find_column(&headers, n).ok_or_else(|| parse_err(format!("no column `{n}`"))),
        None if fallback < headers.len() => Ok(fallback),
        None => Err(parse_err("need at least two columns".into())),
    };
    let (xc, yc) = (column(x_col, 0)?, column(y_col, 1)?);
    let mut points = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let get = |c: usize| {
            record
                .get(c)
                .unwrap_or("")
                .trim()
                .parse::<f64>()
                .map_err(|e| parse_err(format!("line {}: {e}", i + 2)))
        };
        points.push((get(xc)?, get(yc)?));
    }
    Ok(points)
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn gram_examples() {
        let same = SampleSet::new(array![[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]]).unwrap();
        let k = gaussian_gram(&same, &HsicConfig::default()).unwrap();
        assert!(k.iter().all(|&v| v == 1.0));

        let cfg = HsicConfig::new(3.0).unwrap();
        let d = 3.0 * 2f64.sqrt();
        let pair = SampleSet::new(array![[0.0], [d]]).unwrap();
        let k = gaussian_gram(&pair, &cfg).unwrap();
        assert!((k[[0, 1]] - (-1f64).exp()).abs() < 1e-15);
        assert_eq!(k[[0, 0]], 1.0);
    }

    #[test]
    fn gram_random_3x2() {
        // [[1.2, -0.7], [3.4, 2.2], [-5.1, 0.3]], sigma = 50
        let x = SampleSet::new(array![[1.2, -0.7], [3.4, 2.2], [-5.1, 0.3]]).unwrap();
        let k = gaussian_gram(&x, &HsicConfig::default()).unwrap();
        let expected = [
            (0, 1, 0.99735350815044956_f64),
            (0, 2, 0.9918950238785065),
            (1, 2, 0.98494251492039133),
        ];
        for (i, j, v) in expected {
            assert!((k[[i, j]] - v).abs() < 1e-14, "{i},{j}: {}", k[[i, j]]);
            assert_eq!(k[[i, j]], k[[j, i]]);
        }
    }

    #[test]
    fn constant_input_gives_zero() {
        let x = SampleSet::new(array![[4.0], [4.0], [4.0], [4.0]]).unwrap();
        let y = SampleSet::new(array![[1.0], [-2.0], [0.5], [9.0]]).unwrap();
        assert_eq!(hsic(&x, &y, &HsicConfig::default()).unwrap(), 0.0);
        assert_eq!(hsic(&y, &x, &HsicConfig::default()).unwrap(), 0.0);
    }

    #[test]
    fn two_point_identity() {
        // K = L = [[1, k], [k, 1]], HKH = (1 - k)/2 [[1, -1], [-1, 1]],
        // trace(HKH L) = (1 - k)^2, divided by (n - 1)^2 = 1.
        let cfg = HsicConfig::new(1.0).unwrap();
        let x = SampleSet::new(array![[0.0], [1.0]]).unwrap();
        let k = (-0.5f64).exp();
        let v = hsic(&x, &x, &cfg).unwrap();
        assert!((v - (1.0 - k).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn row_mismatch_rejected() {
        let x = SampleSet::new(array![[0.0], [1.0]]).unwrap();
        let y = SampleSet::new(array![[0.0], [1.0], [2.0]]).unwrap();
        assert!(matches!(
            hsic(&x, &y, &HsicConfig::default()),
            Err(HsicError::RowMismatch { .. })
        ));
        assert!(SampleSet::new(array![[0.0]]).is_err());
        assert!(HsicConfig::new(0.0).is_err());
    }

    #[test]
    fn per_token_examples() {
        assert!((per_token_hsic(0.8, 4.0).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(per_token_hsic(0.0, 7.0).unwrap(), 0.0);
        assert_eq!(per_token_hsic(0.37, 1.0).unwrap(), 0.37);
        assert!(per_token_hsic(1.0, 0.0).is_err());
    }

    #[test]
    fn planted_exponential_fit() {
        let pts: Vec<(f64, f64)> = (0..10)
            .map(|i| {
                let x = i as f64 * 0.7;
                (x, 2.0 * (-0.5 * x).exp())
            })
            .collect();
        let (exp, _) = fit_decay(&pts).unwrap();
        assert!((exp.params[0] - 2.0).abs() < 1e-9);
        assert!((exp.params[1] - 0.5).abs() < 1e-9);
        assert!((exp.r2 - 1.0).abs() < 1e-12);
        assert!(exp.residuals.iter().all(|r| r.abs() < 1e-9));
    }

    #[test]
    fn planted_linear_fit() {
        let pts: Vec<(f64, f64)> = (0..9).map(|i| (i as f64, 1.0 - 0.1 * i as f64)).collect();
        let (exp, lin) = fit_decay(&pts).unwrap();
        assert!((lin.r2 - 1.0).abs() < 1e-12);
        assert!(exp.r2 < 1.0);
    }

    #[test]
    fn fit_errors() {
        assert!(fit_decay(&[(0.0, 1.0), (1.0, 0.5)]).is_err());
        assert!(fit_decay(&[(0.0, -1.0), (1.0, -0.5), (2.0, 0.2)]).is_err());
        assert!(fit_decay(&[(1.0, 1.0), (1.0, 0.5), (1.0, 0.2)]).is_err());
    }

    #[test]
    fn permutation_test_detects_dependence() {
        let mut r = rng::stream(3, 0);
        let x = gaussian_samples(60, 2, &mut r).unwrap();
        let t = permutation_test(&x, &x, &HsicConfig::new(1.0).unwrap(), 200, 1).unwrap();
        assert!(!t.below_q95());
        assert!(t.p_value < 0.01);
    }
}
