//! Ranking statistics: Spearman correlation, confidence intervals, rank
//! differences, cross-sequence averages and scatter data.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::normal;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {need} observations, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("correlation undefined for a constant vector")]
    Constant,
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("method sets differ; unmatched: {0:?}")]
    MethodMismatch(Vec<String>),
    #[error("method `{method}` missing from sequence `{sequence}`")]
    MissingMethod { method: String, sequence: String },
    #[error("could not draw a non-degenerate resample")]
    DegenerateResamples,
}

/// Ranks starting at 1, tied values sharing the average of their positions.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = avg;
        }
        start = end;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(AnalysisError::Constant);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank-order correlation (Pearson correlation of average ranks).
pub fn srocc(x: &[f64], y: &[f64]) -> Result<f64, AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(AnalysisError::TooFew { need: 3, got: x.len() });
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

pub fn disagreement(r: f64) -> f64 {
    1.0 - r
}

/// Fisher-transform interval `tanh(atanh r ± q/√(n−3))`, `q = Φ⁻¹((1+p)/2)`.
///
/// A perfect correlation yields the degenerate interval `(r, r)`.
pub fn fisher_ci(r: f64, n: usize, confidence: f64) -> Result<(f64, f64), AnalysisError> {
    if n <= 3 {
        return Err(AnalysisError::TooFew { need: 4, got: n });
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(AnalysisError::Invalid(format!("confidence {confidence} not in (0, 1)")));
    }
    if !(-1.0..=1.0).contains(&r) {
        return Err(AnalysisError::Invalid(format!("correlation {r} not in [-1, 1]")));
    }
    if r.abs() == 1.0 {
        return Ok((r, r));
    }
    let q = normal::inv_cdf((1.0 + confidence) / 2.0);
    let half = q / ((n - 3) as f64).sqrt();
    let centre = r.atanh();
    Ok(((centre - half).tanh(), (centre + half).tanh()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    Fisher,
    BootstrapPercentile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub r: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub ci_method: CiMethod,
    pub n: usize,
    pub iterations: Option<usize>,
    pub disagreement: f64,
}

impl CorrelationReport {
    pub fn fisher(x: &[f64], y: &[f64], confidence: f64) -> Result<Self, AnalysisError> {
        let r = srocc(x, y)?;
        let (ci_low, ci_high) = fisher_ci(r, x.len(), confidence)?;
        Ok(Self { r, ci_low, ci_high, ci_method: CiMethod::Fisher, n: x.len(), iterations: None, disagreement: disagreement(r) })
    }
}

/// Quantile with linear interpolation between order statistics; `sorted` must be ascending.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty sample");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

const MAX_REDRAWS: usize = 1000;

/// Resample `(x, y)` pairs with replacement and report the percentile interval of SROCC.
///
/// Iteration `k` draws from its own stream derived from `(seed, k)`, so the
/// result does not depend on evaluation order. Resamples with a constant
/// coordinate are redrawn.
pub fn bootstrap_srocc(pairs: &[(f64, f64)], iterations: usize, confidence: f64, seed: u64) -> Result<CorrelationReport, AnalysisError> {
    let n = pairs.len();
    if n < 4 {
        return Err(AnalysisError::TooFew { need: 4, got: n });
    }
    if iterations == 0 {
        return Err(AnalysisError::Invalid("iterations must be positive".into()));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(AnalysisError::Invalid(format!("confidence {confidence} not in (0, 1)")));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    let r = srocc(&x, &y)?;

    let mut stats = Vec::with_capacity(iterations);
    let mut xs = vec![0.0; n];
    let mut ys = vec![0.0; n];
    for k in 0..iterations {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let mut value = None;
        for _ in 0..MAX_REDRAWS {
            for slot in 0..n {
                let (a, b) = pairs[rng.random_range(0..n)];
                xs[slot] = a;
                ys[slot] = b;
            }
            match srocc(&xs, &ys) {
                Ok(v) => {
                    value = Some(v);
                    break;
                }
                Err(AnalysisError::Constant) => continue,
                Err(e) => return Err(e),
            }
        }
        stats.push(value.ok_or(AnalysisError::DegenerateResamples)?);
    }
    stats.sort_by(f64::total_cmp);
    let alpha = (1.0 - confidence) / 2.0;
    Ok(CorrelationReport {
        r,
        ci_low: quantile(&stats, alpha),
        ci_high: quantile(&stats, 1.0 - alpha),
        ci_method: CiMethod::BootstrapPercentile,
        n,
        iterations: Some(iterations),
        disagreement: disagreement(r),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankThresholds {
    pub small: u32,
    pub large: u32,
    pub severe: u32,
}

impl Default for RankThresholds {
    fn default() -> Self {
        Self { small: 5, large: 30, severe: 50 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankClass {
    Small,
    Middle,
    Large,
    Severe,
}

impl RankClass {
    pub fn of(abs_diff: u32, t: RankThresholds) -> Self {
        if abs_diff <= t.small {
            RankClass::Small
        } else if abs_diff > t.severe {
            RankClass::Severe
        } else if abs_diff > t.large {
            RankClass::Large
        } else {
            RankClass::Middle
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankDiff {
    pub method: String,
    pub new_rank: u32,
    pub old_rank: u32,
    /// `new − old`; negative means the method moved up.
    pub diff: i64,
    pub abs_diff: u32,
    pub class: RankClass,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub small: usize,
    pub middle: usize,
    pub large: usize,
    pub severe: usize,
}

impl ClassCounts {
    pub fn total(&self) -> usize {
        self.small + self.middle + self.large + self.severe
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankComparison {
    pub rows: Vec<RankDiff>,
    pub counts: ClassCounts,
}

/// Per-method rank differences between a new and an old ranking, in `new_ranks` order.
pub fn rank_compare(new_ranks: &[(String, u32)], old_ranks: &[(String, u32)], thresholds: RankThresholds) -> Result<RankComparison, AnalysisError> {
    let old: HashMap<&str, u32> = old_ranks.iter().map(|(m, r)| (m.as_str(), *r)).collect();
    let new_ids: HashSet<&str> = new_ranks.iter().map(|(m, _)| m.as_str()).collect();
    let mut unmatched: Vec<String> = new_ranks.iter().filter(|(m, _)| !old.contains_key(m.as_str())).map(|(m, _)| m.clone()).collect();
    unmatched.extend(old_ranks.iter().filter(|(m, _)| !new_ids.contains(m.as_str())).map(|(m, _)| m.clone()));
    if !unmatched.is_empty() {
        return Err(AnalysisError::MethodMismatch(unmatched));
    }
    let mut counts = ClassCounts::default();
    let rows = new_ranks
        .iter()
        .map(|(method, new_rank)| {
            let old_rank = old[method.as_str()];
            let diff = *new_rank as i64 - old_rank as i64;
            let abs_diff = diff.unsigned_abs() as u32;
            let class = RankClass::of(abs_diff, thresholds);
            match class {
                RankClass::Small => counts.small += 1,
                RankClass::Middle => counts.middle += 1,
                RankClass::Large => counts.large += 1,
                RankClass::Severe => counts.severe += 1,
            }
            RankDiff { method: method.clone(), new_rank: *new_rank, old_rank, diff, abs_diff, class }
        })
        .collect();
    Ok(RankComparison { rows, counts })
}

/// Ordinal ranks by descending value; ties keep input order.
pub fn ranks_descending(values: &[f64]) -> Vec<u32> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut ranks = vec![0; values.len()];
    for (pos, &k) in order.iter().enumerate() {
        ranks[k] = pos as u32 + 1;
    }
    ranks
}

/// Ordinal ranks by ascending value (smaller error ranks first); ties keep input order.
pub fn ranks_ascending(values: &[f64]) -> Vec<u32> {
    let negated: Vec<f64> = values.iter().map(|v| -v).collect();
    ranks_descending(&negated)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceScores {
    pub sequence: String,
    pub scores: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageScore {
    pub method: String,
    pub average: f64,
    pub rank: u32,
}

/// Mean score per method across sequences, ranked by descending mean.
///
/// Methods are reported in the order of the first sequence.
pub fn aggregate_average(sequences: &[SequenceScores]) -> Result<Vec<AverageScore>, AnalysisError> {
    let Some(first) = sequences.first() else {
        return Ok(Vec::new());
    };
    let lookups: Vec<HashMap<&str, f64>> = sequences.iter().map(|s| s.scores.iter().map(|(m, v)| (m.as_str(), *v)).collect()).collect();
    let first_ids: HashSet<&str> = first.scores.iter().map(|(m, _)| m.as_str()).collect();
    for seq in sequences {
        if let Some((m, _)) = seq.scores.iter().find(|(m, _)| !first_ids.contains(m.as_str())) {
            return Err(AnalysisError::MissingMethod { method: m.clone(), sequence: first.sequence.clone() });
        }
    }
    let mut averages = Vec::with_capacity(first.scores.len());
    for (method, _) in &first.scores {
        let mut sum = 0.0;
        for (seq, lookup) in sequences.iter().zip(&lookups) {
            sum += lookup
                .get(method.as_str())
                .ok_or_else(|| AnalysisError::MissingMethod { method: method.clone(), sequence: seq.sequence.clone() })?;
        }
        averages.push(sum / sequences.len() as f64);
    }
    let ranks = ranks_descending(&averages);
    Ok(first
        .scores
        .iter()
        .zip(averages)
        .zip(ranks)
        .map(|(((method, _), average), rank)| AverageScore { method: method.clone(), average, rank })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub method: String,
    /// `max(rmse) − rmse`, so larger is better on both axes.
    pub x: f64,
    pub y: f64,
}

/// Scatter points `(max(rmse) − rmse_i, score_i)`, in the order of `rmse`.
pub fn scatter_data(rmse: &[(String, f64)], scores: &[(String, f64)]) -> Result<Vec<ScatterPoint>, AnalysisError> {
    let lookup: HashMap<&str, f64> = scores.iter().map(|(m, v)| (m.as_str(), *v)).collect();
    let rmse_ids: HashSet<&str> = rmse.iter().map(|(m, _)| m.as_str()).collect();
    let mut unmatched: Vec<String> = rmse.iter().filter(|(m, _)| !lookup.contains_key(m.as_str())).map(|(m, _)| m.clone()).collect();
    unmatched.extend(scores.iter().filter(|(m, _)| !rmse_ids.contains(m.as_str())).map(|(m, _)| m.clone()));
    if !unmatched.is_empty() {
        return Err(AnalysisError::MethodMismatch(unmatched));
    }
    let max = rmse.iter().map(|(_, v)| *v).fold(f64::NEG_INFINITY, f64::max);
    Ok(rmse.iter().map(|(m, v)| ScatterPoint { method: m.clone(), x: max - v, y: lookup[m.as_str()] }).collect())
}

/// A sequence's subjective values with new (subjective) and old (benchmark) ranks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedSequence {
    pub name: String,
    pub rows: Vec<RankedMethod>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedMethod {
    pub method: String,
    pub value: f64,
    pub new_rank: u32,
    pub old_rank: u32,
}

impl RankedSequence {
    pub fn new_ranks(&self) -> Vec<(String, u32)> {
        self.rows.iter().map(|r| (r.method.clone(), r.new_rank)).collect()
    }

    pub fn old_ranks(&self) -> Vec<(String, u32)> {
        self.rows.iter().map(|r| (r.method.clone(), r.old_rank)).collect()
    }

    /// `(new rank, old rank)` pairs as reals, ready for correlation.
    pub fn rank_pairs(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.new_rank as f64, r.old_rank as f64)).collect()
    }

    pub fn row(&self, method: &str) -> Option<&RankedMethod> {
        self.rows.iter().find(|r| r.method == method)
    }
}
