//! Thurstone Case V scale reconstruction.
//!
//! Win counts become clipped preference proportions, proportions become
//! z-scores through the inverse normal CDF, and latent scale values are fitted
//! to the z-scores by least squares on the comparison graph (the graph
//! Laplacian normal equations). An optional maximum-likelihood refinement
//! maximises the probit log-likelihood of the raw counts. Finally the scale is
//! mapped affinely so the worst anchor sits at 0 and the best anchor at 1.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{build_count_matrix, connected_components, CountMatrix, EpsilonPolicy, ItemRegistry, ModelError, StudyConfig, Vote};
use crate::normal;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScalingError {
    #[error("comparison graph is disconnected; components: {components:?}")]
    Disconnected { components: Vec<Vec<usize>> },
    #[error("MLE did not converge after {iterations} iterations (gradient norm {grad_norm:.3e})")]
    NotConverged { mu: Vec<f64>, grad_norm: f64, iterations: usize },
    #[error("best anchor ({best}) does not score above worst anchor ({worst})")]
    AnchorInversion { worst: f64, best: f64 },
    #[error("sigma_ab must be positive, got {0}")]
    InvalidSigma(f64),
    #[error("linear system is singular")]
    Singular,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Clipped empirical preference proportions on observed pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceMatrix {
    n: usize,
    p: Vec<f64>,
    observed: Vec<bool>,
    /// Votes on each pair (symmetric).
    totals: Vec<u64>,
}

impl PreferenceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Preference of `i` over `j`, `None` on unobserved pairs.
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let k = i * self.n + j;
        self.observed[k].then_some(self.p[k])
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.observed[i * self.n + j]
    }

    pub fn pair_total(&self, i: usize, j: usize) -> u64 {
        self.totals[i * self.n + j]
    }
}

/// Pairwise z-scores `σ · Φ⁻¹(p)`; antisymmetric on observed pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ZMatrix {
    n: usize,
    z: Vec<f64>,
    observed: Vec<bool>,
}

impl ZMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let k = i * self.n + j;
        self.observed[k].then_some(self.z[k])
    }

    /// Build directly from target differences on a set of pairs: `z[i][j] = d`, `z[j][i] = -d`.
    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut m = Self { n, z: vec![0.0; n * n], observed: vec![false; n * n] };
        for (i, j, d) in pairs {
            assert_ne!(i, j, "self comparison");
            m.z[i * n + j] = d;
            m.z[j * n + i] = -d;
            m.observed[i * n + j] = true;
            m.observed[j * n + i] = true;
        }
        m
    }

    pub fn observed_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.n;
        (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).filter(|&(i, j)| self.observed[i * n + j]).collect()
    }
}

/// Empirical proportions `C_ij / (C_ij + C_ji)`, clipped into `[ε, 1 − ε]`.
pub fn preference_matrix(counts: &CountMatrix, policy: EpsilonPolicy) -> PreferenceMatrix {
    let n = counts.n();
    let mut p = vec![0.0; n * n];
    let mut observed = vec![false; n * n];
    let mut totals = vec![0; n * n];
    for i in 0..n {
        for j in 0..n {
            let total = if i == j { 0 } else { counts.pair_total(i, j) };
            if total == 0 {
                continue;
            }
            let eps = policy.epsilon(total);
            let raw = counts.get(i, j) as f64 / total as f64;
            let k = i * n + j;
            p[k] = raw.clamp(eps, 1.0 - eps);
            observed[k] = true;
            totals[k] = total;
        }
    }
    PreferenceMatrix { n, p, observed, totals }
}

/// Law of comparative judgment: `z[i][j] = σ · Φ⁻¹(p[i][j])`.
pub fn zscore_matrix(prefs: &PreferenceMatrix, sigma_ab: f64) -> ZMatrix {
    let n = prefs.n;
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let k = i * n + j;
            if !prefs.observed[k] {
                continue;
            }
            // evaluate once per pair so antisymmetry is exact
            let v = sigma_ab * normal::inv_cdf(prefs.p[k]);
            z[k] = v;
            z[j * n + i] = -v;
        }
    }
    ZMatrix { n, z, observed: prefs.observed.clone() }
}

fn require_connected(n: usize, pairs: &[(usize, usize)]) -> Result<(), ScalingError> {
    let components = connected_components(n, pairs);
    if components.len() > 1 {
        return Err(ScalingError::Disconnected { components });
    }
    Ok(())
}

/// Solve `(L + 11ᵀ/n) x = b` for a weighted Laplacian `L` of a connected graph.
///
/// With `Σ b = 0` the solution satisfies `L x = b` and `Σ x = 0`.
fn solve_gauged_laplacian(n: usize, edges: &[(usize, usize, f64)], b: &[f64]) -> Result<Vec<f64>, ScalingError> {
    let mut a = DMatrix::from_element(n, n, 1.0 / n as f64);
    for &(i, j, w) in edges {
        a[(i, i)] += w;
        a[(j, j)] += w;
        a[(i, j)] -= w;
        a[(j, i)] -= w;
    }
    let rhs = DVector::from_column_slice(b);
    let chol = a.clone().cholesky().ok_or(ScalingError::Singular)?;
    let mut x = chol.solve(&rhs);
    // one step of iterative refinement
    let r = &rhs - &a * &x;
    x += chol.solve(&r);
    Ok(x.iter().copied().collect())
}

/// Least-squares scale values: minimise `Σ (μ_i − μ_j − z_ij)²` over observed pairs with `Σ μ = 0`.
pub fn solve_scale_ls(z: &ZMatrix) -> Result<Vec<f64>, ScalingError> {
    let n = z.n;
    if n == 0 {
        return Ok(Vec::new());
    }
    let pairs = z.observed_pairs();
    require_connected(n, &pairs)?;
    let mut b = vec![0.0; n];
    for &(i, j) in &pairs {
        let d = z.z[i * n + j];
        b[i] += d;
        b[j] -= d;
    }
    let edges: Vec<_> = pairs.iter().map(|&(i, j)| (i, j, 1.0)).collect();
    let mut mu = solve_gauged_laplacian(n, &edges, &b)?;
    let mean = mu.iter().sum::<f64>() / n as f64;
    mu.iter_mut().for_each(|m| *m -= mean);
    Ok(mu)
}

/// Gradient of the least-squares objective `½ Σ (μ_i − μ_j − z_ij)²`.
pub fn ls_gradient(z: &ZMatrix, mu: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; z.n];
    for (i, j) in z.observed_pairs() {
        let r = mu[i] - mu[j] - z.z[i * z.n + j];
        g[i] += r;
        g[j] -= r;
    }
    g
}

/// Vote weights for the likelihood: pair totals split by the clipped proportions.
///
/// Away from unanimous outcomes these equal the raw counts; unanimous pairs get
/// the same continuity correction as the z-scores so the optimum stays finite.
#[derive(Debug, Clone, PartialEq)]
pub struct LikelihoodWeights {
    n: usize,
    w: Vec<f64>,
    pairs: Vec<(usize, usize)>,
}

impl LikelihoodWeights {
    pub fn new(counts: &CountMatrix, policy: EpsilonPolicy) -> Self {
        let prefs = preference_matrix(counts, policy);
        let n = counts.n();
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if let Some(p) = prefs.get(i, j) {
                    w[i * n + j] = p * prefs.pair_total(i, j) as f64;
                }
            }
        }
        Self { n, w, pairs: counts.observed_pairs() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.n + j]
    }
}

/// Probit log-likelihood `Σ w_ij ln Φ((μ_i − μ_j)/σ)`.
pub fn log_likelihood(weights: &LikelihoodWeights, mu: &[f64], sigma_ab: f64) -> f64 {
    weights
        .pairs
        .iter()
        .map(|&(i, j)| {
            let d = (mu[i] - mu[j]) / sigma_ab;
            weights.get(i, j) * normal::log_cdf(d) + weights.get(j, i) * normal::log_cdf(-d)
        })
        .sum()
}

/// Analytic gradient of [`log_likelihood`] with respect to `mu`.
pub fn log_likelihood_gradient(weights: &LikelihoodWeights, mu: &[f64], sigma_ab: f64) -> Vec<f64> {
    let mut g = vec![0.0; weights.n];
    for &(i, j) in &weights.pairs {
        let d = (mu[i] - mu[j]) / sigma_ab;
        let s = (weights.get(i, j) * normal::mills_ratio(d) - weights.get(j, i) * normal::mills_ratio(-d)) / sigma_ab;
        g[i] += s;
        g[j] -= s;
    }
    g
}

/// Pair curvatures `-∂²/∂d²` of the log-likelihood; nonnegative by log-concavity of Φ.
fn pair_curvatures(weights: &LikelihoodWeights, mu: &[f64], sigma_ab: f64) -> Vec<(usize, usize, f64)> {
    let second = |x: f64| {
        let m = normal::mills_ratio(x);
        m * (x + m)
    };
    weights
        .pairs
        .iter()
        .map(|&(i, j)| {
            let d = (mu[i] - mu[j]) / sigma_ab;
            let c = (weights.get(i, j) * second(d) + weights.get(j, i) * second(-d)) / (sigma_ab * sigma_ab);
            (i, j, c.max(1e-12))
        })
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleOptions {
    pub tolerance: f64,
    pub max_iters: usize,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self { tolerance: 1e-8, max_iters: 200 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MleFit {
    pub mu: Vec<f64>,
    pub log_likelihood: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    /// Log-likelihood after each accepted step, starting from the initial point.
    pub trace: Vec<f64>,
}

/// Maximum-likelihood scale values by Newton ascent with backtracking line search.
///
/// The log-likelihood is concave in `mu`; each accepted step satisfies the Armijo
/// condition so the likelihood never decreases, up to rounding once the predicted
/// gain falls below the objective's resolution. The result is centred (`Σ μ = 0`).
pub fn solve_scale_mle(
    counts: &CountMatrix,
    sigma_ab: f64,
    policy: EpsilonPolicy,
    init: &[f64],
    options: MleOptions,
) -> Result<MleFit, ScalingError> {
    if sigma_ab.is_nan() || sigma_ab <= 0.0 {
        return Err(ScalingError::InvalidSigma(sigma_ab));
    }
    let n = counts.n();
    assert_eq!(init.len(), n, "initial point has wrong length");
    require_connected(n, &counts.observed_pairs())?;
    let weights = LikelihoodWeights::new(counts, policy);

    let mut mu = init.to_vec();
    let mean = mu.iter().sum::<f64>() / n.max(1) as f64;
    mu.iter_mut().for_each(|m| *m -= mean);
    let mut ll = log_likelihood(&weights, &mu, sigma_ab);
    let mut trace = vec![ll];

    for iter in 0..=options.max_iters {
        let grad = log_likelihood_gradient(&weights, &mu, sigma_ab);
        let grad_norm = norm(&grad);
        if grad_norm <= options.tolerance {
            return Ok(MleFit { mu, log_likelihood: ll, grad_norm, iterations: iter, trace });
        }
        if iter == options.max_iters {
            return Err(ScalingError::NotConverged { mu, grad_norm, iterations: iter });
        }
        let curv = pair_curvatures(&weights, &mu, sigma_ab);
        let step = solve_gauged_laplacian(n, &curv, &grad)?;
        let slope: f64 = grad.iter().zip(&step).map(|(g, s)| g * s).sum();

        if slope <= 64.0 * f64::EPSILON * ll.abs().max(1.0) {
            // predicted gain is below the objective's rounding; judge the step by the gradient
            let cand: Vec<f64> = mu.iter().zip(&step).map(|(m, s)| m + s).collect();
            let cand_grad = norm(&log_likelihood_gradient(&weights, &cand, sigma_ab));
            if cand_grad >= grad_norm {
                return Err(ScalingError::NotConverged { mu, grad_norm, iterations: iter + 1 });
            }
            ll = log_likelihood(&weights, &cand, sigma_ab);
            mu = cand;
            trace.push(ll);
            continue;
        }

        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-12 {
            let cand: Vec<f64> = mu.iter().zip(&step).map(|(m, s)| m + t * s).collect();
            let cand_ll = log_likelihood(&weights, &cand, sigma_ab);
            if cand_ll >= ll + 1e-4 * t * slope {
                mu = cand;
                ll = cand_ll;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // the step is below floating-point resolution of the objective
            let grad_norm = norm(&log_likelihood_gradient(&weights, &mu, sigma_ab));
            if grad_norm <= options.tolerance {
                return Ok(MleFit { mu, log_likelihood: ll, grad_norm, iterations: iter + 1, trace });
            }
            return Err(ScalingError::NotConverged { mu, grad_norm, iterations: iter + 1 });
        }
        trace.push(ll);
    }
    unreachable!("loop returns on its last iteration")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rescaled {
    pub scores: Vec<f64>,
    /// Items whose score falls outside `[0, 1]` (kept unclamped).
    pub out_of_range: Vec<usize>,
}

/// Affine map sending `mu[worst]` to 0 and `mu[best]` to 1.
pub fn rescale_with_anchors(mu: &[f64], worst: usize, best: usize) -> Result<Rescaled, ScalingError> {
    let (lo, hi) = (mu[worst], mu[best]);
    if hi.is_nan() || lo.is_nan() || hi <= lo {
        return Err(ScalingError::AnchorInversion { worst: lo, best: hi });
    }
    let span = hi - lo;
    let mut scores: Vec<f64> = mu.iter().map(|m| (m - lo) / span).collect();
    scores[worst] = 0.0;
    scores[best] = 1.0;
    let out_of_range: Vec<usize> = scores.iter().enumerate().filter(|(_, s)| !(0.0..=1.0).contains(*s)).map(|(i, _)| i).collect();
    if !out_of_range.is_empty() {
        log::warn!("{} item(s) scored outside the anchor range: {:?}", out_of_range.len(), out_of_range);
    }
    Ok(Rescaled { scores, out_of_range })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScaleMethod {
    #[default]
    LeastSquares,
    Mle,
}

/// Reconstructed scale for every scalable item of a study, in registry order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleResult {
    pub item_ids: Vec<String>,
    /// Latent scale values with `Σ μ = 0`.
    pub mu: Vec<f64>,
    /// Scores after anchor rescaling (worst anchor 0, best anchor 1).
    pub scores: Vec<f64>,
    pub method: ScaleMethod,
    pub epsilon: EpsilonPolicy,
    pub out_of_range: Vec<usize>,
}

impl ScaleResult {
    pub fn score_of(&self, id: &str) -> Option<f64> {
        self.item_ids.iter().position(|x| x == id).map(|k| self.scores[k])
    }
}

/// Votes → count matrix → preferences → z-scores → LS (optionally refined by MLE) → anchor rescale.
///
/// Only real items and anchors are scaled; test-question votes are dropped. When
/// the registry carries no anchors, scores are min–max normalised instead.
pub fn scale_pipeline(votes: &[Vote], items: &ItemRegistry, config: &StudyConfig, method: ScaleMethod) -> Result<ScaleResult, ScalingError> {
    if config.sigma_ab.is_nan() || config.sigma_ab <= 0.0 {
        return Err(ScalingError::InvalidSigma(config.sigma_ab));
    }
    let items = items.scalable();
    let counts = build_count_matrix(votes, &items)?;
    let prefs = preference_matrix(&counts, config.epsilon_policy);
    let z = zscore_matrix(&prefs, config.sigma_ab);
    let mut mu = solve_scale_ls(&z)?;
    if method == ScaleMethod::Mle {
        mu = solve_scale_mle(&counts, config.sigma_ab, config.epsilon_policy, &mu, MleOptions::default())?.mu;
    }
    let rescaled = match (items.anchor_worst(), items.anchor_best()) {
        (Some(worst), Some(best)) => rescale_with_anchors(&mu, worst, best)?,
        _ => {
            let lo = mu.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = mu.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let span = if hi > lo { hi - lo } else { 1.0 };
            Rescaled { scores: mu.iter().map(|m| (m - lo) / span).collect(), out_of_range: Vec::new() }
        }
    };
    Ok(ScaleResult {
        item_ids: items.items().iter().map(|it| it.id.clone()).collect(),
        mu,
        scores: rescaled.scores,
        method,
        epsilon: config.epsilon_policy,
        out_of_range: rescaled.out_of_range,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Item, ItemKind};

    fn counts2(a: u64, b: u64) -> CountMatrix {
        CountMatrix::from_rows(&[vec![0, a], vec![b, 0]]).unwrap()
    }

    #[test]
    fn preference_examples() {
        let p = preference_matrix(&counts2(15, 15), EpsilonPolicy::HalfVote);
        assert_eq!(p.get(0, 1), Some(0.5));
        let p = preference_matrix(&counts2(30, 0), EpsilonPolicy::HalfVote);
        assert!((p.get(0, 1).unwrap() - 59.0 / 60.0).abs() < 1e-15);
        assert!((p.get(1, 0).unwrap() - 1.0 / 60.0).abs() < 1e-15);
        let p = preference_matrix(&counts2(18, 12), EpsilonPolicy::HalfVote);
        assert!((p.get(0, 1).unwrap() - 0.6).abs() < 1e-15);
        let p = preference_matrix(&CountMatrix::zeros(2), EpsilonPolicy::HalfVote);
        assert_eq!(p.get(0, 1), None);
    }

    #[test]
    fn zscore_examples() {
        let z = zscore_matrix(&preference_matrix(&counts2(15, 15), EpsilonPolicy::HalfVote), 1.0);
        assert_eq!(z.get(0, 1), Some(0.0));
        // Φ⁻¹(0.841345) = 1.000001049... (60-digit mpmath evaluation)
        let z = zscore_matrix(&preference_matrix(&counts2(841_345, 158_655), EpsilonPolicy::HalfVote), 1.0);
        assert!((z.get(0, 1).unwrap() - 1.000_001_049_431).abs() < 1e-9);
        assert_eq!(z.get(1, 0), z.get(0, 1).map(|v| -v));
    }

    #[test]
    fn ls_examples() {
        let z = ZMatrix::from_pairs(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 2.0)]);
        let mu = solve_scale_ls(&z).unwrap();
        for (m, e) in mu.iter().zip([1.0, 0.0, -1.0]) {
            assert!((m - e).abs() < 1e-12);
        }
        let z = ZMatrix::from_pairs(3, [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 0.0)]);
        let mu = solve_scale_ls(&z).unwrap();
        for (m, e) in mu.iter().zip([1.0 / 3.0, 0.0, -1.0 / 3.0]) {
            assert!((m - e).abs() < 1e-12);
        }
        let z = ZMatrix::from_pairs(4, [(0, 1, 0.0), (1, 2, 0.0), (2, 3, 0.0)]);
        assert!(solve_scale_ls(&z).unwrap().iter().all(|m| m.abs() < 1e-15));
    }

    #[test]
    fn ls_rejects_disconnected() {
        let z = ZMatrix::from_pairs(4, [(0, 1, 1.0), (2, 3, 1.0)]);
        match solve_scale_ls(&z) {
            Err(ScalingError::Disconnected { components }) => assert_eq!(components, vec![vec![0, 1], vec![2, 3]]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mle_two_items() {
        let fit = solve_scale_mle(&counts2(15, 15), 1.0, EpsilonPolicy::HalfVote, &[0.3, -0.1], MleOptions::default()).unwrap();
        assert!(fit.mu.iter().all(|m| m.abs() < 1e-9));
        let fit = solve_scale_mle(&counts2(841_345, 158_655), 1.0, EpsilonPolicy::HalfVote, &[0.0, 0.0], MleOptions::default()).unwrap();
        assert!((fit.mu[0] - 0.5).abs() < 1e-4 && (fit.mu[1] + 0.5).abs() < 1e-4);
        assert!(fit.trace.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn mle_converges_on_a_full_sized_study() {
        use crate::simulation::{simulate_study, SimulationOptions};
        let config = StudyConfig::default();
        let mu: Vec<f64> = (0..config.n_items).map(|i| 3.0 * i as f64 / (config.n_items - 1) as f64).collect();
        let study = simulate_study(&mu, &config, &SimulationOptions::default()).unwrap();
        let counts = build_count_matrix(&study.export.votes, &study.items).unwrap();
        let z = zscore_matrix(&preference_matrix(&counts, config.epsilon_policy), config.sigma_ab);
        let init = solve_scale_ls(&z).unwrap();
        let fit = solve_scale_mle(&counts, config.sigma_ab, config.epsilon_policy, &init, MleOptions::default()).unwrap();
        assert!(fit.grad_norm <= 1e-8);
        assert!(fit.iterations < 20, "{} iterations", fit.iterations);
    }

    #[test]
    fn mle_reports_non_convergence() {
        let err = solve_scale_mle(&counts2(841_345, 158_655), 1.0, EpsilonPolicy::HalfVote, &[0.0, 0.0], MleOptions { tolerance: 1e-8, max_iters: 0 }).unwrap_err();
        assert!(matches!(err, ScalingError::NotConverged { iterations: 0, .. }));
    }

    #[test]
    fn rescale_examples() {
        let r = rescale_with_anchors(&[-1.0, 0.0, 1.0], 0, 2).unwrap();
        assert_eq!(r.scores, vec![0.0, 0.5, 1.0]);
        let r = rescale_with_anchors(&[-1.0, 2.0, 1.0], 0, 2).unwrap();
        assert_eq!(r.scores, vec![0.0, 1.5, 1.0]);
        assert_eq!(r.out_of_range, vec![1]);
        assert!(matches!(rescale_with_anchors(&[1.0, 0.0], 0, 1), Err(ScalingError::AnchorInversion { .. })));
    }

    #[test]
    fn tied_item_between_anchors() {
        let items = ItemRegistry::new([Item::new("lo", ItemKind::AnchorWorst), Item::real("x"), Item::new("hi", ItemKind::AnchorBest)]).unwrap();
        let mut votes = Vec::new();
        for _ in 0..30 {
            votes.push(Vote::new("w", "x", "lo", "x"));
            votes.push(Vote::new("w", "x", "hi", "hi"));
        }
        let r = scale_pipeline(&votes, &items, &StudyConfig::default(), ScaleMethod::LeastSquares).unwrap();
        let s = r.score_of("x").unwrap();
        assert!(s > 0.0 && s < 1.0);
        let again = scale_pipeline(&votes, &items, &StudyConfig::default(), ScaleMethod::LeastSquares).unwrap();
        assert_eq!(r, again);
    }
}
