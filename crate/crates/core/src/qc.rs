//! Worker quality control and the Thurstone observer model.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{StudyConfig, WorkerRecord, WorkerStatus};

/// Slack for comparing count ratios with fractional thresholds.
const RATIO_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QcError {
    #[error("histogram of an empty roster")]
    EmptyHistogram,
    #[error("quiz has no questions")]
    EmptyQuiz,
    #[error("band edges must be increasing with at least two entries")]
    BadEdges,
    #[error("worker `{worker}` has accuracy {accuracy} outside the histogram bands")]
    OutOfBands { worker: String, accuracy: f64 },
    #[error("profile proportions sum to {0}, expected 1")]
    BadProportions(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice {
    First,
    Second,
}

/// One Thurstone judgment: the first item wins with probability `Φ((μ_i − μ_j)/σ)`.
pub fn simulate_vote<R: Rng + ?Sized>(mu_i: f64, mu_j: f64, sigma_ab: f64, rng: &mut R) -> Choice {
    let noise: f64 = rng.sample(StandardNormal);
    if mu_i - mu_j + sigma_ab * noise > 0.0 {
        Choice::First
    } else {
        Choice::Second
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WorkerBehavior {
    /// Judges by the observer model with comparison noise `sigma_w`.
    Thurstone { sigma_w: f64 },
    /// Picks uniformly at random.
    Spammer,
    /// Always picks the degraded image on test questions, random otherwise.
    Adversary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkerProfile {
    pub behavior: WorkerBehavior,
    pub proportion: f64,
}

pub fn validate_profiles(profiles: &[WorkerProfile]) -> Result<(), QcError> {
    let total: f64 = profiles.iter().map(|p| p.proportion).sum();
    if profiles.is_empty() || profiles.iter().any(|p| !(0.0..=1.0).contains(&p.proportion)) || (total - 1.0).abs() > 1e-9 {
        return Err(QcError::BadProportions(total));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuizGrade {
    pub passed: bool,
    pub score: f64,
    pub correct: u32,
    pub total: u32,
}

/// A quiz answer: `reference` is the ground-truth image of the test pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuizAnswer {
    pub reference: String,
    pub degraded: String,
    pub chosen: String,
}

impl QuizAnswer {
    pub fn is_correct(&self) -> bool {
        self.chosen == self.reference
    }
}

/// Pass iff the fraction of correct answers reaches `pass_fraction` (inclusive).
pub fn grade_quiz(answers: &[QuizAnswer], pass_fraction: f64) -> Result<QuizGrade, QcError> {
    grade_counts(answers.iter().filter(|a| a.is_correct()).count() as u32, answers.len() as u32, pass_fraction)
}

pub fn grade_counts(correct: u32, total: u32, pass_fraction: f64) -> Result<QuizGrade, QcError> {
    if total == 0 {
        return Err(QcError::EmptyQuiz);
    }
    let passed = correct as f64 >= pass_fraction * total as f64 - RATIO_SLACK;
    Ok(QuizGrade { passed, score: correct as f64 / total as f64, correct, total })
}

/// True once more than `fail_fraction` of the hidden tests were answered wrongly.
pub fn exceeds_failure_limit(failures: u32, total: u32, fail_fraction: f64) -> bool {
    total > 0 && failures as f64 > fail_fraction * total as f64 + RATIO_SLACK
}

/// Trust decision for a worker who passed the quiz.
pub fn classify(record: &WorkerRecord, config: &StudyConfig) -> WorkerStatus {
    let quiz_passed = record.quiz_total == 0
        || grade_counts(record.quiz_correct, record.quiz_total, config.quiz_pass_fraction).is_ok_and(|g| g.passed);
    if record.status == WorkerStatus::QuizFailed || !quiz_passed {
        return WorkerStatus::QuizFailed;
    }
    if record.status == WorkerStatus::Disqualified
        || exceeds_failure_limit(record.hidden_failures(), record.hidden_total, config.hidden_fail_fraction)
    {
        return WorkerStatus::Disqualified;
    }
    match record.hidden_accuracy() {
        Some(acc) if acc >= config.trust_accuracy - RATIO_SLACK => WorkerStatus::Trusted,
        // never graded, or below the trust bar without crossing the failure limit
        _ => WorkerStatus::Disqualified,
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WorkerPartition {
    pub trusted: Vec<WorkerRecord>,
    pub disqualified: Vec<WorkerRecord>,
    pub quiz_failed: Vec<WorkerRecord>,
}

impl WorkerPartition {
    pub fn len(&self) -> usize {
        self.trusted.len() + self.disqualified.len() + self.quiz_failed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Split workers into trusted / disqualified / quiz-failed, updating each record's status.
pub fn filter_workers(records: &[WorkerRecord], config: &StudyConfig) -> WorkerPartition {
    let mut out = WorkerPartition::default();
    for record in records {
        let mut record = record.clone();
        record.status = classify(&record, config);
        match record.status {
            WorkerStatus::Trusted => out.trusted.push(record),
            WorkerStatus::QuizFailed => out.quiz_failed.push(record),
            _ => out.disqualified.push(record),
        }
    }
    out
}

pub const DEFAULT_BAND_EDGES: [f64; 4] = [0.7, 0.8, 0.9, 1.0];

/// Fraction of workers per accuracy band. Bands are `[lo, hi)` except the last, which is closed.
pub fn accuracy_histogram(trusted: &[WorkerRecord], edges: &[f64]) -> Result<Vec<f64>, QcError> {
    if edges.len() < 2 || edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(QcError::BadEdges);
    }
    if trusted.is_empty() {
        return Err(QcError::EmptyHistogram);
    }
    let bands = edges.len() - 1;
    let mut counts = vec![0usize; bands];
    for record in trusted {
        let acc = record.hidden_accuracy().unwrap_or(f64::NAN);
        let band = (0..bands).find(|&b| {
            let (lo, hi) = (edges[b], edges[b + 1]);
            acc >= lo && (acc < hi || (b == bands - 1 && acc <= hi))
        });
        match band {
            Some(b) => counts[b] += 1,
            None => return Err(QcError::OutOfBands { worker: record.worker_id.clone(), accuracy: acc }),
        }
    }
    Ok(counts.into_iter().map(|c| c as f64 / trusted.len() as f64).collect())
}
