//! Synthetic crowd studies: simulated workers drive the collector end to end,
//! and recovery experiments measure how well the pipeline reconstructs a known
//! ground-truth scale.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{srocc, AnalysisError};
use crate::collector::{ChoicePayload, Collector, CollectorError, ManifestItem, PairPayload, SessionState, StudyExport, StudyManifest, TestPair};
use crate::design::{inject_anchors, DesignError};
use crate::model::{ItemKind, ItemRegistry, PairGraph, StudyConfig, Vote, WorkerRecord};
use crate::qc::{simulate_vote, validate_profiles, Choice, QcError, WorkerBehavior, WorkerProfile};
use crate::scaling::{scale_pipeline, ScaleMethod, ScalingError};

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("true scale has {got} values, config expects {expected}")]
    SizeMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Profiles(#[from] QcError),
    #[error(transparent)]
    Collector(#[from] CollectorError),
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Scaling(#[from] ScalingError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("worker pool exhausted with {} pair(s) short of quota", deficits.len())]
    Shortfall { deficits: Vec<PairDeficit>, study: Box<SimulatedStudy> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairDeficit {
    pub item_a: String,
    pub item_b: String,
    pub missing: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationOptions {
    pub profiles: Vec<WorkerProfile>,
    /// Upper bound on the number of workers recruited.
    pub max_workers: usize,
    /// Pages a single worker does before leaving; `None` means until no work is left.
    pub max_pages_per_worker: Option<usize>,
    pub test_pairs: usize,
    /// Latent gap between the reference and the degraded image of a test pair.
    pub test_gap: f64,
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self {
            profiles: vec![WorkerProfile { behavior: WorkerBehavior::Thurstone { sigma_w: 1.0 }, proportion: 1.0 }],
            max_workers: 10_000,
            max_pages_per_worker: None,
            test_pairs: 20,
            test_gap: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedStudy {
    /// Real items, in the order of the true scale.
    pub items: ItemRegistry,
    /// Pair design over the real items.
    pub graph: PairGraph,
    /// Every recorded vote, including those of later-excluded workers.
    pub raw_votes: Vec<Vote>,
    pub records: Vec<WorkerRecord>,
    pub behaviors: Vec<(String, WorkerBehavior)>,
    pub export: StudyExport,
}

pub fn item_id(i: usize) -> String {
    format!("item{i:03}")
}

fn manifest(n_items: usize, n_tests: usize) -> StudyManifest {
    let mut items: Vec<ManifestItem> = (0..n_items).map(|i| ManifestItem { id: item_id(i), kind: ItemKind::Real, media: None }).collect();
    let mut test_pairs = Vec::with_capacity(n_tests);
    for t in 0..n_tests {
        let (reference, degraded) = (format!("test{t:02}_gt"), format!("test{t:02}_bad"));
        items.push(ManifestItem { id: reference.clone(), kind: ItemKind::TestReference, media: None });
        items.push(ManifestItem { id: degraded.clone(), kind: ItemKind::TestDegraded, media: None });
        test_pairs.push(TestPair { reference, degraded });
    }
    StudyManifest { items, test_pairs }
}

/// Assigns behaviors in proportion, interleaved so any prefix of the pool has
/// close to the target mix.
struct ProfileMixer<'a> {
    profiles: &'a [WorkerProfile],
    assigned: Vec<f64>,
    step: usize,
}

impl<'a> ProfileMixer<'a> {
    fn new(profiles: &'a [WorkerProfile]) -> Self {
        Self { profiles, assigned: vec![0.0; profiles.len()], step: 0 }
    }

    fn next(&mut self) -> WorkerBehavior {
        self.step += 1;
        let deficit = |k: usize| self.profiles[k].proportion * self.step as f64 - self.assigned[k];
        let chosen = (0..self.profiles.len())
            .max_by(|&a, &b| deficit(a).total_cmp(&deficit(b)).then(b.cmp(&a)))
            .expect("profiles validated non-empty");
        self.assigned[chosen] += 1.0;
        self.profiles[chosen].behavior
    }
}

fn worker_choice(pair: &PairPayload, behavior: WorkerBehavior, quality: &HashMap<String, (f64, ItemKind)>, rng: &mut ChaCha8Rng) -> ChoicePayload {
    let (ql, kl) = quality[&pair.left];
    let (qr, kr) = quality[&pair.right];
    let is_test = matches!(kl, ItemKind::TestReference | ItemKind::TestDegraded) || matches!(kr, ItemKind::TestReference | ItemKind::TestDegraded);
    let left_wins = match behavior {
        WorkerBehavior::Thurstone { sigma_w } => simulate_vote(ql, qr, sigma_w, rng) == Choice::First,
        WorkerBehavior::Adversary if is_test => kl == ItemKind::TestDegraded,
        WorkerBehavior::Spammer | WorkerBehavior::Adversary => rng.random_bool(0.5),
    };
    let winner = if left_wins { &pair.left } else { &pair.right };
    ChoicePayload { left: pair.left.clone(), right: pair.right.clone(), winner: winner.clone() }
}

/// Run a full crowdsourced study over items with latent qualities `true_mu`.
///
/// Workers arrive one at a time, take the quiz and work pages until they are
/// excluded, hit `max_pages_per_worker`, or no work remains for them. The study
/// ends when every pair meets its quota, or with [`SimulationError::Shortfall`]
/// once `max_workers` have been used.
pub fn simulate_study(true_mu: &[f64], config: &StudyConfig, options: &SimulationOptions) -> Result<SimulatedStudy, SimulationError> {
    if true_mu.len() != config.n_items {
        return Err(SimulationError::SizeMismatch { expected: config.n_items, got: true_mu.len() });
    }
    validate_profiles(&options.profiles)?;
    let n_tests = options.test_pairs.max(1);
    let mut collector = Collector::new();
    let study = collector.create_study(config.clone(), manifest(config.n_items, n_tests))?;

    let mut quality: HashMap<String, (f64, ItemKind)> = true_mu.iter().enumerate().map(|(i, &m)| (item_id(i), (m, ItemKind::Real))).collect();
    for t in 0..n_tests {
        quality.insert(format!("test{t:02}_gt"), (options.test_gap, ItemKind::TestReference));
        quality.insert(format!("test{t:02}_bad"), (0.0, ItemKind::TestDegraded));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    rng.set_stream(0x5EED);
    let mut clock: i64 = 0;
    let mut behaviors = Vec::new();
    let mut mixer = ProfileMixer::new(&options.profiles);
    for k in 0..options.max_workers {
        if collector.status(&study)?.complete {
            break;
        }
        let worker_id = format!("worker{k:05}");
        let behavior = mixer.next();
        behaviors.push((worker_id.clone(), behavior));
        let start = collector.start_session(&study, &worker_id)?;
        if start.state == SessionState::Quiz {
            let answers: Vec<ChoicePayload> = start.quiz.iter().map(|p| worker_choice(p, behavior, &quality, &mut rng)).collect();
            if !collector.submit_quiz(&start.session_id, &answers)?.passed {
                continue;
            }
        }
        let mut pages = 0;
        while options.max_pages_per_worker.is_none_or(|m| pages < m) {
            let page = match collector.get_page(&start.session_id) {
                Ok(page) => page,
                Err(CollectorError::NoMoreWork) => break,
                Err(e) => return Err(e.into()),
            };
            let choices: Vec<ChoicePayload> = page.pairs.iter().map(|p| worker_choice(p, behavior, &quality, &mut rng)).collect();
            clock += 1;
            pages += 1;
            if collector.submit_votes(&start.session_id, page.page_index, &choices, clock)?.state != SessionState::Active {
                break;
            }
        }
    }

    let export = collector.export(&study)?;
    let (graph, ids) = collector.design(&study)?;
    let raw_votes = collector.raw_votes(&study)?;
    let simulated = SimulatedStudy {
        items: ItemRegistry::new(ids.iter().map(|id| crate::model::Item::real(id.clone()))).expect("generated ids are unique"),
        graph,
        raw_votes,
        records: export.roster.clone(),
        behaviors,
        export,
    };
    let status = collector.status(&study)?;
    if !status.complete {
        let mut per_pair: HashMap<(usize, usize), u32> = HashMap::new();
        for v in simulated.export.votes.iter().filter(|v| !v.is_test_question) {
            let (a, b) = (simulated.items.index_of(&v.item_a).expect("real"), simulated.items.index_of(&v.item_b).expect("real"));
            *per_pair.entry((a.min(b), a.max(b))).or_default() += 1;
        }
        let deficits = simulated
            .graph
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                let have = per_pair.get(&(a, b)).copied().unwrap_or(0);
                (have < config.votes_per_pair).then(|| PairDeficit {
                    item_a: simulated.items.id(a).to_owned(),
                    item_b: simulated.items.id(b).to_owned(),
                    missing: config.votes_per_pair - have,
                })
            })
            .collect();
        return Err(SimulationError::Shortfall { deficits, study: Box::new(simulated) });
    }
    Ok(simulated)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MuGenerator {
    Uniform { lo: f64, hi: f64 },
    /// Equally spaced values from `lo` to `hi`, shuffled.
    Spaced { lo: f64, hi: f64 },
}

impl MuGenerator {
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        use rand::seq::SliceRandom;
        match *self {
            MuGenerator::Uniform { lo, hi } => (0..n).map(|_| rng.random_range(lo..hi)).collect(),
            MuGenerator::Spaced { lo, hi } => {
                let step = if n > 1 { (hi - lo) / (n - 1) as f64 } else { 0.0 };
                let mut v: Vec<f64> = (0..n).map(|k| lo + step * k as f64).collect();
                v.shuffle(rng);
                v
            }
        }
    }
}

/// Scale exported votes with synthetic anchors appended to the design.
///
/// Returns the rescaled score of every real item, in design order.
pub fn scale_study(study: &SimulatedStudy, config: &StudyConfig, method: ScaleMethod) -> Result<Vec<f64>, SimulationError> {
    let anchored = inject_anchors(&study.graph, &study.items, config)?;
    let mut votes: Vec<Vote> = study.export.votes.iter().filter(|v| !v.is_test_question).cloned().collect();
    votes.extend(anchored.votes.iter().cloned());
    let result = scale_pipeline(&votes, &anchored.registry, config, method)?;
    Ok(result.scores[..study.items.len()].to_vec())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub per_seed: Vec<f64>,
    pub median: f64,
    pub min: f64,
}

/// Simulate, filter, scale and correlate against the true scale for `n_seeds` seeds.
///
/// Seed `s` uses `config.rng_seed + s` for the design, the workers and the true scale.
pub fn recovery_experiment(
    config: &StudyConfig,
    generator: MuGenerator,
    n_seeds: usize,
    options: &SimulationOptions,
    method: ScaleMethod,
) -> Result<RecoveryReport, SimulationError> {
    let mut per_seed = Vec::with_capacity(n_seeds);
    for s in 0..n_seeds as u64 {
        let cfg = StudyConfig { rng_seed: config.rng_seed.wrapping_add(s), ..config.clone() };
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        rng.set_stream(0x7E0);
        let true_mu = generator.sample(cfg.n_items, &mut rng);
        let study = simulate_study(&true_mu, &cfg, options)?;
        let scores = scale_study(&study, &cfg, method)?;
        per_seed.push(srocc(&true_mu, &scores)?);
    }
    let mut sorted = per_seed.clone();
    sorted.sort_by(f64::total_cmp);
    let median = match sorted.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => sorted[n / 2],
        n => (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0,
    };
    Ok(RecoveryReport { min: sorted.first().copied().unwrap_or(f64::NAN), median, per_seed })
}
