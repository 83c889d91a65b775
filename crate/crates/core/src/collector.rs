//! Live paired-comparison study engine.
//!
//! [`Collector`] owns studies and worker sessions and implements the protocol:
//! quiz gating, page serving with interleaved hidden test questions, vote
//! recording, mid-job disqualification, and export of trusted votes. It is a
//! plain synchronous state machine; callers supply the clock (`now_ms`) and
//! provide their own locking when shared between threads.

use std::collections::{HashMap, HashSet};

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::generate_pair_graph;
use crate::model::{Item, ItemKind, ItemRegistry, PairGraph, StudyConfig, Vote, WorkerRecord, WorkerStatus};
use crate::qc::{self, accuracy_histogram, DEFAULT_BAND_EDGES};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CollectorError {
    #[error("{0} not found")]
    NotFound(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("worker `{0}` is permanently disqualified from this study")]
    PermanentlyDisqualified(String),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("no more work available in this study")]
    NoMoreWork,
    #[error("bad request: {0}")]
    BadRequest(String),
}

impl CollectorError {
    /// Stable machine-readable error code.
    pub fn code(&self) -> &'static str {
        match self {
            CollectorError::NotFound(_) => "not_found",
            CollectorError::InvalidConfig(_) => "invalid_config",
            CollectorError::PermanentlyDisqualified(_) => "permanently_disqualified",
            CollectorError::Conflict(_) => "conflict",
            CollectorError::NoMoreWork => "no_more_work",
            CollectorError::BadRequest(_) => "bad_request",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestItem {
    pub id: String,
    pub kind: ItemKind,
    /// URL or path of the image shown for this item.
    #[serde(default)]
    pub media: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestPair {
    /// The ground-truth image, the expected answer.
    pub reference: String,
    pub degraded: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyManifest {
    pub items: Vec<ManifestItem>,
    pub test_pairs: Vec<TestPair>,
}

/// One displayed pair. Hidden tests look exactly like real pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairPayload {
    pub left: String,
    pub right: String,
    pub left_media: Option<String>,
    pub right_media: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChoicePayload {
    pub left: String,
    pub right: String,
    pub winner: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionState {
    Quiz,
    Active,
    QuizFailed,
    Disqualified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionStart {
    pub session_id: String,
    pub state: SessionState,
    pub quiz: Vec<PairPayload>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuizOutcome {
    pub passed: bool,
    pub score: f64,
    pub state: SessionState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PagePayload {
    pub page_index: u32,
    pub pairs: Vec<PairPayload>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmitOutcome {
    pub accepted: usize,
    pub state: SessionState,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkerCounts {
    pub active: usize,
    pub trusted: usize,
    pub disqualified: usize,
    pub quiz_failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyStatus {
    pub study_id: String,
    pub pairs: usize,
    pub votes_per_pair: u32,
    pub complete_pairs: usize,
    pub remaining_votes: u64,
    pub logged_votes: usize,
    pub workers: WorkerCounts,
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionStats {
    pub pairs: usize,
    pub complete_pairs: usize,
    pub trusted_votes: usize,
    pub workers: WorkerCounts,
    /// Trusted-worker accuracy bands `[0.7, 0.8)`, `[0.8, 0.9)`, `[0.9, 1.0]`.
    pub accuracy_bands: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyExport {
    /// Votes of trusted workers only; each real pair truncated to `votes_per_pair`
    /// by earliest timestamp. Hidden-test answers are included and flagged.
    pub votes: Vec<Vote>,
    pub roster: Vec<WorkerRecord>,
    pub stats: CompletionStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SlotKind {
    Real(usize),
    Hidden(usize),
}

#[derive(Debug, Clone)]
struct Slot {
    left: usize,
    right: usize,
    kind: SlotKind,
}

#[derive(Debug, Clone)]
struct ServedPage {
    index: u32,
    slots: Vec<Slot>,
}

#[derive(Debug, Clone)]
struct LoggedVote {
    vote: Vote,
    worker: usize,
    pair: Option<usize>,
}

#[derive(Debug, Clone)]
struct WorkerState {
    record: WorkerRecord,
    /// Indices into the study log of this worker's real-pair votes.
    real_votes: Vec<usize>,
    quiz_passed: bool,
}

#[derive(Debug)]
struct Study {
    id: String,
    config: StudyConfig,
    registry: ItemRegistry,
    media: Vec<Option<String>>,
    /// Registry index of each graph vertex.
    real: Vec<usize>,
    graph: PairGraph,
    test_pairs: Vec<(usize, usize)>,
    /// Votes per pair from workers not (yet) excluded.
    eligible: Vec<u32>,
    log: Vec<LoggedVote>,
    workers: Vec<WorkerState>,
    worker_index: HashMap<String, usize>,
}

#[derive(Debug)]
struct Session {
    study: String,
    worker: usize,
    state: SessionState,
    rng: ChaCha8Rng,
    quiz: Vec<Slot>,
    judged: HashSet<usize>,
    served: Option<ServedPage>,
    next_page: u32,
}

/// In-memory store of studies and sessions.
#[derive(Debug, Default)]
pub struct Collector {
    studies: HashMap<String, Study>,
    sessions: HashMap<String, Session>,
    next_study: u64,
    next_session: u64,
}

impl Study {
    fn pair_items(&self, pair: usize) -> (usize, usize) {
        let (a, b) = self.graph.edges[pair];
        (self.real[a], self.real[b])
    }

    fn payload(&self, slot: &Slot) -> PairPayload {
        PairPayload {
            left: self.registry.id(slot.left).to_owned(),
            right: self.registry.id(slot.right).to_owned(),
            left_media: self.media[slot.left].clone(),
            right_media: self.media[slot.right].clone(),
        }
    }

    fn complete_pairs(&self) -> usize {
        self.eligible.iter().filter(|&&c| c >= self.config.votes_per_pair).count()
    }

    fn final_status(&self, worker: &WorkerState) -> WorkerStatus {
        match worker.record.status {
            WorkerStatus::QuizFailed | WorkerStatus::Disqualified => worker.record.status,
            _ if !worker.quiz_passed => WorkerStatus::Active,
            _ => qc::classify(&worker.record, &self.config),
        }
    }

    fn worker_counts(&self, final_labels: bool) -> WorkerCounts {
        let mut counts = WorkerCounts::default();
        for w in &self.workers {
            let status = if final_labels { self.final_status(w) } else { w.record.status };
            match status {
                WorkerStatus::Active => counts.active += 1,
                WorkerStatus::Trusted => counts.trusted += 1,
                WorkerStatus::Disqualified => counts.disqualified += 1,
                WorkerStatus::QuizFailed => counts.quiz_failed += 1,
            }
        }
        counts
    }
}

/// Randomly orient a pair for display.
fn oriented<R: Rng>(a: usize, b: usize, kind: SlotKind, rng: &mut R) -> Slot {
    if rng.random_bool(0.5) {
        Slot { left: a, right: b, kind }
    } else {
        Slot { left: b, right: a, kind }
    }
}

/// Match submitted choices one-to-one against the displayed slots.
fn match_choices(study: &Study, slots: &[Slot], choices: &[ChoicePayload]) -> Result<Vec<(usize, usize)>, CollectorError> {
    let mut by_pair: HashMap<(&str, &str), usize> = HashMap::new();
    for (k, slot) in slots.iter().enumerate() {
        let (a, b) = (study.registry.id(slot.left), study.registry.id(slot.right));
        by_pair.insert(if a < b { (a, b) } else { (b, a) }, k);
    }
    let mut seen = vec![false; slots.len()];
    let mut out = Vec::with_capacity(choices.len());
    for choice in choices {
        let key = if choice.left < choice.right { (choice.left.as_str(), choice.right.as_str()) } else { (choice.right.as_str(), choice.left.as_str()) };
        let k = *by_pair
            .get(&key)
            .ok_or_else(|| CollectorError::BadRequest(format!("vote on unserved pair ({}, {})", choice.left, choice.right)))?;
        if seen[k] {
            return Err(CollectorError::BadRequest(format!("duplicate vote on pair ({}, {})", choice.left, choice.right)));
        }
        seen[k] = true;
        let slot = &slots[k];
        let winner = study
            .registry
            .index_of(&choice.winner)
            .filter(|&w| w == slot.left || w == slot.right)
            .ok_or_else(|| CollectorError::BadRequest(format!("winner `{}` not in pair", choice.winner)))?;
        out.push((k, winner));
    }
    if let Some(k) = seen.iter().position(|s| !s) {
        let p = study.payload(&slots[k]);
        return Err(CollectorError::BadRequest(format!("missing choice for pair ({}, {})", p.left, p.right)));
    }
    Ok(out)
}

impl Collector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register a study and generate its pair design over the real items.
    pub fn create_study(&mut self, config: StudyConfig, manifest: StudyManifest) -> Result<String, CollectorError> {
        let invalid = |m: String| CollectorError::InvalidConfig(m);
        config.validate().map_err(|e| invalid(e.to_string()))?;
        let registry = ItemRegistry::new(manifest.items.iter().map(|m| Item::new(m.id.clone(), m.kind))).map_err(|e| invalid(e.to_string()))?;
        let media = manifest.items.iter().map(|m| m.media.clone()).collect();
        let real: Vec<usize> = (0..registry.len()).filter(|&i| registry.items()[i].kind == ItemKind::Real).collect();
        if real.len() != config.n_items {
            return Err(invalid(format!("manifest has {} real items but n_items = {}", real.len(), config.n_items)));
        }
        let needed = config.quiz_size.max(config.hidden_tests_per_page);
        if manifest.test_pairs.len() < needed {
            return Err(invalid(format!("{} test pair(s) declared, quiz and pages need {needed}", manifest.test_pairs.len())));
        }
        let mut test_pairs = Vec::with_capacity(manifest.test_pairs.len());
        for tp in &manifest.test_pairs {
            let lookup = |id: &str, kind: ItemKind| {
                registry
                    .index_of(id)
                    .filter(|&i| registry.items()[i].kind == kind)
                    .ok_or_else(|| invalid(format!("test pair item `{id}` is not a declared {kind:?} item")))
            };
            test_pairs.push((lookup(&tp.reference, ItemKind::TestReference)?, lookup(&tp.degraded, ItemKind::TestDegraded)?));
        }
        let graph = generate_pair_graph(real.len(), config.degree, config.rng_seed).map_err(|e| invalid(e.to_string()))?;

        self.next_study += 1;
        let id = format!("study-{}", self.next_study);
        let eligible = vec![0; graph.edges.len()];
        self.studies.insert(
            id.clone(),
            Study {
                id: id.clone(),
                config,
                registry,
                media,
                real,
                graph,
                test_pairs,
                eligible,
                log: Vec::new(),
                workers: Vec::new(),
                worker_index: HashMap::new(),
            },
        );
        Ok(id)
    }

    fn study(&self, id: &str) -> Result<&Study, CollectorError> {
        self.studies.get(id).ok_or_else(|| CollectorError::NotFound(format!("study `{id}`")))
    }

    /// The pair design of a study, with item ids per vertex.
    pub fn design(&self, study_id: &str) -> Result<(PairGraph, Vec<String>), CollectorError> {
        let study = self.study(study_id)?;
        Ok((study.graph.clone(), study.real.iter().map(|&i| study.registry.id(i).to_owned()).collect()))
    }

    pub fn start_session(&mut self, study_id: &str, worker_id: &str) -> Result<SessionStart, CollectorError> {
        let study = self.studies.get_mut(study_id).ok_or_else(|| CollectorError::NotFound(format!("study `{study_id}`")))?;
        let worker = match study.worker_index.get(worker_id) {
            Some(&w) => w,
            None => {
                study.workers.push(WorkerState { record: WorkerRecord::new(worker_id), real_votes: Vec::new(), quiz_passed: false });
                study.worker_index.insert(worker_id.to_owned(), study.workers.len() - 1);
                study.workers.len() - 1
            }
        };
        let ws = &study.workers[worker];
        if matches!(ws.record.status, WorkerStatus::QuizFailed | WorkerStatus::Disqualified) {
            return Err(CollectorError::PermanentlyDisqualified(worker_id.to_owned()));
        }

        self.next_session += 1;
        let session_id = format!("session-{}", self.next_session);
        let mut rng = ChaCha8Rng::seed_from_u64(study.config.rng_seed);
        rng.set_stream(self.next_session);

        let quiz_size = study.config.quiz_size;
        let (state, quiz) = if ws.quiz_passed || quiz_size == 0 {
            (SessionState::Active, Vec::new())
        } else {
            let quiz = index::sample(&mut rng, study.test_pairs.len(), quiz_size)
                .into_iter()
                .map(|t| {
                    let (r, d) = study.test_pairs[t];
                    oriented(r, d, SlotKind::Hidden(t), &mut rng)
                })
                .collect();
            (SessionState::Quiz, quiz)
        };
        if quiz_size == 0 {
            study.workers[worker].quiz_passed = true;
        }
        let payload = quiz.iter().map(|s| study.payload(s)).collect();
        self.sessions.insert(
            session_id.clone(),
            Session { study: study.id.clone(), worker, state, rng, quiz, judged: HashSet::new(), served: None, next_page: 0 },
        );
        Ok(SessionStart { session_id, state, quiz: payload })
    }

    fn session_parts(&mut self, session_id: &str) -> Result<(&mut Session, &mut Study), CollectorError> {
        let session = self.sessions.get_mut(session_id).ok_or_else(|| CollectorError::NotFound(format!("session `{session_id}`")))?;
        let study = self.studies.get_mut(&session.study).ok_or_else(|| CollectorError::NotFound(format!("study `{}`", session.study)))?;
        Ok((session, study))
    }

    pub fn session_state(&self, session_id: &str) -> Result<SessionState, CollectorError> {
        self.sessions.get(session_id).map(|s| s.state).ok_or_else(|| CollectorError::NotFound(format!("session `{session_id}`")))
    }

    pub fn submit_quiz(&mut self, session_id: &str, answers: &[ChoicePayload]) -> Result<QuizOutcome, CollectorError> {
        let (session, study) = self.session_parts(session_id)?;
        if session.state != SessionState::Quiz {
            return Err(CollectorError::Conflict("quiz already submitted".into()));
        }
        let matched = match_choices(study, &session.quiz, answers)?;
        let correct = matched
            .iter()
            .filter(|&&(k, winner)| match session.quiz[k].kind {
                SlotKind::Hidden(t) => study.test_pairs[t].0 == winner,
                SlotKind::Real(_) => unreachable!("quiz holds test pairs only"),
            })
            .count() as u32;
        let grade = qc::grade_counts(correct, session.quiz.len() as u32, study.config.quiz_pass_fraction).map_err(|e| CollectorError::BadRequest(e.to_string()))?;
        let worker = &mut study.workers[session.worker];
        worker.record.quiz_correct = grade.correct;
        worker.record.quiz_total = grade.total;
        if grade.passed {
            worker.quiz_passed = true;
            session.state = SessionState::Active;
        } else {
            worker.record.status = WorkerStatus::QuizFailed;
            session.state = SessionState::QuizFailed;
        }
        Ok(QuizOutcome { passed: grade.passed, score: grade.score, state: session.state })
    }

    /// Serve the next page, or re-serve the current one if it has not been submitted.
    pub fn get_page(&mut self, session_id: &str) -> Result<PagePayload, CollectorError> {
        let (session, study) = self.session_parts(session_id)?;
        match session.state {
            SessionState::Active => {}
            SessionState::Quiz => return Err(CollectorError::Conflict("quiz not yet passed".into())),
            _ => return Err(CollectorError::PermanentlyDisqualified(study.workers[session.worker].record.worker_id.clone())),
        }
        if session.served.is_none() {
            let quota = study.config.votes_per_pair;
            let mut open: Vec<(u32, u64, usize)> = (0..study.graph.edges.len())
                .filter(|p| study.eligible[*p] < quota && !session.judged.contains(p))
                .map(|p| (study.eligible[p], session.rng.random::<u64>(), p))
                .collect();
            if open.is_empty() {
                return Err(CollectorError::NoMoreWork);
            }
            open.sort_unstable();
            let mut slots: Vec<Slot> = open
                .iter()
                .take(study.config.pairs_per_page)
                .map(|&(_, _, p)| {
                    let (a, b) = study.pair_items(p);
                    oriented(a, b, SlotKind::Real(p), &mut session.rng)
                })
                .collect();
            for t in index::sample(&mut session.rng, study.test_pairs.len(), study.config.hidden_tests_per_page) {
                let (r, d) = study.test_pairs[t];
                slots.push(oriented(r, d, SlotKind::Hidden(t), &mut session.rng));
            }
            slots.shuffle(&mut session.rng);
            session.served = Some(ServedPage { index: session.next_page, slots });
        }
        let page = session.served.as_ref().expect("served above");
        Ok(PagePayload { page_index: page.index, pairs: page.slots.iter().map(|s| study.payload(s)).collect() })
    }

    /// Record a page of choices. Every served pair needs exactly one choice.
    pub fn submit_votes(&mut self, session_id: &str, page_index: u32, choices: &[ChoicePayload], now_ms: i64) -> Result<SubmitOutcome, CollectorError> {
        let (session, study) = self.session_parts(session_id)?;
        if session.state != SessionState::Active {
            return Err(CollectorError::Conflict(format!("session is {:?}", session.state)));
        }
        let page = match &session.served {
            Some(p) if p.index == page_index => p,
            _ if page_index < session.next_page => return Err(CollectorError::Conflict(format!("page {page_index} already submitted"))),
            _ => return Err(CollectorError::BadRequest(format!("page {page_index} was not served"))),
        };
        let matched = match_choices(study, &page.slots, choices)?;
        let worker_id = study.workers[session.worker].record.worker_id.clone();
        let mut accepted = 0;
        for (k, winner) in matched {
            let slot = &page.slots[k];
            let (pair, is_test) = match slot.kind {
                SlotKind::Real(p) => (Some(p), false),
                SlotKind::Hidden(t) => {
                    let worker = &mut study.workers[session.worker];
                    worker.record.hidden_total += 1;
                    if study.test_pairs[t].0 == winner {
                        worker.record.hidden_correct += 1;
                    }
                    (None, true)
                }
            };
            let vote = Vote {
                worker_id: worker_id.clone(),
                item_a: study.registry.id(slot.left).to_owned(),
                item_b: study.registry.id(slot.right).to_owned(),
                winner: study.registry.id(winner).to_owned(),
                is_test_question: is_test,
                timestamp_ms: now_ms,
                page_index,
            };
            if let Some(p) = pair {
                study.eligible[p] += 1;
                session.judged.insert(p);
                study.workers[session.worker].real_votes.push(study.log.len());
            }
            study.log.push(LoggedVote { vote, worker: session.worker, pair });
            accepted += 1;
        }
        session.served = None;
        session.next_page = page_index + 1;

        let worker = &mut study.workers[session.worker];
        if qc::exceeds_failure_limit(worker.record.hidden_failures(), worker.record.hidden_total, study.config.hidden_fail_fraction) {
            worker.record.status = WorkerStatus::Disqualified;
            session.state = SessionState::Disqualified;
            for &k in &worker.real_votes {
                if let Some(p) = study.log[k].pair {
                    study.eligible[p] -= 1;
                }
            }
        }
        Ok(SubmitOutcome { accepted, state: session.state })
    }

    pub fn status(&self, study_id: &str) -> Result<StudyStatus, CollectorError> {
        let study = self.study(study_id)?;
        let quota = study.config.votes_per_pair;
        let complete_pairs = study.complete_pairs();
        Ok(StudyStatus {
            study_id: study.id.clone(),
            pairs: study.graph.edges.len(),
            votes_per_pair: quota,
            complete_pairs,
            remaining_votes: study.eligible.iter().map(|&c| quota.saturating_sub(c) as u64).sum(),
            logged_votes: study.log.len(),
            workers: study.worker_counts(false),
            complete: complete_pairs == study.graph.edges.len(),
        })
    }

    /// Worker roster and trusted votes, deterministic for a given log.
    pub fn export(&self, study_id: &str) -> Result<StudyExport, CollectorError> {
        let study = self.study(study_id)?;
        let roster: Vec<WorkerRecord> = study
            .workers
            .iter()
            .map(|w| WorkerRecord { status: study.final_status(w), ..w.record.clone() })
            .collect();
        let trusted: Vec<bool> = roster.iter().map(|r| r.status == WorkerStatus::Trusted).collect();

        let quota = study.config.votes_per_pair as usize;
        let mut per_pair: Vec<Vec<usize>> = vec![Vec::new(); study.graph.edges.len()];
        for (k, lv) in study.log.iter().enumerate() {
            if let (true, Some(p)) = (trusted[lv.worker], lv.pair) {
                per_pair[p].push(k);
            }
        }
        let mut keep = vec![false; study.log.len()];
        let mut complete_pairs = 0;
        for entries in &mut per_pair {
            entries.sort_by_key(|&k| (study.log[k].vote.timestamp_ms, k));
            entries.truncate(quota);
            complete_pairs += usize::from(entries.len() == quota);
            for &k in entries.iter() {
                keep[k] = true;
            }
        }
        let votes: Vec<Vote> = study
            .log
            .iter()
            .enumerate()
            .filter(|(k, lv)| trusted[lv.worker] && (lv.pair.is_none() || keep[*k]))
            .map(|(_, lv)| lv.vote.clone())
            .collect();

        let trusted_records: Vec<WorkerRecord> = roster.iter().filter(|r| r.status == WorkerStatus::Trusted).cloned().collect();
        let stats = CompletionStats {
            pairs: study.graph.edges.len(),
            complete_pairs,
            trusted_votes: votes.iter().filter(|v| !v.is_test_question).count(),
            workers: study.worker_counts(true),
            accuracy_bands: accuracy_histogram(&trusted_records, &DEFAULT_BAND_EDGES).ok(),
        };
        Ok(StudyExport { votes, roster, stats })
    }

    /// Every recorded vote in arrival order, including those of excluded workers.
    pub fn raw_votes(&self, study_id: &str) -> Result<Vec<Vote>, CollectorError> {
        Ok(self.study(study_id)?.log.iter().map(|lv| lv.vote.clone()).collect())
    }

    /// Media reference of an item, if the manifest declared one.
    pub fn media(&self, study_id: &str, item_id: &str) -> Result<Option<String>, CollectorError> {
        let study = self.study(study_id)?;
        let idx = study.registry.index_of(item_id).ok_or_else(|| CollectorError::NotFound(format!("item `{item_id}`")))?;
        Ok(study.media[idx].clone())
    }

    /// Scalable items (real items and declared anchors) of a study, in manifest order.
    pub fn scalable_items(&self, study_id: &str) -> Result<ItemRegistry, CollectorError> {
        Ok(self.study(study_id)?.registry.scalable())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(n: usize, tests: usize) -> StudyManifest {
        let mut items: Vec<ManifestItem> = (0..n).map(|i| ManifestItem { id: format!("m{i}"), kind: ItemKind::Real, media: Some(format!("img/m{i}.png")) }).collect();
        let mut test_pairs = Vec::new();
        for t in 0..tests {
            items.push(ManifestItem { id: format!("gt{t}"), kind: ItemKind::TestReference, media: None });
            items.push(ManifestItem { id: format!("bad{t}"), kind: ItemKind::TestDegraded, media: None });
            test_pairs.push(TestPair { reference: format!("gt{t}"), degraded: format!("bad{t}") });
        }
        StudyManifest { items, test_pairs }
    }

    fn answer_all(pairs: &[PairPayload], correct: impl Fn(&PairPayload) -> String) -> Vec<ChoicePayload> {
        pairs.iter().map(|p| ChoicePayload { left: p.left.clone(), right: p.right.clone(), winner: correct(p) }).collect()
    }

    fn honest(p: &PairPayload) -> String {
        if p.right.starts_with("gt") { p.right.clone() } else { p.left.clone() }
    }

    #[test]
    fn create_study_examples() {
        let mut c = Collector::new();
        let id = c.create_study(StudyConfig::default(), manifest(141, 10)).unwrap();
        assert_eq!(c.status(&id).unwrap().pairs, 423);
        let small = StudyConfig { n_items: 2, degree: 1, quiz_size: 1, ..Default::default() };
        let id = c.create_study(small.clone(), manifest(2, 1)).unwrap();
        assert_eq!(c.status(&id).unwrap().pairs, 1);
        let mut dup = manifest(2, 1);
        dup.items[1].id = "m0".into();
        assert!(matches!(c.create_study(small.clone(), dup), Err(CollectorError::InvalidConfig(_))));
        let few_tests = StudyConfig { quiz_size: 3, ..small };
        assert!(matches!(c.create_study(few_tests, manifest(2, 2)), Err(CollectorError::InvalidConfig(_))));
    }

    #[test]
    fn quiz_gate_and_double_submission() {
        let mut c = Collector::new();
        let config = StudyConfig { n_items: 6, degree: 2, quiz_size: 4, ..Default::default() };
        let id = c.create_study(config, manifest(6, 4)).unwrap();
        let s = c.start_session(&id, "w1").unwrap();
        assert_eq!(s.quiz.len(), 4);
        assert!(matches!(c.get_page(&s.session_id), Err(CollectorError::Conflict(_))));
        let out = c.submit_quiz(&s.session_id, &answer_all(&s.quiz, honest)).unwrap();
        assert!(out.passed);
        assert!(matches!(c.submit_quiz(&s.session_id, &answer_all(&s.quiz, honest)), Err(CollectorError::Conflict(_))));

        let s2 = c.start_session(&id, "w2").unwrap();
        let wrong = |p: &PairPayload| if p.left.starts_with("bad") { p.left.clone() } else { p.right.clone() };
        assert!(!c.submit_quiz(&s2.session_id, &answer_all(&s2.quiz, wrong)).unwrap().passed);
        assert!(matches!(c.start_session(&id, "w2"), Err(CollectorError::PermanentlyDisqualified(_))));
        // a worker who passed before skips the quiz
        assert_eq!(c.start_session(&id, "w1").unwrap().state, SessionState::Active);
    }

    #[test]
    fn page_validation() {
        let mut c = Collector::new();
        let config = StudyConfig { n_items: 10, degree: 3, quiz_size: 0, pairs_per_page: 4, ..Default::default() };
        let id = c.create_study(config, manifest(10, 2)).unwrap();
        let s = c.start_session(&id, "w").unwrap();
        let page = c.get_page(&s.session_id).unwrap();
        assert_eq!(page.pairs.len(), 5);
        assert_eq!(c.get_page(&s.session_id).unwrap(), page);

        let mut votes = answer_all(&page.pairs, honest);
        votes.pop();
        assert!(matches!(c.submit_votes(&s.session_id, 0, &votes, 1), Err(CollectorError::BadRequest(_))));
        let mut votes = answer_all(&page.pairs, honest);
        votes[0] = ChoicePayload { left: "m0".into(), right: "zzz".into(), winner: "m0".into() };
        assert!(matches!(c.submit_votes(&s.session_id, 0, &votes, 1), Err(CollectorError::BadRequest(_))));

        let votes = answer_all(&page.pairs, honest);
        assert_eq!(c.submit_votes(&s.session_id, 0, &votes, 1).unwrap().accepted, 5);
        assert!(matches!(c.submit_votes(&s.session_id, 0, &votes, 2), Err(CollectorError::Conflict(_))));
    }

    #[test]
    fn disqualification_restores_quota_and_hides_votes() {
        let mut c = Collector::new();
        let config = StudyConfig { n_items: 10, degree: 3, quiz_size: 0, pairs_per_page: 5, votes_per_pair: 1, ..Default::default() };
        let id = c.create_study(config, manifest(10, 3)).unwrap();
        let s = c.start_session(&id, "bad").unwrap();
        let page = c.get_page(&s.session_id).unwrap();
        let wrong = |p: &PairPayload| if p.left.starts_with("bad") { p.left.clone() } else if p.right.starts_with("bad") { p.right.clone() } else { p.left.clone() };
        let out = c.submit_votes(&s.session_id, page.page_index, &answer_all(&page.pairs, wrong), 5).unwrap();
        assert_eq!(out.state, SessionState::Disqualified);
        let status = c.status(&id).unwrap();
        assert_eq!(status.complete_pairs, 0);
        assert_eq!(status.logged_votes, 6);
        let export = c.export(&id).unwrap();
        assert!(export.votes.is_empty());
        assert_eq!(export.roster[0].status, WorkerStatus::Disqualified);
        assert!(matches!(c.start_session(&id, "bad"), Err(CollectorError::PermanentlyDisqualified(_))));
    }

    #[test]
    fn no_more_work_once_quota_met() {
        let mut c = Collector::new();
        let config = StudyConfig { n_items: 3, degree: 2, quiz_size: 0, votes_per_pair: 1, ..Default::default() };
        let id = c.create_study(config, manifest(3, 1)).unwrap();
        let s = c.start_session(&id, "w").unwrap();
        let page = c.get_page(&s.session_id).unwrap();
        assert_eq!(page.pairs.len(), 4);
        c.submit_votes(&s.session_id, 0, &answer_all(&page.pairs, honest), 0).unwrap();
        assert_eq!(c.get_page(&s.session_id), Err(CollectorError::NoMoreWork));
        assert!(c.status(&id).unwrap().complete);
        let export = c.export(&id).unwrap();
        assert_eq!(export.stats.trusted_votes, 3);
        assert_eq!(export.votes.len(), 4);
    }
}
