//! Domain types shared across the toolkit and construction of the count matrix.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("duplicate item id `{0}`")]
    DuplicateItem(String),
    #[error("study declares more than one {0:?} item")]
    DuplicateAnchor(ItemKind),
    #[error("vote #{vote}: unknown item id `{id}`")]
    UnknownItem { vote: usize, id: String },
    #[error("vote #{vote}: winner `{winner}` not in pair")]
    WinnerNotInPair { vote: usize, winner: String },
    #[error("vote #{vote}: item compared with itself")]
    SelfComparison { vote: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemKind {
    Real,
    AnchorWorst,
    AnchorBest,
    TestReference,
    TestDegraded,
}

impl ItemKind {
    /// Items that take part in scale reconstruction (real stimuli and anchors).
    pub fn is_scalable(self) -> bool {
        matches!(self, ItemKind::Real | ItemKind::AnchorWorst | ItemKind::AnchorBest)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub id: String,
    pub kind: ItemKind,
}

impl Item {
    pub fn new(id: impl Into<String>, kind: ItemKind) -> Self {
        Self { id: id.into(), kind }
    }

    pub fn real(id: impl Into<String>) -> Self {
        Self::new(id, ItemKind::Real)
    }
}

/// Ordered set of items. The registry order fixes every matrix index downstream.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ItemRegistry {
    items: Vec<Item>,
    index: HashMap<String, usize>,
}

impl ItemRegistry {
    pub fn new(items: impl IntoIterator<Item = Item>) -> Result<Self, ModelError> {
        let mut registry = Self::default();
        for item in items {
            registry.push(item)?;
        }
        Ok(registry)
    }

    /// Registry of real items with ids `0..n` formatted by `prefix`.
    pub fn with_real_items(n: usize, prefix: &str) -> Self {
        Self::new((0..n).map(|i| Item::real(format!("{prefix}{i}")))).expect("generated ids are unique")
    }

    pub fn push(&mut self, item: Item) -> Result<usize, ModelError> {
        if self.index.contains_key(&item.id) {
            return Err(ModelError::DuplicateItem(item.id));
        }
        if matches!(item.kind, ItemKind::AnchorWorst | ItemKind::AnchorBest)
            && self.items.iter().any(|it| it.kind == item.kind)
        {
            return Err(ModelError::DuplicateAnchor(item.kind));
        }
        let idx = self.items.len();
        self.index.insert(item.id.clone(), idx);
        self.items.push(item);
        Ok(idx)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn get(&self, idx: usize) -> Option<&Item> {
        self.items.get(idx)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn id(&self, idx: usize) -> &str {
        &self.items[idx].id
    }

    fn first_of(&self, kind: ItemKind) -> Option<usize> {
        self.items.iter().position(|it| it.kind == kind)
    }

    pub fn anchor_worst(&self) -> Option<usize> {
        self.first_of(ItemKind::AnchorWorst)
    }

    pub fn anchor_best(&self) -> Option<usize> {
        self.first_of(ItemKind::AnchorBest)
    }

    /// Sub-registry of items that enter the count matrix, in registry order.
    pub fn scalable(&self) -> ItemRegistry {
        Self::new(self.items.iter().filter(|it| it.kind.is_scalable()).cloned())
            .expect("subset of a valid registry is valid")
    }
}

/// One forced-choice judgment. `winner` is always one of `item_a`/`item_b`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vote {
    pub worker_id: String,
    pub item_a: String,
    pub item_b: String,
    pub winner: String,
    pub is_test_question: bool,
    pub timestamp_ms: i64,
    pub page_index: u32,
}

impl Vote {
    pub fn new(
        worker_id: impl Into<String>,
        item_a: impl Into<String>,
        item_b: impl Into<String>,
        winner: impl Into<String>,
    ) -> Self {
        Self {
            worker_id: worker_id.into(),
            item_a: item_a.into(),
            item_b: item_b.into(),
            winner: winner.into(),
            is_test_question: false,
            timestamp_ms: 0,
            page_index: 0,
        }
    }

    pub fn winner_in_pair(&self) -> bool {
        self.winner == self.item_a || self.winner == self.item_b
    }

    pub fn loser(&self) -> &str {
        if self.winner == self.item_a {
            &self.item_b
        } else {
            &self.item_a
        }
    }
}

/// Square matrix of win counts: `get(i, j)` is how often `i` was preferred over `j`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountMatrix {
    n: usize,
    counts: Vec<u64>,
}

impl CountMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, counts: vec![0; n * n] }
    }

    /// Build from dense rows. Diagonal entries must be zero.
    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self, ModelError> {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(ModelError::InvalidConfig(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            if row[i] != 0 {
                return Err(ModelError::InvalidConfig(format!("diagonal entry {i} is nonzero")));
            }
            m.counts[i * n..(i + 1) * n].copy_from_slice(row);
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, winner: usize, loser: usize) -> u64 {
        self.counts[winner * self.n + loser]
    }

    pub fn add(&mut self, winner: usize, loser: usize, count: u64) {
        assert_ne!(winner, loser, "self comparison");
        self.counts[winner * self.n + loser] += count;
    }

    /// Total votes cast on the unordered pair.
    pub fn pair_total(&self, i: usize, j: usize) -> u64 {
        self.get(i, j) + self.get(j, i)
    }

    /// Observed unordered pairs `(i, j)` with `i < j`, in row-major order.
    pub fn observed_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.pair_total(i, j) > 0 {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn total_votes(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Tally votes into a count matrix indexed by `items`.
///
/// Votes flagged as test questions measure workers, not items, and are skipped.
pub fn build_count_matrix(votes: &[Vote], items: &ItemRegistry) -> Result<CountMatrix, ModelError> {
    let mut matrix = CountMatrix::zeros(items.len());
    for (k, vote) in votes.iter().enumerate() {
        if vote.is_test_question {
            continue;
        }
        if !vote.winner_in_pair() {
            return Err(ModelError::WinnerNotInPair { vote: k, winner: vote.winner.clone() });
        }
        let lookup = |id: &str| items.index_of(id).ok_or_else(|| ModelError::UnknownItem { vote: k, id: id.to_owned() });
        let a = lookup(&vote.item_a)?;
        let b = lookup(&vote.item_b)?;
        if a == b {
            return Err(ModelError::SelfComparison { vote: k });
        }
        let (w, l) = if vote.winner == vote.item_a { (a, b) } else { (b, a) };
        matrix.add(w, l, 1);
    }
    Ok(matrix)
}

/// Undirected comparison design over items `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairGraph {
    pub n: usize,
    /// Sorted edges with `a < b` in each pair.
    pub edges: Vec<(usize, usize)>,
    pub target_degree: usize,
    /// False when the generator had to add bridging edges to connect the graph.
    pub regular: bool,
}

impl PairGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>, target_degree: usize) -> Self {
        let mut edges: Vec<_> = edges.into_iter().map(|(a, b)| if a < b { (a, b) } else { (b, a) }).collect();
        edges.sort_unstable();
        edges.dedup();
        Self { n, edges, target_degree, regular: true }
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        self.edges.binary_search(&key).is_ok()
    }

    pub fn components(&self) -> Vec<Vec<usize>> {
        connected_components(self.n, &self.edges)
    }

    pub fn is_connected(&self) -> bool {
        self.n <= 1 || self.components().len() == 1
    }

    /// Checks the near-regular degree invariant: all vertices at `target_degree`,
    /// except a single vertex one above it when `n · d` is odd.
    pub fn satisfies_degree_invariant(&self) -> bool {
        let d = self.target_degree;
        let deg = self.degrees();
        let above = deg.iter().filter(|&&x| x == d + 1).count();
        let exact = deg.iter().filter(|&&x| x == d).count();
        if (self.n * d).is_multiple_of(2) {
            exact == self.n
        } else {
            above == 1 && exact == self.n - 1
        }
    }
}

/// Connected components by breadth-first search, each sorted, ordered by smallest vertex.
pub fn connected_components(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    comp.push(u);
                    queue.push_back(u);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Rule for keeping empirical preference proportions away from 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(try_from = "String", into = "String")]
pub enum EpsilonPolicy {
    /// `ε = 1 / (2 · votes on the pair)`; only unanimous outcomes are affected.
    #[default]
    HalfVote,
    /// Clip every proportion into `[ε, 1 − ε]`.
    Fixed(f64),
}

impl EpsilonPolicy {
    pub fn epsilon(self, pair_total: u64) -> f64 {
        match self {
            EpsilonPolicy::HalfVote => 1.0 / (2.0 * pair_total as f64),
            EpsilonPolicy::Fixed(eps) => eps,
        }
    }
}

impl fmt::Display for EpsilonPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EpsilonPolicy::HalfVote => f.write_str("half_vote"),
            EpsilonPolicy::Fixed(eps) => write!(f, "fixed:{eps}"),
        }
    }
}

impl FromStr for EpsilonPolicy {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ModelError::InvalidConfig(format!("epsilon policy `{s}`; expected `half_vote` or `fixed:<eps>`"));
        if s == "half_vote" {
            return Ok(EpsilonPolicy::HalfVote);
        }
        let eps: f64 = s.strip_prefix("fixed:").ok_or_else(bad)?.parse().map_err(|_| bad())?;
        if !(eps > 0.0 && eps < 0.5) {
            return Err(bad());
        }
        Ok(EpsilonPolicy::Fixed(eps))
    }
}

impl TryFrom<String> for EpsilonPolicy {
    type Error = ModelError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<EpsilonPolicy> for String {
    fn from(p: EpsilonPolicy) -> Self {
        p.to_string()
    }
}

/// Study parameters. Serialized as a flat key/value document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub n_items: usize,
    pub degree: usize,
    pub votes_per_pair: u32,
    pub pairs_per_page: usize,
    pub hidden_tests_per_page: usize,
    pub quiz_size: usize,
    pub quiz_pass_fraction: f64,
    pub hidden_fail_fraction: f64,
    pub trust_accuracy: f64,
    pub rng_seed: u64,
    pub sigma_ab: f64,
    pub epsilon_policy: EpsilonPolicy,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            n_items: 141,
            degree: 6,
            votes_per_pair: 30,
            pairs_per_page: 20,
            hidden_tests_per_page: 1,
            quiz_size: 10,
            quiz_pass_fraction: 0.7,
            hidden_fail_fraction: 0.30,
            trust_accuracy: 0.70,
            rng_seed: 0,
            sigma_ab: 1.0,
            epsilon_policy: EpsilonPolicy::HalfVote,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |msg: String| Err(ModelError::InvalidConfig(msg));
        if self.n_items < 2 {
            return fail(format!("n_items must be at least 2, got {}", self.n_items));
        }
        if self.degree == 0 || self.degree >= self.n_items {
            return fail(format!("degree must be in 1..{}, got {}", self.n_items, self.degree));
        }
        if self.votes_per_pair == 0 {
            return fail("votes_per_pair must be positive".into());
        }
        if self.pairs_per_page == 0 {
            return fail("pairs_per_page must be positive".into());
        }
        if self.hidden_tests_per_page == 0 {
            return fail("hidden_tests_per_page must be positive".into());
        }
        if !(self.hidden_fail_fraction > 0.0 && self.hidden_fail_fraction < 1.0) {
            return fail(format!("hidden_fail_fraction must be in (0, 1), got {}", self.hidden_fail_fraction));
        }
        if !(self.trust_accuracy > 0.0 && self.trust_accuracy <= 1.0) {
            return fail(format!("trust_accuracy must be in (0, 1], got {}", self.trust_accuracy));
        }
        if !(self.quiz_pass_fraction >= 0.0 && self.quiz_pass_fraction <= 1.0) {
            return fail(format!("quiz_pass_fraction must be in [0, 1], got {}", self.quiz_pass_fraction));
        }
        if !(self.sigma_ab > 0.0 && self.sigma_ab.is_finite()) {
            return fail(format!("sigma_ab must be positive, got {}", self.sigma_ab));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkerStatus {
    QuizFailed,
    Disqualified,
    Trusted,
    Active,
}

impl WorkerStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            WorkerStatus::QuizFailed => "quiz_failed",
            WorkerStatus::Disqualified => "disqualified",
            WorkerStatus::Trusted => "trusted",
            WorkerStatus::Active => "active",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkerRecord {
    pub worker_id: String,
    pub quiz_correct: u32,
    pub quiz_total: u32,
    pub hidden_correct: u32,
    pub hidden_total: u32,
    pub status: WorkerStatus,
}

impl WorkerRecord {
    pub fn new(worker_id: impl Into<String>) -> Self {
        Self {
            worker_id: worker_id.into(),
            quiz_correct: 0,
            quiz_total: 0,
            hidden_correct: 0,
            hidden_total: 0,
            status: WorkerStatus::Active,
        }
    }

    /// Fraction of hidden tests answered correctly; `None` before the first one.
    pub fn hidden_accuracy(&self) -> Option<f64> {
        (self.hidden_total > 0).then(|| self.hidden_correct as f64 / self.hidden_total as f64)
    }

    pub fn hidden_failures(&self) -> u32 {
        self.hidden_total - self.hidden_correct
    }
}
