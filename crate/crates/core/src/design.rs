//! Sparse random comparison designs, anchor injection and page scheduling.
//!
//! Pair graphs come from the pairing (configuration) model: every vertex gets
//! `d` stubs and stubs are matched at random. Stubs are paired incrementally,
//! only accepting pairs that keep the graph simple, and the whole attempt is
//! restarted when no admissible pair remains. Dense targets (`d > (n-1)/2`) are
//! built as the complement of a sparse graph with the complementary degrees.

use std::collections::HashSet;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{connected_components, Item, ItemKind, ItemRegistry, ModelError, PairGraph, StudyConfig, Vote};

pub const MAX_RESTARTS: usize = 100;
pub const ANCHOR_WORST_ID: &str = "__anchor_worst";
pub const ANCHOR_BEST_ID: &str = "__anchor_best";
pub const ANCHOR_WORKER_ID: &str = "__anchor";

/// Random stub draws tried before falling back to enumerating admissible pairs.
const RANDOM_DRAWS: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DesignError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("anchors already present in the design")]
    AnchorsPresent,
    #[error("registry has {registry} items but the graph has {graph} vertices")]
    SizeMismatch { registry: usize, graph: usize },
    #[error("no simple graph with the requested degrees after {0} attempts")]
    GenerationFailed(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Number of pairs needed to compare every item with every other, over `jobs` studies.
pub fn full_comparison_count(n_items: u64, jobs: u64) -> u64 {
    n_items * n_items.saturating_sub(1) / 2 * jobs
}

fn degree_sequence(n: usize, degree: usize) -> Vec<usize> {
    let mut seq = vec![degree; n];
    if (n * degree) % 2 == 1 {
        seq[0] += 1;
    }
    seq
}

/// One incremental pairing attempt. Returns `None` when it gets stuck.
fn pair_stubs<R: Rng>(degrees: &[usize], rng: &mut R) -> Option<Vec<(usize, usize)>> {
    let mut stubs: Vec<usize> = degrees.iter().enumerate().flat_map(|(v, &d)| std::iter::repeat_n(v, d)).collect();
    let mut edges = HashSet::with_capacity(stubs.len() / 2);
    let admissible = |edges: &HashSet<(usize, usize)>, u: usize, v: usize| u != v && !edges.contains(&(u.min(v), u.max(v)));

    while !stubs.is_empty() {
        let mut chosen = None;
        for _ in 0..RANDOM_DRAWS {
            let i = rng.random_range(0..stubs.len());
            let j = rng.random_range(0..stubs.len());
            if i != j && admissible(&edges, stubs[i], stubs[j]) {
                chosen = Some((i, j));
                break;
            }
        }
        if chosen.is_none() {
            let candidates: Vec<(usize, usize)> = (0..stubs.len())
                .flat_map(|i| (i + 1..stubs.len()).map(move |j| (i, j)))
                .filter(|&(i, j)| admissible(&edges, stubs[i], stubs[j]))
                .collect();
            if candidates.is_empty() {
                return None;
            }
            chosen = Some(candidates[rng.random_range(0..candidates.len())]);
        }
        let (i, j) = chosen.expect("set above");
        let (u, v) = (stubs[i], stubs[j]);
        edges.insert((u.min(v), u.max(v)));
        let (hi, lo) = (i.max(j), i.min(j));
        stubs.swap_remove(hi);
        stubs.swap_remove(lo);
    }
    let mut edges: Vec<_> = edges.into_iter().collect();
    edges.sort_unstable();
    Some(edges)
}

fn complement(n: usize, edges: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let present: HashSet<_> = edges.iter().copied().collect();
    (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).filter(|e| !present.contains(e)).collect()
}

/// Random connected graph on `n_items` vertices where every vertex has `degree` neighbours.
///
/// When `n_items · degree` is odd, vertex 0 gets one extra edge. If no connected
/// simple graph turns up within [`MAX_RESTARTS`] attempts, the components of the
/// last simple graph are chained together with bridging edges and the result is
/// flagged with `regular = false`.
pub fn generate_pair_graph(n_items: usize, degree: usize, seed: u64) -> Result<PairGraph, DesignError> {
    if n_items < 2 {
        return Err(DesignError::InvalidConfig(format!("need at least 2 items, got {n_items}")));
    }
    if degree == 0 || degree >= n_items {
        return Err(DesignError::InvalidConfig(format!("degree {degree} must be in 1..{n_items}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = degree_sequence(n_items, degree);
    let dense = 2 * degree > n_items - 1;
    let sequence: Vec<usize> = if dense { target.iter().map(|&d| n_items - 1 - d).collect() } else { target };

    let mut last_simple = None;
    for _ in 0..MAX_RESTARTS {
        let Some(edges) = pair_stubs(&sequence, &mut rng) else {
            continue;
        };
        let edges = if dense { complement(n_items, &edges) } else { edges };
        let graph = PairGraph::new(n_items, edges, degree);
        if graph.is_connected() {
            return Ok(graph);
        }
        last_simple = Some(graph);
    }

    let mut graph = last_simple.ok_or(DesignError::GenerationFailed(MAX_RESTARTS))?;
    let comps = connected_components(graph.n, &graph.edges);
    log::warn!("pair graph disconnected after {MAX_RESTARTS} attempts; bridging {} components", comps.len());
    let mut edges = graph.edges.clone();
    edges.extend(comps.windows(2).map(|w| (w[0][0], w[1][0])));
    graph = PairGraph::new(n_items, edges, degree);
    graph.regular = false;
    Ok(graph)
}

/// A design with worst/best anchors appended and their unanimous synthetic votes.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchoredDesign {
    pub graph: PairGraph,
    pub registry: ItemRegistry,
    pub votes: Vec<Vote>,
}

impl AnchoredDesign {
    pub fn worst(&self) -> usize {
        self.graph.n - 2
    }

    pub fn best(&self) -> usize {
        self.graph.n - 1
    }
}

/// Append a worst and a best anchor, each compared with `config.degree` random real items.
///
/// The best anchor wins every one of the `votes_per_pair` votes on its edges and
/// the worst anchor loses all of its votes.
pub fn inject_anchors(graph: &PairGraph, registry: &ItemRegistry, config: &StudyConfig) -> Result<AnchoredDesign, DesignError> {
    if registry.len() != graph.n {
        return Err(DesignError::SizeMismatch { registry: registry.len(), graph: graph.n });
    }
    if registry.anchor_worst().is_some() || registry.anchor_best().is_some() {
        return Err(DesignError::AnchorsPresent);
    }
    if config.degree == 0 || config.degree > graph.n {
        return Err(DesignError::InvalidConfig(format!("anchor degree {} must be in 1..={}", config.degree, graph.n)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed ^ 0xA7C4_0A7C_4A7C_0001);
    let worst = graph.n;
    let best = graph.n + 1;
    let mut registry = registry.clone();
    registry.push(Item::new(ANCHOR_WORST_ID, ItemKind::AnchorWorst))?;
    registry.push(Item::new(ANCHOR_BEST_ID, ItemKind::AnchorBest))?;

    let mut edges = graph.edges.clone();
    let mut votes = Vec::new();
    for anchor in [worst, best] {
        let mut partners = index::sample(&mut rng, graph.n, config.degree).into_vec();
        partners.sort_unstable();
        for real in partners {
            edges.push((real, anchor));
            let (winner, loser) = if anchor == best { (anchor, real) } else { (real, anchor) };
            for _ in 0..config.votes_per_pair {
                votes.push(Vote::new(ANCHOR_WORKER_ID, registry.id(winner), registry.id(loser), registry.id(winner)));
            }
        }
    }
    let mut augmented = PairGraph::new(graph.n + 2, edges, graph.target_degree);
    augmented.regular = graph.regular;
    Ok(AnchoredDesign { graph: augmented, registry, votes })
}

/// One page of a single pass over the design.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Page {
    pub pairs: Vec<(usize, usize)>,
    /// Hidden test questions to interleave with the pairs when the page is served.
    pub hidden_slots: usize,
}

/// Partition the design's pairs into randomly ordered pages of at most `pairs_per_page`.
///
/// One schedule is one pass: each pair appears exactly once. The collector repeats
/// passes until every pair has `votes_per_pair` accepted votes.
pub fn schedule_pages(graph: &PairGraph, config: &StudyConfig, seed: u64) -> Result<Vec<Page>, DesignError> {
    if config.pairs_per_page == 0 {
        return Err(DesignError::InvalidConfig("pairs_per_page must be positive".into()));
    }
    let hidden_slots = config.hidden_tests_per_page.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pairs = graph.edges.clone();
    pairs.shuffle(&mut rng);
    Ok(pairs.chunks(config.pairs_per_page).map(|chunk| Page { pairs: chunk.to_vec(), hidden_slots }).collect())
}
