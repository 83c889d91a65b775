//! Published re-ranking data for the Middlebury interpolation benchmark,
//! packaged with the crate.
//!
//! * `reranking.csv`: per method and sequence, the subjective value, its rank
//!   (new) and the benchmark's RMSE rank (old). `source` records the table part
//!   and row each entry was transcribed from.
//! * `reference_correlations.csv`: SROCC between the two rankings per sequence
//!   with its reported 95% interval.
//! * `metric_correlations.csv`: SROCC of several full-reference metrics against
//!   the subjective scores.

use std::sync::OnceLock;

use serde::Deserialize;

use crate::analysis::{RankedMethod, RankedSequence};

pub const AVERAGE: &str = "Average";
pub const SEQUENCES: [&str; 8] = ["Mequon", "Schefflera", "Urban", "Teddy", "Backyard", "Basketball", "Dumptruck", "Evergreen"];
pub const METHOD_COUNT: usize = 141;

const RERANKING_CSV: &str = include_str!("../fixtures/reranking.csv");
const REFERENCE_CSV: &str = include_str!("../fixtures/reference_correlations.csv");
const METRIC_CSV: &str = include_str!("../fixtures/metric_correlations.csv");

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct FixtureEntry {
    pub method: String,
    pub sequence: String,
    pub value: f64,
    pub new_rank: u32,
    pub old_rank: u32,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ReferenceCorrelation {
    pub sequence: String,
    pub srocc: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct MetricCorrelation {
    pub metric: String,
    pub sequence: String,
    pub srocc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fixtures {
    pub entries: Vec<FixtureEntry>,
    /// `Average` first, then the eight sequences.
    pub sequences: Vec<RankedSequence>,
    pub reference: Vec<ReferenceCorrelation>,
    pub metrics: Vec<MetricCorrelation>,
}

impl Fixtures {
    pub fn sequence(&self, name: &str) -> Option<&RankedSequence> {
        self.sequences.iter().find(|s| s.name == name)
    }

    pub fn reference(&self, sequence: &str) -> Option<&ReferenceCorrelation> {
        self.reference.iter().find(|r| r.sequence == sequence)
    }

    pub fn entry(&self, sequence: &str, method: &str) -> Option<&FixtureEntry> {
        self.entries.iter().find(|e| e.sequence == sequence && e.method == method)
    }
}

fn parse<T: for<'de> Deserialize<'de>>(data: &str) -> Vec<T> {
    csv::Reader::from_reader(data.as_bytes())
        .deserialize()
        .collect::<Result<_, _>>()
        .expect("packaged fixture is well formed")
}

fn build() -> Fixtures {
    let entries: Vec<FixtureEntry> = parse(RERANKING_CSV);
    let sequences = std::iter::once(AVERAGE)
        .chain(SEQUENCES)
        .map(|name| RankedSequence {
            name: name.to_owned(),
            rows: entries
                .iter()
                .filter(|e| e.sequence == name)
                .map(|e| RankedMethod { method: e.method.clone(), value: e.value, new_rank: e.new_rank, old_rank: e.old_rank })
                .collect(),
        })
        .collect();
    Fixtures { entries, sequences, reference: parse(REFERENCE_CSV), metrics: parse(METRIC_CSV) }
}

/// The packaged fixtures, parsed once.
pub fn load_fixtures() -> &'static Fixtures {
    static FIXTURES: OnceLock<Fixtures> = OnceLock::new();
    FIXTURES.get_or_init(build)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_sequence_has_all_methods() {
        let fx = load_fixtures();
        assert_eq!(fx.sequences.len(), 9);
        for seq in &fx.sequences {
            assert_eq!(seq.rows.len(), METHOD_COUNT, "{}", seq.name);
        }
        assert_eq!(fx.reference.len(), 9);
        assert_eq!(fx.metrics.len(), 45);
    }

    #[test]
    fn ranks_are_permutations_matching_value_order() {
        for seq in &load_fixtures().sequences {
            let mut new: Vec<u32> = seq.rows.iter().map(|r| r.new_rank).collect();
            let mut old: Vec<u32> = seq.rows.iter().map(|r| r.old_rank).collect();
            new.sort_unstable();
            old.sort_unstable();
            let expected: Vec<u32> = (1..=METHOD_COUNT as u32).collect();
            assert_eq!(new, expected, "{}", seq.name);
            assert_eq!(old, expected, "{}", seq.name);

            let mut by_rank = seq.rows.clone();
            by_rank.sort_by_key(|r| r.new_rank);
            assert!(by_rank.windows(2).all(|w| w[0].value >= w[1].value), "{} values not descending", seq.name);
        }
    }

    #[test]
    fn known_rows() {
        let fx = load_fixtures();
        let e = fx.entry(AVERAGE, "SuperSlomo").unwrap();
        assert_eq!((e.value, e.new_rank, e.old_rank), (0.688, 1, 5));
        assert_eq!(e.source, "values-1/row1;reranking-1/row1");
        assert!(fx.entry("Urban", "Black & Anandan").is_some());
        assert!(fx.entry("Urban", "DMF_ROB").is_some());
        assert_eq!(fx.reference("Urban").unwrap().ci_low, 0.813);
    }
}
