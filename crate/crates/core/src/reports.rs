//! File formats and report emission.
//!
//! Vote CSV: `worker_id,item_a,item_b,winner,is_test,timestamp_ms,page`.
//! Benchmark CSV: `method,sequence,metric`, one row per method and sequence.
//! All files are UTF-8, comma separated, `\n` terminated.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{ranks_ascending, CiMethod, CorrelationReport, RankComparison, RankedSequence, ScatterPoint};
use crate::model::Vote;

pub const VOTE_HEADER: [&str; 7] = ["worker_id", "item_a", "item_b", "winner", "is_test", "timestamp_ms", "page"];
pub const BENCHMARK_HEADER: [&str; 3] = ["method", "sequence", "metric"];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("line {line}: winner not in pair ({winner} not in {item_a}/{item_b})")]
    WinnerNotInPair { line: u64, item_a: String, item_b: String, winner: String },
    #[error("line {line}: duplicate row for sequence `{sequence}`, method `{method}`")]
    Duplicate { line: u64, sequence: String, method: String },
    #[error("unexpected header {found:?}, expected {expected:?}")]
    Header { found: Vec<String>, expected: Vec<String> },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Serialize, Deserialize)]
struct VoteRow {
    worker_id: String,
    item_a: String,
    item_b: String,
    winner: String,
    is_test: bool,
    timestamp_ms: i64,
    page: u32,
}

fn line_of(err: &csv::Error) -> u64 {
    err.position().map(|p| p.line()).unwrap_or(0)
}

fn csv_error(err: csv::Error) -> ReportError {
    let line = line_of(&err);
    match err.into_kind() {
        csv::ErrorKind::Io(e) => ReportError::Io(e),
        csv::ErrorKind::Deserialize { err, .. } => ReportError::Malformed { line, message: err.to_string() },
        other => ReportError::Malformed { line, message: format!("{other:?}") },
    }
}

fn check_header<R: Read>(reader: &mut csv::Reader<R>, expected: &[&str]) -> Result<(), ReportError> {
    let found: Vec<String> = reader.headers().map_err(csv_error)?.iter().map(str::to_owned).collect();
    if found != expected {
        return Err(ReportError::Header { found, expected: expected.iter().map(|s| s.to_string()).collect() });
    }
    Ok(())
}

/// Deserialized rows paired with their 1-based line number.
fn rows<T: serde::de::DeserializeOwned, R: Read>(rdr: &mut csv::Reader<R>) -> Result<Vec<(u64, T)>, ReportError> {
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let mut record = csv::StringRecord::new();
    let mut out = Vec::new();
    while rdr.read_record(&mut record).map_err(csv_error)? {
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row = record.deserialize(Some(&headers)).map_err(|e| ReportError::Malformed { line, message: e.to_string() })?;
        out.push((line, row));
    }
    Ok(out)
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).from_reader(input)
}

fn writer<W: Write>(output: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).terminator(csv::Terminator::Any(b'\n')).from_writer(output)
}

pub fn parse_votes_csv<R: Read>(input: R) -> Result<Vec<Vote>, ReportError> {
    let mut rdr = reader(input);
    check_header(&mut rdr, &VOTE_HEADER)?;
    let mut votes = Vec::new();
    for (line, row) in rows::<VoteRow, R>(&mut rdr)? {
        if row.winner != row.item_a && row.winner != row.item_b {
            return Err(ReportError::WinnerNotInPair { line, item_a: row.item_a, item_b: row.item_b, winner: row.winner });
        }
        votes.push(Vote {
            worker_id: row.worker_id,
            item_a: row.item_a,
            item_b: row.item_b,
            winner: row.winner,
            is_test_question: row.is_test,
            timestamp_ms: row.timestamp_ms,
            page_index: row.page,
        });
    }
    Ok(votes)
}

pub fn write_votes_csv<W: Write>(votes: &[Vote], output: W) -> Result<(), ReportError> {
    let mut wtr = writer(output);
    wtr.write_record(VOTE_HEADER).map_err(csv_error)?;
    for v in votes {
        wtr.serialize(VoteRow {
            worker_id: v.worker_id.clone(),
            item_a: v.item_a.clone(),
            item_b: v.item_b.clone(),
            winner: v.winner.clone(),
            is_test: v.is_test_question,
            timestamp_ms: v.timestamp_ms,
            page: v.page_index,
        })
        .map_err(csv_error)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn votes_to_csv(votes: &[Vote]) -> String {
    let mut buf = Vec::new();
    write_votes_csv(votes, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}

/// Objective benchmark scores (e.g. RMSE) keyed by sequence, then method, in file order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkTable {
    pub sequences: IndexMap<String, IndexMap<String, f64>>,
}

impl BenchmarkTable {
    pub fn get(&self, sequence: &str, method: &str) -> Option<f64> {
        self.sequences.get(sequence)?.get(method).copied()
    }

    pub fn metrics(&self, sequence: &str) -> Option<Vec<(String, f64)>> {
        Some(self.sequences.get(sequence)?.iter().map(|(m, v)| (m.clone(), *v)).collect())
    }

    /// Benchmark ("old") ranks: smaller metric ranks first.
    pub fn old_ranks(&self, sequence: &str) -> Option<Vec<(String, u32)>> {
        let rows = self.sequences.get(sequence)?;
        let values: Vec<f64> = rows.values().copied().collect();
        Some(rows.keys().cloned().zip(ranks_ascending(&values)).collect())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct BenchmarkRow {
    method: String,
    sequence: String,
    metric: String,
}

pub fn parse_benchmark_csv<R: Read>(input: R) -> Result<BenchmarkTable, ReportError> {
    let mut rdr = reader(input);
    check_header(&mut rdr, &BENCHMARK_HEADER)?;
    let mut table = BenchmarkTable::default();
    for (line, row) in rows::<BenchmarkRow, R>(&mut rdr)? {
        let metric: f64 = row
            .metric
            .trim()
            .parse()
            .ok()
            .filter(|m: &f64| m.is_finite())
            .ok_or_else(|| ReportError::Malformed { line, message: format!("non-numeric metric `{}`", row.metric) })?;
        let seq = table.sequences.entry(row.sequence.clone()).or_default();
        if seq.contains_key(&row.method) {
            return Err(ReportError::Duplicate { line, sequence: row.sequence, method: row.method });
        }
        seq.insert(row.method, metric);
    }
    Ok(table)
}

pub fn write_benchmark_csv<W: Write>(table: &BenchmarkTable, output: W) -> Result<(), ReportError> {
    let mut wtr = writer(output);
    wtr.write_record(BENCHMARK_HEADER).map_err(csv_error)?;
    for (sequence, rows) in &table.sequences {
        for (method, metric) in rows {
            wtr.write_record([method.as_str(), sequence.as_str(), &metric.to_string()]).map_err(csv_error)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    #[default]
    Markdown,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown format `{other}` (expected md or csv)")),
        }
    }
}

/// Everything a report can show. Empty parts produce header-only sections.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    /// Subjective values with new and old ranks, one entry per sequence.
    pub sequences: Vec<RankedSequence>,
    pub correlations: Vec<(String, CorrelationReport)>,
    pub rank_comparison: Option<RankComparison>,
    pub scatter: Vec<ScatterPoint>,
}

fn table_header(out: &mut String, first: &str, columns: &[&str]) {
    let _ = writeln!(out, "| {first} |{}", columns.iter().map(|c| format!(" {c} |")).collect::<String>());
    let _ = writeln!(out, "|---|{}", "---|".repeat(columns.len()));
}

/// Methods in order of the first sequence's new rank.
fn method_order(sequences: &[RankedSequence]) -> Vec<String> {
    let Some(first) = sequences.first() else { return Vec::new() };
    let mut rows: Vec<_> = first.rows.iter().collect();
    rows.sort_by_key(|r| r.new_rank);
    rows.into_iter().map(|r| r.method.clone()).collect()
}

fn rank_table(out: &mut String, sequences: &[RankedSequence], cell: impl Fn(&crate::analysis::RankedMethod) -> String) {
    let names: Vec<&str> = sequences.iter().map(|s| s.name.as_str()).collect();
    table_header(out, "Method", &names);
    for method in method_order(sequences) {
        let cells: String = sequences.iter().map(|s| format!(" {} |", s.row(&method).map(&cell).unwrap_or_else(|| "-".into()))).collect();
        let _ = writeln!(out, "| {method} |{cells}");
    }
}

fn markdown(report: &Report) -> String {
    let mut out = String::from("# Subjective quality report\n\n## Quality values (value / rank)\n\n");
    rank_table(&mut out, &report.sequences, |r| format!("{:.3} / {}", r.value, r.new_rank));
    out.push_str("\n## Re-ranking (new / old)\n\n");
    rank_table(&mut out, &report.sequences, |r| format!("{} / {}", r.new_rank, r.old_rank));

    out.push_str("\n## Rank correlation\n\n");
    table_header(&mut out, "Sequence", &["SROCC", "CI low", "CI high", "CI method", "Disagreement"]);
    for (name, c) in &report.correlations {
        let method = match c.ci_method {
            CiMethod::Fisher => "fisher".to_owned(),
            CiMethod::BootstrapPercentile => format!("bootstrap ({})", c.iterations.unwrap_or(0)),
        };
        let _ = writeln!(out, "| {name} | {:.3} | {:.3} | {:.3} | {method} | {:.3} |", c.r, c.ci_low, c.ci_high, c.disagreement);
    }

    out.push_str("\n## Rank differences\n\n");
    table_header(&mut out, "Class", &["Count"]);
    if let Some(cmp) = &report.rank_comparison {
        let c = &cmp.counts;
        for (label, count) in [("small", c.small), ("middle", c.middle), ("large", c.large), ("severe", c.severe)] {
            let _ = writeln!(out, "| {label} | {count} |");
        }
    }
    out
}

fn scatter_csv(points: &[ScatterPoint]) -> String {
    let mut out = String::from("method,x,y\n");
    let mut wtr = writer(Vec::new());
    for p in points {
        wtr.write_record([p.method.as_str(), &p.x.to_string(), &p.y.to_string()]).expect("writing to memory");
    }
    out.push_str(std::str::from_utf8(&wtr.into_inner().expect("flush to memory")).expect("utf-8"));
    out
}

/// Render a report. Markdown carries the tables; CSV carries the scatter data.
pub fn emit_report(report: &Report, format: ReportFormat) -> String {
    match format {
        ReportFormat::Markdown => markdown(report),
        ReportFormat::Csv => scatter_csv(&report.scatter),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{rank_compare, RankThresholds};
    use crate::fixtures::{load_fixtures, AVERAGE};

    #[test]
    fn vote_rows() {
        let csv = "worker_id,item_a,item_b,winner,is_test,timestamp_ms,page\nw1,A,B,A,false,0,0\n";
        let votes = parse_votes_csv(csv.as_bytes()).unwrap();
        assert_eq!(votes, vec![Vote::new("w1", "A", "B", "A")]);
        assert_eq!(votes_to_csv(&votes), csv);

        let bad = "worker_id,item_a,item_b,winner,is_test,timestamp_ms,page\nw1,A,B,A,false,0,0\nw1,A,B,C,false,0,0\n";
        let err = parse_votes_csv(bad.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("winner not in pair"), "{err}");
        assert!(err.to_string().starts_with("line 3"), "{err}");

        let malformed = "worker_id,item_a,item_b,winner,is_test,timestamp_ms,page\nw1,A,B,A,maybe,0,0\n";
        assert!(matches!(parse_votes_csv(malformed.as_bytes()), Err(ReportError::Malformed { line: 2, .. })));
        assert!(matches!(parse_votes_csv("a,b\n".as_bytes()), Err(ReportError::Header { .. })));
    }

    #[test]
    fn benchmark_rows() {
        let csv = "method,sequence,metric\nA,Urban,3.5\nB,Urban,2.1\n";
        let table = parse_benchmark_csv(csv.as_bytes()).unwrap();
        assert_eq!(table.sequences.len(), 1);
        assert_eq!(table.old_ranks("Urban").unwrap(), vec![("A".to_owned(), 2), ("B".to_owned(), 1)]);
        let mut out = Vec::new();
        write_benchmark_csv(&table, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), csv);

        let dup = "method,sequence,metric\nA,Urban,3.5\nA,Urban,2.1\n";
        let err = parse_benchmark_csv(dup.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("Urban") && err.to_string().contains("`A`"), "{err}");
        let nan = "method,sequence,metric\nA,Urban,n/a\n";
        assert!(matches!(parse_benchmark_csv(nan.as_bytes()), Err(ReportError::Malformed { line: 2, .. })));
    }

    #[test]
    fn empty_report_is_header_only() {
        let md = emit_report(&Report::default(), ReportFormat::Markdown);
        assert!(md.contains("| Method |\n|---|\n\n"));
        assert!(md.ends_with("| Class | Count |\n|---|---|\n"));
        assert_eq!(emit_report(&Report::default(), ReportFormat::Csv), "method,x,y\n");
    }

    #[test]
    fn fixture_pass_through() {
        let avg = load_fixtures().sequence(AVERAGE).unwrap().clone();
        let cmp = rank_compare(&avg.new_ranks(), &avg.old_ranks(), RankThresholds::default()).unwrap();
        let report = Report { sequences: vec![avg], rank_comparison: Some(cmp), ..Default::default() };
        let md = emit_report(&report, ReportFormat::Markdown);
        assert!(md.contains("| SuperSlomo | 0.688 / 1 |"));
        assert!(md.contains("| SuperSlomo | 1 / 5 |"));
        assert_eq!(md, emit_report(&report, ReportFormat::Markdown));
    }
}
