//! `pcscale` subcommands. Each command writes its document to the given writer
//! so it can be exercised without spawning a process.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use pcscale_core::analysis::{
    bootstrap_srocc, rank_compare, ranks_ascending, ranks_descending, scatter_data, CorrelationReport, RankComparison, RankThresholds, RankedMethod,
    RankedSequence,
};
use pcscale_core::design::{full_comparison_count, generate_pair_graph, inject_anchors, schedule_pages, ANCHOR_BEST_ID, ANCHOR_WORST_ID};
use pcscale_core::fixtures::{load_fixtures, AVERAGE};
use pcscale_core::model::{Item, ItemKind, ItemRegistry, PairGraph, StudyConfig, Vote};
use pcscale_core::qc::{WorkerBehavior, WorkerProfile};
use pcscale_core::reports::{emit_report, parse_benchmark_csv, parse_votes_csv, write_votes_csv, Report, ReportFormat};
use pcscale_core::scaling::{scale_pipeline, ScaleMethod, ScaleResult};
use pcscale_core::simulation::{simulate_study, MuGenerator, SimulationError, SimulationOptions};

#[derive(Debug, Parser)]
#[command(name = "pcscale", version, about = "Paired-comparison subjective quality scaling")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// RNG seed; overrides `rng_seed` from the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Study configuration (TOML, flat keys named after StudyConfig fields).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Md)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Md,
    Csv,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Md => ReportFormat::Markdown,
            Format::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Ls,
    Mle,
}

impl From<Method> for ScaleMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Ls => ScaleMethod::LeastSquares,
            Method::Mle => ScaleMethod::Mle,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the pair design and report its size.
    Design {
        /// Number of jobs (sequences) for the full-comparison count.
        #[arg(long, default_value_t = 8)]
        jobs: u64,
    },
    /// Run a simulated crowd study and write its votes as CSV.
    Simulate {
        /// Lower bound of the uniform true scale.
        #[arg(long, default_value_t = 0.0)]
        mu_lo: f64,
        /// Upper bound of the uniform true scale.
        #[arg(long, default_value_t = 3.0)]
        mu_hi: f64,
        /// Fraction of workers answering at random.
        #[arg(long, default_value_t = 0.0)]
        spammers: f64,
        /// Fraction of workers answering test questions wrongly on purpose.
        #[arg(long, default_value_t = 0.0)]
        adversaries: f64,
        /// Comparison noise of honest workers.
        #[arg(long, default_value_t = 1.0)]
        sigma_w: f64,
        #[arg(long, default_value_t = 10_000)]
        max_workers: usize,
        /// Write every logged vote instead of the trusted export.
        #[arg(long)]
        raw: bool,
        /// Vote CSV destination (stdout if absent).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Where to write the true scale as `item,mu`.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Reconstruct scale values from a vote CSV.
    Scale {
        #[arg(long)]
        votes: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Ls)]
        method: Method,
        /// Append synthetic worst/best anchors to the observed design.
        #[arg(long)]
        anchors: bool,
    },
    /// Rank correlation between subjective scores and a benchmark ranking.
    Analyze {
        /// Scores CSV with `item` and `score` columns (as written by `scale --format csv`).
        #[arg(long, requires_all = ["benchmark", "sequence"])]
        scores: Option<PathBuf>,
        /// Benchmark CSV `method,sequence,metric`; lower metric ranks first.
        #[arg(long)]
        benchmark: Option<PathBuf>,
        #[arg(long)]
        sequence: Option<String>,
        /// Bootstrap iterations; 0 uses the Fisher interval.
        #[arg(long, default_value_t = 1000)]
        iterations: usize,
        #[arg(long, default_value_t = 0.95)]
        confidence: f64,
    },
    /// Emit the re-ranking report (markdown tables or CSV scatter data).
    Report {
        #[arg(long, requires_all = ["benchmark", "sequence"])]
        scores: Option<PathBuf>,
        #[arg(long)]
        benchmark: Option<PathBuf>,
        #[arg(long)]
        sequence: Option<String>,
        /// Bootstrap iterations for the correlation intervals; 0 uses Fisher.
        #[arg(long, default_value_t = 0)]
        iterations: usize,
    },
    /// Run the collector HTTP service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Directory served under `/media/`.
        #[arg(long)]
        media: Option<PathBuf>,
    },
}

pub fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<StudyConfig> {
    let mut config = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            toml::from_str::<StudyConfig>(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => StudyConfig::default(),
    };
    if let Some(seed) = seed {
        config.rng_seed = seed;
    }
    config.validate()?;
    Ok(config)
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let g = &cli.global;
    let config = load_config(g.config.as_deref(), g.seed)?;
    match cli.command {
        Command::Design { jobs } => design(&config, jobs, g.format, out),
        Command::Simulate { mu_lo, mu_hi, spammers, adversaries, sigma_w, max_workers, raw, out: dest, truth } => {
            let honest = 1.0 - spammers - adversaries;
            if honest < 0.0 {
                bail!("spammer and adversary fractions exceed 1");
            }
            let profiles = [
                (WorkerBehavior::Thurstone { sigma_w }, honest),
                (WorkerBehavior::Spammer, spammers),
                (WorkerBehavior::Adversary, adversaries),
            ]
            .into_iter()
            .filter(|(_, p)| *p > 0.0)
            .map(|(behavior, proportion)| WorkerProfile { behavior, proportion })
            .collect();
            let options = SimulationOptions { profiles, max_workers, ..Default::default() };
            simulate(&config, MuGenerator::Uniform { lo: mu_lo, hi: mu_hi }, &options, raw, dest.as_deref(), truth.as_deref(), out)
        }
        Command::Scale { votes, method, anchors } => scale(&config, &votes, method.into(), anchors, g.format, out),
        Command::Analyze { scores, benchmark, sequence, iterations, confidence } => {
            let sequences = load_sequences(scores.as_deref(), benchmark.as_deref(), sequence.as_deref())?;
            analyze(&sequences, iterations, confidence, config.rng_seed, g.format, out)
        }
        Command::Report { scores, benchmark, sequence, iterations } => {
            let report = build_report(scores.as_deref(), benchmark.as_deref(), sequence.as_deref(), iterations, config.rng_seed)?;
            out.write_all(emit_report(&report, g.format.into()).as_bytes())?;
            Ok(())
        }
        Command::Serve { addr, media } => {
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(pcscale_collector::serve(addr, media))?;
            Ok(())
        }
    }
}

fn design(config: &StudyConfig, jobs: u64, format: Format, out: &mut dyn Write) -> Result<()> {
    let graph = generate_pair_graph(config.n_items, config.degree, config.rng_seed)?;
    let pages = schedule_pages(&graph, config, config.rng_seed)?;
    let full = full_comparison_count(config.n_items as u64, jobs);
    match format {
        Format::Md => {
            let mut s = String::from("| quantity | value |\n|---|---|\n");
            let _ = writeln!(s, "| items | {} |", config.n_items);
            let _ = writeln!(s, "| degree | {} |", config.degree);
            let _ = writeln!(s, "| pairs | {} |", graph.edges.len());
            let _ = writeln!(s, "| regular | {} |", graph.regular);
            let _ = writeln!(s, "| connected | {} |", graph.is_connected());
            let _ = writeln!(s, "| pages per pass | {} |", pages.len());
            let _ = writeln!(s, "| votes per job | {} |", graph.edges.len() as u64 * config.votes_per_pair as u64);
            let _ = writeln!(s, "| full comparisons ({jobs} jobs) | {full} |");
            out.write_all(s.as_bytes())?;
        }
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
            w.write_record(["item_a", "item_b"])?;
            for (a, b) in &graph.edges {
                w.write_record([a.to_string(), b.to_string()])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn simulate(
    config: &StudyConfig,
    generator: MuGenerator,
    options: &SimulationOptions,
    raw: bool,
    dest: Option<&Path>,
    truth: Option<&Path>,
    out: &mut dyn Write,
) -> Result<()> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.rng_seed);
    let true_mu = generator.sample(config.n_items, &mut rng);
    let study = match simulate_study(&true_mu, config, options) {
        Ok(study) => study,
        Err(SimulationError::Shortfall { deficits, study }) => {
            log::warn!("{} pair(s) below quota after {} workers", deficits.len(), study.records.len());
            *study
        }
        Err(e) => return Err(e.into()),
    };
    let stats = &study.export.stats;
    log::info!(
        "{} workers: {} trusted, {} disqualified, {} failed the quiz; {}/{} pairs complete",
        study.records.len(),
        stats.workers.trusted,
        stats.workers.disqualified,
        stats.workers.quiz_failed,
        stats.complete_pairs,
        stats.pairs
    );
    let votes: &[Vote] = if raw { &study.raw_votes } else { &study.export.votes };
    match dest {
        Some(path) => write_votes_csv(votes, File::create(path).with_context(|| format!("creating {}", path.display()))?)?,
        None => write_votes_csv(votes, &mut *out)?,
    }
    if let Some(path) = truth {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
        w.write_record(["item", "mu"])?;
        for (k, mu) in true_mu.iter().enumerate() {
            w.write_record([study.items.id(k), &mu.to_string()])?;
        }
        w.flush()?;
    }
    Ok(())
}

/// Items named in real (non-test) votes, in order of first appearance.
fn registry_from_votes(votes: &[Vote]) -> Result<ItemRegistry> {
    let mut seen = HashSet::new();
    let mut items = Vec::new();
    for v in votes.iter().filter(|v| !v.is_test_question) {
        for id in [&v.item_a, &v.item_b] {
            if seen.insert(id.clone()) {
                let kind = match id.as_str() {
                    ANCHOR_WORST_ID => ItemKind::AnchorWorst,
                    ANCHOR_BEST_ID => ItemKind::AnchorBest,
                    _ => ItemKind::Real,
                };
                items.push(Item::new(id.clone(), kind));
            }
        }
    }
    Ok(ItemRegistry::new(items)?)
}

pub fn scale_votes(config: &StudyConfig, votes: &[Vote], method: ScaleMethod, anchors: bool) -> Result<ScaleResult> {
    let registry = registry_from_votes(votes)?;
    if !anchors {
        return Ok(scale_pipeline(votes, &registry, config, method)?);
    }
    let real = registry.scalable();
    if real.anchor_worst().is_some() || real.anchor_best().is_some() {
        bail!("votes already contain anchors");
    }
    let mut edges = HashSet::new();
    for v in votes.iter().filter(|v| !v.is_test_question) {
        let (a, b) = (real.index_of(&v.item_a).expect("registered"), real.index_of(&v.item_b).expect("registered"));
        edges.insert((a.min(b), a.max(b)));
    }
    let graph = PairGraph::new(real.len(), edges, config.degree);
    let anchor_config = StudyConfig { degree: config.degree.min(real.len()), ..config.clone() };
    let anchored = inject_anchors(&graph, &real, &anchor_config)?;
    let mut all = votes.to_vec();
    all.extend(anchored.votes);
    Ok(scale_pipeline(&all, &anchored.registry, config, method)?)
}

fn scale(config: &StudyConfig, path: &Path, method: ScaleMethod, anchors: bool, format: Format, out: &mut dyn Write) -> Result<()> {
    let votes = parse_votes_csv(BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?))?;
    let result = scale_votes(config, &votes, method, anchors)?;
    let ranks = ranks_descending(&result.scores);
    match format {
        Format::Md => {
            let mut s = String::from("| item | mu | score | rank |\n|---|---|---|---|\n");
            let mut order: Vec<usize> = (0..result.item_ids.len()).collect();
            order.sort_by_key(|&k| ranks[k]);
            for k in order {
                let _ = writeln!(s, "| {} | {:.4} | {:.4} | {} |", result.item_ids[k], result.mu[k], result.scores[k], ranks[k]);
            }
            out.write_all(s.as_bytes())?;
        }
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
            w.write_record(["item", "mu", "score", "rank"])?;
            for (k, id) in result.item_ids.iter().enumerate() {
                w.write_record([id.clone(), result.mu[k].to_string(), result.scores[k].to_string(), ranks[k].to_string()])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// A ranked sequence with the raw benchmark metric per method, when known.
pub type LoadedSequence = (RankedSequence, Option<Vec<(String, f64)>>);

#[derive(Debug, serde::Deserialize)]
struct ScoreRow {
    item: String,
    score: f64,
}

/// A sequence built from user scores and a benchmark table, or the packaged fixture sequences.
pub fn load_sequences(scores: Option<&Path>, benchmark: Option<&Path>, sequence: Option<&str>) -> Result<Vec<LoadedSequence>> {
    let (Some(scores), Some(benchmark), Some(sequence)) = (scores, benchmark, sequence) else {
        return Ok(load_fixtures().sequences.iter().map(|s| (s.clone(), None)).collect());
    };
    let rows: Vec<ScoreRow> = csv::Reader::from_path(scores)?.deserialize().collect::<Result<_, _>>().with_context(|| format!("reading {}", scores.display()))?;
    let table = parse_benchmark_csv(BufReader::new(File::open(benchmark)?))?;
    let metrics = table.metrics(sequence).with_context(|| format!("sequence `{sequence}` not in {}", benchmark.display()))?;
    let metric_of: std::collections::HashMap<&str, f64> = metrics.iter().map(|(m, v)| (m.as_str(), *v)).collect();
    let rows: Vec<&ScoreRow> = rows.iter().filter(|r| metric_of.contains_key(r.item.as_str())).collect();
    if rows.len() != metrics.len() {
        bail!("{} scored items match {} benchmark methods", rows.len(), metrics.len());
    }
    let values: Vec<f64> = rows.iter().map(|r| r.score).collect();
    let new_ranks = ranks_descending(&values);
    let old_ranks = ranks_ascending(&rows.iter().map(|r| metric_of[r.item.as_str()]).collect::<Vec<_>>());
    let ranked = RankedSequence {
        name: sequence.to_owned(),
        rows: rows
            .iter()
            .zip(new_ranks.iter().zip(&old_ranks))
            .map(|(r, (&new_rank, &old_rank))| RankedMethod { method: r.item.clone(), value: r.score, new_rank, old_rank })
            .collect(),
    };
    Ok(vec![(ranked, Some(metrics))])
}

fn correlation(seq: &RankedSequence, iterations: usize, confidence: f64, seed: u64) -> Result<CorrelationReport> {
    let pairs = seq.rank_pairs();
    if iterations == 0 {
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        return Ok(CorrelationReport::fisher(&x, &y, confidence)?);
    }
    Ok(bootstrap_srocc(&pairs, iterations, confidence, seed)?)
}

fn comparison(seq: &RankedSequence) -> Result<RankComparison> {
    Ok(rank_compare(&seq.new_ranks(), &seq.old_ranks(), RankThresholds::default())?)
}

fn analyze(sequences: &[LoadedSequence], iterations: usize, confidence: f64, seed: u64, format: Format, out: &mut dyn Write) -> Result<()> {
    let mut rows = Vec::new();
    for (seq, _) in sequences {
        rows.push((seq.name.clone(), correlation(seq, iterations, confidence, seed)?, comparison(seq)?.counts));
    }
    match format {
        Format::Md => {
            let mut s = String::from("| sequence | SROCC | CI low | CI high | disagreement | small | middle | large | severe |\n|---|---|---|---|---|---|---|---|---|\n");
            for (name, c, k) in &rows {
                let _ = writeln!(s, "| {name} | {:.3} | {:.3} | {:.3} | {:.3} | {} | {} | {} | {} |", c.r, c.ci_low, c.ci_high, c.disagreement, k.small, k.middle, k.large, k.severe);
            }
            out.write_all(s.as_bytes())?;
        }
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
            w.write_record(["sequence", "srocc", "ci_low", "ci_high", "disagreement", "small", "middle", "large", "severe"])?;
            for (name, c, k) in &rows {
                w.write_record([
                    name.clone(),
                    c.r.to_string(),
                    c.ci_low.to_string(),
                    c.ci_high.to_string(),
                    c.disagreement.to_string(),
                    k.small.to_string(),
                    k.middle.to_string(),
                    k.large.to_string(),
                    k.severe.to_string(),
                ])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// Report over user data or the packaged fixtures.
///
/// Fixture sequences carry no raw benchmark metric, so their scatter uses the
/// benchmark rank as the lower-is-better x quantity.
pub fn build_report(scores: Option<&Path>, benchmark: Option<&Path>, sequence: Option<&str>, iterations: usize, seed: u64) -> Result<Report> {
    let sequences = load_sequences(scores, benchmark, sequence)?;
    let mut report = Report::default();
    for (seq, _) in &sequences {
        report.correlations.push((seq.name.clone(), correlation(seq, iterations, 0.95, seed)?));
    }
    let (primary, metrics) = sequences.iter().find(|(s, _)| s.name == AVERAGE).unwrap_or(&sequences[0]);
    report.rank_comparison = Some(comparison(primary)?);
    let x: Vec<(String, f64)> = match metrics {
        Some(m) => m.clone(),
        None => primary.rows.iter().map(|r| (r.method.clone(), r.old_rank as f64)).collect(),
    };
    let y: Vec<(String, f64)> = primary.rows.iter().map(|r| (r.method.clone(), r.value)).collect();
    report.scatter = scatter_data(&x, &y)?;
    report.sequences = sequences.into_iter().map(|(s, _)| s).collect();
    Ok(report)
}
