use std::path::Path;
use std::process::Command as Process;

use clap::Parser;
use pcscale_cli::{build_report, load_config, run, scale_votes, Cli};
use pcscale_core::analysis::srocc;
use pcscale_core::reports::parse_votes_csv;
use pcscale_core::scaling::ScaleMethod;

fn run_args(args: &[&str]) -> String {
    let cli = Cli::try_parse_from(std::iter::once("pcscale").chain(args.iter().copied())).unwrap();
    let mut out = Vec::new();
    run(cli, &mut out).unwrap();
    String::from_utf8(out).unwrap()
}

fn bin(args: &[&str]) -> std::process::Output {
    Process::new(env!("CARGO_BIN_EXE_pcscale")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn truth(path: &Path) -> Vec<(String, f64)> {
    csv::Reader::from_path(path).unwrap().records().map(|r| {
        let r = r.unwrap();
        (r[0].to_owned(), r[1].parse().unwrap())
    }).collect()
}

#[test]
fn design_reports_default_sizes() {
    let out = bin(&["design"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("| pairs | 423 |"), "{text}");
    assert!(text.contains("| pages per pass | 22 |"));
    assert!(text.contains("78960"));

    let edges = run_args(&["design", "--format", "csv"]);
    assert_eq!(edges.lines().count(), 424);
}

#[test]
fn config_file_and_seed_flag() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("study.toml");
    std::fs::write(&path, "n_items = 20\ndegree = 4\nrng_seed = 5\n").unwrap();
    let config = load_config(Some(&path), None).unwrap();
    assert_eq!((config.n_items, config.degree, config.rng_seed), (20, 4, 5));
    assert_eq!(load_config(Some(&path), Some(9)).unwrap().rng_seed, 9);

    let text = run_args(&["--config", path.to_str().unwrap(), "design"]);
    assert!(text.contains("| pairs | 40 |"), "{text}");

    std::fs::write(&path, "n_items = 3\ndegree = 5\n").unwrap();
    assert!(load_config(Some(&path), None).is_err());
    std::fs::write(&path, "n_itemz = 3\n").unwrap();
    assert!(load_config(Some(&path), None).is_err());
}

#[test]
fn simulate_then_scale_recovers_truth() {
    let dir = tempfile::tempdir().unwrap();
    let votes = dir.path().join("votes.csv");
    let truth_path = dir.path().join("truth.csv");
    let out = bin(&["--seed", "11", "simulate", "--out", votes.to_str().unwrap(), "--truth", truth_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let parsed = parse_votes_csv(std::fs::File::open(&votes).unwrap()).unwrap();
    assert_eq!(parsed.iter().filter(|v| !v.is_test_question).count(), 423 * 30);

    let config = load_config(None, Some(11)).unwrap();
    let truth = truth(&truth_path);
    for method in [ScaleMethod::LeastSquares, ScaleMethod::Mle] {
        let result = scale_votes(&config, &parsed, method, true).unwrap();
        let (t, s): (Vec<f64>, Vec<f64>) = truth.iter().map(|(id, mu)| (*mu, result.score_of(id).unwrap())).unzip();
        assert!(srocc(&t, &s).unwrap() > 0.95, "{method:?}");
        assert_eq!(result.item_ids.len(), 141 + 2, "anchors are part of the result");
    }

    // same seed, same bytes
    let again = dir.path().join("again.csv");
    assert!(bin(&["--seed", "11", "simulate", "--out", again.to_str().unwrap()]).status.success());
    assert_eq!(std::fs::read(&votes).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn scores_feed_analysis_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let votes = dir.path().join("votes.csv");
    let truth_path = dir.path().join("truth.csv");
    run_args(&["--seed", "4", "simulate", "--out", votes.to_str().unwrap(), "--truth", truth_path.to_str().unwrap()]);

    let scores = dir.path().join("scores.csv");
    std::fs::write(&scores, run_args(&["scale", "--votes", votes.to_str().unwrap(), "--anchors", "--format", "csv"])).unwrap();

    // benchmark: lower is better, so negate the true scale
    let benchmark = dir.path().join("bench.csv");
    let mut text = String::from("method,sequence,metric\n");
    for (id, mu) in truth(&truth_path) {
        text.push_str(&format!("{id},sim,{}\n", -mu));
    }
    std::fs::write(&benchmark, text).unwrap();

    let args = ["--scores", scores.to_str().unwrap(), "--benchmark", benchmark.to_str().unwrap(), "--sequence", "sim"];
    let analysis: Vec<&str> = vec!["--format", "csv", "analyze", "--iterations", "0"].into_iter().chain(args).collect();
    let csv_text = run_args(&analysis);
    let row: Vec<&str> = csv_text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "sim");
    assert!(row[1].parse::<f64>().unwrap() > 0.95);

    let report = build_report(Some(&scores), Some(&benchmark), Some("sim"), 0, 1).unwrap();
    assert_eq!(report.sequences.len(), 1);
    assert_eq!(report.scatter.len(), 141);
    assert!(report.scatter.iter().any(|p| p.x == 0.0));

    let missing: Vec<&str> = vec!["analyze", "--scores", "x.csv"];
    assert!(Cli::try_parse_from(std::iter::once("pcscale").chain(missing)).is_err());
}

#[test]
fn fixture_report_and_analysis() {
    let md = run_args(&["report"]);
    assert!(md.starts_with("# Subjective quality report"));
    assert!(md.contains("| SuperSlomo | 0.688 / 1 |"));
    let scatter = run_args(&["report", "--format", "csv"]);
    assert_eq!(scatter.lines().next(), Some("method,x,y"));
    assert_eq!(scatter.lines().count(), 142);

    let analysis = run_args(&["analyze", "--iterations", "0"]);
    assert!(analysis.contains("| Average | 0.768 |"), "{analysis}");
    assert!(analysis.contains("| 36 | 77 | 15 | 13 |"));
}

#[test]
fn bad_input_fails_with_message() {
    let out = bin(&["scale", "--votes", "/nonexistent/votes.csv"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/votes.csv"));

    let out = bin(&["--format", "xml", "design"]);
    assert!(!out.status.success());
}
