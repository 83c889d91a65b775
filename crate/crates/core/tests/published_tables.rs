use pcscale_core::analysis::{aggregate_average, fisher_ci, rank_compare, ranks_descending, srocc, RankThresholds, SequenceScores};
use pcscale_core::fixtures::{load_fixtures, AVERAGE, SEQUENCES};
use pcscale_core::normal::inv_cdf;

fn fixture_srocc(name: &str) -> f64 {
    let (x, y): (Vec<f64>, Vec<f64>) = load_fixtures().sequence(name).unwrap().rank_pairs().into_iter().unzip();
    srocc(&x, &y).unwrap()
}

#[test]
fn per_sequence_srocc_matches_published_within_001() {
    let fx = load_fixtures();
    for name in SEQUENCES {
        let published = fx.reference(name).unwrap().srocc;
        let r = fixture_srocc(name);
        assert!((r - published).abs() <= 0.01, "{name}: {r} vs {published}");
    }
}

#[test]
fn frozen_fixture_correlations() {
    // computed offline from the transcribed rank columns
    let expected = [
        ("Urban", 0.8580),
        ("Backyard", 0.1590),
        ("Mequon", 0.7677),
        ("Schefflera", 0.5637),
        ("Teddy", 0.6704),
        ("Basketball", 0.5335),
        ("Dumptruck", 0.7615),
        ("Evergreen", 0.4974),
        (AVERAGE, 0.7683),
    ];
    for (name, r) in expected {
        assert!((fixture_srocc(name) - r).abs() < 5e-5, "{name}");
    }
}

#[test]
fn fisher_interval_oracle() {
    let (lo, hi) = fisher_ci(0.854, 141, 0.95).unwrap();
    assert!((lo - 0.801_896_9).abs() < 1e-6 && (hi - 0.893_211_6).abs() < 1e-6);
    let (lo, hi) = fisher_ci(0.0, 103, 0.95).unwrap();
    assert!((lo + 0.193_524_7).abs() < 1e-6 && (hi - 0.193_524_7).abs() < 1e-6);
}

#[test]
fn published_intervals_contain_their_point_estimates() {
    for row in &load_fixtures().reference {
        assert!(row.ci_low < row.srocc && row.srocc < row.ci_high, "{}", row.sequence);
    }
}

#[test]
fn inverse_normal_oracle() {
    // 60-digit reference values
    assert!((inv_cdf(0.841_345) - 1.000_001_049_431_045).abs() < 1e-12);
    assert!((inv_cdf(59.0 / 60.0) - 2.128_045_234_184_985).abs() < 1e-12);
    assert!((inv_cdf(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
}

#[test]
fn average_column_rank_classes() {
    let avg = load_fixtures().sequence(AVERAGE).unwrap();
    let cmp = rank_compare(&avg.new_ranks(), &avg.old_ranks(), RankThresholds::default()).unwrap();
    assert_eq!((cmp.counts.small, cmp.counts.middle, cmp.counts.large, cmp.counts.severe), (36, 77, 15, 13));
    let row = |m: &str| cmp.rows.iter().find(|r| r.method == m).unwrap();
    assert_eq!((row("SuperSlomo").diff, row("Bartels").diff), (-4, -66));
}

#[test]
fn averaged_values_rank_like_the_average_column() {
    let fx = load_fixtures();
    let sequences: Vec<SequenceScores> = SEQUENCES
        .iter()
        .map(|name| SequenceScores { sequence: name.to_string(), scores: fx.sequence(name).unwrap().rows.iter().map(|r| (r.method.clone(), r.value)).collect() })
        .collect();
    let averages = aggregate_average(&sequences).unwrap();
    assert_eq!(averages.len(), 141);
    for a in &averages {
        let published = fx.entry(AVERAGE, &a.method).unwrap().value;
        assert!((a.average - published).abs() <= 0.000_625 + 1e-9, "{}: {} vs {published}", a.method, a.average);
    }
    let mut top: Vec<_> = averages.iter().filter(|a| a.rank <= 3).collect();
    top.sort_by_key(|a| a.rank);
    let names: Vec<&str> = top.iter().map(|a| a.method.as_str()).collect();
    assert_eq!(names, ["SuperSlomo", "CtxSyn", "DeepFlow2"]);

    let values: Vec<f64> = averages.iter().map(|a| a.average).collect();
    let ranks: Vec<u32> = averages.iter().map(|a| a.rank).collect();
    assert_eq!(ranks_descending(&values), ranks);
}
