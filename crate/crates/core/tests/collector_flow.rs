use std::collections::HashMap;

use pcscale_core::collector::{ChoicePayload, Collector, CollectorError, ManifestItem, PairPayload, SessionState, StudyManifest, TestPair};
use pcscale_core::design::inject_anchors;
use pcscale_core::model::{build_count_matrix, Item, ItemKind, ItemRegistry, StudyConfig, WorkerStatus};
use pcscale_core::scaling::{scale_pipeline, ScaleMethod};

fn manifest(n: usize, tests: usize) -> StudyManifest {
    let mut items: Vec<ManifestItem> = (0..n).map(|i| ManifestItem { id: format!("img{i:03}"), kind: ItemKind::Real, media: Some(format!("/media/img{i:03}.png")) }).collect();
    let mut test_pairs = Vec::new();
    for t in 0..tests {
        items.push(ManifestItem { id: format!("gt{t}"), kind: ItemKind::TestReference, media: None });
        items.push(ManifestItem { id: format!("deg{t}"), kind: ItemKind::TestDegraded, media: None });
        test_pairs.push(TestPair { reference: format!("gt{t}"), degraded: format!("deg{t}") });
    }
    StudyManifest { items, test_pairs }
}

/// Scripted rater: prefers the higher-numbered image, picks references on tests.
fn scripted(p: &PairPayload) -> String {
    let score = |id: &str| match id {
        _ if id.starts_with("gt") => 10_000,
        _ if id.starts_with("deg") => -1,
        _ => id[3..].parse::<i32>().unwrap(),
    };
    if score(&p.left) >= score(&p.right) { p.left.clone() } else { p.right.clone() }
}

fn answers(pairs: &[PairPayload], mut pick: impl FnMut(&PairPayload) -> String) -> Vec<ChoicePayload> {
    pairs.iter().map(|p| ChoicePayload { left: p.left.clone(), right: p.right.clone(), winner: pick(p) }).collect()
}

fn pass_quiz(c: &mut Collector, study: &str, worker: &str) -> String {
    let s = c.start_session(study, worker).unwrap();
    assert!(c.submit_quiz(&s.session_id, &answers(&s.quiz, scripted)).unwrap().passed);
    s.session_id
}

#[test]
fn honest_session_completes_22_pages() {
    let mut c = Collector::new();
    let study = c.create_study(StudyConfig::default(), manifest(141, 10)).unwrap();
    let session = pass_quiz(&mut c, &study, "honest");
    let mut pages = 0;
    let mut accepted = 0;
    loop {
        let page = match c.get_page(&session) {
            Ok(p) => p,
            Err(CollectorError::NoMoreWork) => break,
            Err(e) => panic!("{e}"),
        };
        let out = c.submit_votes(&session, page.page_index, &answers(&page.pairs, scripted), pages as i64).unwrap();
        assert_eq!(out.state, SessionState::Active);
        assert_eq!(out.accepted, page.pairs.len());
        accepted += out.accepted;
        pages += 1;
    }
    assert_eq!(pages, 22);
    assert_eq!(accepted, 423 + 22);
}

/// Work two pages of 5 real pairs and 5 hidden tests, failing the given number of
/// hidden tests on each page.
fn run_two_pages(c: &mut Collector, study: &str, worker: &str, fails: [usize; 2]) -> Vec<SessionState> {
    let session = pass_quiz(c, study, worker);
    let mut states = Vec::new();
    for fail in fails {
        let page = c.get_page(&session).unwrap();
        let mut failed = 0;
        let votes = answers(&page.pairs, |p| {
            if p.left.starts_with("gt") || p.right.starts_with("gt") {
                failed += 1;
                if failed <= fail {
                    return if p.left.starts_with("deg") { p.left.clone() } else { p.right.clone() };
                }
            }
            scripted(p)
        });
        states.push(c.submit_votes(&session, page.page_index, &votes, page.page_index as i64).unwrap().state);
        if states.last() != Some(&SessionState::Active) {
            assert!(matches!(c.get_page(&session), Err(CollectorError::PermanentlyDisqualified(_))));
            break;
        }
    }
    states
}

#[test]
fn failing_four_of_ten_hidden_tests_disqualifies() {
    let config = StudyConfig { n_items: 30, degree: 4, pairs_per_page: 5, hidden_tests_per_page: 5, votes_per_pair: 2, ..Default::default() };
    let mut c = Collector::new();
    let study = c.create_study(config, manifest(30, 10)).unwrap();
    assert_eq!(run_two_pages(&mut c, &study, "sloppy", [1, 3]), vec![SessionState::Active, SessionState::Disqualified]);
    // exactly 30% survives
    assert_eq!(run_two_pages(&mut c, &study, "careful", [1, 2]), vec![SessionState::Active, SessionState::Active]);

    let export = c.export(&study).unwrap();
    assert!(export.votes.iter().all(|v| v.worker_id != "sloppy"));
    assert!(export.votes.iter().any(|v| v.worker_id == "careful"));
    let status: HashMap<&str, WorkerStatus> = export.roster.iter().map(|r| (r.worker_id.as_str(), r.status)).collect();
    assert_eq!(status["sloppy"], WorkerStatus::Disqualified);
    assert_eq!(status["careful"], WorkerStatus::Trusted);
    // sloppy's judgments no longer count towards quotas
    assert_eq!(c.status(&study).unwrap().remaining_votes, 60 * 2 - 10);
    assert!(matches!(c.start_session(&study, "sloppy"), Err(CollectorError::PermanentlyDisqualified(_))));
}

#[test]
fn quiz_gate_holds_for_every_logged_vote() {
    let config = StudyConfig { n_items: 12, degree: 3, votes_per_pair: 3, quiz_size: 4, ..Default::default() };
    let mut c = Collector::new();
    let study = c.create_study(config.clone(), manifest(12, 4)).unwrap();
    for w in 0..6 {
        let s = c.start_session(&study, &format!("w{w}")).unwrap();
        let pick: fn(&PairPayload) -> String = if w % 2 == 0 { scripted } else { |p| if p.left.starts_with("deg") { p.left.clone() } else { p.right.clone() } };
        if !c.submit_quiz(&s.session_id, &answers(&s.quiz, pick)).unwrap().passed {
            assert!(matches!(c.get_page(&s.session_id), Err(CollectorError::PermanentlyDisqualified(_))));
            continue;
        }
        while let Ok(page) = c.get_page(&s.session_id) {
            c.submit_votes(&s.session_id, page.page_index, &answers(&page.pairs, scripted), 1).unwrap();
        }
    }
    let export = c.export(&study).unwrap();
    let passed: HashMap<&str, bool> = export.roster.iter().map(|r| (r.worker_id.as_str(), r.status != WorkerStatus::QuizFailed)).collect();
    for v in c.raw_votes(&study).unwrap() {
        assert!(passed[v.worker_id.as_str()], "vote from {} without quiz pass", v.worker_id);
    }
}

#[test]
fn concurrent_overshoot_is_truncated_by_timestamp() {
    let config = StudyConfig { n_items: 4, degree: 1, votes_per_pair: 1, quiz_size: 0, ..Default::default() };
    let mut c = Collector::new();
    let study = c.create_study(config.clone(), manifest(4, 1)).unwrap();
    let a = c.start_session(&study, "a").unwrap().session_id;
    let b = c.start_session(&study, "b").unwrap().session_id;
    let pa = c.get_page(&a).unwrap();
    let pb = c.get_page(&b).unwrap();
    c.submit_votes(&b, pb.page_index, &answers(&pb.pairs, scripted), 20).unwrap();
    c.submit_votes(&a, pa.page_index, &answers(&pa.pairs, scripted), 10).unwrap();
    let pairs = c.status(&study).unwrap().pairs;
    assert_eq!(c.raw_votes(&study).unwrap().iter().filter(|v| !v.is_test_question).count(), 2 * pairs);

    let export = c.export(&study).unwrap();
    let real: Vec<_> = export.votes.iter().filter(|v| !v.is_test_question).collect();
    assert_eq!(real.len(), pairs);
    assert!(real.iter().all(|v| v.worker_id == "a"));

    let registry = ItemRegistry::new((0..4).map(|i| Item::real(format!("img{i:03}")))).unwrap();
    let counts = build_count_matrix(&export.votes, &registry).unwrap();
    for (i, j) in counts.observed_pairs() {
        assert_eq!(counts.pair_total(i, j), config.votes_per_pair as u64);
    }
}

#[test]
fn export_scales_to_scripted_order() {
    // unanimous raters carry order information only, so compare every pair
    let n = 12;
    let config = StudyConfig { n_items: n, degree: n - 1, votes_per_pair: 5, pairs_per_page: 20, quiz_size: 5, ..Default::default() };
    let mut c = Collector::new();
    let study = c.create_study(config.clone(), manifest(n, 6)).unwrap();
    for w in 0..10 {
        let s = pass_quiz(&mut c, &study, &format!("rater{w}"));
        let mut clock = w * 100;
        while let Ok(page) = c.get_page(&s) {
            clock += 1;
            c.submit_votes(&s, page.page_index, &answers(&page.pairs, scripted), clock).unwrap();
        }
    }
    let status = c.status(&study).unwrap();
    assert!(status.complete);

    let export = c.export(&study).unwrap();
    let (graph, ids) = c.design(&study).unwrap();
    let registry = ItemRegistry::new(ids.iter().map(|id| Item::real(id.clone()))).unwrap();
    let counts = build_count_matrix(&export.votes, &registry).unwrap();
    for &(i, j) in &graph.edges {
        assert_eq!(counts.pair_total(i, j), 5);
    }
    let anchored = inject_anchors(&graph, &registry, &config).unwrap();
    let mut votes = export.votes.clone();
    votes.extend(anchored.votes);
    let result = scale_pipeline(&votes, &anchored.registry, &config, ScaleMethod::LeastSquares).unwrap();
    let scores: Vec<f64> = ids.iter().map(|id| result.score_of(id).unwrap()).collect();
    let truth: Vec<f64> = (0..n).map(|i| i as f64).collect();
    assert_eq!(pcscale_core::analysis::srocc(&truth, &scores).unwrap(), 1.0);
}
