macro_rules! example {
    ($name:ident) => {
        #[allow(dead_code)]
        mod $name {
            include!(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/examples/",
                stringify!($name),
                ".rs"
            ));
        }
    };
}

example!(reduce_questions);
example!(group_and_split);
example!(coverage_audit);
example!(random_control);
example!(distributions);
example!(prior_drop);
example!(synth_presets);
example!(vqa_roundtrip);

use compsplit::analysis::top_answer;
use compsplit::splitter::{coverage_summary, Side, StepKind};

#[test]
fn reduce_questions_runs() {
    let out = reduce_questions::run_example().unwrap();
    assert_eq!(out[0].1.tokens(), ["what", "color", "cone"]);
    assert_eq!(out[0].1, out[1].1);
}

#[test]
fn group_and_split_matches_hand_trace() {
    let (groups, a) = group_and_split::run_example().unwrap();
    assert_eq!(groups.len(), 4);
    let steps: Vec<_> = a
        .iteration_log
        .iter()
        .map(|s| (s.group, s.side, s.kind, s.gain))
        .collect();
    assert_eq!(
        steps,
        [
            (1, Side::Test, StepKind::Test, 8),
            (0, Side::Train, StepKind::Greedy, 6),
            (2, Side::Train, StepKind::Fill, 0),
            (3, Side::Train, StepKind::Fill, 0),
        ]
    );
    let cov = coverage_summary(&groups, a.sides());
    assert_eq!((cov.unique_coverage, cov.weighted_coverage), (0.75, 0.75));
}

#[test]
fn coverage_audit_runs() {
    let (cov, ov) = coverage_audit::run_example().unwrap();
    assert_eq!(ov.reduced_qa_overlap, 0.0);
    assert!(cov.unique_coverage > 0.5 && cov.unique_coverage < 1.0);
}

#[test]
fn random_control_leaks_and_greedy_does_not() {
    let (greedy, random) = random_control::run_example().unwrap();
    assert_eq!(greedy.reduced_qa_overlap, 0.0);
    assert!(random.reduced_qa_overlap > 0.5);
}

#[test]
fn distributions_flip_top_sport() {
    let (train, test) = distributions::run_example().unwrap();
    let t = top_answer(&train.answer_by_qtype, "what sport is").unwrap();
    let s = top_answer(&test.answer_by_qtype, "what sport is").unwrap();
    assert_ne!(t, s);
}

#[test]
fn prior_drop_runs() {
    for (name, r) in prior_drop::run_example().unwrap() {
        assert!(
            r.compositional.overall_accuracy < r.random.overall_accuracy,
            "{name}"
        );
    }
}

#[test]
fn synth_presets_cross_pairs_are_unseen() {
    assert_eq!(synth_presets::run_example().unwrap().len(), 3);
    let (train, test) = synth_presets::crossed_pairs().unwrap();
    assert!(!test.is_empty());
    assert!(test.is_disjoint(&train));
    // every object and every answer of a test pair is still seen in train
    for (o, a) in &test {
        assert!(train.iter().any(|(to, _)| to == o));
        assert!(train.iter().any(|(_, ta)| ta == a));
    }
}

#[test]
fn vqa_roundtrip_is_exact() {
    let (written, read) = vqa_roundtrip::run_example().unwrap();
    assert_eq!(written.train.records(), read.train.records());
    assert_eq!(written.test.records(), read.test.records());
    assert_eq!(written.manifest, read.manifest);
}
