// Split a synthetic corpus and audit the result: how much of the test
// vocabulary train has seen, and whether any QA pair leaked across.

use compsplit::analysis::{coverage, overlap, CoverageReport, OverlapReport};
use compsplit::grouping::build_groups;
use compsplit::splitter::{greedy_split, materialize, Side, SplitConfig};
use compsplit::synth::{generate, preset};
use compsplit::textnorm::NormConfig;

pub fn run_example() -> compsplit::Result<(CoverageReport, OverlapReport)> {
    let cfg = NormConfig::default();
    let mut synth = preset("color-bias")?;
    synth.n_records = 5_000;
    let corpus = generate(&synth)?;

    let groups = build_groups(&corpus, &cfg);
    let split_cfg = SplitConfig::default();
    let assignment = greedy_split(&groups, &split_cfg);
    let split = materialize(&assignment, &groups, &corpus, &split_cfg)?;

    let report = coverage(
        assignment.groups_on(&groups, Side::Train),
        assignment.groups_on(&groups, Side::Test),
    );
    Ok((report, overlap(&split.train, &split.test, &cfg)))
}

fn main() -> compsplit::Result<()> {
    let (cov, ov) = run_example()?;
    println!(
        "unique coverage {:.3} ({} of {} concepts), weighted coverage {:.3}",
        cov.unique_coverage, cov.covered_test_concepts, cov.test_concepts, cov.weighted_coverage
    );
    for (concept, n) in cov.uncovered_concepts.iter().take(5) {
        println!("  uncovered: {concept} ({n})");
    }
    println!(
        "overlap: question {:.3}, reduced qa {:.3}, raw qa {:.3}, shared images {}",
        ov.question_string_overlap, ov.reduced_qa_overlap, ov.raw_qa_overlap, ov.shared_images
    );
    Ok(())
}
