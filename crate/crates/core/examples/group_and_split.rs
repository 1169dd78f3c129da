// Group a tiny corpus and walk through the greedy split step by step.
//
// Four groups: (cone, green) x1, (cone, orange) x2, (plate, green) x2 and
// (plate, red) x1. The largest group by key goes to test, then the group
// that best covers its concepts goes to train, and the quota of 1/3 is met.

use compsplit::corpus::{Corpus, QaRecord};
use compsplit::grouping::{build_groups, QaGroup};
use compsplit::splitter::{coverage_summary, greedy_split, SplitAssignment, SplitConfig};
use compsplit::textnorm::NormConfig;

pub fn run_example() -> compsplit::Result<(Vec<QaGroup>, SplitAssignment)> {
    let rows = [
        ("What color is the cone?", "green"),
        ("What color is the cone?", "orange"),
        ("What is the color of the cone?", "orange"),
        ("What color is the plate?", "green"),
        ("What color are the plates?", "green"),
        ("What color is the plate?", "red"),
    ];
    let records = rows
        .iter()
        .zip(1..)
        .map(|((q, a), id)| QaRecord::new(id, id, q, a))
        .collect();
    let corpus = Corpus::new(records, "four groups")?;
    let groups = build_groups(&corpus, &NormConfig::default());
    let assignment = greedy_split(&groups, &SplitConfig::default());
    Ok((groups, assignment))
}

fn main() -> compsplit::Result<()> {
    let (groups, assignment) = run_example()?;
    for (i, g) in groups.iter().enumerate() {
        println!(
            "G{i}: [{}] -> {} ({} records)",
            g.key.reduced,
            g.key.answer,
            g.size()
        );
    }
    print!("{}", assignment.log_jsonl(&groups));
    let cov = coverage_summary(&groups, assignment.sides());
    println!(
        "unique coverage {:.2}, weighted coverage {:.2}, still uncovered {:?}",
        cov.unique_coverage, cov.weighted_coverage, assignment.uncovered_final
    );
    Ok(())
}
