// A seeded random split of the same corpus, for contrast: records with the
// same question and answer land on both sides.

use compsplit::analysis::{overlap, OverlapReport};
use compsplit::grouping::build_groups;
use compsplit::splitter::{greedy_split, materialize, random_split, Fraction, SplitConfig};
use compsplit::synth::{generate, preset};
use compsplit::textnorm::NormConfig;

/// Overlap of the greedy split, then of the random split.
pub fn run_example() -> compsplit::Result<(OverlapReport, OverlapReport)> {
    let cfg = NormConfig::default();
    let mut synth = preset("sport-bias")?;
    synth.n_records = 3_000;
    let corpus = generate(&synth)?;

    let split_cfg = SplitConfig::default();
    let groups = build_groups(&corpus, &cfg);
    let greedy = materialize(&greedy_split(&groups, &split_cfg), &groups, &corpus, &split_cfg)?;
    let random = random_split(&corpus, Fraction::ONE_THIRD, 7);
    Ok((
        overlap(&greedy.train, &greedy.test, &cfg),
        overlap(&random.train, &random.test, &cfg),
    ))
}

fn main() -> compsplit::Result<()> {
    let (greedy, random) = run_example()?;
    for (name, o) in [("greedy", greedy), ("random", random)] {
        println!(
            "{name}: question {:.3}, reduced qa {:.3}, raw qa {:.3}",
            o.question_string_overlap, o.reduced_qa_overlap, o.raw_qa_overlap
        );
    }
    Ok(())
}
