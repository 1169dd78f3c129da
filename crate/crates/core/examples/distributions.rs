// Question prefix tree and per-question-type answer distributions for both
// sides of a greedy split. The top "what sport is" answer flips between
// train and test.

use compsplit::analysis::{distribution_report, top_answer, DistributionReport, QuestionTypes};
use compsplit::grouping::build_groups;
use compsplit::splitter::{greedy_split, materialize, SplitConfig};
use compsplit::synth::{generate, preset};
use compsplit::textnorm::NormConfig;

pub fn run_example() -> compsplit::Result<(DistributionReport, DistributionReport)> {
    let cfg = NormConfig::default();
    let mut synth = preset("sport-bias")?;
    synth.n_records = 6_000;
    let corpus = generate(&synth)?;

    let split_cfg = SplitConfig::default();
    let groups = build_groups(&corpus, &cfg);
    let split = materialize(&greedy_split(&groups, &split_cfg), &groups, &corpus, &split_cfg)?;
    let types = QuestionTypes::default();
    Ok((
        distribution_report(&split.train, 3, None, &types)?,
        distribution_report(&split.test, 3, None, &types)?,
    ))
}

fn main() -> compsplit::Result<()> {
    let (train, test) = run_example()?;
    for (side, report) in [("train", &train), ("test", &test)] {
        println!("{side}:");
        for (prefix, n) in report.prefix_tree.flatten().iter().filter(|(p, _)| p.len() == 3) {
            println!("  {:<24} {n}", prefix.join(" "));
        }
        println!(
            "  top answer for \"what sport is\": {}",
            top_answer(&report.answer_by_qtype, "what sport is").unwrap_or("-")
        );
    }
    Ok(())
}
