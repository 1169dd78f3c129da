// Synthetic corpora: the built-in presets and a hand-written config where
// each object has one dominant color and the crossed pairs are rare.

use std::collections::BTreeSet;

use compsplit::grouping::build_groups;
use compsplit::splitter::{greedy_split, materialize, SplitConfig};
use compsplit::synth::{generate, preset, SynthConfig, PRESETS};
use compsplit::textnorm::NormConfig;

const CROSSED: &str = r#"
n_records = 2000
agreement = 1.0
seed = 11

[vocab]
object = ["plate", "cone"]

[[templates]]
name = "color"
text = "What color is the {object}?"
question_type = "what color is the"
answers = { green = 0.5, orange = 0.5 }

[[bias]]
template = "color"
object = "plate"
answers = { green = 0.9, orange = 0.1 }

[[bias]]
template = "color"
object = "cone"
answers = { green = 0.1, orange = 0.9 }
"#;

pub type Pairs = BTreeSet<(String, String)>;

/// (object, answer) pairs on the train and test sides of a greedy split of
/// the crossed corpus.
pub fn crossed_pairs() -> compsplit::Result<(Pairs, Pairs)> {
    let synth: SynthConfig = toml::from_str(CROSSED).expect("valid config");
    let corpus = generate(&synth)?;
    let cfg = NormConfig::default();
    let split_cfg = SplitConfig::default();
    let groups = build_groups(&corpus, &cfg);
    let split = materialize(&greedy_split(&groups, &split_cfg), &groups, &corpus, &split_cfg)?;
    let pairs = |c: &compsplit::corpus::Corpus| {
        c.records()
            .iter()
            .map(|r| {
                let object = r
                    .question_text
                    .trim_start_matches("what color is the ")
                    .trim_end_matches('?');
                (object.to_string(), r.ground_truth_answer.clone())
            })
            .collect::<Pairs>()
    };
    Ok((pairs(&split.train), pairs(&split.test)))
}

pub fn run_example() -> compsplit::Result<Vec<(&'static str, usize, usize)>> {
    PRESETS
        .iter()
        .map(|&name| {
            let mut synth = preset(name)?;
            synth.n_records = 2_000;
            let corpus = generate(&synth)?;
            let groups = build_groups(&corpus, &NormConfig::default());
            Ok((name, corpus.len(), groups.len()))
        })
        .collect()
}

fn main() -> compsplit::Result<()> {
    for (name, n, groups) in run_example()? {
        println!("{name}: {n} records in {groups} groups");
    }
    let (train, test) = crossed_pairs()?;
    println!("train pairs: {train:?}");
    println!("test pairs:  {test:?}");
    Ok(())
}
