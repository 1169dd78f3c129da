// A per-question-type majority prior scores well on a random split and
// poorly on a compositional one, because the test answers it needs were
// kept out of train.

use compsplit::grouping::build_groups;
use compsplit::priors::{drop_report, evaluate, fit_prior, EvalReport, Keying, TypeDrop};
use compsplit::splitter::{greedy_split, materialize, random_split, SplitConfig};
use compsplit::synth::{generate, preset};
use compsplit::textnorm::NormConfig;

pub struct PriorDrop {
    pub random: EvalReport,
    pub compositional: EvalReport,
    pub drops: Vec<TypeDrop>,
}

pub fn prior_drop(preset_name: &str, n_records: usize) -> compsplit::Result<PriorDrop> {
    let cfg = NormConfig::default();
    let mut synth = preset(preset_name)?;
    synth.n_records = n_records;
    let corpus = generate(&synth)?;

    let split_cfg = SplitConfig::default();
    let groups = build_groups(&corpus, &cfg);
    let greedy = materialize(&greedy_split(&groups, &split_cfg), &groups, &corpus, &split_cfg)?;
    let random = random_split(&corpus, split_cfg.target_test_fraction, synth.seed);

    let eval = |train, test| -> compsplit::Result<EvalReport> {
        Ok(evaluate(
            &fit_prior(train, Keying::QuestionType, &cfg)?,
            test,
            &cfg,
        ))
    };
    let random = eval(&random.train, &random.test)?;
    let compositional = eval(&greedy.train, &greedy.test)?;
    let drops = drop_report(&random, &compositional);
    Ok(PriorDrop {
        random,
        compositional,
        drops,
    })
}

pub fn run_example() -> compsplit::Result<Vec<(&'static str, PriorDrop)>> {
    ["sport-bias", "poisoned-type"]
        .into_iter()
        .map(|name| Ok((name, prior_drop(name, 20_000)?)))
        .collect()
}

fn main() -> compsplit::Result<()> {
    for (name, r) in run_example()? {
        println!(
            "{name}: random {:.3} -> compositional {:.3}",
            r.random.overall_accuracy, r.compositional.overall_accuracy
        );
        for d in &r.drops {
            println!(
                "  {:<16} {:.3} -> {:.3} (n = {} / {})",
                d.question_type,
                d.reference_accuracy,
                d.compositional_accuracy,
                d.n_reference,
                d.n_compositional
            );
        }
    }
    Ok(())
}
