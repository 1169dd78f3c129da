// Reduce questions to their concept words.
//
// Paraphrases that differ only in stopwords and inflection collapse to the
// same reduced form.

use compsplit::textnorm::{reduce, NormConfig, ReducedForm};

pub fn run_example() -> compsplit::Result<Vec<(String, ReducedForm)>> {
    let cfg = NormConfig::default();
    let questions = [
        "What color are the cones?",
        "What is the color of the cones?",
        "How many plates are on the table?",
        "Is it daytime?",
        "What sport is the man playing?",
    ];
    Ok(questions
        .iter()
        .map(|q| (q.to_string(), reduce(q, &cfg)))
        .collect())
}

fn main() -> compsplit::Result<()> {
    for (q, r) in run_example()? {
        println!("{q:<40} -> [{r}]");
    }
    Ok(())
}
