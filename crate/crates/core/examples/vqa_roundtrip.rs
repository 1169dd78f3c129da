// Write a split in the VQA questions/annotations layout and read it back.

use compsplit::corpus::{export_split, load_split, ExportFormat, SplitOutput};
use compsplit::grouping::build_groups;
use compsplit::splitter::{greedy_split, materialize, SplitConfig};
use compsplit::synth::{generate, preset};
use compsplit::textnorm::NormConfig;

/// The split as written and as read back.
pub fn run_example() -> compsplit::Result<(SplitOutput, SplitOutput)> {
    let mut synth = preset("poisoned-type")?;
    synth.n_records = 1_000;
    let corpus = generate(&synth)?;
    let split_cfg = SplitConfig::default();
    let groups = build_groups(&corpus, &NormConfig::default());
    let split = materialize(&greedy_split(&groups, &split_cfg), &groups, &corpus, &split_cfg)?;

    let dir = tempfile::tempdir().map_err(|e| compsplit::Error::Config(e.to_string()))?;
    export_split(&split, dir.path(), ExportFormat::Vqa)?;
    let back = load_split(dir.path(), ExportFormat::Vqa)?;
    Ok((split, back))
}

fn main() -> compsplit::Result<()> {
    let (written, read) = run_example()?;
    println!("{}", serde_json::to_string_pretty(&read.manifest).unwrap());
    println!(
        "round trip {}",
        if written.train.records() == read.train.records() && written.test.records() == read.test.records() {
            "exact"
        } else {
            "lossy"
        }
    );
    Ok(())
}
