//! Command-line frontend. [`run`] parses arguments, executes one subcommand
//! and returns the process exit code: 0 on success, 1 on runtime or data
//! errors, 2 on usage errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analysis::{self, QuestionTypes, Sample};
use crate::corpus::{self, Corpus, ExportFormat, SplitFiles};
use crate::error::{Error, Result};
use crate::grouping::{build_groups, dump_groups};
use crate::priors::{self, EvalReport, Keying};
use crate::splitter::{self, Fraction, GainWeighting, GroupOrder, SplitConfig};
use crate::synth::{self, SynthConfig};
use crate::textnorm::{hex, NormConfig};

/// Default location of normalization resources when `--norm-config` is absent.
pub const NORM_DIR_ENV: &str = "COMPSPLIT_NORM_DIR";

#[derive(Debug, Parser)]
#[command(
    name = "compsplit",
    version,
    about = "Compositional train/test splits for QA corpora"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Stopword/lemma resources: a directory or a TOML file.
    #[arg(long, global = true, value_name = "PATH")]
    norm_config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Vqa)]
    format: Format,
    /// Worker threads; outputs do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Vqa,
    Jsonl,
}

impl From<Format> for ExportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Vqa => ExportFormat::Vqa,
            Format::Jsonl => ExportFormat::Jsonl,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
#[allow(clippy::enum_variant_names)]
enum Order {
    SizeDescThenKey,
    KeyLex,
    InputOrder,
    Shuffled,
}

impl From<Order> for GroupOrder {
    fn from(o: Order) -> Self {
        match o {
            Order::SizeDescThenKey => GroupOrder::SizeDescThenKey,
            Order::KeyLex => GroupOrder::KeyLex,
            Order::InputOrder => GroupOrder::InputOrder,
            Order::Shuffled => GroupOrder::Shuffled,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Weighting {
    Occurrences,
    UniqueConcepts,
}

impl From<Weighting> for GainWeighting {
    fn from(w: Weighting) -> Self {
        match w {
            Weighting::Occurrences => GainWeighting::Occurrences,
            Weighting::UniqueConcepts => GainWeighting::UniqueConcepts,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KeyingArg {
    QuestionType,
    ReducedForm,
}

impl From<KeyingArg> for Keying {
    fn from(k: KeyingArg) -> Self {
        match k {
            KeyingArg::QuestionType => Keying::QuestionType,
            KeyingArg::ReducedForm => Keying::ReducedForm,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Reduce, group and split one or more corpora.
    Split(SplitArgs),
    /// Coverage, overlap and distribution statistics for a train/test pair.
    Analyze(PairArgs),
    /// Fit per-key majority priors on train and score them on test.
    EvalPrior(EvalArgs),
    /// Generate a synthetic corpus as JSONL.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct SplitArgs {
    /// VQA questions file; pair each with an --annotations file.
    #[arg(long)]
    questions: Vec<PathBuf>,
    #[arg(long)]
    annotations: Vec<PathBuf>,
    /// JSONL corpus file.
    #[arg(long)]
    input: Vec<PathBuf>,
    /// Target test fraction, e.g. 1/3 or 0.3333.
    #[arg(long, default_value = "1/3")]
    fraction: Fraction,
    #[arg(long, value_enum, default_value_t = Order::SizeDescThenKey)]
    order: Order,
    #[arg(long, value_enum, default_value_t = Weighting::Occurrences)]
    weighting: Weighting,
    /// Seeded record-level random split instead of the greedy split.
    #[arg(long)]
    random: bool,
    /// Write the greedy iteration log as JSONL.
    #[arg(long, value_name = "PATH")]
    log: Option<PathBuf>,
    /// Write the groups as JSONL.
    #[arg(long, value_name = "PATH")]
    dump_groups: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PairArgs {
    /// One JSONL file or a VQA questions/annotations pair.
    #[arg(long, num_args = 1..=2)]
    train: Vec<PathBuf>,
    #[arg(long, num_args = 1..=2)]
    test: Vec<PathBuf>,
    /// Directory written by `split` (layout detected from its files).
    #[arg(long, conflicts_with_all = ["train", "test"])]
    split_dir: Option<PathBuf>,
    /// Restrict distribution statistics to a seeded sample of this size.
    #[arg(long)]
    sample: Option<usize>,
    /// Prefix tree depth in words.
    #[arg(long, default_value_t = 3)]
    depth: usize,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// Key(s) for the prior; default both.
    #[arg(long, value_enum)]
    keying: Vec<KeyingArg>,
    /// Reference eval JSON (e.g. from a random split); writes a drop CSV.
    #[arg(long, value_name = "PATH")]
    drop_against: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,
    /// JSON or TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of records (overrides the config).
    #[arg(long)]
    n: Option<usize>,
}

/// Runs the CLI on `args` (including the program name).
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn execute(cli: Cli) -> Result<()> {
    let threads = cli.global.threads.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| usage(format!("cannot start {threads} threads: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Split(a) => cmd_split(&cli.global, a),
        Command::Analyze(a) => cmd_analyze(&cli.global, a),
        Command::EvalPrior(a) => cmd_eval_prior(&cli.global, a),
        Command::Synth(a) => cmd_synth(&cli.global, a),
    })
}

fn norm_config(g: &Global) -> Result<NormConfig> {
    let path = g
        .norm_config
        .clone()
        .or_else(|| std::env::var_os(NORM_DIR_ENV).map(PathBuf::from));
    match path {
        Some(p) => {
            require_exists(&p)?;
            NormConfig::load(&p)
        }
        None => Ok(NormConfig::default()),
    }
}

fn out_dir(g: &Global) -> Result<&Path> {
    let dir = g.out.as_deref().ok_or_else(|| usage("--out is required"))?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Ok(dir)
}

fn require_exists(p: &Path) -> Result<()> {
    if p.exists() {
        Ok(())
    } else {
        Err(usage(format!("no such file: {}", p.display())))
    }
}

fn sha256_file(p: &Path) -> Result<String> {
    let bytes = std::fs::read(p).map_err(|e| Error::io(p, e))?;
    Ok(hex(&Sha256::digest(&bytes)))
}

fn load_side(paths: &[PathBuf]) -> Result<Corpus> {
    for p in paths {
        require_exists(p)?;
    }
    match paths {
        [p] => corpus::load_jsonl(p),
        [q, a] => corpus::load_vqa(q, a),
        _ => Err(usage("expected one JSONL file or a questions/annotations pair")),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut body = serde_json::to_vec_pretty(value).map_err(|e| Error::io(path, e.into()))?;
    body.push(b'\n');
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn write_csv(path: &Path, f: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

fn cmd_split(g: &Global, a: &SplitArgs) -> Result<()> {
    if a.questions.len() != a.annotations.len() {
        return Err(usage("each --questions needs a matching --annotations"));
    }
    if a.questions.is_empty() && a.input.is_empty() {
        return Err(usage("no input: give --questions/--annotations or --input"));
    }
    if a.random && (a.log.is_some() || a.dump_groups.is_some()) {
        return Err(usage("--log and --dump-groups apply to the greedy split only"));
    }
    let out = out_dir(g)?;
    let cfg = norm_config(g)?;
    let seed = g.seed.unwrap_or(0);

    let mut parts = Vec::new();
    let mut inputs = std::collections::BTreeMap::new();
    for (i, (q, ann)) in a.questions.iter().zip(&a.annotations).enumerate() {
        parts.push(load_side(&[q.clone(), ann.clone()])?);
        inputs.insert(format!("questions.{i}"), sha256_file(q)?);
        inputs.insert(format!("annotations.{i}"), sha256_file(ann)?);
    }
    for (i, p) in a.input.iter().enumerate() {
        parts.push(load_side(std::slice::from_ref(p))?);
        inputs.insert(format!("input.{i}"), sha256_file(p)?);
    }
    let corpus = Corpus::merge(parts, "input")?;

    let mut split = if a.random {
        splitter::random_split(&corpus, a.fraction, seed)
    } else {
        let split_cfg = SplitConfig {
            target_test_fraction: a.fraction,
            group_order: a.order.into(),
            weighting: a.weighting.into(),
            seed,
        };
        let groups = build_groups(&corpus, &cfg);
        if let Some(p) = &a.dump_groups {
            dump_groups(&groups, p)?;
        }
        let assignment = splitter::greedy_split(&groups, &split_cfg);
        if let Some(p) = &a.log {
            std::fs::write(p, assignment.log_jsonl(&groups)).map_err(|e| Error::io(p, e))?;
        }
        splitter::materialize(&assignment, &groups, &corpus, &split_cfg)?
    };
    split.manifest.inputs = inputs;
    split
        .manifest
        .config
        .insert("norm_fingerprint".into(), cfg.fingerprint().into());
    corpus::export_split(&split, out, g.format.into())?;

    let c = &split.manifest.counts;
    println!(
        "train: {} questions, {} images; test: {} questions, {} images",
        c.train.questions, c.train.images, c.test.questions, c.test.images
    );
    if let Some(cov) = &split.manifest.coverage {
        println!(
            "coverage: unique {:.4}, weighted {:.4}",
            cov.unique_coverage, cov.weighted_coverage
        );
    }
    Ok(())
}

fn load_pair(p: &PairArgs) -> Result<(Corpus, Corpus)> {
    if let Some(dir) = &p.split_dir {
        require_exists(dir)?;
        let format = if SplitFiles::in_dir(dir, ExportFormat::Jsonl).train[0].exists() {
            ExportFormat::Jsonl
        } else {
            ExportFormat::Vqa
        };
        let split = corpus::load_split(dir, format)?;
        return Ok((split.train, split.test));
    }
    if p.train.is_empty() || p.test.is_empty() {
        return Err(usage("both --train and --test are required (or --split-dir)"));
    }
    Ok((load_side(&p.train)?, load_side(&p.test)?))
}

fn cmd_analyze(g: &Global, a: &PairArgs) -> Result<()> {
    let (train, test) = load_pair(a)?;
    let out = out_dir(g)?;
    let cfg = norm_config(g)?;
    let sample = |c: &Corpus| {
        a.sample.map(|size| Sample {
            size: size.min(c.len()),
            seed: g.seed.unwrap_or(0),
        })
    };

    let train_groups = build_groups(&train, &cfg);
    let test_groups = build_groups(&test, &cfg);
    let coverage = analysis::coverage(&train_groups, &test_groups);
    write_json(&out.join("coverage.json"), &coverage)?;
    let overlap = analysis::overlap(&train, &test, &cfg);
    write_json(&out.join("overlap.json"), &overlap)?;

    let types = QuestionTypes::default();
    let tree = std::collections::BTreeMap::from([
        (
            "train",
            analysis::prefix_distribution(&train, a.depth, sample(&train))?,
        ),
        (
            "test",
            analysis::prefix_distribution(&test, a.depth, sample(&test))?,
        ),
    ]);
    write_json(&out.join("prefix_tree.json"), &tree)?;
    let train_dist = analysis::answer_distribution(&train, sample(&train), &types)?;
    let test_dist = analysis::answer_distribution(&test, sample(&test), &types)?;
    write_csv(&out.join("answer_by_qtype.csv"), |w| {
        analysis::write_answer_csv(&[("train", &train_dist), ("test", &test_dist)], w)
    })?;
    write_csv(&out.join("uncovered_concepts.csv"), |w| {
        analysis::write_uncovered_csv(&coverage, w)
    })?;

    println!(
        "coverage: unique {:.4}, weighted {:.4}; overlap: question {:.4}, reduced qa {:.4}, raw qa {:.4}",
        coverage.unique_coverage,
        coverage.weighted_coverage,
        overlap.question_string_overlap,
        overlap.reduced_qa_overlap,
        overlap.raw_qa_overlap
    );
    Ok(())
}

fn cmd_eval_prior(g: &Global, a: &EvalArgs) -> Result<()> {
    let (train, test) = load_pair(&a.pair)?;
    let reference: Option<EvalReport> = match &a.drop_against {
        Some(p) => {
            require_exists(p)?;
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            Some(serde_json::from_str(&text).map_err(|e| Error::Parse {
                path: p.clone(),
                offset: 0,
                message: e.to_string(),
            })?)
        }
        None => None,
    };
    let out = out_dir(g)?;
    let cfg = norm_config(g)?;
    let mut keyings: Vec<KeyingArg> = if a.keying.is_empty() {
        vec![KeyingArg::QuestionType, KeyingArg::ReducedForm]
    } else {
        a.keying.clone()
    };
    keyings.dedup();

    for k in keyings {
        let keying: Keying = k.into();
        let model = priors::fit_prior(&train, keying, &cfg)?;
        let report = priors::evaluate(&model, &test, &cfg);
        let name = keying.as_str();
        write_json(&out.join(format!("eval_{name}.json")), &report)?;
        write_csv(&out.join(format!("eval_{name}.csv")), |w| {
            priors::write_eval_csv(&report, w)
        })?;
        println!(
            "{name}: overall {:.4} on {} questions",
            report.overall_accuracy, report.n
        );
        if let Some(r) = reference.as_ref().filter(|r| r.keying == keying) {
            let drops = priors::drop_report(r, &report);
            write_csv(&out.join(format!("drop_{name}.csv")), |w| {
                priors::write_drop_csv(&drops, w)
            })?;
        }
    }
    Ok(())
}

fn cmd_synth(g: &Global, a: &SynthArgs) -> Result<()> {
    let mut cfg: SynthConfig = match (&a.preset, &a.config) {
        (Some(name), _) => synth::preset(name)?,
        (None, Some(p)) => {
            require_exists(p)?;
            SynthConfig::load(p)?
        }
        (None, None) => return Err(usage("give --preset or --config")),
    };
    if let Some(n) = a.n {
        cfg.n_records = n;
    }
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    let corpus = synth::generate(&cfg)?;
    match &g.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            corpus::write_jsonl(&corpus, &dir.join("synth.jsonl"))
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            corpus::write_jsonl_to(&corpus, &mut lock)
                .and_then(|_| lock.flush())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}
