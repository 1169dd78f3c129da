// Acceptance gate: one PASS/FAIL/SKIP line per criterion; exits non-zero if
// any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use common::{random_corpus, replay_greedy, small_corpus};
use compsplit::analysis::{coverage, overlap};
use compsplit::corpus::{self, Corpus, QaRecord};
use compsplit::grouping::build_groups;
use compsplit::priors::{evaluate, fit_prior, vqa_accuracy, Keying};
use compsplit::splitter::{greedy_split, materialize, random_split, Fraction, Side, SplitConfig};
use compsplit::synth::{generate, preset};
use compsplit::textnorm::{reduce, NormConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Outcome::{Fail, Pass, Skip};

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn within(limit: Duration, elapsed: Duration) -> bool {
    elapsed < limit
}

fn reduction_fixtures() -> Outcome {
    let cfg = NormConfig::default();
    let a = reduce("What color are the cones?", &cfg);
    let b = reduce("What is the color of the cones?", &cfg);
    let want = ["what", "color", "cone"];
    check(
        a.tokens() == want && b.tokens() == want,
        format!("[{a}] and [{b}]"),
    )
}

fn zero_leakage() -> Outcome {
    let start = Instant::now();
    let cfg = NormConfig::default();
    let failures: Vec<u64> = (0..1_000u64)
        .into_par_iter()
        .filter(|&seed| {
            // log-uniform sizes in [10, 5000]
            let u: f64 = ChaCha8Rng::seed_from_u64(seed ^ 0xacce55).random();
            let n = (10.0 * 500f64.powf(u)).round() as usize;
            let corpus = random_corpus(seed, n);
            let groups = build_groups(&corpus, &cfg);
            let split_cfg = SplitConfig::default();
            let split =
                materialize(&greedy_split(&groups, &split_cfg), &groups, &corpus, &split_cfg).unwrap();
            let ids = |c: &Corpus| c.records().iter().map(|r| r.question_id).collect::<BTreeSet<_>>();
            let (train, test) = (ids(&split.train), ids(&split.test));
            let partition = train.is_disjoint(&test) && train.len() + test.len() == corpus.len();
            !(partition && overlap(&split.train, &split.test, &cfg).reduced_qa_overlap == 0.0)
        })
        .collect();
    let elapsed = start.elapsed();
    check(
        failures.is_empty() && within(Duration::from_secs(120), elapsed),
        format!("1000 corpora, {} violations, {elapsed:.1?}", failures.len()),
    )
}

fn greedy_oracle() -> Outcome {
    let start = Instant::now();
    let mut steps = 0;
    let mut errors = Vec::new();
    for seed in 0..200 {
        let (_, groups) = small_corpus(seed, 100);
        let cfg = SplitConfig::default();
        match replay_greedy(&groups, &cfg, &greedy_split(&groups, &cfg)) {
            Ok(n) => steps += n,
            Err(e) => errors.push(format!("seed {seed}: {e}")),
        }
    }
    let elapsed = start.elapsed();
    check(
        errors.is_empty() && within(Duration::from_secs(60), elapsed),
        format!(
            "200 corpora, {steps} train selections checked, {} mismatches {:?}, {elapsed:.1?}",
            errors.len(),
            errors.first()
        ),
    )
}

fn hand_trace() -> Outcome {
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
    let corpus = Corpus::new(records, "trace").unwrap();
    let groups = build_groups(&corpus, &NormConfig::default());
    let a = greedy_split(&groups, &SplitConfig::default());
    let test: Vec<String> = a
        .groups_on(&groups, Side::Test)
        .map(|g| format!("{}/{}", g.key.reduced, g.key.answer))
        .collect();
    let train = a.groups_on(&groups, Side::Train).count();
    let cov = coverage(
        a.groups_on(&groups, Side::Train),
        a.groups_on(&groups, Side::Test),
    );
    check(
        test == ["what color cone/orange"]
            && train == 3
            && (cov.unique_coverage, cov.weighted_coverage) == (0.75, 0.75),
        format!(
            "test {test:?}, {train} train groups, coverage ({}, {})",
            cov.unique_coverage, cov.weighted_coverage
        ),
    )
}

fn compositional_drop() -> Outcome {
    let start = Instant::now();
    let cfg = NormConfig::default();
    let mut synth = preset("sport-bias").unwrap();
    synth.n_records = 50_000;
    let corpus = generate(&synth).unwrap();
    let split_cfg = SplitConfig::default();
    let groups = build_groups(&corpus, &cfg);
    let greedy = materialize(&greedy_split(&groups, &split_cfg), &groups, &corpus, &split_cfg).unwrap();
    let random = random_split(&corpus, split_cfg.target_test_fraction, synth.seed);
    let acc = |train, test| {
        evaluate(&fit_prior(train, Keying::QuestionType, &cfg).unwrap(), test, &cfg).overall_accuracy
    };
    let (r, g) = (acc(&random.train, &random.test), acc(&greedy.train, &greedy.test));
    let elapsed = start.elapsed();
    check(
        r - g >= 0.10 && within(Duration::from_secs(60), elapsed),
        format!(
            "random {:.2} vs compositional {:.2} ({:+.2} points), {elapsed:.1?}",
            100.0 * r,
            100.0 * g,
            100.0 * (g - r)
        ),
    )
}

fn consensus_metric() -> Outcome {
    let got: Vec<f64> = (0..=3)
        .map(|m| {
            let human: Vec<String> = (0..10)
                .map(|i| if i < m { "yes" } else { "no way" }.to_string())
                .collect();
            vqa_accuracy("yes", &human)
        })
        .collect();
    let want = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
    check(
        got.iter().zip(want).all(|(g, w)| (g - w).abs() <= 1e-12),
        format!("{got:?}"),
    )
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_compsplit")
}

fn run_bin(args: &[&str]) -> bool {
    Command::new(bin())
        .args(args)
        .env_remove("COMPSPLIT_NORM_DIR")
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn dir_bytes(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (PathBuf::from(p.file_name().unwrap()), fs::read(&p).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn determinism(tmp: &Path) -> Outcome {
    let mut synth = preset("color-bias").unwrap();
    synth.n_records = 20_000;
    let input = tmp.join("determinism.jsonl");
    corpus::write_jsonl(&generate(&synth).unwrap(), &input).unwrap();
    let input = input.to_str().unwrap();
    let mut outputs = Vec::new();
    for (name, extra) in [
        ("a", vec![]),
        ("b", vec![]),
        ("t1", vec!["--threads", "1"]),
        ("t8", vec!["--threads", "8"]),
    ] {
        for random in [false, true] {
            let out = tmp.join(format!("det-{name}-{random}"));
            let mut args = vec![
                "split",
                "--input",
                input,
                "--seed",
                "3",
                "--out",
                out.to_str().unwrap(),
            ];
            if random {
                args.push("--random");
            }
            args.extend(extra.iter().copied());
            if !run_bin(&args) {
                return Fail(format!("split run {name} failed"));
            }
            outputs.push((random, dir_bytes(&out)));
        }
    }
    let same = |random: bool| {
        let runs: Vec<_> = outputs
            .iter()
            .filter(|(r, _)| *r == random)
            .map(|(_, b)| b)
            .collect();
        runs.windows(2).all(|w| w[0] == w[1])
    };
    check(
        same(false) && same(true),
        "greedy and random splits, 4 runs each incl. --threads 1/8".into(),
    )
}

/// VQA-scale corpus with a long-tailed vocabulary, so most groups are small.
fn large_corpus(n: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut zipf = |v: f64| (v.powf(rng.random::<f64>()) as usize).saturating_sub(1);
    let mut parts = Vec::with_capacity(n);
    for id in 1..=n as u64 {
        let (o, attr, ans, form) = (zipf(5_000.0), zipf(40.0), zipf(3_000.0), zipf(6.0));
        parts.push((id, o, attr, ans, form));
    }
    let records = parts
        .into_iter()
        .map(|(id, o, attr, ans, form)| {
            let q = match form {
                0 => format!("What a{attr} is the obj{o}?"),
                1 => format!("How many obj{o}s are there?"),
                2 => format!("Is there a obj{o} near the obj{}?", (o * 7 + attr) % 5_000),
                3 => format!("What is the obj{o} doing?"),
                _ => format!("Why is the obj{o} a{attr}?"),
            };
            QaRecord::new(id, id / 3 + 1, &q, &format!("ans{ans}"))
        })
        .collect();
    Corpus::new(records, "large").unwrap()
}

fn performance(tmp: &Path) -> Outcome {
    let input = tmp.join("large.jsonl");
    corpus::write_jsonl(&large_corpus(370_000, 8), &input).unwrap();
    let out = tmp.join("large-split");
    let start = Instant::now();
    let ok = run_bin(&[
        "split",
        "--input",
        input.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let elapsed = start.elapsed();
    let test_q = if ok {
        let m: serde_json::Value =
            serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
        m["counts"]["test"]["questions"].as_u64().unwrap_or(0)
    } else {
        0
    };
    check(
        ok && within(Duration::from_secs(300), elapsed),
        format!("370000 records end to end in {elapsed:.1?} ({test_q} test questions)"),
    )
}

fn real_data() -> Outcome {
    let Some(dir) = std::env::var_os("COMPSPLIT_VQA_DIR").map(PathBuf::from) else {
        return Skip(
            "set COMPSPLIT_VQA_DIR to a directory holding the VQA v1.0 train2014/val2014 files".into(),
        );
    };
    let pair = |split: &str| {
        (
            dir.join(format!("OpenEnded_mscoco_{split}_questions.json")),
            dir.join(format!("mscoco_{split}_annotations.json")),
        )
    };
    let load = || -> compsplit::Result<Corpus> {
        let (tq, ta) = pair("train2014");
        let (vq, va) = pair("val2014");
        Corpus::merge(
            vec![corpus::load_vqa(&tq, &ta)?, corpus::load_vqa(&vq, &va)?],
            "vqa",
        )
    };
    let corpus = match load() {
        Ok(c) => c,
        Err(e) => return Fail(format!("cannot load VQA files: {e}")),
    };
    let cfg = NormConfig::default();
    let groups = build_groups(&corpus, &cfg);
    let split_cfg = SplitConfig::default();
    let a = greedy_split(&groups, &split_cfg);
    let split = materialize(&a, &groups, &corpus, &split_cfg).unwrap();
    let cov = coverage(
        a.groups_on(&groups, Side::Train),
        a.groups_on(&groups, Side::Test),
    );
    let random = random_split(&corpus, Fraction::ONE_THIRD, 0);
    let q_overlap = overlap(&random.train, &random.test, &cfg).question_string_overlap;
    let total = split.train.len() + split.test.len();
    let notes = [
        (total == 369_861, format!("total {total} (369861)")),
        (
            (cov.unique_coverage - 0.735).abs() <= 0.10,
            format!("unique {:.3} (0.735)", cov.unique_coverage),
        ),
        (
            (cov.weighted_coverage - 0.988).abs() <= 0.05,
            format!("weighted {:.3} (0.988)", cov.weighted_coverage),
        ),
        (
            (q_overlap - 0.4606).abs() <= 0.05,
            format!("random question overlap {q_overlap:.4} (0.4606)"),
        ),
    ];
    let deviations: Vec<&String> = notes.iter().filter(|(ok, _)| !ok).map(|(_, s)| s).collect();
    let all: Vec<&String> = notes.iter().map(|(_, s)| s).collect();
    // non-binding: deviations are reported, not failed
    Pass(format!("{all:?}; deviations: {deviations:?}"))
}

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let criteria: Vec<Criterion> = vec![
        ("reduction fixtures", Box::new(reduction_fixtures)),
        ("zero leakage", Box::new(zero_leakage)),
        ("greedy oracle equivalence", Box::new(greedy_oracle)),
        ("hand trace", Box::new(hand_trace)),
        ("compositional drop", Box::new(compositional_drop)),
        ("consensus metric", Box::new(consensus_metric)),
        ("determinism", Box::new(|| determinism(tmp.path()))),
        ("performance", Box::new(|| performance(tmp.path()))),
        ("real data", Box::new(real_data)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (tag, detail) = match run() {
            Pass(d) => ("PASS", d),
            Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Skip(d) => ("SKIP", d),
        };
        println!("criterion {} {tag} {name}: {detail}", i + 1);
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
