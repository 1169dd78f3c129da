//! Language-prior baselines: answer every question with the most frequent
//! training answer for its key, and score with consensus accuracy.
//!
//! Scores are accumulated in thirds (consensus accuracy only takes values
//! k/3), so reports are exact and independent of record order.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::QuestionTypes;
use crate::corpus::{normalize_text, AnswerType, Corpus, QaRecord};
use crate::error::{Error, Result};
use crate::textnorm::{reduce, NormConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Keying {
    QuestionType,
    ReducedForm,
}

impl Keying {
    pub fn as_str(self) -> &'static str {
        match self {
            Keying::QuestionType => "question_type",
            Keying::ReducedForm => "reduced_form",
        }
    }
}

fn record_key(keying: Keying, record: &QaRecord, cfg: &NormConfig, types: &QuestionTypes) -> String {
    match keying {
        Keying::QuestionType => types.of(record),
        Keying::ReducedForm => reduce(&record.question_text, cfg).to_string(),
    }
}

/// Per-key majority answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PriorModel {
    pub keying: Keying,
    /// key -> (predicted answer, its train count)
    pub table: BTreeMap<String, (String, usize)>,
    pub fallback_answer: String,
}

impl PriorModel {
    pub fn predict(&self, key: &str) -> &str {
        self.table
            .get(key)
            .map(|(a, _)| a.as_str())
            .unwrap_or(&self.fallback_answer)
    }
}

/// Most frequent answer, ties to the lexicographically smallest.
fn majority<'a>(counts: &BTreeMap<&'a str, usize>) -> (&'a str, usize) {
    // BTreeMap iterates in ascending key order; keep the first maximum
    counts
        .iter()
        .fold(None, |best: Option<(&str, usize)>, (&a, &n)| match best {
            Some((_, m)) if m >= n => best,
            _ => Some((a, n)),
        })
        .expect("non-empty counts")
}

pub fn fit_prior(train: &Corpus, keying: Keying, cfg: &NormConfig) -> Result<PriorModel> {
    fit_prior_with(train, keying, cfg, &QuestionTypes::default())
}

pub fn fit_prior_with(
    train: &Corpus,
    keying: Keying,
    cfg: &NormConfig,
    types: &QuestionTypes,
) -> Result<PriorModel> {
    if train.is_empty() {
        return Err(Error::EmptyTrain);
    }
    let keys: Vec<String> = train
        .records()
        .par_iter()
        .map(|r| record_key(keying, r, cfg, types))
        .collect();
    let mut per_key: BTreeMap<&str, BTreeMap<&str, usize>> = BTreeMap::new();
    let mut global: BTreeMap<&str, usize> = BTreeMap::new();
    for (r, k) in train.records().iter().zip(&keys) {
        let a = r.ground_truth_answer.as_str();
        *per_key.entry(k).or_default().entry(a).or_default() += 1;
        *global.entry(a).or_default() += 1;
    }
    let table = per_key
        .iter()
        .map(|(k, counts)| {
            let (a, n) = majority(counts);
            (k.to_string(), (a.to_string(), n))
        })
        .collect();
    Ok(PriorModel {
        keying,
        table,
        fallback_answer: majority(&global).0.to_string(),
    })
}

fn matches_thirds(predicted: &str, human_answers: &[String]) -> u64 {
    let p = normalize_text(predicted);
    let m = human_answers.iter().filter(|h| normalize_text(h) == p).count();
    m.min(3) as u64
}

/// Consensus accuracy `min(matches / 3, 1)`. Returns 0 for an empty list;
/// see [`record_accuracy`] for the exact-match fallback.
pub fn vqa_accuracy(predicted: &str, human_answers: &[String]) -> f64 {
    matches_thirds(predicted, human_answers) as f64 / 3.0
}

/// Score in thirds: consensus when human answers exist, else 0 or 3 by
/// exact match against the ground truth.
fn record_thirds(predicted: &str, record: &QaRecord) -> u64 {
    if record.human_answers.is_empty() {
        if normalize_text(predicted) == record.ground_truth_answer {
            3
        } else {
            0
        }
    } else {
        matches_thirds(predicted, &record.human_answers)
    }
}

pub fn record_accuracy(predicted: &str, record: &QaRecord) -> f64 {
    record_thirds(predicted, record) as f64 / 3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub accuracy: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionTypeScore {
    pub question_type: String,
    pub accuracy: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub keying: Keying,
    pub overall_accuracy: f64,
    pub n: usize,
    pub by_answer_type: BTreeMap<AnswerType, Score>,
    /// Sorted by question type.
    pub by_question_type: Vec<QuestionTypeScore>,
}

#[derive(Default, Clone, Copy)]
struct Tally {
    thirds: u64,
    n: usize,
}

impl Tally {
    fn add(&mut self, thirds: u64) {
        self.thirds += thirds;
        self.n += 1;
    }

    fn accuracy(self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.thirds as f64 / (3 * self.n) as f64
        }
    }
}

pub fn evaluate(model: &PriorModel, test: &Corpus, cfg: &NormConfig) -> EvalReport {
    evaluate_with(model, test, cfg, &QuestionTypes::default())
}

pub fn evaluate_with(
    model: &PriorModel,
    test: &Corpus,
    cfg: &NormConfig,
    types: &QuestionTypes,
) -> EvalReport {
    let scored: Vec<(AnswerType, String, u64)> = test
        .records()
        .par_iter()
        .map(|r| {
            let key = record_key(model.keying, r, cfg, types);
            let thirds = record_thirds(model.predict(&key), r);
            (r.effective_answer_type(), types.of(r), thirds)
        })
        .collect();

    let mut overall = Tally::default();
    let mut by_atype: BTreeMap<AnswerType, Tally> = BTreeMap::new();
    let mut by_qtype: BTreeMap<String, Tally> = BTreeMap::new();
    for (atype, qtype, thirds) in scored {
        overall.add(thirds);
        by_atype.entry(atype).or_default().add(thirds);
        by_qtype.entry(qtype).or_default().add(thirds);
    }
    EvalReport {
        keying: model.keying,
        overall_accuracy: overall.accuracy(),
        n: overall.n,
        by_answer_type: by_atype
            .into_iter()
            .map(|(t, s)| {
                (
                    t,
                    Score {
                        accuracy: s.accuracy(),
                        n: s.n,
                    },
                )
            })
            .collect(),
        by_question_type: by_qtype
            .into_iter()
            .map(|(question_type, s)| QuestionTypeScore {
                question_type,
                accuracy: s.accuracy(),
                n: s.n,
            })
            .collect(),
    }
}

/// Rows of `scope,name,accuracy,n` covering overall, answer types and question types.
pub fn write_eval_csv<W: Write>(report: &EvalReport, w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["scope", "name", "accuracy", "n"])?;
    out.write_record([
        "overall",
        "all",
        &report.overall_accuracy.to_string(),
        &report.n.to_string(),
    ])?;
    for (t, s) in &report.by_answer_type {
        out.write_record([
            "answer_type",
            t.as_str(),
            &s.accuracy.to_string(),
            &s.n.to_string(),
        ])?;
    }
    for q in &report.by_question_type {
        out.write_record([
            "question_type",
            &q.question_type,
            &q.accuracy.to_string(),
            &q.n.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeDrop {
    pub question_type: String,
    pub reference_accuracy: f64,
    pub compositional_accuracy: f64,
    /// reference minus compositional
    pub drop: f64,
    pub n_reference: usize,
    pub n_compositional: usize,
}

/// Per-question-type accuracy drop from `reference` (e.g. a random split) to
/// `compositional`, largest first. Types missing from either report are left out.
pub fn drop_report(reference: &EvalReport, compositional: &EvalReport) -> Vec<TypeDrop> {
    let comp: BTreeMap<&str, &QuestionTypeScore> = compositional
        .by_question_type
        .iter()
        .map(|q| (q.question_type.as_str(), q))
        .collect();
    let mut drops: Vec<TypeDrop> = reference
        .by_question_type
        .iter()
        .filter(|r| r.n > 0)
        .filter_map(|r| {
            let c = comp.get(r.question_type.as_str()).filter(|c| c.n > 0)?;
            Some(TypeDrop {
                question_type: r.question_type.clone(),
                reference_accuracy: r.accuracy,
                compositional_accuracy: c.accuracy,
                drop: r.accuracy - c.accuracy,
                n_reference: r.n,
                n_compositional: c.n,
            })
        })
        .collect();
    drops.sort_by(|a, b| {
        b.drop
            .total_cmp(&a.drop)
            .then_with(|| a.question_type.cmp(&b.question_type))
    });
    drops
}

pub fn write_drop_csv<W: Write>(drops: &[TypeDrop], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for d in drops {
        out.serialize(d)?;
    }
    if drops.is_empty() {
        out.write_record([
            "question_type",
            "reference_accuracy",
            "compositional_accuracy",
            "drop",
            "n_reference",
            "n_compositional",
        ])?;
    }
    out.flush()?;
    Ok(())
}
