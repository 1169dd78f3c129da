//! Split audits: concept coverage, overlap between sides, question-prefix and
//! answer distributions.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, QaRecord};
use crate::error::{Error, Result};
use crate::grouping::{reduce_corpus, QaGroup};
use crate::textnorm::{tokenize, NormConfig};

const DEFAULT_QUESTION_TYPES: &str = include_str!("../resources/question_types.txt");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    /// Distinct test concepts also seen in train.
    pub unique_coverage: f64,
    /// Test concept occurrences (one per record per concept) seen in train.
    pub weighted_coverage: f64,
    pub test_concepts: usize,
    pub covered_test_concepts: usize,
    pub test_occurrences: u64,
    pub covered_occurrences: u64,
    /// Descending by count, then by concept.
    pub uncovered_concepts: Vec<(String, u64)>,
}

/// How well train concepts cover test concepts. An empty test side is fully
/// covered by convention.
pub fn coverage<'a>(
    train: impl IntoIterator<Item = &'a QaGroup>,
    test: impl IntoIterator<Item = &'a QaGroup>,
) -> CoverageReport {
    let train_concepts: HashSet<&str> = train
        .into_iter()
        .flat_map(|g| g.concepts.iter().map(String::as_str))
        .collect();
    let mut occurrences: BTreeMap<&str, u64> = BTreeMap::new();
    for g in test {
        for c in &g.concepts {
            *occurrences.entry(c.as_str()).or_default() += g.size() as u64;
        }
    }
    let test_occurrences: u64 = occurrences.values().sum();
    let mut covered_test_concepts = 0;
    let mut covered_occurrences = 0;
    let mut uncovered = Vec::new();
    for (&c, &n) in &occurrences {
        if train_concepts.contains(c) {
            covered_test_concepts += 1;
            covered_occurrences += n;
        } else {
            uncovered.push((c.to_string(), n));
        }
    }
    uncovered.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let ratio = |num: u64, den: u64| if den == 0 { 1.0 } else { num as f64 / den as f64 };
    CoverageReport {
        unique_coverage: ratio(covered_test_concepts as u64, occurrences.len() as u64),
        weighted_coverage: ratio(covered_occurrences, test_occurrences),
        test_concepts: occurrences.len(),
        covered_test_concepts,
        test_occurrences,
        covered_occurrences,
        uncovered_concepts: uncovered,
    }
}

/// Fractions are per test record; an empty test side gives zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub question_string_overlap: f64,
    pub reduced_qa_overlap: f64,
    pub raw_qa_overlap: f64,
    pub shared_images: usize,
    pub test_questions: usize,
}

pub fn overlap(train: &Corpus, test: &Corpus, cfg: &NormConfig) -> OverlapReport {
    let train_questions: HashSet<&str> = train.records().iter().map(|r| r.question_text.as_str()).collect();
    let train_raw: HashSet<(&str, &str)> = train
        .records()
        .iter()
        .map(|r| (r.question_text.as_str(), r.ground_truth_answer.as_str()))
        .collect();
    let train_reduced: HashSet<_> = reduce_corpus(train, cfg)
        .into_iter()
        .zip(train.records())
        .map(|(f, r)| (f, r.ground_truth_answer.as_str()))
        .collect();
    let test_reduced = reduce_corpus(test, cfg);

    let (mut q, mut raw, mut red) = (0usize, 0usize, 0usize);
    for (r, f) in test.records().iter().zip(test_reduced) {
        q += usize::from(train_questions.contains(r.question_text.as_str()));
        raw += usize::from(train_raw.contains(&(r.question_text.as_str(), r.ground_truth_answer.as_str())));
        red += usize::from(train_reduced.contains(&(f, r.ground_truth_answer.as_str())));
    }
    let n = test.len();
    let frac = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    let train_images = train.image_ids();
    OverlapReport {
        question_string_overlap: frac(q),
        reduced_qa_overlap: frac(red),
        raw_qa_overlap: frac(raw),
        shared_images: test.image_ids().intersection(&train_images).count(),
        test_questions: n,
    }
}

/// Seeded sample without replacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub size: usize,
    pub seed: u64,
}

/// Records selected by `sample` (all records when `None`), in corpus order.
pub fn sample_records(corpus: &Corpus, sample: Option<Sample>) -> Result<Vec<&QaRecord>> {
    let records = corpus.records();
    let Some(s) = sample else {
        return Ok(records.iter().collect());
    };
    if s.size > records.len() {
        return Err(Error::SampleTooLarge {
            requested: s.size,
            available: records.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut idx = rand::seq::index::sample(&mut rng, records.len(), s.size).into_vec();
    idx.sort_unstable();
    Ok(idx.into_iter().map(|i| &records[i]).collect())
}

/// Counts of questions by their leading words.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrefixNode {
    pub count: usize,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub children: BTreeMap<String, PrefixNode>,
}

impl PrefixNode {
    /// `(path, count)` for every node below the root, depth-first.
    pub fn flatten(&self) -> Vec<(Vec<String>, usize)> {
        fn walk(node: &PrefixNode, path: &mut Vec<String>, out: &mut Vec<(Vec<String>, usize)>) {
            for (word, child) in &node.children {
                path.push(word.clone());
                out.push((path.clone(), child.count));
                walk(child, path, out);
                path.pop();
            }
        }
        let mut out = Vec::new();
        walk(self, &mut Vec::new(), &mut out);
        out
    }
}

/// First-`depth`-words tree over raw tokens (stopwords kept).
pub fn prefix_distribution(corpus: &Corpus, depth: usize, sample: Option<Sample>) -> Result<PrefixNode> {
    if depth == 0 {
        return Err(Error::Config("prefix depth must be at least 1".into()));
    }
    let mut root = PrefixNode::default();
    for r in sample_records(corpus, sample)? {
        root.count += 1;
        let mut node = &mut root;
        for word in tokenize(&r.question_text).into_iter().take(depth) {
            node = node.children.entry(word).or_default();
            node.count += 1;
        }
    }
    Ok(root)
}

/// Question-type prefixes, matched on whole leading words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuestionTypes {
    /// Longest first.
    prefixes: Vec<Vec<String>>,
}

impl Default for QuestionTypes {
    fn default() -> Self {
        QuestionTypes::from_text(DEFAULT_QUESTION_TYPES)
    }
}

impl QuestionTypes {
    pub fn new<S: AsRef<str>>(prefixes: &[S]) -> Self {
        let mut prefixes: Vec<Vec<String>> = prefixes
            .iter()
            .map(|p| tokenize(p.as_ref()))
            .filter(|t| !t.is_empty())
            .collect();
        prefixes.sort_by(|a, b| b.join(" ").len().cmp(&a.join(" ").len()).then_with(|| a.cmp(b)));
        prefixes.dedup();
        QuestionTypes { prefixes }
    }

    /// One prefix per line; `#` comments and blank lines ignored.
    pub fn from_text(text: &str) -> Self {
        let lines: Vec<&str> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        QuestionTypes::new(&lines)
    }

    pub fn classify(&self, question: &str) -> String {
        let tokens = tokenize(question);
        self.prefixes
            .iter()
            .find(|p| tokens.starts_with(p))
            .map(|p| p.join(" "))
            .unwrap_or_else(|| "other".to_string())
    }

    /// The record's annotated type, or the derived one.
    pub fn of(&self, record: &QaRecord) -> String {
        record
            .question_type
            .clone()
            .unwrap_or_else(|| self.classify(&record.question_text))
    }
}

/// Longest matching prefix of `question` in `prefix_list`, else `"other"`.
pub fn derive_question_type<S: AsRef<str>>(question: &str, prefix_list: &[S]) -> String {
    QuestionTypes::new(prefix_list).classify(question)
}

/// Answer counts per question type; each list descending by count, ties by answer.
pub type AnswerDistribution = BTreeMap<String, Vec<(String, usize)>>;

pub fn answer_distribution(
    corpus: &Corpus,
    sample: Option<Sample>,
    types: &QuestionTypes,
) -> Result<AnswerDistribution> {
    let mut counts: BTreeMap<String, BTreeMap<&str, usize>> = BTreeMap::new();
    for r in sample_records(corpus, sample)? {
        *counts
            .entry(types.of(r))
            .or_default()
            .entry(r.ground_truth_answer.as_str())
            .or_default() += 1;
    }
    Ok(counts
        .into_iter()
        .map(|(qtype, answers)| {
            let mut list: Vec<(String, usize)> =
                answers.into_iter().map(|(a, n)| (a.to_string(), n)).collect();
            list.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            (qtype, list)
        })
        .collect())
}

/// Most frequent answer for `qtype`, if any.
pub fn top_answer<'a>(dist: &'a AnswerDistribution, qtype: &str) -> Option<&'a str> {
    dist.get(qtype)?.first().map(|(a, _)| a.as_str())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionReport {
    pub prefix_tree: PrefixNode,
    pub answer_by_qtype: AnswerDistribution,
}

pub fn distribution_report(
    corpus: &Corpus,
    depth: usize,
    sample: Option<Sample>,
    types: &QuestionTypes,
) -> Result<DistributionReport> {
    Ok(DistributionReport {
        prefix_tree: prefix_distribution(corpus, depth, sample)?,
        answer_by_qtype: answer_distribution(corpus, sample, types)?,
    })
}

/// Rows of `split,question_type,answer,count`.
pub fn write_answer_csv<W: Write>(sides: &[(&str, &AnswerDistribution)], w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["split", "question_type", "answer", "count"])?;
    for (side, dist) in sides {
        for (qtype, answers) in dist.iter() {
            for (answer, n) in answers {
                out.write_record([side, qtype.as_str(), answer.as_str(), &n.to_string()])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// Rows of `concept,count`.
pub fn write_uncovered_csv<W: Write>(report: &CoverageReport, w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["concept", "count"])?;
    for (c, n) in &report.uncovered_concepts {
        out.write_record([c.as_str(), &n.to_string()])?;
    }
    out.flush()?;
    Ok(())
}
