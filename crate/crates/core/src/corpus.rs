//! Question-answer records and their on-disk formats.
//!
//! Two formats are supported: the VQA-style pair of `questions` / `annotations`
//! JSON files, and a flat JSONL format with one record per line. Every string
//! is normalized on construction (CRLF to LF, trimmed, lowercased), so a
//! [`Corpus`] compares equal however it was loaded.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Answer category used for accuracy breakdowns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AnswerType {
    #[serde(rename = "yes/no")]
    YesNo,
    #[serde(rename = "number")]
    Number,
    #[serde(rename = "other")]
    Other,
}

impl AnswerType {
    pub const ALL: [AnswerType; 3] = [AnswerType::YesNo, AnswerType::Number, AnswerType::Other];

    pub fn as_str(self) -> &'static str {
        match self {
            AnswerType::YesNo => "yes/no",
            AnswerType::Number => "number",
            AnswerType::Other => "other",
        }
    }

    /// Classifies an answer string when the annotation carries no type.
    pub fn infer(answer: &str) -> AnswerType {
        match answer {
            "yes" | "no" => AnswerType::YesNo,
            a if !a.is_empty() && a.chars().all(|c| c.is_ascii_digit()) => AnswerType::Number,
            _ => AnswerType::Other,
        }
    }
}

impl fmt::Display for AnswerType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One (image, question, answers) datum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QaRecord {
    pub question_id: u64,
    pub image_id: u64,
    pub question_text: String,
    /// The consensus answer; grouping keys on this.
    pub ground_truth_answer: String,
    pub human_answers: Vec<String>,
    pub question_type: Option<String>,
    pub answer_type: Option<AnswerType>,
}

impl QaRecord {
    pub fn new(question_id: u64, image_id: u64, question: &str, answer: &str) -> Self {
        QaRecord {
            question_id,
            image_id,
            question_text: question.to_string(),
            ground_truth_answer: answer.to_string(),
            human_answers: Vec::new(),
            question_type: None,
            answer_type: None,
        }
    }

    pub fn with_human_answers<S: AsRef<str>>(mut self, answers: &[S]) -> Self {
        self.human_answers = answers.iter().map(|a| a.as_ref().to_string()).collect();
        self
    }

    pub fn with_question_type(mut self, qtype: &str) -> Self {
        self.question_type = Some(qtype.to_string());
        self
    }

    pub fn with_answer_type(mut self, atype: AnswerType) -> Self {
        self.answer_type = Some(atype);
        self
    }

    /// Annotated answer type, falling back to [`AnswerType::infer`].
    pub fn effective_answer_type(&self) -> AnswerType {
        self.answer_type
            .unwrap_or_else(|| AnswerType::infer(&self.ground_truth_answer))
    }

    fn normalize(&mut self) {
        self.question_text = normalize_text(&self.question_text);
        self.ground_truth_answer = normalize_text(&self.ground_truth_answer);
        for a in &mut self.human_answers {
            *a = normalize_text(a);
        }
        if let Some(t) = &mut self.question_type {
            *t = normalize_text(t);
        }
    }
}

/// CRLF to LF, trim, lowercase.
pub fn normalize_text(s: &str) -> String {
    s.replace("\r\n", "\n").trim().to_lowercase()
}

/// An immutable, id-ordered collection of records.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    records: Vec<QaRecord>,
    source_label: String,
}

impl Corpus {
    /// Normalizes, validates and sorts `records` by question id.
    pub fn new(mut records: Vec<QaRecord>, source_label: impl Into<String>) -> Result<Self> {
        records.iter_mut().for_each(QaRecord::normalize);
        records.sort_by_key(|r| r.question_id);
        for pair in records.windows(2) {
            if pair[0].question_id == pair[1].question_id {
                return Err(Error::DuplicateId(pair[0].question_id));
            }
        }
        if let Some(r) = records.iter().find(|r| r.ground_truth_answer.is_empty()) {
            return Err(Error::InvalidRecord {
                question_id: r.question_id,
                reason: "empty ground-truth answer".into(),
            });
        }
        Ok(Corpus {
            records,
            source_label: source_label.into(),
        })
    }

    pub fn empty(source_label: impl Into<String>) -> Self {
        Corpus {
            records: Vec::new(),
            source_label: source_label.into(),
        }
    }

    /// Concatenates corpora (e.g. the train and val halves of a dataset).
    pub fn merge(parts: Vec<Corpus>, source_label: impl Into<String>) -> Result<Self> {
        let records = parts.into_iter().flat_map(|c| c.records).collect();
        Corpus::new(records, source_label)
    }

    pub fn records(&self) -> &[QaRecord] {
        &self.records
    }

    pub fn source_label(&self) -> &str {
        &self.source_label
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn image_ids(&self) -> BTreeSet<u64> {
        self.records.iter().map(|r| r.image_id).collect()
    }

    /// Records matching `keep`, in corpus order.
    pub(crate) fn subset(&self, keep: impl Fn(&QaRecord) -> bool, label: &str) -> Corpus {
        Corpus {
            records: self.records.iter().filter(|r| keep(r)).cloned().collect(),
            source_label: label.to_string(),
        }
    }
}

// ---------------------------------------------------------------------------
// VQA-style JSON

#[derive(Debug, Serialize, Deserialize)]
struct QuestionsFile {
    questions: Vec<VqaQuestion>,
}

#[derive(Debug, Serialize, Deserialize)]
struct VqaQuestion {
    question_id: u64,
    image_id: u64,
    question: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct AnnotationsFile {
    annotations: Vec<VqaAnnotation>,
}

#[derive(Debug, Serialize, Deserialize)]
struct VqaAnnotation {
    question_id: u64,
    image_id: u64,
    multiple_choice_answer: String,
    #[serde(default)]
    answers: Vec<VqaAnswer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    question_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    answer_type: Option<AnswerType>,
}

#[derive(Debug, Serialize, Deserialize)]
struct VqaAnswer {
    answer: String,
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Converts serde_json's line/column position into a byte offset.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let line_start: usize = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum();
    line_start + column.saturating_sub(1)
}

fn parse_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        offset: byte_offset(&text, e.line(), e.column()),
        message: e.to_string(),
    })
}

/// Joins a VQA questions file with its annotations file.
pub fn load_vqa(questions_path: &Path, annotations_path: &Path) -> Result<Corpus> {
    let (questions, annotations) = rayon::join(
        || parse_json::<QuestionsFile>(questions_path),
        || parse_json::<AnnotationsFile>(annotations_path),
    );
    let questions = questions?.questions;
    let annotations = annotations?.annotations;

    let mut by_id: HashMap<u64, VqaAnnotation> = HashMap::with_capacity(annotations.len());
    for ann in annotations {
        let id = ann.question_id;
        if by_id.insert(id, ann).is_some() {
            return Err(Error::Join {
                question_id: id,
                reason: "duplicate id in annotations file".into(),
            });
        }
    }

    let mut seen = BTreeSet::new();
    let mut records = Vec::with_capacity(questions.len());
    for q in questions {
        if !seen.insert(q.question_id) {
            return Err(Error::Join {
                question_id: q.question_id,
                reason: "duplicate id in questions file".into(),
            });
        }
        let ann = by_id.remove(&q.question_id).ok_or_else(|| Error::Join {
            question_id: q.question_id,
            reason: "no matching annotation".into(),
        })?;
        if ann.image_id != q.image_id {
            return Err(Error::Join {
                question_id: q.question_id,
                reason: format!(
                    "image_id mismatch (questions {}, annotations {})",
                    q.image_id, ann.image_id
                ),
            });
        }
        records.push(QaRecord {
            question_id: q.question_id,
            image_id: q.image_id,
            question_text: q.question,
            ground_truth_answer: ann.multiple_choice_answer,
            human_answers: ann.answers.into_iter().map(|a| a.answer).collect(),
            question_type: ann.question_type,
            answer_type: ann.answer_type,
        });
    }
    if let Some(&orphan) = by_id.keys().min() {
        return Err(Error::Join {
            question_id: orphan,
            reason: "annotation has no matching question".into(),
        });
    }

    let label = questions_path.display().to_string();
    Corpus::new(records, label)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn finish(path: &Path, mut w: BufWriter<File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer(&mut w, value).map_err(|e| Error::io(path, e.into()))?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    finish(path, w)
}

/// Writes `corpus` as a VQA-style questions/annotations pair.
pub fn write_vqa(corpus: &Corpus, questions_path: &Path, annotations_path: &Path) -> Result<()> {
    let questions = QuestionsFile {
        questions: corpus
            .records
            .iter()
            .map(|r| VqaQuestion {
                question_id: r.question_id,
                image_id: r.image_id,
                question: r.question_text.clone(),
            })
            .collect(),
    };
    let annotations = AnnotationsFile {
        annotations: corpus
            .records
            .iter()
            .map(|r| VqaAnnotation {
                question_id: r.question_id,
                image_id: r.image_id,
                multiple_choice_answer: r.ground_truth_answer.clone(),
                answers: r
                    .human_answers
                    .iter()
                    .map(|a| VqaAnswer { answer: a.clone() })
                    .collect(),
                question_type: r.question_type.clone(),
                answer_type: r.answer_type,
            })
            .collect(),
    };
    write_json(questions_path, &questions)?;
    write_json(annotations_path, &annotations)
}

// ---------------------------------------------------------------------------
// JSONL

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonlRow {
    id: u64,
    question: String,
    answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    image_id: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    answers: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    question_type: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    answer_type: Option<AnswerType>,
}

/// Loads the generic one-object-per-line format. Blank lines are skipped.
pub fn load_jsonl(path: &Path) -> Result<Corpus> {
    let text = read_to_string(path)?;
    let mut records = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let row: JsonlRow = serde_json::from_str(line).map_err(|e| Error::Line {
            path: path.to_path_buf(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        if !seen.insert(row.id) {
            return Err(Error::Line {
                path: path.to_path_buf(),
                line: idx + 1,
                message: format!("duplicate id {}", row.id),
            });
        }
        records.push(QaRecord {
            question_id: row.id,
            image_id: row.image_id.unwrap_or(0),
            question_text: row.question,
            ground_truth_answer: row.answer,
            human_answers: row.answers,
            question_type: row.question_type,
            answer_type: row.answer_type,
        });
    }
    Corpus::new(records, path.display().to_string())
}

pub fn write_jsonl_to<W: Write>(corpus: &Corpus, mut w: W) -> std::io::Result<()> {
    for r in &corpus.records {
        let row = JsonlRow {
            id: r.question_id,
            question: r.question_text.clone(),
            answer: r.ground_truth_answer.clone(),
            image_id: Some(r.image_id),
            answers: r.human_answers.clone(),
            question_type: r.question_type.clone(),
            answer_type: r.answer_type,
        };
        serde_json::to_writer(&mut w, &row)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_jsonl(corpus: &Corpus, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    write_jsonl_to(corpus, &mut w).map_err(|e| Error::io(path, e))?;
    finish(path, w)
}

// ---------------------------------------------------------------------------
// Split outputs

/// Question, image and answer counts for one side of a split.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SideCounts {
    pub questions: usize,
    pub images: usize,
    pub answers: usize,
}

impl SideCounts {
    pub fn of(corpus: &Corpus) -> Self {
        SideCounts {
            questions: corpus.len(),
            images: corpus.image_ids().len(),
            answers: corpus.records.iter().map(|r| r.human_answers.len()).sum(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: SideCounts,
    pub test: SideCounts,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageSummary {
    pub unique_coverage: f64,
    pub weighted_coverage: f64,
    pub test_concepts: usize,
    pub uncovered_concepts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMethod {
    Greedy,
    Random,
}

/// Summary written next to the split files as `manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub method: SplitMethod,
    /// Echo of every option that shaped the split.
    pub config: BTreeMap<String, serde_json::Value>,
    pub counts: SplitCounts,
    pub coverage: Option<CoverageSummary>,
    pub iteration_log_digest: Option<String>,
    /// Input name to SHA-256 of its content.
    pub inputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone)]
pub struct SplitOutput {
    pub train: Corpus,
    pub test: Corpus,
    pub manifest: SplitManifest,
}

impl SplitOutput {
    pub fn new(train: Corpus, test: Corpus, method: SplitMethod) -> Self {
        let counts = SplitCounts {
            train: SideCounts::of(&train),
            test: SideCounts::of(&test),
        };
        SplitOutput {
            train,
            test,
            manifest: SplitManifest {
                method,
                config: BTreeMap::new(),
                counts,
                coverage: None,
                iteration_log_digest: None,
                inputs: BTreeMap::new(),
            },
        }
    }

    /// True when the manifest counts agree with the corpora.
    pub fn counts_consistent(&self) -> bool {
        self.manifest.counts.train == SideCounts::of(&self.train)
            && self.manifest.counts.test == SideCounts::of(&self.test)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExportFormat {
    #[default]
    Vqa,
    Jsonl,
}

/// File names used by [`export_split`].
pub struct SplitFiles {
    pub train: Vec<PathBuf>,
    pub test: Vec<PathBuf>,
    pub manifest: PathBuf,
}

impl SplitFiles {
    pub fn in_dir(dir: &Path, format: ExportFormat) -> Self {
        let side = |name: &str| match format {
            ExportFormat::Vqa => vec![
                dir.join(format!("{name}_questions.json")),
                dir.join(format!("{name}_annotations.json")),
            ],
            ExportFormat::Jsonl => vec![dir.join(format!("{name}.jsonl"))],
        };
        SplitFiles {
            train: side("train"),
            test: side("test"),
            manifest: dir.join("manifest.json"),
        }
    }
}

fn write_side(corpus: &Corpus, paths: &[PathBuf]) -> Result<()> {
    match paths {
        [q, a] => write_vqa(corpus, q, a),
        [p] => write_jsonl(corpus, p),
        _ => unreachable!("split sides have one or two files"),
    }
}

fn load_side(paths: &[PathBuf]) -> Result<Corpus> {
    match paths {
        [q, a] => load_vqa(q, a),
        [p] => load_jsonl(p),
        _ => unreachable!("split sides have one or two files"),
    }
}

/// Writes both sides of a split plus `manifest.json` into `out_dir`.
pub fn export_split(split: &SplitOutput, out_dir: &Path, format: ExportFormat) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let files = SplitFiles::in_dir(out_dir, format);
    write_side(&split.train, &files.train)?;
    write_side(&split.test, &files.test)?;
    let mut w = create(&files.manifest)?;
    serde_json::to_writer_pretty(&mut w, &split.manifest)
        .map_err(|e| Error::io(&files.manifest, e.into()))?;
    w.write_all(b"\n").map_err(|e| Error::io(&files.manifest, e))?;
    finish(&files.manifest, w)
}

/// Reads a directory written by [`export_split`].
pub fn load_split(dir: &Path, format: ExportFormat) -> Result<SplitOutput> {
    let files = SplitFiles::in_dir(dir, format);
    let train = load_side(&files.train)?;
    let test = load_side(&files.test)?;
    let manifest: SplitManifest = parse_json(&files.manifest)?;
    Ok(SplitOutput {
        train,
        test,
        manifest,
    })
}
