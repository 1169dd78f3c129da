//! Groups of records sharing a reduced question and a ground-truth answer.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::textnorm::{answer_tokens, reduce, NormConfig, ReducedForm};

/// Identity of a group. Ordered by reduced tokens, then answer.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupKey {
    pub reduced: ReducedForm,
    pub answer: String,
}

impl GroupKey {
    pub fn new(reduced: ReducedForm, answer: impl Into<String>) -> Self {
        GroupKey {
            reduced,
            answer: answer.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QaGroup {
    pub key: GroupKey,
    /// Ascending question ids.
    pub member_ids: Vec<u64>,
    pub concepts: BTreeSet<String>,
}

impl QaGroup {
    pub fn size(&self) -> usize {
        self.member_ids.len()
    }
}

/// Unique reduced-question tokens plus the lemmatized answer words.
pub fn key_concepts(key: &GroupKey, cfg: &NormConfig) -> BTreeSet<String> {
    key.reduced
        .tokens()
        .iter()
        .cloned()
        .chain(answer_tokens(&key.answer, cfg))
        .collect()
}

pub fn concepts_of(group: &QaGroup) -> &BTreeSet<String> {
    &group.concepts
}

/// Reduced form of every record, in corpus order.
pub fn reduce_corpus(corpus: &Corpus, cfg: &NormConfig) -> Vec<ReducedForm> {
    corpus
        .records()
        .par_iter()
        .map(|r| reduce(&r.question_text, cfg))
        .collect()
}

/// Partitions `corpus` into groups, returned in ascending key order.
pub fn build_groups(corpus: &Corpus, cfg: &NormConfig) -> Vec<QaGroup> {
    let reduced = reduce_corpus(corpus, cfg);
    let mut members: BTreeMap<GroupKey, Vec<u64>> = BTreeMap::new();
    for (record, reduced) in corpus.records().iter().zip(reduced) {
        members
            .entry(GroupKey::new(reduced, record.ground_truth_answer.clone()))
            .or_default()
            .push(record.question_id);
    }
    members
        .into_iter()
        .map(|(key, member_ids)| {
            let concepts = key_concepts(&key, cfg);
            QaGroup {
                key,
                member_ids,
                concepts,
            }
        })
        .collect()
}

#[derive(Serialize)]
struct GroupRow<'a> {
    key_tokens: &'a ReducedForm,
    answer: &'a str,
    member_ids: &'a [u64],
    concepts: &'a BTreeSet<String>,
}

pub fn write_groups_jsonl<W: Write>(groups: &[QaGroup], mut w: W) -> std::io::Result<()> {
    for g in groups {
        let row = GroupRow {
            key_tokens: &g.key.reduced,
            answer: &g.key.answer,
            member_ids: &g.member_ids,
            concepts: &g.concepts,
        };
        serde_json::to_writer(&mut w, &row)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn dump_groups(groups: &[QaGroup], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_groups_jsonl(groups, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::QaRecord;

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    fn corpus(rows: &[(&str, &str)]) -> Corpus {
        let records = rows
            .iter()
            .enumerate()
            .map(|(i, (q, a))| QaRecord::new(i as u64 + 1, 1, q, a))
            .collect();
        Corpus::new(records, "test").unwrap()
    }

    #[test]
    fn paraphrases_with_same_answer_share_a_group() {
        let cfg = NormConfig::default();
        let groups = build_groups(
            &corpus(&[
                ("What color are the cones?", "orange"),
                ("What are the color of the cones?", "orange"),
                ("What color are the cones?", "green"),
            ]),
            &cfg,
        );
        assert_eq!(groups.len(), 2);
        let orange = groups.iter().find(|g| g.key.answer == "orange").unwrap();
        assert_eq!(orange.member_ids, vec![1, 2]);
        let green = groups.iter().find(|g| g.key.answer == "green").unwrap();
        assert_eq!(green.member_ids, vec![3]);
        assert_eq!(green.key.reduced, orange.key.reduced);
    }

    #[test]
    fn single_record_single_group() {
        let groups = build_groups(&corpus(&[("Why?", "because")]), &NormConfig::default());
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].member_ids, vec![1]);
        assert!(build_groups(&Corpus::empty("e"), &NormConfig::default()).is_empty());
    }

    #[test]
    fn concept_sets() {
        let cfg = NormConfig::default();
        let key = |t: &[&str], a: &str| GroupKey::new(ReducedForm::new(t.iter().copied()), a);
        assert_eq!(
            key_concepts(&key(&["what", "color", "cone"], "orange"), &cfg),
            set(&["what", "color", "cone", "orange"])
        );
        assert_eq!(
            key_concepts(&key(&["what", "room"], "living room"), &cfg),
            set(&["what", "room", "living"])
        );
        assert_eq!(
            key_concepts(&key(&["what", "color", "cone"], "cone"), &cfg),
            set(&["what", "color", "cone"])
        );
        // answers keep stopwords
        assert_eq!(
            key_concepts(&key(&[], "on the table"), &cfg),
            set(&["on", "the", "table"])
        );
    }

    #[test]
    fn all_stopword_questions_group_by_answer() {
        let groups = build_groups(
            &corpus(&[("Is it?", "yes"), ("Is this?", "yes"), ("Is it?", "no")]),
            &NormConfig::default(),
        );
        assert_eq!(groups.len(), 2);
        assert!(groups.iter().all(|g| g.key.reduced.is_empty()));
        assert_eq!(groups[1].member_ids, vec![1, 2]);
    }

    #[test]
    fn groups_jsonl_shape() {
        let groups = build_groups(
            &corpus(&[("What color are the cones?", "orange")]),
            &NormConfig::default(),
        );
        let mut buf = Vec::new();
        write_groups_jsonl(&groups, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "{\"key_tokens\":[\"what\",\"color\",\"cone\"],\"answer\":\"orange\",\"member_ids\":[1],\"concepts\":[\"color\",\"cone\",\"orange\",\"what\"]}\n"
        );
    }
}
