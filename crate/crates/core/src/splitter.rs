//! Group-to-side assignment.
//!
//! [`greedy_split`] walks the groups in a fixed order. While the test side is
//! below its quota, the next unassigned group goes to test and its concepts
//! (weighted by record count) join the `uncovered` multiset; then the
//! unassigned group with the largest uncovered gain goes to train and its
//! concepts leave `uncovered` for good. Once the quota is met every remaining
//! group goes to train. Groups are atomic, so no (reduced question, answer)
//! key can appear on both sides.
//!
//! Gains are kept current through a concept-to-groups index and a
//! priority set ordered by (gain desc, size desc, key asc); a train pick is a
//! pop from that set rather than a scan.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analysis::coverage;
use crate::corpus::{Corpus, CoverageSummary, SplitMethod, SplitOutput};
use crate::error::{Error, Result};
use crate::grouping::{GroupKey, QaGroup};
use crate::textnorm::{hex, ReducedForm};

/// A rational number strictly between 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fraction {
    num: u64,
    den: u64,
}

impl Fraction {
    pub const ONE_THIRD: Fraction = Fraction { num: 1, den: 3 };

    pub fn new(num: u64, den: u64) -> Result<Self> {
        if num == 0 || den == 0 || num >= den {
            return Err(Error::Config(format!(
                "fraction {num}/{den} must lie strictly between 0 and 1"
            )));
        }
        let g = gcd(num, den);
        Ok(Fraction {
            num: num / g,
            den: den / g,
        })
    }

    pub fn numerator(self) -> u64 {
        self.num
    }

    pub fn denominator(self) -> u64 {
        self.den
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `count < self * total`, exactly.
    pub fn exceeds(self, count: u64, total: u64) -> bool {
        (count as u128) * (self.den as u128) < (self.num as u128) * (total as u128)
    }

    /// `ceil(self * n)`.
    pub fn ceil_of(self, n: usize) -> usize {
        let p = (n as u128) * (self.num as u128);
        p.div_ceil(self.den as u128) as usize
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Accepts `p/q` or a decimal such as `0.3333`.
impl FromStr for Fraction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Config(format!("cannot parse fraction {s:?}"));
        if let Some((n, d)) = s.split_once('/') {
            let n = n.trim().parse().map_err(|_| bad())?;
            let d = d.trim().parse().map_err(|_| bad())?;
            return Fraction::new(n, d);
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if frac.len() > 18 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let int: u64 = if int.is_empty() {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let den = 10u64.pow(frac.len() as u32);
        let frac: u64 = if frac.is_empty() {
            0
        } else {
            frac.parse().map_err(|_| bad())?
        };
        let num = int
            .checked_mul(den)
            .and_then(|v| v.checked_add(frac))
            .ok_or_else(bad)?;
        Fraction::new(num, den)
    }
}

impl Serialize for Fraction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Fraction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Order in which groups are offered to the test side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupOrder {
    /// Largest groups first, ties by key.
    #[default]
    SizeDescThenKey,
    KeyLex,
    /// By smallest member question id.
    InputOrder,
    /// Key order shuffled with the config seed.
    Shuffled,
}

/// How a train candidate's gain is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainWeighting {
    /// Sum of uncovered occurrence counts of the group's concepts.
    #[default]
    Occurrences,
    /// Number of the group's concepts that are still uncovered.
    UniqueConcepts,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub target_test_fraction: Fraction,
    pub group_order: GroupOrder,
    pub weighting: GainWeighting,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            target_test_fraction: Fraction::ONE_THIRD,
            group_order: GroupOrder::default(),
            weighting: GainWeighting::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Train,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    /// Next group in order, sent to test while under quota.
    Test,
    /// Max-gain pick sent to train.
    Greedy,
    /// Remaining group sent to train after the quota was met.
    Fill,
}

/// One assignment decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Step {
    /// 1-based.
    pub step: usize,
    /// Index into the group slice given to [`greedy_split`].
    pub group: usize,
    pub side: Side,
    pub kind: StepKind,
    /// Train steps: uncovered weight removed. Test steps: uncovered weight added.
    pub gain: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitAssignment {
    sides: Vec<Side>,
    pub iteration_log: Vec<Step>,
    /// Test concept occurrences never covered by train.
    pub uncovered_final: BTreeMap<String, u64>,
}

impl SplitAssignment {
    /// Side of each group, aligned with the input slice.
    pub fn sides(&self) -> &[Side] {
        &self.sides
    }

    pub fn side(&self, group: usize) -> Side {
        self.sides[group]
    }

    pub fn side_of(&self, groups: &[QaGroup], key: &GroupKey) -> Option<Side> {
        groups.iter().position(|g| &g.key == key).map(|i| self.sides[i])
    }

    pub fn groups_on<'a>(
        &'a self,
        groups: &'a [QaGroup],
        side: Side,
    ) -> impl Iterator<Item = &'a QaGroup> + 'a {
        groups
            .iter()
            .zip(&self.sides)
            .filter(move |(_, s)| **s == side)
            .map(|(g, _)| g)
    }

    /// The iteration log as JSONL, one decision per line.
    pub fn log_jsonl(&self, groups: &[QaGroup]) -> String {
        #[derive(Serialize)]
        struct Row<'a> {
            step: usize,
            side: Side,
            kind: StepKind,
            key_tokens: &'a ReducedForm,
            answer: &'a str,
            size: usize,
            gain: u64,
        }
        let mut out = String::new();
        for s in &self.iteration_log {
            let g = &groups[s.group];
            let row = Row {
                step: s.step,
                side: s.side,
                kind: s.kind,
                key_tokens: &g.key.reduced,
                answer: &g.key.answer,
                size: g.size(),
                gain: s.gain,
            };
            out.push_str(&serde_json::to_string(&row).expect("log rows serialize"));
            out.push('\n');
        }
        out
    }

    /// SHA-256 of [`Self::log_jsonl`].
    pub fn log_digest(&self, groups: &[QaGroup]) -> String {
        hex(&Sha256::digest(self.log_jsonl(groups).as_bytes()))
    }
}

/// Group indices in the order they are offered to the test side.
pub fn order_groups(groups: &[QaGroup], cfg: &SplitConfig) -> Vec<usize> {
    let mut order: Vec<usize> = (0..groups.len()).collect();
    match cfg.group_order {
        GroupOrder::SizeDescThenKey => order.sort_by(|&a, &b| {
            groups[b]
                .size()
                .cmp(&groups[a].size())
                .then_with(|| groups[a].key.cmp(&groups[b].key))
        }),
        GroupOrder::KeyLex => order.sort_by(|&a, &b| groups[a].key.cmp(&groups[b].key)),
        GroupOrder::InputOrder => order.sort_by_key(|&i| (groups[i].member_ids.first().copied(), i)),
        GroupOrder::Shuffled => {
            order.sort_by(|&a, &b| groups[a].key.cmp(&groups[b].key));
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
        }
    }
    order
}

type Candidate = (Reverse<u64>, Reverse<usize>, usize, usize);

struct GreedyState<'a> {
    groups: &'a [QaGroup],
    weighting: GainWeighting,
    group_concepts: Vec<Vec<usize>>,
    /// Concept to the unassigned groups that contain it (pruned lazily).
    index: Vec<Vec<usize>>,
    key_rank: Vec<usize>,
    uncovered: Vec<u64>,
    train_covered: Vec<bool>,
    side: Vec<Option<Side>>,
    gain: Vec<u64>,
    candidates: BTreeSet<Candidate>,
}

impl<'a> GreedyState<'a> {
    fn new(groups: &'a [QaGroup], weighting: GainWeighting) -> (Self, Vec<&'a str>) {
        let mut ids: HashMap<&str, usize> = HashMap::new();
        let mut names: Vec<&str> = Vec::new();
        let mut index: Vec<Vec<usize>> = Vec::new();
        let group_concepts: Vec<Vec<usize>> = groups
            .iter()
            .enumerate()
            .map(|(gi, g)| {
                g.concepts
                    .iter()
                    .map(|c| {
                        let id = *ids.entry(c.as_str()).or_insert_with(|| {
                            names.push(c.as_str());
                            index.push(Vec::new());
                            names.len() - 1
                        });
                        index[id].push(gi);
                        id
                    })
                    .collect()
            })
            .collect();

        let mut by_key: Vec<usize> = (0..groups.len()).collect();
        by_key.sort_by(|&a, &b| groups[a].key.cmp(&groups[b].key));
        let mut key_rank = vec![0; groups.len()];
        for (rank, &g) in by_key.iter().enumerate() {
            key_rank[g] = rank;
        }

        let n_concepts = names.len();
        let mut state = GreedyState {
            groups,
            weighting,
            group_concepts,
            index,
            key_rank,
            uncovered: vec![0; n_concepts],
            train_covered: vec![false; n_concepts],
            side: vec![None; groups.len()],
            gain: vec![0; groups.len()],
            candidates: BTreeSet::new(),
        };
        for g in 0..groups.len() {
            let c = state.candidate(g);
            state.candidates.insert(c);
        }
        (state, names)
    }

    fn candidate(&self, g: usize) -> Candidate {
        (
            Reverse(self.gain[g]),
            Reverse(self.groups[g].size()),
            self.key_rank[g],
            g,
        )
    }

    fn weight(&self, concept: usize) -> u64 {
        match self.weighting {
            GainWeighting::Occurrences => self.uncovered[concept],
            GainWeighting::UniqueConcepts => u64::from(self.uncovered[concept] > 0),
        }
    }

    /// Applies a weight change of `concept` to every unassigned group holding it.
    fn shift(&mut self, concept: usize, old: u64, new: u64) {
        if old == new {
            return;
        }
        let side = &self.side;
        self.index[concept].retain(|&h| side[h].is_none());
        for i in 0..self.index[concept].len() {
            let h = self.index[concept][i];
            let before = self.candidate(h);
            self.candidates.remove(&before);
            self.gain[h] = self.gain[h] - old + new;
            let after = self.candidate(h);
            self.candidates.insert(after);
        }
    }

    fn assign_test(&mut self, g: usize) -> u64 {
        let c = self.candidate(g);
        self.candidates.remove(&c);
        self.side[g] = Some(Side::Test);
        let size = self.groups[g].size() as u64;
        let mut added = 0;
        for i in 0..self.group_concepts[g].len() {
            let c = self.group_concepts[g][i];
            if self.train_covered[c] {
                continue;
            }
            let old = self.weight(c);
            self.uncovered[c] += size;
            added += size;
            let new = self.weight(c);
            self.shift(c, old, new);
        }
        added
    }

    fn assign_train(&mut self, g: usize, update_index: bool) -> u64 {
        if update_index {
            let c = self.candidate(g);
            self.candidates.remove(&c);
        }
        self.side[g] = Some(Side::Train);
        let mut gain = 0;
        for i in 0..self.group_concepts[g].len() {
            let c = self.group_concepts[g][i];
            if self.train_covered[c] {
                continue;
            }
            self.train_covered[c] = true;
            let old = self.weight(c);
            gain += old;
            self.uncovered[c] = 0;
            if update_index {
                self.shift(c, old, 0);
            }
        }
        gain
    }
}

/// Assigns every group to train or test.
pub fn greedy_split(groups: &[QaGroup], cfg: &SplitConfig) -> SplitAssignment {
    let order = order_groups(groups, cfg);
    let (mut st, names) = GreedyState::new(groups, cfg.weighting);
    let total: u64 = groups.iter().map(|g| g.size() as u64).sum();
    let mut test_questions = 0u64;
    let mut log = Vec::new();
    let push = |log: &mut Vec<Step>, group, side, kind, gain| {
        let step = log.len() + 1;
        log.push(Step {
            step,
            group,
            side,
            kind,
            gain,
        });
    };

    let mut cursor = 0;
    while cfg.target_test_fraction.exceeds(test_questions, total) {
        while cursor < order.len() && st.side[order[cursor]].is_some() {
            cursor += 1;
        }
        let Some(&g) = order.get(cursor) else { break };
        let added = st.assign_test(g);
        test_questions += groups[g].size() as u64;
        push(&mut log, g, Side::Test, StepKind::Test, added);

        if let Some(&(_, _, _, pick)) = st.candidates.first() {
            let gain = st.assign_train(pick, true);
            push(&mut log, pick, Side::Train, StepKind::Greedy, gain);
        }
    }
    for &g in &order {
        if st.side[g].is_none() {
            let gain = st.assign_train(g, false);
            push(&mut log, g, Side::Train, StepKind::Fill, gain);
        }
    }

    let uncovered_final = st
        .uncovered
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > 0)
        .map(|(c, &n)| (names[c].to_string(), n))
        .collect();
    SplitAssignment {
        sides: st
            .side
            .into_iter()
            .map(|s| s.expect("every group assigned"))
            .collect(),
        iteration_log: log,
        uncovered_final,
    }
}

fn config_echo(cfg: &SplitConfig) -> BTreeMap<String, serde_json::Value> {
    match serde_json::to_value(cfg).expect("config serializes") {
        serde_json::Value::Object(m) => m.into_iter().collect(),
        _ => unreachable!("config is a struct"),
    }
}

/// Coverage of the test groups' concepts by the train groups, for manifests.
pub fn coverage_summary(groups: &[QaGroup], sides: &[Side]) -> CoverageSummary {
    let pick = |side| {
        groups
            .iter()
            .zip(sides)
            .filter(move |(_, s)| **s == side)
            .map(|(g, _)| g)
    };
    let report = coverage(pick(Side::Train), pick(Side::Test));
    CoverageSummary {
        unique_coverage: report.unique_coverage,
        weighted_coverage: report.weighted_coverage,
        test_concepts: report.test_concepts,
        uncovered_concepts: report.uncovered_concepts.len(),
    }
}

/// Expands an assignment back into train and test corpora.
pub fn materialize(
    assignment: &SplitAssignment,
    groups: &[QaGroup],
    corpus: &Corpus,
    cfg: &SplitConfig,
) -> Result<SplitOutput> {
    let mut side_of: HashMap<u64, Side> = HashMap::with_capacity(corpus.len());
    for (g, &side) in groups.iter().zip(assignment.sides()) {
        for &id in &g.member_ids {
            side_of.insert(id, side);
        }
    }
    if let Some(r) = corpus
        .records()
        .iter()
        .find(|r| !side_of.contains_key(&r.question_id))
    {
        return Err(Error::InvalidRecord {
            question_id: r.question_id,
            reason: "record belongs to no group".into(),
        });
    }
    let train = corpus.subset(|r| side_of[&r.question_id] == Side::Train, "train");
    let test = corpus.subset(|r| side_of[&r.question_id] == Side::Test, "test");
    let mut out = SplitOutput::new(train, test, SplitMethod::Greedy);
    out.manifest.config = config_echo(cfg);
    out.manifest.coverage = Some(coverage_summary(groups, assignment.sides()));
    out.manifest.iteration_log_digest = Some(assignment.log_digest(groups));
    Ok(out)
}

/// Seeded random record-level split; the first `ceil(fraction * n)` shuffled
/// records form the held-out (test) side.
pub fn random_split(corpus: &Corpus, fraction: Fraction, seed: u64) -> SplitOutput {
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let held = fraction.ceil_of(corpus.len());
    let mut is_test = vec![false; corpus.len()];
    for &i in &order[..held] {
        is_test[i] = true;
    }
    let test_ids: std::collections::HashSet<u64> = corpus
        .records()
        .iter()
        .zip(&is_test)
        .filter(|(_, t)| **t)
        .map(|(r, _)| r.question_id)
        .collect();
    let train = corpus.subset(|r| !test_ids.contains(&r.question_id), "random-train");
    let test = corpus.subset(|r| test_ids.contains(&r.question_id), "random-test");
    let mut out = SplitOutput::new(train, test, SplitMethod::Random);
    out.manifest.config = BTreeMap::from([
        (
            "target_test_fraction".to_string(),
            serde_json::json!(fraction.to_string()),
        ),
        ("seed".to_string(), serde_json::json!(seed)),
    ]);
    out
}
