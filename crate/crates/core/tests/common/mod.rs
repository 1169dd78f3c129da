#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use compsplit::corpus::{Corpus, QaRecord};
use compsplit::grouping::QaGroup;
use compsplit::splitter::{order_groups, GainWeighting, Side, SplitAssignment, SplitConfig, StepKind};
use compsplit::textnorm::{reduce, NormConfig};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const OBJECTS: [&str; 10] = [
    "cone", "plate", "dog", "cat", "bus", "car", "tree", "cup", "table", "horse",
];
const ATTRS: [&str; 4] = ["color", "size", "shape", "material"];
const ANSWERS: [&str; 14] = [
    "red", "green", "blue", "orange", "white", "1", "2", "3", "yes", "no", "wood", "metal", "big", "small",
];

/// Random corpus of `n` records drawn from a vocabulary whose breadth is
/// itself random, so group counts and concept sharing vary widely.
pub fn random_corpus(seed: u64, n: usize) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let objects = &OBJECTS[..rng.random_range(1..=OBJECTS.len())];
    let attrs = &ATTRS[..rng.random_range(1..=ATTRS.len())];
    let answers = &ANSWERS[..rng.random_range(2..=ANSWERS.len())];
    let records = (1..=n as u64)
        .map(|id| {
            let o = objects.choose(&mut rng).unwrap();
            let q = match rng.random_range(0..5) {
                0 => format!("What {} is the {o}?", attrs.choose(&mut rng).unwrap()),
                1 => format!("What is the {} of the {o}s?", attrs.choose(&mut rng).unwrap()),
                2 => format!("How many {o}s are there?"),
                3 => format!("Is the {o} on the table?"),
                _ => "What is this?".to_string(),
            };
            let a = answers.choose(&mut rng).unwrap();
            let img = rng.random_range(1..=(n as u64).div_ceil(3));
            QaRecord::new(id, img, &q, a).with_human_answers(&[a; 3])
        })
        .collect();
    Corpus::new(records, format!("random({seed})")).unwrap()
}

/// Random corpus whose group count is at most `max_groups`.
pub fn small_corpus(seed: u64, max_groups: usize) -> (Corpus, Vec<QaGroup>) {
    let cfg = NormConfig::default();
    for attempt in 0.. {
        let s = seed.wrapping_mul(1_000).wrapping_add(attempt);
        let n = ChaCha8Rng::seed_from_u64(s ^ 0x5eed).random_range(1..=300);
        let corpus = random_corpus(s, n);
        let groups = compsplit::grouping::build_groups(&corpus, &cfg);
        if groups.len() <= max_groups {
            return (corpus, groups);
        }
    }
    unreachable!()
}

/// O(n^2) grouping: records i and j share a group iff their reduced forms
/// and answers are equal. Returns sorted member-id lists.
pub fn brute_force_groups(corpus: &Corpus, cfg: &NormConfig) -> BTreeSet<Vec<u64>> {
    let recs = corpus.records();
    let reduced: Vec<_> = recs.iter().map(|r| reduce(&r.question_text, cfg)).collect();
    let mut seen = vec![false; recs.len()];
    let mut out = BTreeSet::new();
    for i in 0..recs.len() {
        if seen[i] {
            continue;
        }
        let mut members = Vec::new();
        for j in i..recs.len() {
            if reduced[i] == reduced[j] && recs[i].ground_truth_answer == recs[j].ground_truth_answer {
                seen[j] = true;
                members.push(recs[j].question_id);
            }
        }
        members.sort_unstable();
        out.insert(members);
    }
    out
}

/// Replays the greedy split step by step, recomputing uncovered weights
/// from scratch and picking each train group by exhaustive scan. Returns a
/// description of the first disagreement.
pub fn replay_greedy(groups: &[QaGroup], cfg: &SplitConfig, a: &SplitAssignment) -> Result<usize, String> {
    let n = groups.len();
    let total: u64 = groups.iter().map(|g| g.size() as u64).sum();
    let order = order_groups(groups, cfg);
    let mut side: Vec<Option<Side>> = vec![None; n];
    let mut test_q = 0u64;
    let mut log = a.iteration_log.iter();
    let mut greedy_steps = 0;

    let uncovered = |side: &[Option<Side>]| -> BTreeMap<&str, u64> {
        let train: BTreeSet<&str> = groups
            .iter()
            .zip(side)
            .filter(|(_, s)| **s == Some(Side::Train))
            .flat_map(|(g, _)| g.concepts.iter().map(String::as_str))
            .collect();
        let mut u = BTreeMap::new();
        for (g, s) in groups.iter().zip(side) {
            if *s == Some(Side::Test) {
                for c in &g.concepts {
                    if !train.contains(c.as_str()) {
                        *u.entry(c.as_str()).or_default() += g.size() as u64;
                    }
                }
            }
        }
        u
    };
    let gain_of = |u: &BTreeMap<&str, u64>, g: &QaGroup| -> u64 {
        g.concepts
            .iter()
            .map(|c| {
                let w = u.get(c.as_str()).copied().unwrap_or(0);
                match cfg.weighting {
                    GainWeighting::Occurrences => w,
                    GainWeighting::UniqueConcepts => u64::from(w > 0),
                }
            })
            .sum()
    };

    let num = cfg.target_test_fraction.numerator() as u128;
    let den = cfg.target_test_fraction.denominator() as u128;
    while (test_q as u128) * den < num * (total as u128) {
        let Some(&t) = order.iter().find(|&&g| side[g].is_none()) else {
            break;
        };
        let step = log.next().ok_or("log ended before a test step")?;
        if (step.group, step.side, step.kind) != (t, Side::Test, StepKind::Test) {
            return Err(format!(
                "step {}: expected test group {t}, got {step:?}",
                step.step
            ));
        }
        side[t] = Some(Side::Test);
        test_q += groups[t].size() as u64;

        let u = uncovered(&side);
        let best = (0..n).filter(|&g| side[g].is_none()).max_by(|&x, &y| {
            gain_of(&u, &groups[x])
                .cmp(&gain_of(&u, &groups[y]))
                .then(groups[x].size().cmp(&groups[y].size()))
                .then(groups[y].key.cmp(&groups[x].key))
        });
        if let Some(b) = best {
            let step = log.next().ok_or("log ended before a greedy step")?;
            let gain = gain_of(&u, &groups[b]);
            if (step.group, step.side, step.kind, step.gain) != (b, Side::Train, StepKind::Greedy, gain) {
                return Err(format!(
                    "step {}: oracle picks group {b} with gain {gain}, got {step:?}",
                    step.step
                ));
            }
            side[b] = Some(Side::Train);
            greedy_steps += 1;
        }
    }
    for &g in &order {
        if side[g].is_none() {
            let step = log.next().ok_or("log ended before a fill step")?;
            if (step.group, step.side, step.kind) != (g, Side::Train, StepKind::Fill) {
                return Err(format!("step {}: expected fill of {g}, got {step:?}", step.step));
            }
            side[g] = Some(Side::Train);
        }
    }
    if log.next().is_some() {
        return Err("log has extra steps".into());
    }
    let sides: Vec<Side> = side.into_iter().map(Option::unwrap).collect();
    if sides != a.sides() {
        return Err("final sides differ".into());
    }
    Ok(greedy_steps)
}
