//! Seeded synthetic QA corpora with controllable answer bias.
//!
//! A template such as `"what color is the {object}?"` is filled from the
//! vocabulary; the value of its first slot is the template's *object*, and the
//! answer is drawn from the bias entry for (template, object) when one exists,
//! else from the template's default distribution.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{AnswerType, Corpus, QaRecord};
use crate::error::{Error, Result};

const SUM_TOLERANCE: f64 = 1e-9;

pub type Distribution = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Template {
    pub name: String,
    /// Question text with `{slot}` placeholders.
    pub text: String,
    pub question_type: String,
    #[serde(default)]
    pub answer_type: Option<AnswerType>,
    /// Relative selection weight.
    #[serde(default = "one")]
    pub weight: f64,
    /// Default answer distribution.
    pub answers: Distribution,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bias {
    pub template: String,
    pub object: String,
    pub answers: Distribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub templates: Vec<Template>,
    #[serde(default)]
    pub vocab: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub bias: Vec<Bias>,
    pub n_records: usize,
    #[serde(default = "ten")]
    pub n_human_answers: usize,
    /// Fraction of human answers equal to the ground truth.
    #[serde(default = "one")]
    pub agreement: f64,
    /// Image ids are drawn uniformly from `1..=n_images`; 0 means `ceil(n_records / 3)`.
    #[serde(default)]
    pub n_images: u64,
    #[serde(default)]
    pub seed: u64,
}

fn ten() -> usize {
    10
}

fn slots(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find('{') {
        let Some(len) = rest[start..].find('}') else { break };
        out.push(&rest[start + 1..start + len]);
        rest = &rest[start + len + 1..];
    }
    out
}

fn check_distribution(what: &str, d: &Distribution) -> Result<()> {
    if d.is_empty() {
        return Err(Error::Config(format!("{what}: empty answer distribution")));
    }
    if let Some((a, p)) = d.iter().find(|(_, p)| !(p.is_finite() && **p >= 0.0)) {
        return Err(Error::Config(format!("{what}: bad probability {p} for {a:?}")));
    }
    let sum: f64 = d.values().sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(Error::Config(format!(
            "{what}: probabilities sum to {sum}, not 1"
        )));
    }
    Ok(())
}

fn sample<'a>(rng: &mut ChaCha8Rng, d: &'a Distribution) -> &'a str {
    let x: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = "";
    for (a, &p) in d {
        if p == 0.0 {
            continue;
        }
        acc += p;
        last = a;
        if x < acc {
            return a;
        }
    }
    last
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_records == 0 {
            return Err(Error::Config("n_records must be at least 1".into()));
        }
        if self.templates.is_empty() {
            return Err(Error::Config("at least one template is required".into()));
        }
        if !(0.0..=1.0).contains(&self.agreement) {
            return Err(Error::Config(format!(
                "agreement {} outside [0, 1]",
                self.agreement
            )));
        }
        let mut names = BTreeSet::new();
        for t in &self.templates {
            if !names.insert(t.name.as_str()) {
                return Err(Error::Config(format!("duplicate template name {:?}", t.name)));
            }
            if !(t.weight.is_finite() && t.weight > 0.0) {
                return Err(Error::Config(format!(
                    "template {:?}: weight must be positive",
                    t.name
                )));
            }
            check_distribution(&format!("template {:?}", t.name), &t.answers)?;
            for s in slots(&t.text) {
                if self.vocab.get(s).is_none_or(|v| v.is_empty()) {
                    return Err(Error::Config(format!(
                        "template {:?}: slot {{{s}}} has no vocabulary",
                        t.name
                    )));
                }
            }
        }
        for b in &self.bias {
            if !names.contains(b.template.as_str()) {
                return Err(Error::Config(format!(
                    "bias names unknown template {:?}",
                    b.template
                )));
            }
            check_distribution(&format!("bias {:?}/{:?}", b.template, b.object), &b.answers)?;
        }
        if self.distractors_needed() > 0 && self.answer_vocabulary().len() < 2 {
            return Err(Error::Config(
                "agreement below 1 needs at least two distinct answers".into(),
            ));
        }
        Ok(())
    }

    fn distractors_needed(&self) -> usize {
        self.n_human_answers - self.agreeing_answers()
    }

    fn agreeing_answers(&self) -> usize {
        ((self.agreement * self.n_human_answers as f64).round() as usize).min(self.n_human_answers)
    }

    fn answer_vocabulary(&self) -> BTreeSet<&str> {
        self.templates
            .iter()
            .flat_map(|t| t.answers.keys())
            .chain(self.bias.iter().flat_map(|b| b.answers.keys()))
            .map(String::as_str)
            .collect()
    }

    /// Loads a config from JSON, or TOML when the extension is `.toml`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: SynthConfig = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        } else {
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Generates `cfg.n_records` records with ids `1..=n`.
pub fn generate(cfg: &SynthConfig) -> Result<Corpus> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_images = if cfg.n_images == 0 {
        (cfg.n_records as u64).div_ceil(3)
    } else {
        cfg.n_images
    };
    let total_weight: f64 = cfg.templates.iter().map(|t| t.weight).sum();
    let bias: BTreeMap<(&str, &str), &Distribution> = cfg
        .bias
        .iter()
        .map(|b| ((b.template.as_str(), b.object.as_str()), &b.answers))
        .collect();
    // Distractor pools: answers the template can produce, else every answer.
    let all_answers: Vec<&str> = cfg.answer_vocabulary().into_iter().collect();
    let pools: Vec<Vec<&str>> = cfg
        .templates
        .iter()
        .map(|t| {
            t.answers
                .keys()
                .chain(
                    cfg.bias
                        .iter()
                        .filter(|b| b.template == t.name)
                        .flat_map(|b| b.answers.keys()),
                )
                .map(String::as_str)
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect()
        })
        .collect();

    let agreeing = cfg.agreeing_answers();
    let mut records = Vec::with_capacity(cfg.n_records);
    for id in 1..=cfg.n_records as u64 {
        let x: f64 = rng.random::<f64>() * total_weight;
        let mut acc = 0.0;
        let mut ti = cfg.templates.len() - 1;
        for (i, t) in cfg.templates.iter().enumerate() {
            acc += t.weight;
            if x < acc {
                ti = i;
                break;
            }
        }
        let t = &cfg.templates[ti];

        let mut question = t.text.clone();
        let mut object: Option<String> = None;
        for slot in slots(&t.text) {
            let values = &cfg.vocab[slot];
            let v = &values[rng.random_range(0..values.len())];
            question = question.replacen(&format!("{{{slot}}}"), v, 1);
            object.get_or_insert_with(|| v.clone());
        }
        let dist = object
            .as_deref()
            .and_then(|o| bias.get(&(t.name.as_str(), o)))
            .copied()
            .unwrap_or(&t.answers);
        let answer = sample(&mut rng, dist).to_string();
        let image_id = rng.random_range(1..=n_images);

        let mut human: Vec<String> = vec![answer.clone(); agreeing];
        if agreeing < cfg.n_human_answers {
            let mut pool: Vec<&str> = pools[ti].iter().copied().filter(|a| *a != answer).collect();
            if pool.is_empty() {
                pool = all_answers.iter().copied().filter(|a| *a != answer).collect();
            }
            for _ in agreeing..cfg.n_human_answers {
                human.push(pool[rng.random_range(0..pool.len())].to_string());
            }
            human.shuffle(&mut rng);
        }

        let mut record = QaRecord::new(id, image_id, &question, &answer).with_question_type(&t.question_type);
        record.human_answers = human;
        record.answer_type = Some(t.answer_type.unwrap_or_else(|| AnswerType::infer(&answer)));
        records.push(record);
    }
    Corpus::new(records, format!("synth(seed={})", cfg.seed))
}

pub const PRESETS: [&str; 3] = ["color-bias", "sport-bias", "poisoned-type"];

fn dist(pairs: &[(&str, f64)]) -> Distribution {
    pairs.iter().map(|(a, p)| (a.to_string(), *p)).collect()
}

fn template(name: &str, text: &str, qtype: &str, weight: f64, answers: &[(&str, f64)]) -> Template {
    Template {
        name: name.into(),
        text: text.into(),
        question_type: qtype.into(),
        answer_type: None,
        weight,
        answers: dist(answers),
    }
}

fn bias_for(templates: &[&str], object: &str, answers: &[(&str, f64)]) -> Vec<Bias> {
    templates
        .iter()
        .map(|t| Bias {
            template: t.to_string(),
            object: object.into(),
            answers: dist(answers),
        })
        .collect()
}

fn vocab(entries: &[(&str, &[&str])]) -> BTreeMap<String, Vec<String>> {
    entries
        .iter()
        .map(|(k, vs)| (k.to_string(), vs.iter().map(|v| v.to_string()).collect()))
        .collect()
}

fn color_bias() -> SynthConfig {
    let color = ["color", "color-of"];
    let mut bias = Vec::new();
    bias.extend(bias_for(
        &color,
        "plate",
        &[("green", 0.15), ("red", 0.05), ("white", 0.8)],
    ));
    bias.extend(bias_for(
        &color,
        "cone",
        &[("green", 0.05), ("orange", 0.9), ("white", 0.05)],
    ));
    bias.extend(bias_for(&color, "apple", &[("green", 0.35), ("red", 0.65)]));
    bias.extend(bias_for(&color, "stop light", &[("green", 0.3), ("red", 0.7)]));
    bias.extend(bias_for(
        &color,
        "bus",
        &[("blue", 0.3), ("red", 0.2), ("white", 0.5)],
    ));
    bias.extend(bias_for(
        &color,
        "car",
        &[("black", 0.4), ("blue", 0.2), ("red", 0.2), ("white", 0.2)],
    ));
    SynthConfig {
        templates: vec![
            template(
                "color",
                "What color is the {object}?",
                "what color is the",
                3.0,
                &[("red", 0.5), ("white", 0.5)],
            ),
            template(
                "color-of",
                "What is the color of the {object}?",
                "what is the color of the",
                1.0,
                &[("red", 0.5), ("white", 0.5)],
            ),
            template(
                "count",
                "How many {object}s are on the table?",
                "how many",
                2.0,
                &[("1", 0.35), ("2", 0.3), ("3", 0.2), ("4", 0.15)],
            ),
        ],
        vocab: vocab(&[("object", &["plate", "cone", "apple", "stop light", "bus", "car"])]),
        bias,
        n_records: 10_000,
        n_human_answers: 10,
        agreement: 0.8,
        n_images: 0,
        seed: 0,
    }
}

fn sport_bias() -> SynthConfig {
    // One dominant "being played -> tennis" group lands in test; skiing is
    // spread over the person-slotted groups that stay in train.
    let person = ["person"];
    let mut bias = Vec::new();
    for p in ["man", "woman", "boy", "girl"] {
        bias.extend(bias_for(
            &person,
            p,
            &[("baseball", 0.2), ("skiing", 0.6), ("tennis", 0.2)],
        ));
    }
    SynthConfig {
        templates: vec![
            template(
                "played",
                "What sport is being played?",
                "what sport is",
                4.0,
                &[("baseball", 0.1), ("skiing", 0.1), ("tennis", 0.8)],
            ),
            template(
                "this",
                "What sport is this?",
                "what sport is",
                3.0,
                &[("skiing", 0.5), ("snowboarding", 0.2), ("tennis", 0.3)],
            ),
            template(
                "person",
                "What sport is the {person} playing?",
                "what sport is",
                3.0,
                &[("tennis", 1.0)],
            ),
        ],
        vocab: vocab(&[("person", &["man", "woman", "boy", "girl"])]),
        bias,
        n_records: 10_000,
        n_human_answers: 10,
        agreement: 0.9,
        n_images: 0,
        seed: 0,
    }
}

fn poisoned_type() -> SynthConfig {
    SynthConfig {
        templates: vec![
            template(
                "room",
                "What room is this?",
                "what room is",
                4.0,
                &[("bathroom", 0.15), ("bedroom", 0.3), ("kitchen", 0.55)],
            ),
            template(
                "count",
                "How many {object}s are in the picture?",
                "how many",
                3.0,
                &[("1", 0.6), ("2", 0.25), ("3", 0.15)],
            ),
            template(
                "exists",
                "Is there a {object} in the picture?",
                "is there a",
                3.0,
                &[("no", 0.2), ("yes", 0.8)],
            ),
        ],
        vocab: vocab(&[(
            "object",
            &["dog", "cat", "person", "car", "tree", "chair", "cup", "clock"],
        )]),
        bias: Vec::new(),
        n_records: 10_000,
        n_human_answers: 10,
        agreement: 1.0,
        n_images: 0,
        seed: 0,
    }
}

/// Named configs: `color-bias`, `sport-bias`, `poisoned-type`.
pub fn preset(name: &str) -> Result<SynthConfig> {
    match name {
        "color-bias" => Ok(color_bias()),
        "sport-bias" => Ok(sport_bias()),
        "poisoned-type" => Ok(poisoned_type()),
        _ => Err(Error::UnknownPreset {
            name: name.to_string(),
            available: PRESETS.to_vec(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(answers: &[(&str, f64)], agreement: f64) -> SynthConfig {
        SynthConfig {
            templates: vec![template(
                "t",
                "What color is the plate?",
                "what color",
                1.0,
                answers,
            )],
            vocab: BTreeMap::new(),
            bias: Vec::new(),
            n_records: 50,
            n_human_answers: 10,
            agreement,
            n_images: 0,
            seed: 3,
        }
    }

    #[test]
    fn slot_parsing() {
        assert_eq!(slots("what {a} is the {b}?"), vec!["a", "b"]);
        assert!(slots("plain").is_empty());
    }

    #[test]
    fn degenerate_distribution_gives_identical_qa() {
        let c = generate(&single(&[("green", 1.0)], 1.0)).unwrap();
        assert_eq!(c.len(), 50);
        assert!(c
            .records()
            .iter()
            .all(|r| r.question_text == "what color is the plate?"
                && r.ground_truth_answer == "green"
                && r.human_answers == vec!["green"; 10]));
        let ids: Vec<u64> = c.records().iter().map(|r| r.question_id).collect();
        assert_eq!(ids, (1..=50).collect::<Vec<_>>());
    }

    #[test]
    fn human_answers_follow_agreement() {
        let c = generate(&single(&[("green", 0.5), ("red", 0.3), ("blue", 0.2)], 0.7)).unwrap();
        for r in c.records() {
            let agree = r
                .human_answers
                .iter()
                .filter(|a| **a == r.ground_truth_answer)
                .count();
            assert_eq!(agree, 7);
            assert_eq!(r.human_answers.len(), 10);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let cfg = preset("color-bias").unwrap();
        assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
        let other = SynthConfig {
            seed: 1,
            ..cfg.clone()
        };
        assert_ne!(generate(&cfg).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn invalid_configs() {
        assert!(matches!(
            generate(&single(&[("green", 0.7)], 1.0)),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            generate(&single(&[("green", 1.0)], 0.5)),
            Err(Error::Config(_))
        ));
        let mut cfg = single(&[("green", 1.0)], 1.0);
        cfg.n_records = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = single(&[("green", 1.0)], 1.0);
        cfg.templates[0].text = "What is the {thing}?".into();
        assert!(cfg.validate().is_err());
        let mut cfg = single(&[("green", 1.0)], 1.0);
        cfg.bias.push(Bias {
            template: "nope".into(),
            object: "x".into(),
            answers: dist(&[("a", 1.0)]),
        });
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn presets_validate_and_unknown_lists_names() {
        for name in PRESETS {
            preset(name).unwrap().validate().unwrap();
        }
        match preset("nope") {
            Err(e @ Error::UnknownPreset { .. }) => {
                let msg = e.to_string();
                assert!(PRESETS.iter().all(|p| msg.contains(p)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn config_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = preset("sport-bias").unwrap();
        let json = dir.path().join("c.json");
        std::fs::write(&json, serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(SynthConfig::load(&json).unwrap(), cfg);
        let tomlp = dir.path().join("c.toml");
        std::fs::write(&tomlp, toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(SynthConfig::load(&tomlp).unwrap(), cfg);
    }
}
