//! Templated corpus generator standing in for mined search logs.
//!
//! A template is a pair of patterns with `{SLOT}` placeholders; every slot
//! is filled from the entity table, and a slot that appears twice receives
//! the same value in both places.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{filter_tokens, normalize_question, FilterConfig, ParallelCorpus, QueryQuestionPair};
use crate::error::{Error, Result};
use crate::text::tokenize;

pub type EntityTable = BTreeMap<String, Vec<String>>;

pub const SYNTHETIC_DOMAIN: &str = "synthetic";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Template {
    pub query: String,
    pub question: String,
}

impl Template {
    pub fn new(query: &str, question: &str) -> Self {
        Template {
            query: query.to_string(),
            question: question.to_string(),
        }
    }
}

/// On-disk form accepted by `kw2q synth --templates`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateSet {
    pub templates: Vec<Template>,
    pub entities: EntityTable,
}

impl Default for TemplateSet {
    fn default() -> Self {
        TemplateSet {
            templates: default_templates(),
            entities: default_entities(),
        }
    }
}

fn slots(pattern: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut rest = pattern;
    while let Some(open) = rest.find('{') {
        let close = rest[open..]
            .find('}')
            .ok_or_else(|| Error::InvalidArgument(format!("unclosed slot in {pattern:?}")))?;
        let name = &rest[open + 1..open + close];
        if name.is_empty() {
            return Err(Error::InvalidArgument(format!("empty slot in {pattern:?}")));
        }
        out.push(name.to_string());
        rest = &rest[open + close + 1..];
    }
    Ok(out)
}

fn instantiate(pattern: &str, values: &BTreeMap<&str, &str>) -> String {
    let mut s = pattern.to_string();
    for (slot, value) in values {
        s = s.replace(&format!("{{{slot}}}"), value);
    }
    s
}

struct Compiled<'a> {
    template: &'a Template,
    slots: Vec<(&'a str, &'a [String])>,
}

fn compile<'a>(templates: &'a [Template], entities: &'a EntityTable) -> Result<Vec<Compiled<'a>>> {
    templates
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let q: BTreeSet<String> = slots(&t.query)?.into_iter().collect();
            let a: BTreeSet<String> = slots(&t.question)?.into_iter().collect();
            if q != a {
                return Err(Error::InvalidArgument(format!(
                    "template {i}: query slots {q:?} differ from question slots {a:?}"
                )));
            }
            let slots = q
                .iter()
                .map(|name| {
                    let (key, values) = entities.get_key_value(name).ok_or_else(|| {
                        Error::InvalidArgument(format!("template {i}: no entities for slot {name:?}"))
                    })?;
                    if values.is_empty() {
                        return Err(Error::InvalidArgument(format!("slot {name:?} has no entities")));
                    }
                    Ok((key.as_str(), values.as_slice()))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Compiled { template: t, slots })
        })
        .collect()
}

/// Generates `count` distinct pairs. Fails if a template instantiation is
/// rejected by the default filters or if the templates cannot produce
/// `count` distinct pairs.
pub fn generate_synthetic_corpus(
    templates: &[Template],
    entities: &EntityTable,
    count: usize,
    seed: u64,
) -> Result<ParallelCorpus> {
    if count == 0 {
        return Ok(ParallelCorpus::default());
    }
    if templates.is_empty() {
        return Err(Error::InvalidArgument("no templates".into()));
    }
    let compiled = compile(templates, entities)?;
    let capacity: u128 = compiled
        .iter()
        .map(|c| c.slots.iter().map(|(_, v)| v.len() as u128).product::<u128>())
        .sum();
    if (count as u128) > capacity {
        return Err(Error::InvalidArgument(format!(
            "templates yield at most {capacity} distinct pairs, {count} requested"
        )));
    }

    let filter = FilterConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut pairs = Vec::with_capacity(count);
    let max_attempts = count.saturating_mul(100).saturating_add(10_000);
    let mut attempts = 0;
    while pairs.len() < count {
        attempts += 1;
        if attempts > max_attempts {
            return Err(Error::InvalidArgument(format!(
                "only {} distinct pairs found after {max_attempts} draws",
                pairs.len()
            )));
        }
        let index = rng.gen_range(0..compiled.len());
        let c = &compiled[index];
        let values: BTreeMap<&str, &str> = c
            .slots
            .iter()
            .map(|(name, vals)| (*name, vals.choose(&mut rng).map(String::as_str).unwrap_or_default()))
            .collect();
        let query = instantiate(&c.template.query, &values);
        let question = instantiate(&c.template.question, &values);
        let query_tokens = tokenize(&query);
        let question_tokens = tokenize(&question);
        let decision = filter_tokens(&query_tokens, &question_tokens, &filter);
        if !decision.accepted {
            return Err(Error::Template {
                index,
                reason: decision.reason,
                query,
                question,
            });
        }
        let pair = QueryQuestionPair::new(query_tokens, normalize_question(question_tokens), SYNTHETIC_DOMAIN);
        if seen.insert((pair.query_tokens.clone(), pair.question_tokens.clone())) {
            pairs.push(pair);
        }
    }
    Ok(ParallelCorpus::new(pairs))
}

/// Query/question templates modelled on real keyword queries: most
/// questions reorder and extend the query words, a few keep the query
/// verbatim.
pub fn default_templates() -> Vec<Template> {
    [
        ("{PLACE} capital", "what is the capital of {PLACE} ?"),
        ("{PLACE} population", "what is the population of {PLACE} ?"),
        ("where is {PLACE} located", "where is {PLACE} located ?"),
        ("best time to visit {PLACE}", "when is the best time to visit {PLACE} ?"),
        ("richest man in {PLACE}", "who is the richest man in {PLACE} ?"),
        ("{PLACE} weather {MONTH}", "what is the weather like in {PLACE} in {MONTH} ?"),
        ("{DISEASE} symptoms", "what are the symptoms of {DISEASE} ?"),
        ("{DISEASE} treatment", "how do you treat {DISEASE} ?"),
        ("{DISEASE} types", "what are different types of {DISEASE} ?"),
        ("{DISEASE} causes", "what causes {DISEASE} ?"),
        ("{TYPE} to {TYPE2} {LANG}", "how to convert {TYPE} to {TYPE2} in {LANG} ?"),
        ("{LANG} hello world", "how to write hello world in {LANG} ?"),
        ("{JOB} salary {PLACE}", "what is the salary of a {JOB} in {PLACE} ?"),
        ("first woman {JOB}", "who was the first woman {JOB} ?"),
        ("how to become a {JOB} in {PLACE}", "how to become a {JOB} in {PLACE} ?"),
        ("{JOB} job description", "what does a {JOB} do ?"),
        ("{ANIMAL} lifespan", "how long does a {ANIMAL} live ?"),
        ("{ANIMAL} diet", "what does a {ANIMAL} eat ?"),
        ("{ANIMAL} habitat", "where does the {ANIMAL} live ?"),
        ("{FOOD} calories", "how many calories are in {FOOD} ?"),
        ("is {FOOD} healthy", "is {FOOD} healthy ?"),
        ("can dogs eat {FOOD}", "can dogs eat {FOOD} ?"),
        ("{UNIT} in a {UNIT2}", "how many {UNIT} are in a {UNIT2} ?"),
        ("{THING} inventor", "who invented the {THING} ?"),
        ("{PLACE} time zone", "what time zone is {PLACE} in ?"),
        ("{PLACE} to {PLACE2} distance", "how far is {PLACE} from {PLACE2} ?"),
        ("flight {PLACE} to {PLACE2}", "how long is the flight from {PLACE} to {PLACE2} ?"),
        ("{JOB} schools {PLACE}", "what are the best {JOB} schools in {PLACE} ?"),
        ("{FOOD} price {PLACE}", "how much does {FOOD} cost in {PLACE} ?"),
        ("see {ANIMAL} in {PLACE}", "where can i see a {ANIMAL} in {PLACE} ?"),
        ("{ANIMAL} {DISEASE}", "can a {ANIMAL} get {DISEASE} ?"),
    ]
    .into_iter()
    .map(|(q, a)| Template::new(q, a))
    .collect()
}

pub fn default_entities() -> EntityTable {
    let table: [(&str, &[&str]); 11] = [
        (
            "PLACE",
            &[
                "japan", "france", "india", "brazil", "canada", "egypt", "kenya", "peru", "norway", "chile",
                "mexico", "spain", "italy", "germany", "china", "russia", "dubai", "kansas", "texas", "ohio",
                "paris", "london", "tokyo", "delhi", "sydney", "cairo", "lima", "oslo", "rome", "berlin",
                "new york", "south africa", "hong kong", "new zealand", "sri lanka", "costa rica",
            ],
        ),
        (
            "MONTH",
            &[
                "january", "february", "march", "april", "may", "june", "july", "august", "september",
                "october", "november", "december",
            ],
        ),
        (
            "DISEASE",
            &[
                "fever", "cancer", "diabetes", "asthma", "malaria", "flu", "measles", "anemia", "arthritis",
                "migraine", "pneumonia", "dengue", "typhoid", "cholera", "hepatitis", "tuberculosis",
            ],
        ),
        ("TYPE", &["string", "int", "float", "double", "char", "array", "list", "byte", "long", "date"]),
        ("TYPE2", &["string", "int", "float", "double", "char", "array", "list", "byte", "long", "date"]),
        ("LANG", &["c#", "java", "python", "rust", "go", "ruby", "swift", "kotlin", "c++", "php", "perl", "scala"]),
        (
            "JOB",
            &[
                "doctor", "nurse", "pilot", "teacher", "lawyer", "dentist", "plumber", "chef", "rapper",
                "engineer", "architect", "pharmacist", "surgeon", "anesthesiologist", "judge", "astronaut",
            ],
        ),
        (
            "ANIMAL",
            &[
                "dog", "cat", "horse", "tiger", "lion", "elephant", "parrot", "turtle", "rabbit", "dolphin",
                "shark", "penguin", "wolf", "camel", "giraffe", "hamster",
            ],
        ),
        (
            "FOOD",
            &[
                "rice", "bread", "cheese", "banana", "apple", "avocado", "chocolate", "yogurt", "pasta",
                "broccoli", "popcorn", "peanut butter", "brown rice", "sweet potato", "grapes", "honey",
            ],
        ),
        ("UNIT", &["grams", "ounces", "cups", "inches", "feet", "meters", "seconds", "minutes", "days", "liters"]),
        (
            "UNIT2",
            &["pound", "kilogram", "gallon", "mile", "yard", "hour", "week", "year", "ton", "quart"],
        ),
    ];
    let mut entities: EntityTable = table
        .into_iter()
        .map(|(k, v)| (k.to_string(), v.iter().map(|s| s.to_string()).collect()))
        .collect();
    let places = entities["PLACE"].clone();
    entities.insert("PLACE2".into(), places);
    entities.insert(
        "THING".into(),
        [
            "telephone", "radio", "television", "computer", "internet", "airplane", "bicycle", "camera",
            "microwave", "printer", "lightbulb", "piano", "compass", "calculator", "refrigerator", "vaccine",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect(),
    );
    entities
}
