//! Random corpora and a brute-force reference implementation.
//!
//! The reference never looks at an `Index`: it re-tokenizes raw text with its
//! own splitter and recomputes every statistic by scanning all interviews.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use chrono::DateTime;
use oht_core::corpus::{validate_interview, Corpus, FacetSchema, Interview, COLLECTION_FACET, TAGS_FACET};
use oht_core::text::DEFAULT_STOPWORDS;
use oht_core::workspace::ManualAnnotation;
use rand::rngs::StdRng;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use serde_json::json;

pub const FACETS: [&str; 4] = ["genre", "language", "period", "region"];

const WORDS: &[&str] = &[
    "war", "camp", "harbour", "ship", "resistance", "liberation", "school", "father", "mother",
    "bombing", "rotterdam", "indonesia", "surinam", "migration", "train", "factory", "hunger",
    "winter", "bicycle", "church", "soldier", "veteran", "memory", "letter", "radio", "queen",
    "1940", "1945", "1953", "flood", "dike", "farm", "city", "family", "brother", "sister",
    "work", "market", "journey", "silence", "oorlog", "verzet", "haven", "moeder", "vader",
    "school", "kamp", "bevrijding", "honger", "trein", "café", "Ärger", "naïve", "the", "and",
    "of", "de", "het", "een", "was", "in",
];

const FACET_VALUES: [&[&str]; 4] = [
    &["war", "migration", "labour", "childhood", "religion"],
    &["nl", "en", "de", "id"],
    &["1930s", "1940s", "1950s", "1960s"],
    &["north", "south", "east", "west", "overseas"],
];

pub fn schema() -> FacetSchema {
    FacetSchema::new(FACETS.iter().map(|f| (*f, f.to_uppercase()))).unwrap()
}

fn sentence(rng: &mut StdRng, max_words: usize) -> String {
    let n = rng.random_range(0..=max_words);
    let mut out = String::new();
    for i in 0..n {
        if i > 0 {
            out.push_str([" ", " ", ", ", "-", "! "].choose(rng).unwrap());
        }
        let w = WORDS.choose(rng).unwrap();
        if rng.random_bool(0.1) {
            out.push_str(&w.to_uppercase());
        } else {
            out.push_str(w);
        }
    }
    out
}

pub fn random_interview(rng: &mut StdRng, id: &str, single_valued: bool) -> Interview {
    let n_segments = rng.random_range(0..=10);
    let mut t = 0u64;
    let mut segments = Vec::new();
    for _ in 0..n_segments {
        let start = t + rng.random_range(0..2000);
        let end = start + rng.random_range(1..30000);
        t = if rng.random_bool(0.2) { start } else { end };
        segments.push(json!({
            "start_ms": start, "end_ms": end,
            "speaker": if rng.random_bool(0.5) { json!("interviewer") } else { json!(null) },
            "text": sentence(rng, 25),
        }));
    }
    let max_end = segments
        .iter()
        .map(|s| s["end_ms"].as_u64().unwrap())
        .max()
        .unwrap_or(0);
    let mut facets = serde_json::Map::new();
    for (f, values) in FACETS.iter().zip(FACET_VALUES) {
        if rng.random_bool(0.15) {
            continue;
        }
        let k = if single_valued { 1 } else { rng.random_range(1..=2) };
        let chosen: Vec<&str> = values.choose_multiple(rng, k).copied().collect();
        facets.insert(f.to_string(), json!(chosen));
    }
    validate_interview(&json!({
        "id": id,
        "title": sentence(rng, 5),
        "collection": format!("c{}", rng.random_range(0..3)),
        "speakers": ["narrator"],
        "date": if rng.random_bool(0.5) { json!("1990-01-01") } else { json!(null) },
        "duration_ms": max_end + rng.random_range(0..5000),
        "summary": sentence(rng, 40),
        "media_url": null,
        "facets": facets,
        "segments": segments,
    }))
    .expect("generator produces valid interviews")
}

pub fn random_corpus(seed: u64, max_interviews: usize, single_valued: bool) -> Arc<Corpus> {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = rng.random_range(0..=max_interviews);
    let interviews = (0..n)
        .map(|i| random_interview(&mut rng, &format!("int-{:04}", (i * 7919) % 10007), single_valued))
        .collect();
    Arc::new(Corpus::new(interviews, schema()).unwrap())
}

pub fn random_annotations(seed: u64, corpus: &Corpus, count: usize) -> Vec<ManualAnnotation> {
    let mut rng = StdRng::seed_from_u64(seed ^ 0xA11CE);
    if corpus.is_empty() {
        return Vec::new();
    }
    (0..count)
        .map(|i| {
            let interview = corpus.interviews().choose(&mut rng).unwrap();
            let range = if interview.duration_ms > 1 && rng.random_bool(0.5) {
                let s = rng.random_range(0..interview.duration_ms - 1);
                let e = rng.random_range(s + 1..=interview.duration_ms);
                Some((s, e))
            } else {
                None
            };
            let tags = if rng.random_bool(0.5) {
                vec![["disputed", "key", "follow-up"].choose(&mut rng).unwrap().to_string()]
            } else {
                vec![]
            };
            ManualAnnotation {
                annotation_id: format!("ann-{i}"),
                interview_id: interview.id.clone(),
                start_ms: range.map(|r| r.0),
                end_ms: range.map(|r| r.1),
                text: sentence(&mut rng, 6),
                tags,
                created_at: DateTime::UNIX_EPOCH,
            }
        })
        .collect()
}

/// Random terms and filters over the generator's vocabulary.
pub fn random_query_parts(rng: &mut StdRng) -> (String, Vec<String>) {
    let text = match rng.random_range(0..4) {
        0 => String::new(),
        1 => WORDS.choose(rng).unwrap().to_string(),
        2 => format!("{} {}", WORDS.choose(rng).unwrap(), WORDS.choose(rng).unwrap()),
        _ => format!("{} unheardof", WORDS.choose(rng).unwrap()),
    };
    let mut filters = Vec::new();
    for _ in 0..rng.random_range(0..=3) {
        let f = rng.random_range(0..FACETS.len());
        filters.push(format!("{}:{}", FACETS[f], FACET_VALUES[f].choose(rng).unwrap()));
    }
    if rng.random_bool(0.1) {
        filters.push("tags:disputed".into());
    }
    (text, filters)
}

fn words(text: &str) -> Vec<String> {
    let stop: BTreeSet<&str> = DEFAULT_STOPWORDS.iter().copied().collect();
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(|w| w.to_lowercase())
        .filter(|w| !stop.contains(w.as_str()))
        .collect()
}

/// Per-interview term bags, lengths and facets, recomputed from raw text.
pub struct Reference {
    pub ids: Vec<String>,
    pub bags: Vec<HashMap<String, u64>>,
    pub lengths: Vec<u64>,
    pub facets: Vec<BTreeMap<String, BTreeSet<String>>>,
    pub facet_order: Vec<String>,
}

impl Reference {
    pub fn new(corpus: &Corpus, annotations: &[ManualAnnotation]) -> Self {
        let mut r = Reference {
            ids: Vec::new(),
            bags: Vec::new(),
            lengths: Vec::new(),
            facets: Vec::new(),
            facet_order: corpus.facet_schema().facets().iter().map(|f| f.name.clone()).collect(),
        };
        for interview in corpus.interviews() {
            let mut texts = vec![interview.title.clone(), interview.summary.clone()];
            texts.extend(interview.segments.iter().map(|s| s.text.clone()));
            let mut facets = interview.facets.clone();
            facets
                .entry(COLLECTION_FACET.into())
                .or_default()
                .insert(interview.collection_id.clone());
            for a in annotations.iter().filter(|a| a.interview_id == interview.id) {
                texts.push(a.text.clone());
                for tag in &a.tags {
                    facets.entry(TAGS_FACET.into()).or_default().insert(tag.clone());
                }
            }
            let mut bag: HashMap<String, u64> = HashMap::new();
            let mut len = 0;
            for t in &texts {
                for w in words(t) {
                    *bag.entry(w).or_default() += 1;
                    len += 1;
                }
            }
            r.ids.push(interview.id.clone());
            r.bags.push(bag);
            r.lengths.push(len);
            r.facets.push(facets);
        }
        r
    }

    pub fn df(&self, term: &str) -> u64 {
        self.bags.iter().filter(|b| b.contains_key(term)).count() as u64
    }

    pub fn idf(&self, term: &str) -> f64 {
        let n = self.ids.len() as f64;
        let df = self.df(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    pub fn score(&self, doc: usize, terms: &[String]) -> f64 {
        let n = self.ids.len() as f64;
        let avgdl = self.lengths.iter().sum::<u64>() as f64 / n;
        let mut s = 0.0;
        for t in terms {
            let tf = *self.bags[doc].get(t).unwrap_or(&0) as f64;
            if tf == 0.0 {
                continue;
            }
            let norm = 1.0 - 0.75 + 0.75 * self.lengths[doc] as f64 / avgdl;
            s += self.idf(t) * tf * 2.2 / (tf + 1.2 * norm);
        }
        s
    }

    fn matches_filters(&self, doc: usize, filters: &BTreeMap<String, BTreeSet<String>>, skip: Option<&str>) -> bool {
        filters.iter().all(|(facet, values)| {
            Some(facet.as_str()) == skip
                || self.facets[doc]
                    .get(facet)
                    .is_some_and(|have| values.iter().any(|v| have.contains(v)))
        })
    }

    fn matches_terms(&self, doc: usize, terms: &[String]) -> bool {
        terms.is_empty() || terms.iter().any(|t| self.bags[doc].contains_key(t))
    }

    pub fn scope(&self, terms: &[String], filters: &BTreeMap<String, BTreeSet<String>>) -> Vec<usize> {
        (0..self.ids.len())
            .filter(|&d| self.matches_terms(d, terms) && self.matches_filters(d, filters, None))
            .collect()
    }

    /// (id, score) sorted by score desc, id asc.
    pub fn ranking(&self, terms: &[String], filters: &BTreeMap<String, BTreeSet<String>>) -> Vec<(String, f64)> {
        let mut out: Vec<(String, f64)> = self
            .scope(terms, filters)
            .into_iter()
            .map(|d| {
                let s = if terms.is_empty() { 0.0 } else { self.score(d, terms) };
                (self.ids[d].clone(), s)
            })
            .collect();
        out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
        out
    }

    /// facet → (value → count, missing) under the exclude-own-facet rule.
    pub fn facet_counts(
        &self,
        terms: &[String],
        filters: &BTreeMap<String, BTreeSet<String>>,
    ) -> BTreeMap<String, (BTreeMap<String, usize>, usize)> {
        let mut out = BTreeMap::new();
        for facet in &self.facet_order {
            let mut counts: BTreeMap<String, usize> = BTreeMap::new();
            let mut missing = 0;
            for d in 0..self.ids.len() {
                if !self.matches_terms(d, terms) || !self.matches_filters(d, filters, Some(facet)) {
                    continue;
                }
                match self.facets[d].get(facet) {
                    Some(vs) if !vs.is_empty() => {
                        for v in vs {
                            *counts.entry(v.clone()).or_default() += 1;
                        }
                    }
                    _ => missing += 1,
                }
            }
            out.insert(facet.clone(), (counts, missing));
        }
        out
    }

    /// Every (term, raw) with raw > 0 in scope, sorted raw desc, term asc.
    pub fn cloud(&self, terms: &[String], filters: &BTreeMap<String, BTreeSet<String>>) -> Vec<(String, f64)> {
        let scope = self.scope(terms, filters);
        let mut tf: BTreeMap<String, u64> = BTreeMap::new();
        for &d in &scope {
            for (t, c) in &self.bags[d] {
                *tf.entry(t.clone()).or_default() += c;
            }
        }
        let mut out: Vec<(String, f64)> = tf
            .into_iter()
            .filter(|(t, _)| !terms.contains(t))
            .map(|(t, c)| {
                let raw = c as f64 * self.idf(&t);
                (t, raw)
            })
            .collect();
        out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
        out
    }
}

/// Ids in reference order must match, except inside runs of scores closer
/// than `tol`, where only the set of ids must match.
pub fn assert_same_ranking(got: &[(String, f64)], want: &[(String, f64)], tol: f64) {
    assert_eq!(got.len(), want.len());
    let mut i = 0;
    while i < want.len() {
        let mut j = i + 1;
        while j < want.len() && (want[j].1 - want[i].1).abs() < tol {
            j += 1;
        }
        let g: BTreeSet<_> = got[i..j].iter().map(|x| &x.0).collect();
        let w: BTreeSet<_> = want[i..j].iter().map(|x| &x.0).collect();
        assert_eq!(g, w, "ranking differs at {i}..{j}");
        for k in i..j {
            assert!((got[k].1 - want[k].1).abs() < tol, "score {} vs {}", got[k].1, want[k].1);
        }
        i = j;
    }
}
