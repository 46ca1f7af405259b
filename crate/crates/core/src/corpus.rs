//! Interview documents, facet schema and corpus loading.
//!
//! A corpus is a directory tree holding one JSON document per interview plus a
//! separate facet schema file. Collections are merged simply by placing their
//! documents in the same tree. Unknown document fields are ignored.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Facet name under which manual annotation tags are indexed.
pub const TAGS_FACET: &str = "tags";
/// Facet populated from each interview's collection id.
pub const COLLECTION_FACET: &str = "collection";

pub type FacetValues = BTreeMap<String, BTreeSet<String>>;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("facet schema not found: {0}")]
    MissingSchema(PathBuf),
    #[error("invalid facet schema {path}: {reason}")]
    InvalidSchema { path: PathBuf, reason: String },
    #[error("cannot read {path}: {source}")]
    UnreadableFile {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Validation { path: PathBuf, reason: String },
    #[error("duplicate interview id {0:?}")]
    DuplicateId(String),
    #[error("interview {id:?} uses facet {facet:?} which is not in the schema")]
    UnknownFacet { id: String, facet: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Segment {
    pub segment_id: usize,
    pub start_ms: u64,
    pub end_ms: u64,
    pub speaker: Option<String>,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Interview {
    pub id: String,
    pub title: String,
    #[serde(rename = "collection")]
    pub collection_id: String,
    pub speakers: Vec<String>,
    /// ISO-8601 date, kept verbatim.
    pub date: Option<String>,
    pub duration_ms: u64,
    pub summary: String,
    pub media_url: Option<String>,
    pub facets: FacetValues,
    pub segments: Vec<Segment>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FacetDefinition {
    pub name: String,
    pub label: String,
    pub display_order: usize,
}

/// Ordered facet definitions. The reserved `collection` and `tags` facets are
/// appended when the schema file does not list them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FacetSchema {
    facets: Vec<FacetDefinition>,
}

#[derive(Deserialize)]
struct SchemaDoc {
    facets: Vec<SchemaEntry>,
}

#[derive(Deserialize, Serialize)]
struct SchemaEntry {
    name: String,
    label: String,
}

impl FacetSchema {
    /// Builds a schema from `(name, label)` pairs in display order.
    pub fn new<I, N, L>(entries: I) -> Result<Self, String>
    where
        I: IntoIterator<Item = (N, L)>,
        N: Into<String>,
        L: Into<String>,
    {
        let mut facets: Vec<FacetDefinition> = Vec::new();
        for (name, label) in entries {
            let name = name.into();
            if name.trim().is_empty() {
                return Err("facet name must not be empty".into());
            }
            if facets.iter().any(|f| f.name == name) {
                return Err(format!("duplicate facet name {name:?}"));
            }
            facets.push(FacetDefinition {
                display_order: facets.len(),
                name,
                label: label.into(),
            });
        }
        for (name, label) in [(COLLECTION_FACET, "Collection"), (TAGS_FACET, "Tags")] {
            if !facets.iter().any(|f| f.name == name) {
                facets.push(FacetDefinition {
                    name: name.into(),
                    label: label.into(),
                    display_order: facets.len(),
                });
            }
        }
        Ok(Self { facets })
    }

    pub fn from_json(raw: &str) -> Result<Self, String> {
        let doc: SchemaDoc = serde_json::from_str(raw).map_err(|e| e.to_string())?;
        Self::new(doc.facets.into_iter().map(|e| (e.name, e.label)))
    }

    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let raw = fs::read_to_string(path).map_err(|source| {
            if source.kind() == std::io::ErrorKind::NotFound {
                CorpusError::MissingSchema(path.to_path_buf())
            } else {
                CorpusError::UnreadableFile {
                    path: path.to_path_buf(),
                    source,
                }
            }
        })?;
        Self::from_json(&raw).map_err(|reason| CorpusError::InvalidSchema {
            path: path.to_path_buf(),
            reason,
        })
    }

    pub fn to_json(&self) -> String {
        let facets: Vec<_> = self
            .facets
            .iter()
            .map(|f| SchemaEntry {
                name: f.name.clone(),
                label: f.label.clone(),
            })
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({ "facets": facets }))
            .expect("schema serializes")
    }

    pub fn facets(&self) -> &[FacetDefinition] {
        &self.facets
    }

    pub fn get(&self, name: &str) -> Option<&FacetDefinition> {
        self.facets.iter().find(|f| f.name == name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }
}

#[derive(Debug, Clone)]
pub struct Corpus {
    interviews: Vec<Interview>,
    facet_schema: FacetSchema,
    collections: BTreeSet<String>,
}

impl Corpus {
    /// Sorts interviews by id and checks id uniqueness and facet names.
    pub fn new(mut interviews: Vec<Interview>, facet_schema: FacetSchema) -> Result<Self, CorpusError> {
        interviews.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in interviews.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(CorpusError::DuplicateId(pair[0].id.clone()));
            }
        }
        for interview in &interviews {
            if let Some(facet) = interview.facets.keys().find(|f| !facet_schema.contains(f)) {
                return Err(CorpusError::UnknownFacet {
                    id: interview.id.clone(),
                    facet: facet.clone(),
                });
            }
        }
        let collections = interviews.iter().map(|i| i.collection_id.clone()).collect();
        Ok(Self {
            interviews,
            facet_schema,
            collections,
        })
    }

    pub fn empty(facet_schema: FacetSchema) -> Self {
        Self {
            interviews: Vec::new(),
            facet_schema,
            collections: BTreeSet::new(),
        }
    }

    /// Interviews in id order.
    pub fn interviews(&self) -> &[Interview] {
        &self.interviews
    }

    pub fn facet_schema(&self) -> &FacetSchema {
        &self.facet_schema
    }

    pub fn collections(&self) -> &BTreeSet<String> {
        &self.collections
    }

    pub fn len(&self) -> usize {
        self.interviews.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interviews.is_empty()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.interviews
            .binary_search_by(|i| i.id.as_str().cmp(id))
            .ok()
    }

    pub fn get(&self, id: &str) -> Option<&Interview> {
        self.position(id).map(|p| &self.interviews[p])
    }
}

/// One invariant broken by an interview document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyId,
    NegativeDuration(i64),
    NegativeStart { segment: usize, start_ms: i64 },
    EmptyRange { segment: usize, start_ms: i64, end_ms: i64 },
    ExceedsDuration { segment: usize, end_ms: i64, duration_ms: i64 },
    OutOfOrder { segment: usize, previous_start_ms: i64, start_ms: i64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyId => write!(f, "id must be non-empty"),
            Violation::NegativeDuration(d) => write!(f, "duration_ms must be non-negative, got {d}"),
            Violation::NegativeStart { segment, start_ms } => {
                write!(f, "segment {segment}: start_ms must be non-negative, got {start_ms}")
            }
            Violation::EmptyRange { segment, start_ms, end_ms } => write!(
                f,
                "segment {segment}: start_ms < end_ms required, got {start_ms} >= {end_ms}"
            ),
            Violation::ExceedsDuration { segment, end_ms, duration_ms } => write!(
                f,
                "segment {segment}: segment exceeds duration (end_ms {end_ms} > duration_ms {duration_ms})"
            ),
            Violation::OutOfOrder { segment, previous_start_ms, start_ms } => write!(
                f,
                "segment {segment}: segments out of order (start_ms {start_ms} < previous {previous_start_ms})"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvalidInterview {
    #[error("malformed document: {0}")]
    Structure(String),
    #[error("{}", join_violations(.0))]
    Violations(Vec<Violation>),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Deserialize)]
struct RawInterview {
    id: String,
    title: String,
    collection: String,
    #[serde(default)]
    speakers: Vec<String>,
    #[serde(default)]
    date: Option<String>,
    duration_ms: i64,
    #[serde(default)]
    summary: String,
    #[serde(default)]
    media_url: Option<String>,
    #[serde(default)]
    facets: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    segments: Vec<RawSegment>,
}

#[derive(Deserialize)]
struct RawSegment {
    start_ms: i64,
    end_ms: i64,
    #[serde(default)]
    speaker: Option<String>,
    #[serde(default)]
    text: String,
}

/// Checks a parsed interview document, returning every violation found.
pub fn validate_interview(raw: &serde_json::Value) -> Result<Interview, InvalidInterview> {
    let doc = RawInterview::deserialize(raw).map_err(|e| InvalidInterview::Structure(e.to_string()))?;
    let mut violations = Vec::new();

    if doc.id.trim().is_empty() {
        violations.push(Violation::EmptyId);
    }
    if doc.duration_ms < 0 {
        violations.push(Violation::NegativeDuration(doc.duration_ms));
    }
    let mut previous_start: Option<i64> = None;
    for (i, seg) in doc.segments.iter().enumerate() {
        if seg.start_ms < 0 {
            violations.push(Violation::NegativeStart { segment: i, start_ms: seg.start_ms });
        }
        if seg.start_ms >= seg.end_ms {
            violations.push(Violation::EmptyRange {
                segment: i,
                start_ms: seg.start_ms,
                end_ms: seg.end_ms,
            });
        }
        if seg.end_ms > doc.duration_ms {
            violations.push(Violation::ExceedsDuration {
                segment: i,
                end_ms: seg.end_ms,
                duration_ms: doc.duration_ms,
            });
        }
        if let Some(prev) = previous_start {
            if seg.start_ms < prev {
                violations.push(Violation::OutOfOrder {
                    segment: i,
                    previous_start_ms: prev,
                    start_ms: seg.start_ms,
                });
            }
        }
        previous_start = Some(seg.start_ms);
    }
    if !violations.is_empty() {
        return Err(InvalidInterview::Violations(violations));
    }

    let facets = doc
        .facets
        .into_iter()
        .map(|(name, values)| {
            let values: BTreeSet<String> = values.into_iter().filter(|v| !v.is_empty()).collect();
            (name, values)
        })
        .filter(|(_, values)| !values.is_empty())
        .collect();
    let segments = doc
        .segments
        .into_iter()
        .enumerate()
        .map(|(segment_id, s)| Segment {
            segment_id,
            start_ms: s.start_ms as u64,
            end_ms: s.end_ms as u64,
            speaker: s.speaker,
            text: s.text,
        })
        .collect();
    Ok(Interview {
        id: doc.id,
        title: doc.title,
        collection_id: doc.collection,
        speakers: doc.speakers,
        date: doc.date,
        duration_ms: doc.duration_ms as u64,
        summary: doc.summary,
        media_url: doc.media_url,
        facets,
        segments,
    })
}

/// A document that was skipped during loading.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejection {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct LoadReport {
    pub corpus: Corpus,
    pub rejected: Vec<Rejection>,
}

impl LoadReport {
    /// Fails on the first rejected document.
    pub fn into_strict(self) -> Result<Corpus, CorpusError> {
        match self.rejected.into_iter().next() {
            Some(r) => Err(CorpusError::Validation { path: r.path, reason: r.reason }),
            None => Ok(self.corpus),
        }
    }
}

/// Loads every `.json` interview document below `root`.
///
/// Documents that fail to parse or validate are skipped and listed in
/// [`LoadReport::rejected`]. I/O failures and duplicate ids abort the load.
pub fn load_corpus(root: &Path, schema_path: &Path) -> Result<LoadReport, CorpusError> {
    let schema = FacetSchema::load(schema_path)?;
    let schema_canonical = fs::canonicalize(schema_path).ok();

    let mut paths = Vec::new();
    for entry in walkdir::WalkDir::new(root).follow_links(true) {
        let entry = entry.map_err(|e| CorpusError::UnreadableFile {
            path: e.path().map(Path::to_path_buf).unwrap_or_else(|| root.to_path_buf()),
            source: e
                .into_io_error()
                .unwrap_or_else(|| std::io::Error::other("directory walk failed")),
        })?;
        let path = entry.path();
        if !entry.file_type().is_file() || path.extension().is_none_or(|ext| ext != "json") {
            continue;
        }
        if schema_canonical.is_some() && fs::canonicalize(path).ok() == schema_canonical {
            continue;
        }
        paths.push(path.to_path_buf());
    }
    paths.sort();

    let mut interviews = Vec::new();
    let mut rejected = Vec::new();
    let mut seen = BTreeSet::new();
    for path in paths {
        let raw = fs::read_to_string(&path).map_err(|source| CorpusError::UnreadableFile {
            path: path.clone(),
            source,
        })?;
        let value: serde_json::Value = match serde_json::from_str(&raw) {
            Ok(v) => v,
            Err(e) => {
                rejected.push(Rejection { path, reason: format!("invalid JSON: {e}") });
                continue;
            }
        };
        let interview = match validate_interview(&value) {
            Ok(i) => i,
            Err(e) => {
                rejected.push(Rejection { path, reason: e.to_string() });
                continue;
            }
        };
        if let Some(facet) = interview.facets.keys().find(|f| !schema.contains(f)) {
            rejected.push(Rejection {
                path,
                reason: format!("facet {facet:?} is not defined in the schema"),
            });
            continue;
        }
        if !seen.insert(interview.id.clone()) {
            return Err(CorpusError::DuplicateId(interview.id));
        }
        interviews.push(interview);
    }

    let corpus = Corpus::new(interviews, schema)?;
    Ok(LoadReport { corpus, rejected })
}

/// Writes `corpus` as one document per interview plus `facets.json`.
pub fn write_corpus(corpus: &Corpus, dir: &Path) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("facets.json"), corpus.facet_schema.to_json())?;
    let docs = dir.join("interviews");
    fs::create_dir_all(&docs)?;
    for (i, interview) in corpus.interviews.iter().enumerate() {
        let json = serde_json::to_string_pretty(interview).map_err(std::io::Error::other)?;
        fs::write(docs.join(format!("{i:06}.json")), json)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CorpusStats {
    pub interviews: usize,
    pub total_duration_ms: u64,
    pub segments: usize,
    /// facet name → value → number of interviews carrying the value.
    pub facet_cardinalities: BTreeMap<String, BTreeMap<String, usize>>,
    pub collections: BTreeMap<String, usize>,
}

pub fn corpus_stats(corpus: &Corpus) -> CorpusStats {
    let mut stats = CorpusStats {
        interviews: corpus.len(),
        ..CorpusStats::default()
    };
    for interview in corpus.interviews() {
        stats.total_duration_ms += interview.duration_ms;
        stats.segments += interview.segments.len();
        *stats
            .collections
            .entry(interview.collection_id.clone())
            .or_default() += 1;
        for (facet, values) in &interview.facets {
            let counts = stats.facet_cardinalities.entry(facet.clone()).or_default();
            for value in values {
                *counts.entry(value.clone()).or_default() += 1;
            }
        }
    }
    stats
}
