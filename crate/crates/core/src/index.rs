//! Segment-granular inverted index with facet index and collection statistics.
//!
//! An [`Index`] is an immutable value. [`Index::apply_annotation`] returns a new
//! value with the next epoch; posting lists are shared between epochs behind
//! `Arc`s and copied only for the terms an annotation touches.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use thiserror::Error;

use crate::corpus::{Corpus, FacetValues, Interview, COLLECTION_FACET, TAGS_FACET};
use crate::text::{index_tokens, TokenizerOptions};
use crate::workspace::ManualAnnotation;

/// BM25 term-frequency saturation.
pub const BM25_K1: f64 = 1.2;
/// BM25 length normalisation.
pub const BM25_B: f64 = 0.75;

/// Dense interview ordinal. Ordinals follow interview id order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DocId(pub u32);

impl DocId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Where in an interview a posting's tokens occurred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Location {
    Segment(u32),
    /// Title and summary.
    Metadata,
    /// A manual annotation without an enclosing segment.
    Annotation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Posting {
    pub doc: DocId,
    pub location: Location,
    /// Strictly increasing token offsets.
    pub positions: Vec<u32>,
}

impl Posting {
    pub fn term_frequency(&self) -> u32 {
        self.positions.len() as u32
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TermEntry {
    /// Distinct interviews among `postings`.
    pub df: u32,
    pub postings: Vec<Posting>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IndexError {
    #[error("unknown interview {0:?}")]
    UnknownInterview(String),
}

#[derive(Debug, Clone)]
pub struct Index {
    corpus: Arc<Corpus>,
    options: TokenizerOptions,
    terms: HashMap<String, Arc<TermEntry>>,
    doc_lengths: Arc<Vec<u32>>,
    total_length: u64,
    doc_facets: Vec<Arc<FacetValues>>,
    facet_index: BTreeMap<String, BTreeMap<String, Arc<BTreeSet<DocId>>>>,
    epoch: u64,
}

pub fn build_index(corpus: Arc<Corpus>, options: TokenizerOptions) -> Index {
    Index::build(corpus, options)
}

pub fn term_idf(index: &Index, term: &str) -> f64 {
    index.idf(term)
}

/// Groups tokens of one field by term, offsetting positions by `base`.
fn collect_field(
    text: &str,
    base: u32,
    options: &TokenizerOptions,
    out: &mut BTreeMap<String, Vec<u32>>,
) -> (u32, u32) {
    let tokens = index_tokens(text, options);
    let kept = tokens.len() as u32;
    let mut span = 0;
    for t in tokens {
        span = span.max(t.position + 1);
        out.entry(t.text).or_default().push(base + t.position);
    }
    (kept, span)
}

impl Index {
    pub fn build(corpus: Arc<Corpus>, options: TokenizerOptions) -> Index {
        let mut terms: HashMap<String, TermEntry> = HashMap::new();
        let mut doc_lengths = Vec::with_capacity(corpus.len());
        let mut doc_facets = Vec::with_capacity(corpus.len());
        let mut facet_index: BTreeMap<String, BTreeMap<String, BTreeSet<DocId>>> = BTreeMap::new();

        for (ordinal, interview) in corpus.interviews().iter().enumerate() {
            let doc = DocId(ordinal as u32);
            let mut length = 0u32;
            let mut add_field = |location: Location, fields: BTreeMap<String, Vec<u32>>| {
                for (term, positions) in fields {
                    let entry = terms.entry(term).or_default();
                    if entry.postings.last().is_none_or(|p| p.doc != doc) {
                        entry.df += 1;
                    }
                    entry.postings.push(Posting { doc, location, positions });
                }
            };

            let mut meta = BTreeMap::new();
            let (kept, span) = collect_field(&interview.title, 0, &options, &mut meta);
            length += kept;
            let (kept, _) = collect_field(&interview.summary, span, &options, &mut meta);
            length += kept;
            add_field(Location::Metadata, meta);

            for segment in &interview.segments {
                let mut fields = BTreeMap::new();
                let (kept, _) = collect_field(&segment.text, 0, &options, &mut fields);
                length += kept;
                add_field(Location::Segment(segment.segment_id as u32), fields);
            }
            doc_lengths.push(length);

            let mut facets = interview.facets.clone();
            if !interview.collection_id.is_empty() {
                facets
                    .entry(COLLECTION_FACET.to_string())
                    .or_default()
                    .insert(interview.collection_id.clone());
            }
            for (facet, values) in &facets {
                let by_value = facet_index.entry(facet.clone()).or_default();
                for value in values {
                    by_value.entry(value.clone()).or_default().insert(doc);
                }
            }
            doc_facets.push(Arc::new(facets));
        }

        let total_length = doc_lengths.iter().map(|&l| l as u64).sum();
        Index {
            corpus,
            options,
            terms: terms.into_iter().map(|(t, e)| (t, Arc::new(e))).collect(),
            doc_lengths: Arc::new(doc_lengths),
            total_length,
            doc_facets,
            facet_index: facet_index
                .into_iter()
                .map(|(f, values)| (f, values.into_iter().map(|(v, d)| (v, Arc::new(d))).collect()))
                .collect(),
            epoch: 0,
        }
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn corpus_arc(&self) -> &Arc<Corpus> {
        &self.corpus
    }

    pub fn options(&self) -> &TokenizerOptions {
        &self.options
    }

    /// Number of interviews, N.
    pub fn num_docs(&self) -> usize {
        self.doc_lengths.len()
    }

    pub fn doc_id(&self, interview_id: &str) -> Option<DocId> {
        self.corpus.position(interview_id).map(|p| DocId(p as u32))
    }

    pub fn interview(&self, doc: DocId) -> &Interview {
        &self.corpus.interviews()[doc.index()]
    }

    pub fn doc_length(&self, doc: DocId) -> u32 {
        self.doc_lengths[doc.index()]
    }

    pub fn avg_doc_length(&self) -> f64 {
        if self.num_docs() == 0 {
            0.0
        } else {
            self.total_length as f64 / self.num_docs() as f64
        }
    }

    pub fn term(&self, term: &str) -> Option<&TermEntry> {
        self.terms.get(term).map(Arc::as_ref)
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.term(term).map_or(&[], |e| e.postings.as_slice())
    }

    pub fn df(&self, term: &str) -> u32 {
        self.term(term).map_or(0, |e| e.df)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&str, &TermEntry)> {
        self.terms.iter().map(|(t, e)| (t.as_str(), e.as_ref()))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// `ln(1 + (N - df + 0.5) / (df + 0.5))`.
    pub fn idf(&self, term: &str) -> f64 {
        let n = self.num_docs() as f64;
        let df = self.df(term) as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// Term frequency of `term` summed over all postings of `doc`.
    pub fn tf(&self, term: &str, doc: DocId) -> u32 {
        self.postings(term)
            .iter()
            .filter(|p| p.doc == doc)
            .map(Posting::term_frequency)
            .sum()
    }

    /// Facet values of `doc`, including its collection and annotation tags.
    pub fn doc_facets(&self, doc: DocId) -> &FacetValues {
        &self.doc_facets[doc.index()]
    }

    pub fn facet_docs(&self, facet: &str, value: &str) -> Option<&BTreeSet<DocId>> {
        self.facet_index.get(facet)?.get(value).map(Arc::as_ref)
    }

    pub fn facet_values(&self, facet: &str) -> impl Iterator<Item = (&str, &BTreeSet<DocId>)> {
        self.facet_index
            .get(facet)
            .into_iter()
            .flat_map(|m| m.iter().map(|(v, d)| (v.as_str(), d.as_ref())))
    }

    /// Returns the next epoch with `annotation` indexed.
    ///
    /// Text tokens are posted under the segment that fully encloses the
    /// annotation's time range, or under [`Location::Annotation`]. Tags go to
    /// the `tags` facet. Existing postings are never modified.
    pub fn apply_annotation(&self, annotation: &ManualAnnotation) -> Result<Index, IndexError> {
        let doc = self
            .doc_id(&annotation.interview_id)
            .ok_or_else(|| IndexError::UnknownInterview(annotation.interview_id.clone()))?;
        let mut next = self.clone();
        next.epoch += 1;

        let location = annotation
            .range()
            .and_then(|(start, end)| {
                self.interview(doc)
                    .segments
                    .iter()
                    .find(|s| s.start_ms <= start && end <= s.end_ms)
            })
            .map_or(Location::Annotation, |s| Location::Segment(s.segment_id as u32));

        let mut fields = BTreeMap::new();
        let (kept, _) = collect_field(&annotation.text, 0, &self.options, &mut fields);
        for (term, positions) in fields {
            let entry = Arc::make_mut(next.terms.entry(term).or_default());
            if !entry.postings.iter().any(|p| p.doc == doc) {
                entry.df += 1;
            }
            entry.postings.push(Posting { doc, location, positions });
        }
        if kept > 0 {
            Arc::make_mut(&mut next.doc_lengths)[doc.index()] += kept;
            next.total_length += kept as u64;
        }

        for tag in annotation.tags.iter().map(|t| t.trim()).filter(|t| !t.is_empty()) {
            Arc::make_mut(&mut next.doc_facets[doc.index()])
                .entry(TAGS_FACET.to_string())
                .or_default()
                .insert(tag.to_string());
            let docs = next
                .facet_index
                .entry(TAGS_FACET.to_string())
                .or_default()
                .entry(tag.to_string())
                .or_default();
            Arc::make_mut(docs).insert(doc);
        }
        Ok(next)
    }

    /// Equality of everything except the epoch.
    pub fn content_eq(&self, other: &Index) -> bool {
        self.terms == other.terms
            && self.doc_lengths == other.doc_lengths
            && self.total_length == other.total_length
            && self.doc_facets == other.doc_facets
            && self.facet_index == other.facet_index
            && self.options == other.options
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{validate_interview, FacetSchema};
    use serde_json::json;

    fn interview(id: &str, segments: &[&str], genre: &str) -> Interview {
        let segs: Vec<_> = segments
            .iter()
            .enumerate()
            .map(|(i, t)| json!({"start_ms": i * 1000, "end_ms": (i + 1) * 1000, "text": t}))
            .collect();
        validate_interview(&json!({
            "id": id, "title": "", "collection": "c", "duration_ms": 100000,
            "facets": {"genre": [genre]}, "segments": segs
        }))
        .unwrap()
    }

    fn corpus(interviews: Vec<Interview>) -> Arc<Corpus> {
        Arc::new(Corpus::new(interviews, FacetSchema::new([("genre", "Genre")]).unwrap()).unwrap())
    }

    #[test]
    fn empty_corpus() {
        let index = build_index(corpus(vec![]), TokenizerOptions::default());
        assert_eq!(index.num_docs(), 0);
        assert_eq!(index.num_terms(), 0);
        assert_eq!(index.avg_doc_length(), 0.0);
        assert_eq!(index.epoch(), 0);
        assert!((term_idf(&index, "war") - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn single_segment_postings() {
        let index = build_index(corpus(vec![interview("I1", &["war war peace"], "war")]), TokenizerOptions::default());
        let war = index.postings("war");
        assert_eq!(war.len(), 1);
        assert_eq!(war[0].doc, DocId(0));
        assert_eq!(war[0].location, Location::Segment(0));
        assert_eq!(war[0].term_frequency(), 2);
        assert_eq!(war[0].positions, vec![0, 1]);
        let peace = index.postings("peace");
        assert_eq!(peace[0].term_frequency(), 1);
        assert_eq!(index.df("war"), 1);
        assert_eq!(index.df("peace"), 1);
        assert_eq!(index.doc_length(DocId(0)), 3);
    }

    #[test]
    fn df_counts_interviews_not_segments() {
        let index = build_index(
            corpus(vec![
                interview("I1", &["camp", "camp again"], "war"),
                interview("I2", &["harbour"], "war"),
                interview("I3", &["camp"], "migration"),
            ]),
            TokenizerOptions::default(),
        );
        assert_eq!(index.df("camp"), 2);
        assert_eq!(index.tf("camp", DocId(0)), 2);
        assert_eq!(index.facet_docs("genre", "war").unwrap().len(), 2);
        assert_eq!(index.facet_docs("collection", "c").unwrap().len(), 3);
    }

    #[test]
    fn idf_values() {
        let one = build_index(corpus(vec![interview("I1", &["war"], "war")]), TokenizerOptions::default());
        assert!((one.idf("war") - (4.0f64 / 3.0).ln()).abs() < 1e-12);
        assert!((one.idf("war") - 0.28768).abs() < 1e-5);
        let three = build_index(
            corpus(vec![
                interview("I1", &["war"], "war"),
                interview("I2", &["peace"], "war"),
                interview("I3", &["peace"], "war"),
            ]),
            TokenizerOptions::default(),
        );
        assert!((three.idf("war") - (8.0f64 / 3.0).ln()).abs() < 1e-12);
        assert!((three.idf("war") - 0.98083).abs() < 1e-5);
    }

    #[test]
    fn metadata_indexed_with_sentinel() {
        let mut i = interview("I1", &["segment words"], "war");
        i.title = "Rotterdam bombing".into();
        i.summary = "A summary of the harbour".into();
        let index = build_index(corpus(vec![i]), TokenizerOptions::default());
        assert_eq!(index.postings("rotterdam")[0].location, Location::Metadata);
        assert_eq!(index.postings("harbour")[0].location, Location::Metadata);
        // summary positions continue after the title
        assert!(index.postings("harbour")[0].positions[0] >= 2);
        assert_eq!(index.doc_length(DocId(0)), 2 + 2 + 2);
    }

    fn annotation(id: &str, text: &str, tags: &[&str], range: Option<(u64, u64)>) -> ManualAnnotation {
        ManualAnnotation {
            annotation_id: "a".into(),
            interview_id: id.into(),
            start_ms: range.map(|r| r.0),
            end_ms: range.map(|r| r.1),
            text: text.into(),
            tags: tags.iter().map(|s| s.to_string()).collect(),
            created_at: chrono::DateTime::UNIX_EPOCH,
        }
    }

    #[test]
    fn empty_annotation_only_bumps_epoch() {
        let index = build_index(corpus(vec![interview("I1", &["war"], "war")]), TokenizerOptions::default());
        let next = index.apply_annotation(&annotation("I1", "", &[], None)).unwrap();
        assert_eq!(next.epoch(), 1);
        assert!(next.content_eq(&index));
    }

    #[test]
    fn annotation_enriches_without_touching_old_epoch() {
        let index = build_index(
            corpus(vec![interview("I1", &["war"], "war"), interview("I2", &["peace"], "war")]),
            TokenizerOptions::default(),
        );
        let next = index
            .apply_annotation(&annotation("I2", "zeppelin war", &["disputed"], None))
            .unwrap();
        assert_eq!(next.df("zeppelin"), 1);
        assert_eq!(next.df("war"), 2);
        assert_eq!(next.postings("zeppelin")[0].location, Location::Annotation);
        assert_eq!(next.doc_length(DocId(1)), 3);
        assert!(next.facet_docs("tags", "disputed").unwrap().contains(&DocId(1)));
        assert_eq!(next.doc_facets(DocId(1))["tags"].len(), 1);

        assert_eq!(index.df("zeppelin"), 0);
        assert_eq!(index.df("war"), 1);
        assert!(index.facet_docs("tags", "disputed").is_none());
        assert_eq!(index.doc_length(DocId(1)), 1);
    }

    #[test]
    fn annotation_range_maps_to_enclosing_segment() {
        let index = build_index(corpus(vec![interview("I1", &["a", "b", "c"], "war")]), TokenizerOptions::default());
        let next = index
            .apply_annotation(&annotation("I1", "bunker", &[], Some((1200, 1800))))
            .unwrap();
        assert_eq!(next.postings("bunker")[0].location, Location::Segment(1));
        let spanning = index
            .apply_annotation(&annotation("I1", "bunker", &[], Some((500, 1800))))
            .unwrap();
        assert_eq!(spanning.postings("bunker")[0].location, Location::Annotation);
    }

    #[test]
    fn repeated_annotation_keeps_df() {
        let index = build_index(corpus(vec![interview("I1", &["war"], "war")]), TokenizerOptions::default());
        let a = index.apply_annotation(&annotation("I1", "war", &[], None)).unwrap();
        let b = a.apply_annotation(&annotation("I1", "war", &[], None)).unwrap();
        assert_eq!(b.df("war"), 1);
        assert_eq!(b.postings("war").len(), 3);
        assert_eq!(b.tf("war", DocId(0)), 3);
        assert_eq!(b.epoch(), 2);
    }

    #[test]
    fn unknown_interview() {
        let index = build_index(corpus(vec![]), TokenizerOptions::default());
        assert_eq!(
            index.apply_annotation(&annotation("X", "a", &[], None)).unwrap_err(),
            IndexError::UnknownInterview("X".into())
        );
    }
}
