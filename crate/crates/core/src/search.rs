//! Query parsing, ranked retrieval, facet counts and snippets.
//!
//! Scope rules: query terms are combined disjunctively; filters are OR within a
//! facet and AND across facets. Facet counts use multi-select semantics, so a
//! facet's own filter is left out when counting that facet's values.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::corpus::FacetSchema;
use crate::index::{DocId, Index, Location, BM25_B, BM25_K1};
use crate::text::{raw_tokens, tokenize, TokenizerOptions};

pub const MAX_PAGE_SIZE: usize = 100;
pub const SUMMARY_EXCERPT_CHARS: usize = 200;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SearchError {
    #[error("bad filter {0:?}: expected facet:value with a known facet")]
    BadFilter(String),
    #[error("unknown facet {0:?}")]
    UnknownFacet(String),
    #[error("page must be >= 1 and page size within 1..={max}, got page {page} size {size}", max = MAX_PAGE_SIZE)]
    InvalidPage { page: usize, size: usize },
    #[error("page {page} is past the last result (total {total})")]
    PageOutOfRange { page: usize, total: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Query {
    /// Distinct tokens in first-occurrence order. Empty means match-all.
    pub terms: Vec<String>,
    pub filters: BTreeMap<String, BTreeSet<String>>,
}

impl Query {
    pub fn match_all() -> Self {
        Self::default()
    }

    pub fn is_match_all(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Tokenizes `text` and splits each filter pair on its first `:`.
pub fn parse_query<S: AsRef<str>>(
    text: &str,
    filter_pairs: &[S],
    options: &TokenizerOptions,
    schema: &FacetSchema,
) -> Result<Query, SearchError> {
    let mut terms: Vec<String> = Vec::new();
    for token in tokenize(text, options) {
        if !terms.contains(&token) {
            terms.push(token);
        }
    }
    let mut filters: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for pair in filter_pairs {
        let pair = pair.as_ref();
        let (facet, value) = pair
            .split_once(':')
            .ok_or_else(|| SearchError::BadFilter(pair.to_string()))?;
        if !schema.contains(facet) || value.is_empty() {
            return Err(SearchError::BadFilter(pair.to_string()));
        }
        filters.entry(facet.to_string()).or_default().insert(value.to_string());
    }
    Ok(Query { terms, filters })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    pub fragment_cap: usize,
    /// Tokens of context on each side of the first match in a snippet.
    pub snippet_window: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            fragment_cap: 20,
            snippet_window: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Snippet {
    pub text: String,
    /// Match spans in snippet char coordinates.
    pub spans: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FragmentHit {
    pub segment_id: usize,
    pub start_ms: u64,
    pub end_ms: u64,
    /// Char spans into the segment text.
    pub match_spans: Vec<(usize, usize)>,
    pub snippet: String,
    pub snippet_spans: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InterviewHit {
    pub interview_id: String,
    pub score: f64,
    pub title: String,
    pub collection_id: String,
    pub summary_excerpt: String,
    pub summary_truncated: bool,
    pub media_url: Option<String>,
    pub fragment_hits: Vec<FragmentHit>,
    pub has_more_fragments: bool,
    pub metadata_match: bool,
    pub annotation_match: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValueCount {
    pub value: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FacetCount {
    pub name: String,
    pub label: String,
    /// Sorted by count desc, then value asc. Zero counts are omitted.
    pub values: Vec<ValueCount>,
    pub missing_count: usize,
    /// Size of the scope the counts were taken over.
    pub scope_total: usize,
}

impl FacetCount {
    pub fn count(&self, value: &str) -> usize {
        self.values.iter().find(|v| v.value == value).map_or(0, |v| v.count)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct FacetCounts(pub Vec<FacetCount>);

impl FacetCounts {
    pub fn facet(&self, name: &str) -> Option<&FacetCount> {
        self.0.iter().find(|f| f.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub total: usize,
    pub page: usize,
    pub page_size: usize,
    pub hits: Vec<InterviewHit>,
    pub facet_counts: FacetCounts,
    pub epoch: u64,
}

/// Membership mask over interview ordinals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct DocMask(Vec<bool>);

impl DocMask {
    fn full(n: usize) -> Self {
        DocMask(vec![true; n])
    }

    fn empty(n: usize) -> Self {
        DocMask(vec![false; n])
    }

    fn and(&mut self, other: &DocMask) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a &= *b;
        }
    }

    pub(crate) fn contains(&self, doc: DocId) -> bool {
        self.0[doc.index()]
    }

    pub(crate) fn docs(&self) -> impl Iterator<Item = DocId> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| DocId(i as u32))
    }

    pub(crate) fn count(&self) -> usize {
        self.0.iter().filter(|&&m| m).count()
    }
}

fn check_facets(index: &Index, query: &Query) -> Result<(), SearchError> {
    let schema = index.corpus().facet_schema();
    match query.filters.keys().find(|f| !schema.contains(f)) {
        Some(f) => Err(SearchError::UnknownFacet(f.clone())),
        None => Ok(()),
    }
}

fn term_mask(index: &Index, terms: &[String]) -> DocMask {
    let n = index.num_docs();
    if terms.is_empty() {
        return DocMask::full(n);
    }
    let mut mask = DocMask::empty(n);
    for term in terms {
        for posting in index.postings(term) {
            mask.0[posting.doc.index()] = true;
        }
    }
    mask
}

fn filter_mask(index: &Index, filters: &BTreeMap<String, BTreeSet<String>>, skip: Option<&str>) -> DocMask {
    let n = index.num_docs();
    let mut mask = DocMask::full(n);
    for (facet, values) in filters {
        if Some(facet.as_str()) == skip {
            continue;
        }
        let mut any = DocMask::empty(n);
        for value in values {
            if let Some(docs) = index.facet_docs(facet, value) {
                for doc in docs {
                    any.0[doc.index()] = true;
                }
            }
        }
        mask.and(&any);
    }
    mask
}

/// Interviews matching the query terms and every filter.
pub(crate) fn scope_mask(index: &Index, query: &Query) -> DocMask {
    let mut mask = term_mask(index, &query.terms);
    mask.and(&filter_mask(index, &query.filters, None));
    mask
}

fn length_norm(index: &Index, doc: DocId) -> f64 {
    let avgdl = index.avg_doc_length();
    if avgdl == 0.0 {
        return 1.0;
    }
    1.0 - BM25_B + BM25_B * index.doc_length(doc) as f64 / avgdl
}

fn bm25_term(idf: f64, tf: f64, norm: f64) -> f64 {
    idf * tf * (BM25_K1 + 1.0) / (tf + BM25_K1 * norm)
}

/// BM25 score of one interview, summing tf over all of its postings.
pub fn score_interview(index: &Index, interview_id: &str, terms: &[String]) -> f64 {
    let Some(doc) = index.doc_id(interview_id) else {
        return 0.0;
    };
    let norm = length_norm(index, doc);
    terms
        .iter()
        .map(|term| {
            let tf = index.tf(term, doc);
            if tf == 0 {
                0.0
            } else {
                bm25_term(index.idf(term), tf as f64, norm)
            }
        })
        .sum()
}

/// Scores for every interview, one pass over each term's postings.
fn score_all(index: &Index, terms: &[String]) -> Vec<f64> {
    let n = index.num_docs();
    let mut scores = vec![0.0; n];
    let mut tf = vec![0u32; n];
    for term in terms {
        let postings = index.postings(term);
        if postings.is_empty() {
            continue;
        }
        for p in postings {
            tf[p.doc.index()] += p.term_frequency();
        }
        let idf = index.idf(term);
        for p in postings {
            let d = p.doc.index();
            if tf[d] > 0 {
                scores[d] += bm25_term(idf, tf[d] as f64, length_norm(index, p.doc));
                tf[d] = 0;
            }
        }
    }
    scores
}

/// Ranked ids and scores of the full scope: score desc, id asc.
pub fn rank(index: &Index, query: &Query) -> Result<Vec<(DocId, f64)>, SearchError> {
    check_facets(index, query)?;
    let mask = scope_mask(index, query);
    let mut ranked: Vec<(DocId, f64)> = if query.is_match_all() {
        mask.docs().map(|d| (d, 0.0)).collect()
    } else {
        let scores = score_all(index, &query.terms);
        mask.docs().map(|d| (d, scores[d.index()])).collect()
    };
    // ordinals follow id order, so comparing DocId breaks ties by interview id
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(ranked)
}

pub fn execute_search(index: &Index, query: &Query, page: usize, page_size: usize) -> Result<SearchResult, SearchError> {
    execute_search_with(index, query, page, page_size, &SearchOptions::default())
}

pub fn execute_search_with(
    index: &Index,
    query: &Query,
    page: usize,
    page_size: usize,
    options: &SearchOptions,
) -> Result<SearchResult, SearchError> {
    if page == 0 || page_size == 0 || page_size > MAX_PAGE_SIZE {
        return Err(SearchError::InvalidPage { page, size: page_size });
    }
    let ranked = rank(index, query)?;
    let total = ranked.len();
    let offset = (page - 1).saturating_mul(page_size);
    if page > 1 && offset >= total {
        return Err(SearchError::PageOutOfRange { page, total });
    }
    let hits = ranked
        .iter()
        .skip(offset)
        .take(page_size)
        .map(|&(doc, score)| build_hit(index, query, doc, score, options))
        .collect();
    Ok(SearchResult {
        total,
        page,
        page_size,
        hits,
        facet_counts: compute_facet_counts(index, query),
        epoch: index.epoch(),
    })
}

fn build_hit(index: &Index, query: &Query, doc: DocId, score: f64, options: &SearchOptions) -> InterviewHit {
    let interview = index.interview(doc);
    let mut segments = BTreeSet::new();
    let mut metadata_match = false;
    let mut annotation_match = false;
    for term in &query.terms {
        for p in index.postings(term).iter().filter(|p| p.doc == doc) {
            match p.location {
                Location::Segment(s) => {
                    segments.insert(s as usize);
                }
                Location::Metadata => metadata_match = true,
                Location::Annotation => annotation_match = true,
            }
        }
    }
    // segment ids follow start_ms order
    let has_more_fragments = segments.len() > options.fragment_cap;
    let fragment_hits = segments
        .into_iter()
        .take(options.fragment_cap)
        .map(|s| {
            let segment = &interview.segments[s];
            let match_spans = match_spans(&segment.text, &query.terms);
            let snippet = make_snippet(&segment.text, &match_spans, options.snippet_window);
            FragmentHit {
                segment_id: s,
                start_ms: segment.start_ms,
                end_ms: segment.end_ms,
                match_spans,
                snippet: snippet.text,
                snippet_spans: snippet.spans,
            }
        })
        .collect();
    let summary_chars = interview.summary.chars().count();
    InterviewHit {
        interview_id: interview.id.clone(),
        score,
        title: interview.title.clone(),
        collection_id: interview.collection_id.clone(),
        summary_excerpt: interview.summary.chars().take(SUMMARY_EXCERPT_CHARS).collect(),
        summary_truncated: summary_chars > SUMMARY_EXCERPT_CHARS,
        media_url: interview.media_url.clone(),
        fragment_hits,
        has_more_fragments,
        metadata_match,
        annotation_match,
    }
}

/// Char spans of tokens in `text` equal to one of `terms`.
pub fn match_spans(text: &str, terms: &[String]) -> Vec<(usize, usize)> {
    raw_tokens(text)
        .into_iter()
        .filter(|t| terms.contains(&t.text))
        .map(|t| (t.char_start, t.char_end))
        .collect()
}

pub fn compute_facet_counts(index: &Index, query: &Query) -> FacetCounts {
    let terms = term_mask(index, &query.terms);
    let facets = index
        .corpus()
        .facet_schema()
        .facets()
        .iter()
        .map(|def| {
            let mut scope = terms.clone();
            scope.and(&filter_mask(index, &query.filters, Some(&def.name)));
            let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
            let mut missing_count = 0;
            let mut scope_total = 0;
            for doc in scope.docs() {
                scope_total += 1;
                match index.doc_facets(doc).get(&def.name) {
                    Some(values) if !values.is_empty() => {
                        for v in values {
                            *counts.entry(v.as_str()).or_default() += 1;
                        }
                    }
                    _ => missing_count += 1,
                }
            }
            let mut values: Vec<ValueCount> = counts
                .into_iter()
                .map(|(value, count)| ValueCount { value: value.to_string(), count })
                .collect();
            values.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.value.cmp(&b.value)));
            FacetCount {
                name: def.name.clone(),
                label: def.label.clone(),
                values,
                missing_count,
                scope_total,
            }
        })
        .collect();
    FacetCounts(facets)
}

/// Excerpt of `window` tokens around the first match span.
///
/// An ellipsis marks each side where tokens were dropped. Spans that fall
/// inside the excerpt are returned in excerpt coordinates. With no spans the
/// first `2 * window` tokens are returned.
pub fn make_snippet(text: &str, match_spans: &[(usize, usize)], window: usize) -> Snippet {
    const ELLIPSIS: &str = "\u{2026}";
    let chars: Vec<char> = text.chars().collect();
    let tokens = raw_tokens(text);
    if tokens.is_empty() {
        return Snippet { text: text.to_string(), spans: Vec::new() };
    }

    let (first, last) = match match_spans.first() {
        Some(&(start, end)) => {
            let first = tokens
                .iter()
                .position(|t| t.char_end > start)
                .unwrap_or(tokens.len() - 1);
            let last = tokens
                .iter()
                .rposition(|t| t.char_start < end)
                .unwrap_or(first)
                .max(first);
            (first.saturating_sub(window), (last + window).min(tokens.len() - 1))
        }
        None => {
            if window == 0 {
                return Snippet { text: String::new(), spans: Vec::new() };
            }
            (0, (2 * window - 1).min(tokens.len() - 1))
        }
    };

    let cut_front = first > 0;
    let cut_back = last + 1 < tokens.len();
    let char_start = if cut_front { tokens[first].char_start } else { 0 };
    let char_end = if cut_back { tokens[last].char_end } else { chars.len() };

    let mut out = String::new();
    if cut_front {
        out.push_str(ELLIPSIS);
    }
    let prefix = if cut_front { 1 } else { 0 };
    out.extend(&chars[char_start..char_end]);
    if cut_back {
        out.push_str(ELLIPSIS);
    }
    let spans = match_spans
        .iter()
        .filter(|&&(s, e)| s >= char_start && e <= char_end)
        .map(|&(s, e)| (s - char_start + prefix, e - char_start + prefix))
        .collect();
    Snippet { text: out, spans }
}
