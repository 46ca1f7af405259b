//! Search and exploration engine for oral history interview collections.
//!
//! The crate is organised around an immutable [`Index`] built from a validated
//! [`Corpus`]. Searches, facet counts and word clouds are pure functions over an
//! index value; manual annotations produce a new index value with the next
//! epoch, so readers holding an older value are never affected.

pub mod corpus;
pub mod index;
pub mod search;
pub mod text;
pub mod timecode;
pub mod wordcloud;
pub mod workspace;

pub use corpus::{
    corpus_stats, load_corpus, validate_interview, Corpus, CorpusError, CorpusStats,
    FacetDefinition, FacetSchema, Interview, LoadReport, Segment,
};
pub use index::{build_index, term_idf, DocId, Index, IndexError, Location, Posting};
pub use search::{
    compute_facet_counts, execute_search, make_snippet, parse_query, score_interview,
    FacetCounts, FragmentHit, InterviewHit, Query, SearchError, SearchOptions, SearchResult,
};
pub use text::{tokenize, TokenizerOptions};
pub use wordcloud::{build_word_cloud, WeightedTerm, WordCloud};
pub use workspace::{
    ExportManifest, Fragment, ManualAnnotation, Store, Workspace, WorkspaceError, WorkspaceItem,
};
