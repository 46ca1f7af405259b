//! Term clouds over the current result scope.
//!
//! A term's mass is its total frequency inside the scope times its
//! collection-wide idf. Query terms and stopwords are excluded.

use serde::Serialize;

use crate::index::Index;
use crate::search::{scope_mask, Query};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightedTerm {
    pub term: String,
    /// `raw / max raw`, in (0, 1].
    pub weight: f64,
    pub raw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WordCloud {
    pub terms: Vec<WeightedTerm>,
    pub scope_total: usize,
    pub epoch: u64,
}

/// Top `k` terms of the scope of `query`; `k == 0` yields an empty cloud.
pub fn build_word_cloud(index: &Index, query: &Query, k: usize) -> WordCloud {
    let scope = scope_mask(index, query);
    let scope_total = scope.count();
    let mut scored: Vec<(&str, f64)> = Vec::new();
    if scope_total > 0 && k > 0 {
        for (term, entry) in index.terms() {
            if index.options().is_stopword(term) || query.terms.iter().any(|q| q == term) {
                continue;
            }
            let tf: u64 = entry
                .postings
                .iter()
                .filter(|p| scope.contains(p.doc))
                .map(|p| p.term_frequency() as u64)
                .sum();
            if tf > 0 {
                scored.push((term, tf as f64 * index.idf(term)));
            }
        }
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    scored.truncate(k);
    let max = scored.first().map_or(1.0, |s| s.1);
    WordCloud {
        terms: scored
            .into_iter()
            .map(|(term, raw)| WeightedTerm {
                term: term.to_string(),
                weight: raw / max,
                raw,
            })
            .collect(),
        scope_total,
        epoch: index.epoch(),
    }
}
