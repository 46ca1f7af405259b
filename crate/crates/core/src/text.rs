//! Tokenization shared by indexing and query parsing.
//!
//! Text is lowercased and split on every non-alphanumeric character, using the
//! Unicode definition of alphanumeric. The same [`TokenizerOptions`] must be used
//! on both sides; the index keeps a copy so query parsing can reuse it.

use std::collections::HashSet;
use std::sync::Arc;

/// Bundled English and Dutch stopwords.
pub const DEFAULT_STOPWORDS: &[&str] = &[
    // English
    "a", "about", "an", "and", "are", "as", "at", "be", "been", "but", "by", "can", "did", "do",
    "does", "for", "from", "had", "has", "have", "he", "her", "him", "his", "i", "if", "in",
    "into", "is", "it", "its", "me", "my", "no", "not", "of", "on", "or", "our", "she", "so",
    "than", "that", "the", "their", "them", "then", "there", "these", "they", "this", "those",
    "to", "too", "us", "very", "was", "we", "were", "what", "when", "where", "which", "who",
    "will", "with", "would", "you", "your",
    // Dutch
    "aan", "al", "als", "bij", "dan", "dat", "de", "den", "der", "des", "deze", "die", "dit",
    "door", "een", "en", "er", "hebben", "heb", "heeft", "hem", "het", "hij", "hoe", "hun", "ik",
    "je", "kan", "maar", "men", "met", "mij", "mijn", "na", "naar", "niet", "nog", "nu", "om",
    "ons", "ook", "op", "over", "te", "tot", "uit", "van", "veel", "voor", "want", "wat", "wel",
    "werd", "wie", "wij", "worden", "zal", "ze", "zich", "zij", "zijn", "zo", "zou",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizerOptions {
    pub stopwords: Arc<HashSet<String>>,
    pub remove_stopwords: bool,
}

impl TokenizerOptions {
    pub fn new<I, S>(stopwords: I, remove_stopwords: bool) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            stopwords: Arc::new(stopwords.into_iter().map(Into::into).collect()),
            remove_stopwords,
        }
    }

    /// Keeps every token; the stopword list is still carried for word clouds.
    pub fn keep_stopwords() -> Self {
        Self {
            remove_stopwords: false,
            ..Self::default()
        }
    }

    pub fn is_stopword(&self, token: &str) -> bool {
        self.stopwords.contains(token)
    }
}

impl Default for TokenizerOptions {
    fn default() -> Self {
        Self::new(DEFAULT_STOPWORDS.iter().copied(), true)
    }
}

/// A token with its character offsets in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    /// Ordinal among all alphanumeric runs, stopwords included.
    pub position: u32,
    pub char_start: usize,
    pub char_end: usize,
}

/// Every alphanumeric run in `text`, lowercased, with char offsets.
/// Stopwords are not removed.
pub fn raw_tokens(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    let mut start = 0;
    let mut char_idx = 0;
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            if current.is_empty() {
                start = char_idx;
            }
            current.extend(ch.to_lowercase());
        } else if !current.is_empty() {
            let position = tokens.len() as u32;
            tokens.push(Token {
                text: std::mem::take(&mut current),
                position,
                char_start: start,
                char_end: char_idx,
            });
        }
        char_idx += 1;
    }
    if !current.is_empty() {
        let position = tokens.len() as u32;
        tokens.push(Token {
            text: current,
            position,
            char_start: start,
            char_end: char_idx,
        });
    }
    tokens
}

/// Tokens that survive stopword removal, with offsets.
pub fn index_tokens(text: &str, options: &TokenizerOptions) -> Vec<Token> {
    let mut tokens = raw_tokens(text);
    if options.remove_stopwords {
        tokens.retain(|t| !options.is_stopword(&t.text));
    }
    tokens
}

pub fn tokenize(text: &str, options: &TokenizerOptions) -> Vec<String> {
    index_tokens(text, options)
        .into_iter()
        .map(|t| t.text)
        .collect()
}
