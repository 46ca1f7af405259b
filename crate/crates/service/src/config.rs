use std::path::PathBuf;

pub const DEFAULT_PORT: u16 = 8080;
pub const DEFAULT_PAGE_SIZE: usize = 10;
pub const DEFAULT_WORDCLOUD_K: usize = 50;

#[derive(Debug, Clone)]
pub struct Config {
    pub corpus_dir: PathBuf,
    pub schema_path: PathBuf,
    pub data_dir: PathBuf,
    pub port: u16,
    pub default_page_size: usize,
    pub wordcloud_k: usize,
    /// Static client bundle served under `/`.
    pub ui_dir: Option<PathBuf>,
}

impl Config {
    /// Defaults with the schema at `<corpus_dir>/facets.json`.
    pub fn new(corpus_dir: impl Into<PathBuf>, data_dir: impl Into<PathBuf>) -> Self {
        let corpus_dir = corpus_dir.into();
        Self {
            schema_path: corpus_dir.join("facets.json"),
            corpus_dir,
            data_dir: data_dir.into(),
            port: DEFAULT_PORT,
            default_page_size: DEFAULT_PAGE_SIZE,
            wordcloud_k: DEFAULT_WORDCLOUD_K,
            ui_dir: None,
        }
    }
}
