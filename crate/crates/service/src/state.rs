use std::sync::{Arc, Mutex, MutexGuard, RwLock};

use oht_core::corpus::{load_corpus, Corpus, CorpusError};
use oht_core::index::{build_index, Index, IndexError};
use oht_core::text::TokenizerOptions;
use oht_core::workspace::{AnnotationRequest, ManualAnnotation, Store, WorkspaceError};
use thiserror::Error;

use crate::config::Config;

#[derive(Debug, Error)]
pub enum StartupError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Store(#[from] WorkspaceError),
    #[error("annotation {position} ({annotation_id}) in the log cannot be replayed: {source}")]
    Replay {
        position: usize,
        annotation_id: String,
        #[source]
        source: IndexError,
    },
}

struct Inner {
    config: Config,
    corpus: Arc<Corpus>,
    index: RwLock<Arc<Index>>,
    store: Mutex<Store>,
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

/// Loads the corpus, builds the index and replays the annotation log.
pub fn startup(config: Config) -> Result<AppState, StartupError> {
    let report = load_corpus(&config.corpus_dir, &config.schema_path)?;
    for rejected in &report.rejected {
        tracing::warn!(path = %rejected.path.display(), reason = %rejected.reason, "skipping interview document");
    }
    let corpus = Arc::new(report.corpus);
    let store = Store::open(&config.data_dir)?;
    let mut index = build_index(corpus.clone(), TokenizerOptions::default());
    for (i, annotation) in store.annotations().iter().enumerate() {
        index = index
            .apply_annotation(annotation)
            .map_err(|source| StartupError::Replay {
                position: i + 1,
                annotation_id: annotation.annotation_id.clone(),
                source,
            })?;
    }
    tracing::info!(
        interviews = corpus.len(),
        terms = index.num_terms(),
        epoch = index.epoch(),
        "index ready"
    );
    Ok(AppState {
        inner: Arc::new(Inner {
            config,
            corpus,
            index: RwLock::new(Arc::new(index)),
            store: Mutex::new(store),
        }),
    })
}

impl AppState {
    pub fn config(&self) -> &Config {
        &self.inner.config
    }

    pub fn corpus(&self) -> &Arc<Corpus> {
        &self.inner.corpus
    }

    /// The currently published index.
    pub fn index(&self) -> Arc<Index> {
        self.inner
            .index
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .clone()
    }

    /// Exclusive access to the workspace store; this is the writer lock.
    pub fn store(&self) -> MutexGuard<'_, Store> {
        self.inner.store.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Logs and indexes an annotation, then publishes the next epoch.
    pub fn add_annotation(&self, request: AnnotationRequest) -> Result<(ManualAnnotation, u64), WorkspaceError> {
        let mut store = self.store();
        let current = self.index();
        let (annotation, next) = store.add_annotation(&current, request)?;
        let epoch = next.epoch();
        *self.inner.index.write().unwrap_or_else(|e| e.into_inner()) = Arc::new(next);
        Ok((annotation, epoch))
    }
}
