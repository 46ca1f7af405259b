//! Workspaces, the fragment cutter, manual annotations and export.
//!
//! A [`Store`] keeps workspaces in `workspaces.json` (rewritten atomically on
//! every change) and annotations in the append-only `annotations.jsonl`.
//! Annotations belong to the collection, not to a workspace. Fragments are
//! time-code ranges only; media is never touched.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use uuid::Uuid;

use crate::corpus::{Corpus, Interview};
use crate::index::{Index, IndexError};
use crate::timecode::{format_range, format_timecode};

pub const WORKSPACES_FILE: &str = "workspaces.json";
pub const ANNOTATIONS_FILE: &str = "annotations.jsonl";

#[derive(Debug, Error)]
pub enum WorkspaceError {
    #[error("workspace name must not be empty")]
    EmptyName,
    #[error("unknown workspace {0:?}")]
    UnknownWorkspace(String),
    #[error("unknown interview {0:?}")]
    UnknownInterview(String),
    #[error("invalid range {start_ms}..{end_ms} for duration {duration_ms}")]
    InvalidRange { start_ms: i64, end_ms: i64, duration_ms: u64 },
    #[error("annotation range needs both start_ms and end_ms")]
    IncompleteRange,
    #[error("annotation needs text or tags")]
    EmptyAnnotation,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt {file} line {line}: {reason}")]
    CorruptLog { file: PathBuf, line: usize, reason: String },
    #[error("corrupt {file}: {reason}")]
    CorruptWorkspaces { file: PathBuf, reason: String },
}

impl From<IndexError> for WorkspaceError {
    fn from(e: IndexError) -> Self {
        match e {
            IndexError::UnknownInterview(id) => WorkspaceError::UnknownInterview(id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkspaceItem {
    pub interview_id: String,
    pub added_at: DateTime<Utc>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fragment {
    pub fragment_id: String,
    pub interview_id: String,
    pub start_ms: u64,
    pub end_ms: u64,
    pub label: String,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Workspace {
    pub id: String,
    pub name: String,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    pub items: Vec<WorkspaceItem>,
    pub fragments: Vec<Fragment>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManualAnnotation {
    pub annotation_id: String,
    pub interview_id: String,
    pub start_ms: Option<u64>,
    pub end_ms: Option<u64>,
    pub text: String,
    pub tags: Vec<String>,
    pub created_at: DateTime<Utc>,
}

impl ManualAnnotation {
    pub fn range(&self) -> Option<(u64, u64)> {
        self.start_ms.zip(self.end_ms)
    }
}

/// Fields of a fragment to cut.
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
pub struct FragmentRequest {
    pub interview_id: String,
    pub start_ms: i64,
    pub end_ms: i64,
    #[serde(default)]
    pub label: String,
    #[serde(default)]
    pub note: String,
}

/// Fields of an annotation to add.
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
pub struct AnnotationRequest {
    pub interview_id: String,
    #[serde(default)]
    pub start_ms: Option<i64>,
    #[serde(default)]
    pub end_ms: Option<i64>,
    #[serde(default)]
    pub text: String,
    #[serde(default)]
    pub tags: Vec<String>,
}

/// `0 <= start < end <= duration`.
pub fn check_range(start_ms: i64, end_ms: i64, interview: &Interview) -> Result<(u64, u64), WorkspaceError> {
    if start_ms < 0 || start_ms >= end_ms || end_ms as u64 > interview.duration_ms {
        return Err(WorkspaceError::InvalidRange {
            start_ms,
            end_ms,
            duration_ms: interview.duration_ms,
        });
    }
    Ok((start_ms as u64, end_ms as u64))
}

fn new_id() -> String {
    Uuid::new_v4().to_string()
}

/// Validates `request` against the corpus and stamps a fresh annotation.
pub fn new_annotation(corpus: &Corpus, request: AnnotationRequest) -> Result<ManualAnnotation, WorkspaceError> {
    let interview = corpus
        .get(&request.interview_id)
        .ok_or_else(|| WorkspaceError::UnknownInterview(request.interview_id.clone()))?;
    let tags: Vec<String> = request
        .tags
        .into_iter()
        .map(|t| t.trim().to_string())
        .filter(|t| !t.is_empty())
        .collect();
    if request.text.trim().is_empty() && tags.is_empty() {
        return Err(WorkspaceError::EmptyAnnotation);
    }
    let (start_ms, end_ms) = match (request.start_ms, request.end_ms) {
        (None, None) => (None, None),
        (Some(s), Some(e)) => {
            let (s, e) = check_range(s, e, interview)?;
            (Some(s), Some(e))
        }
        _ => return Err(WorkspaceError::IncompleteRange),
    };
    Ok(ManualAnnotation {
        annotation_id: new_id(),
        interview_id: request.interview_id,
        start_ms,
        end_ms,
        text: request.text,
        tags,
        created_at: Utc::now(),
    })
}

/// Applies logged annotations in order on top of `index`.
pub fn replay_annotations<'a>(
    index: Index,
    annotations: impl IntoIterator<Item = &'a ManualAnnotation>,
) -> Result<Index, IndexError> {
    annotations
        .into_iter()
        .try_fold(index, |index, a| index.apply_annotation(a))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExportWorkspace {
    pub id: String,
    pub name: String,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExportItem {
    pub interview_id: String,
    pub title: String,
    pub collection: String,
    pub media_url: Option<String>,
    pub added_at: DateTime<Utc>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExportFragment {
    pub fragment_id: String,
    pub interview_id: String,
    pub start_ms: u64,
    pub end_ms: u64,
    pub start_timecode: String,
    pub end_timecode: String,
    pub label: String,
    pub note: String,
    pub media_url: Option<String>,
    pub citation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExportManifest {
    pub workspace: ExportWorkspace,
    /// Latest change to the workspace or its annotations, so repeated exports
    /// of unchanged state are identical.
    pub exported_at: DateTime<Utc>,
    pub items: Vec<ExportItem>,
    pub fragments: Vec<ExportFragment>,
    pub annotations: Vec<ManualAnnotation>,
}

impl ExportManifest {
    pub fn to_json_bytes(&self) -> Vec<u8> {
        serde_json::to_vec_pretty(self).expect("manifest serializes")
    }
}

/// `title, collection, HH:MM:SS.mmm–HH:MM:SS.mmm`.
pub fn citation(interview: &Interview, start_ms: u64, end_ms: u64) -> String {
    format!(
        "{}, {}, {}",
        interview.title,
        interview.collection_id,
        format_range(start_ms, end_ms)
    )
}

/// Single-writer state for workspaces and the annotation log.
#[derive(Debug, Default)]
pub struct Store {
    dir: Option<PathBuf>,
    workspaces: Vec<Workspace>,
    annotations: Vec<ManualAnnotation>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> WorkspaceError + '_ {
    move |source| WorkspaceError::Io { path: path.to_path_buf(), source }
}

impl Store {
    /// A store that never touches disk.
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens the store in `dir`. Missing files mean empty state.
    pub fn open(dir: &Path) -> Result<Self, WorkspaceError> {
        let ws_path = dir.join(WORKSPACES_FILE);
        let workspaces = match fs::read_to_string(&ws_path) {
            Ok(raw) => serde_json::from_str(&raw).map_err(|e| WorkspaceError::CorruptWorkspaces {
                file: ws_path.clone(),
                reason: e.to_string(),
            })?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(io_err(&ws_path)(e)),
        };
        let annotations = read_annotation_log(&dir.join(ANNOTATIONS_FILE))?;
        Ok(Self {
            dir: Some(dir.to_path_buf()),
            workspaces,
            annotations,
        })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn workspaces(&self) -> &[Workspace] {
        &self.workspaces
    }

    pub fn workspace(&self, id: &str) -> Option<&Workspace> {
        self.workspaces.iter().find(|w| w.id == id)
    }

    /// Annotations in log order.
    pub fn annotations(&self) -> &[ManualAnnotation] {
        &self.annotations
    }

    fn workspace_mut(&mut self, id: &str) -> Result<&mut Workspace, WorkspaceError> {
        self.workspaces
            .iter_mut()
            .find(|w| w.id == id)
            .ok_or_else(|| WorkspaceError::UnknownWorkspace(id.to_string()))
    }

    fn persist_workspaces(&self) -> Result<(), WorkspaceError> {
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let path = dir.join(WORKSPACES_FILE);
        let tmp = dir.join(format!("{WORKSPACES_FILE}.tmp"));
        let json = serde_json::to_vec_pretty(&self.workspaces).expect("workspaces serialize");
        fs::write(&tmp, json).map_err(io_err(&tmp))?;
        fs::rename(&tmp, &path).map_err(io_err(&path))
    }

    /// Runs `change` on a copy and commits it only if persisting succeeds.
    fn commit<T>(
        &mut self,
        change: impl FnOnce(&mut Self) -> Result<T, WorkspaceError>,
    ) -> Result<T, WorkspaceError> {
        let before = self.workspaces.clone();
        let out = change(self).and_then(|out| self.persist_workspaces().map(|_| out));
        if out.is_err() {
            self.workspaces = before;
        }
        out
    }

    pub fn create_workspace(&mut self, name: &str) -> Result<Workspace, WorkspaceError> {
        let name = name.trim();
        if name.is_empty() {
            return Err(WorkspaceError::EmptyName);
        }
        self.commit(|store| {
            let now = Utc::now();
            let ws = Workspace {
                id: new_id(),
                name: name.to_string(),
                created_at: now,
                updated_at: now,
                items: Vec::new(),
                fragments: Vec::new(),
            };
            store.workspaces.push(ws.clone());
            Ok(ws)
        })
    }

    /// Saves an interview. Adding the same interview again updates its note.
    pub fn add_item(
        &mut self,
        corpus: &Corpus,
        workspace_id: &str,
        interview_id: &str,
        note: &str,
    ) -> Result<WorkspaceItem, WorkspaceError> {
        self.workspace_mut(workspace_id)?;
        if corpus.get(interview_id).is_none() {
            return Err(WorkspaceError::UnknownInterview(interview_id.to_string()));
        }
        self.commit(|store| {
            let ws = store.workspace_mut(workspace_id)?;
            let now = Utc::now();
            ws.updated_at = now;
            if let Some(item) = ws.items.iter_mut().find(|i| i.interview_id == interview_id) {
                item.note = note.to_string();
                return Ok(item.clone());
            }
            let item = WorkspaceItem {
                interview_id: interview_id.to_string(),
                added_at: now,
                note: note.to_string(),
            };
            ws.items.push(item.clone());
            Ok(item)
        })
    }

    pub fn cut_fragment(
        &mut self,
        corpus: &Corpus,
        workspace_id: &str,
        request: FragmentRequest,
    ) -> Result<Fragment, WorkspaceError> {
        self.workspace_mut(workspace_id)?;
        let interview = corpus
            .get(&request.interview_id)
            .ok_or_else(|| WorkspaceError::UnknownInterview(request.interview_id.clone()))?;
        let (start_ms, end_ms) = check_range(request.start_ms, request.end_ms, interview)?;
        self.commit(|store| {
            let ws = store.workspace_mut(workspace_id)?;
            ws.updated_at = Utc::now();
            let fragment = Fragment {
                fragment_id: new_id(),
                interview_id: request.interview_id,
                start_ms,
                end_ms,
                label: request.label,
                note: request.note,
            };
            ws.fragments.push(fragment.clone());
            Ok(fragment)
        })
    }

    /// Appends `annotation` to the log.
    pub fn record_annotation(&mut self, annotation: ManualAnnotation) -> Result<(), WorkspaceError> {
        if let Some(dir) = &self.dir {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
            let path = dir.join(ANNOTATIONS_FILE);
            let mut line = serde_json::to_string(&annotation).expect("annotation serializes");
            line.push('\n');
            let mut file = OpenOptions::new()
                .create(true)
                .append(true)
                .open(&path)
                .map_err(io_err(&path))?;
            file.write_all(line.as_bytes()).map_err(io_err(&path))?;
            file.sync_data().map_err(io_err(&path))?;
        }
        self.annotations.push(annotation);
        Ok(())
    }

    /// Validates, indexes and logs an annotation.
    ///
    /// Returns the annotation and the next index epoch; the caller publishes
    /// the index. Nothing is logged if indexing fails.
    pub fn add_annotation(
        &mut self,
        index: &Index,
        request: AnnotationRequest,
    ) -> Result<(ManualAnnotation, Index), WorkspaceError> {
        let annotation = new_annotation(index.corpus(), request)?;
        let next = index.apply_annotation(&annotation)?;
        self.record_annotation(annotation.clone())?;
        Ok((annotation, next))
    }

    pub fn export_workspace(&self, corpus: &Corpus, workspace_id: &str) -> Result<ExportManifest, WorkspaceError> {
        let ws = self
            .workspace(workspace_id)
            .ok_or_else(|| WorkspaceError::UnknownWorkspace(workspace_id.to_string()))?;
        let lookup = |id: &str| {
            corpus
                .get(id)
                .ok_or_else(|| WorkspaceError::UnknownInterview(id.to_string()))
        };

        let mut items = Vec::with_capacity(ws.items.len());
        for item in &ws.items {
            let interview = lookup(&item.interview_id)?;
            items.push(ExportItem {
                interview_id: item.interview_id.clone(),
                title: interview.title.clone(),
                collection: interview.collection_id.clone(),
                media_url: interview.media_url.clone(),
                added_at: item.added_at,
                note: item.note.clone(),
            });
        }
        let mut fragments = Vec::with_capacity(ws.fragments.len());
        for f in &ws.fragments {
            let interview = lookup(&f.interview_id)?;
            fragments.push(ExportFragment {
                fragment_id: f.fragment_id.clone(),
                interview_id: f.interview_id.clone(),
                start_ms: f.start_ms,
                end_ms: f.end_ms,
                start_timecode: format_timecode(f.start_ms),
                end_timecode: format_timecode(f.end_ms),
                label: f.label.clone(),
                note: f.note.clone(),
                media_url: interview.media_url.clone(),
                citation: citation(interview, f.start_ms, f.end_ms),
            });
        }
        let referenced = |id: &str| {
            ws.items.iter().any(|i| i.interview_id == id) || ws.fragments.iter().any(|f| f.interview_id == id)
        };
        let annotations: Vec<ManualAnnotation> = self
            .annotations
            .iter()
            .filter(|a| referenced(&a.interview_id))
            .cloned()
            .collect();
        let exported_at = annotations
            .iter()
            .map(|a| a.created_at)
            .fold(ws.updated_at, DateTime::max);

        Ok(ExportManifest {
            workspace: ExportWorkspace {
                id: ws.id.clone(),
                name: ws.name.clone(),
                created_at: ws.created_at,
                updated_at: ws.updated_at,
            },
            exported_at,
            items,
            fragments,
            annotations,
        })
    }
}

/// Reads the annotation log. Blank lines are skipped; line numbers are 1-based.
pub fn read_annotation_log(path: &Path) -> Result<Vec<ManualAnnotation>, WorkspaceError> {
    let raw = match fs::read_to_string(path) {
        Ok(raw) => raw,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(path)(e)),
    };
    raw.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).map_err(|e| WorkspaceError::CorruptLog {
                file: path.to_path_buf(),
                line: i + 1,
                reason: e.to_string(),
            })
        })
        .collect()
}
