//! JSON endpoints. Every response carries the index epoch in `x-index-epoch`;
//! GET responses are pure functions of that epoch.

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, RawQuery, Request, State};
use axum::http::{HeaderValue, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use oht_core::corpus::{FacetDefinition, Interview, TAGS_FACET};
use oht_core::search::{compute_facet_counts, execute_search, parse_query, FacetCounts, Query, SearchError};
use oht_core::wordcloud::build_word_cloud;
use oht_core::workspace::{AnnotationRequest, FragmentRequest, ManualAnnotation, WorkspaceError};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::services::ServeDir;

use crate::config::Config;
use crate::state::AppState;

pub const EPOCH_HEADER: &str = "x-index-epoch";
pub const MAX_WORDCLOUD_K: usize = 500;

#[derive(Debug)]
pub enum ApiError {
    BadRequest(String),
    NotFound(String),
    Internal(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, kind, message) = match self {
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, "bad_request", m),
            ApiError::NotFound(m) => (StatusCode::NOT_FOUND, "not_found", m),
            ApiError::Internal(m) => (StatusCode::INTERNAL_SERVER_ERROR, "internal", m),
        };
        (status, Json(json!({ "error": kind, "message": message }))).into_response()
    }
}

impl From<SearchError> for ApiError {
    fn from(e: SearchError) -> Self {
        ApiError::BadRequest(e.to_string())
    }
}

impl From<WorkspaceError> for ApiError {
    fn from(e: WorkspaceError) -> Self {
        match e {
            WorkspaceError::UnknownWorkspace(_) | WorkspaceError::UnknownInterview(_) => ApiError::NotFound(e.to_string()),
            WorkspaceError::EmptyName
            | WorkspaceError::InvalidRange { .. }
            | WorkspaceError::IncompleteRange
            | WorkspaceError::EmptyAnnotation => ApiError::BadRequest(e.to_string()),
            WorkspaceError::Io { .. } | WorkspaceError::CorruptLog { .. } | WorkspaceError::CorruptWorkspaces { .. } => {
                tracing::error!(error = %e, "store failure");
                ApiError::Internal(e.to_string())
            }
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::BadRequest(e.body_text())
    }
}

fn with_epoch(epoch: u64, status: StatusCode, body: impl Serialize) -> Response {
    let mut response = (status, Json(body)).into_response();
    response
        .headers_mut()
        .insert(EPOCH_HEADER, HeaderValue::from(epoch));
    response
}

/// Stamps the current epoch on responses that did not set one.
async fn epoch_header(State(state): State<AppState>, request: Request, next: Next) -> Response {
    let mut response = next.run(request).await;
    if !response.headers().contains_key(EPOCH_HEADER) {
        let epoch = state.index().epoch();
        response
            .headers_mut()
            .insert(EPOCH_HEADER, HeaderValue::from(epoch));
    }
    response
}

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/api/search", get(search))
        .route("/api/interviews/{id}", get(interview))
        .route("/api/facets", get(facets))
        .route("/api/wordcloud", get(wordcloud))
        .route("/api/workspaces", post(create_workspace).get(list_workspaces))
        .route("/api/workspaces/{id}", get(get_workspace))
        .route("/api/workspaces/{id}/items", post(add_item))
        .route("/api/workspaces/{id}/fragments", post(cut_fragment))
        .route("/api/workspaces/{id}/export", get(export_workspace))
        .route("/api/annotations", post(add_annotation));
    let api = match &state.config().ui_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(|| async { ApiError::NotFound("no such endpoint".into()) }),
    };
    api.layer(middleware::from_fn_with_state(state.clone(), epoch_header))
        .with_state(state)
}

/// `q`, repeated `f`, `page`, `size` and `k` from a raw query string.
#[derive(Debug, Default)]
struct Params {
    q: String,
    filters: Vec<String>,
    page: Option<usize>,
    size: Option<usize>,
    k: Option<usize>,
}

fn parse_number(key: &str, value: &str) -> Result<usize, ApiError> {
    value
        .parse()
        .map_err(|_| ApiError::BadRequest(format!("{key} must be a non-negative integer, got {value:?}")))
}

impl Params {
    fn parse(raw: Option<&str>) -> Result<Self, ApiError> {
        let mut params = Params::default();
        for (key, value) in form_urlencoded::parse(raw.unwrap_or("").as_bytes()) {
            match key.as_ref() {
                "q" => params.q = value.into_owned(),
                "f" => {
                    if !value.is_empty() {
                        params.filters.push(value.into_owned());
                    }
                }
                "page" => params.page = Some(parse_number("page", &value)?),
                "size" => params.size = Some(parse_number("size", &value)?),
                "k" => params.k = Some(parse_number("k", &value)?),
                _ => {}
            }
        }
        Ok(params)
    }

    fn query(&self, state: &AppState) -> Result<Query, ApiError> {
        let index = state.index();
        Ok(parse_query(&self.q, &self.filters, index.options(), state.corpus().facet_schema())?)
    }
}

async fn search(State(state): State<AppState>, RawQuery(raw): RawQuery) -> Result<Response, ApiError> {
    let params = Params::parse(raw.as_deref())?;
    let config: &Config = state.config();
    let query = params.query(&state)?;
    let index = state.index();
    let result = execute_search(
        &index,
        &query,
        params.page.unwrap_or(1),
        params.size.unwrap_or(config.default_page_size),
    )?;
    Ok(with_epoch(index.epoch(), StatusCode::OK, result))
}

#[derive(Serialize)]
struct InterviewDetail<'a> {
    #[serde(flatten)]
    interview: &'a Interview,
    tags: Vec<&'a str>,
    annotations: Vec<ManualAnnotation>,
}

async fn interview(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    // the writer publishes while holding the store lock, so this pairs the
    // annotation list with the matching epoch
    let store = state.store();
    let index = state.index();
    let doc = index
        .doc_id(&id)
        .ok_or_else(|| ApiError::NotFound(format!("unknown interview {id:?}")))?;
    let annotations = store
        .annotations()
        .iter()
        .filter(|a| a.interview_id == id)
        .cloned()
        .collect();
    let detail = InterviewDetail {
        interview: index.interview(doc),
        tags: index
            .doc_facets(doc)
            .get(TAGS_FACET)
            .map(|t| t.iter().map(String::as_str).collect())
            .unwrap_or_default(),
        annotations,
    };
    Ok(with_epoch(index.epoch(), StatusCode::OK, detail))
}

#[derive(Serialize)]
struct FacetOverview<'a> {
    facets: &'a [FacetDefinition],
    counts: FacetCounts,
    total: usize,
    epoch: u64,
}

async fn facets(State(state): State<AppState>) -> Response {
    let index = state.index();
    let body = FacetOverview {
        facets: index.corpus().facet_schema().facets(),
        counts: compute_facet_counts(&index, &Query::match_all()),
        total: index.num_docs(),
        epoch: index.epoch(),
    };
    with_epoch(index.epoch(), StatusCode::OK, body)
}

async fn wordcloud(State(state): State<AppState>, RawQuery(raw): RawQuery) -> Result<Response, ApiError> {
    let params = Params::parse(raw.as_deref())?;
    let k = params.k.unwrap_or(state.config().wordcloud_k);
    if k == 0 || k > MAX_WORDCLOUD_K {
        return Err(ApiError::BadRequest(format!("k must be within 1..={MAX_WORDCLOUD_K}, got {k}")));
    }
    let query = params.query(&state)?;
    let index = state.index();
    let cloud = build_word_cloud(&index, &query, k);
    Ok(with_epoch(index.epoch(), StatusCode::OK, cloud))
}

#[derive(Deserialize)]
struct CreateWorkspace {
    name: String,
}

async fn create_workspace(
    State(state): State<AppState>,
    body: Result<Json<CreateWorkspace>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(body) = body?;
    let ws = state.store().create_workspace(&body.name)?;
    Ok((StatusCode::CREATED, Json(ws)).into_response())
}

async fn list_workspaces(State(state): State<AppState>) -> Response {
    Json(state.store().workspaces().to_vec()).into_response()
}

async fn get_workspace(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let store = state.store();
    let ws = store
        .workspace(&id)
        .ok_or_else(|| ApiError::from(WorkspaceError::UnknownWorkspace(id.clone())))?;
    Ok(Json(ws).into_response())
}

#[derive(Deserialize)]
struct AddItem {
    interview_id: String,
    #[serde(default)]
    note: String,
}

async fn add_item(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<AddItem>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(body) = body?;
    let item = state
        .store()
        .add_item(state.corpus(), &id, &body.interview_id, &body.note)?;
    Ok((StatusCode::CREATED, Json(item)).into_response())
}

async fn cut_fragment(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<FragmentRequest>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(body) = body?;
    let fragment = state.store().cut_fragment(state.corpus(), &id, body)?;
    Ok((StatusCode::CREATED, Json(fragment)).into_response())
}

async fn export_workspace(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let manifest = state.store().export_workspace(state.corpus(), &id)?;
    Ok(Json(manifest).into_response())
}

#[derive(Serialize)]
struct AnnotationCreated {
    annotation: ManualAnnotation,
    epoch: u64,
}

async fn add_annotation(
    State(state): State<AppState>,
    body: Result<Json<AnnotationRequest>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(body) = body?;
    let (annotation, epoch) = state.add_annotation(body)?;
    Ok(with_epoch(epoch, StatusCode::CREATED, AnnotationCreated { annotation, epoch }))
}
