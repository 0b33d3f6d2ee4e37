//! HTTP routes and wire types.
//!
//! | method | path                                  | success |
//! |--------|---------------------------------------|---------|
//! | GET    | `/healthz`                            | 200     |
//! | POST   | `/users/{id}/enroll`                  | 201     |
//! | POST   | `/users/{id}/challenge`               | 200     |
//! | POST   | `/login`                              | 200     |
//! | GET    | `/images/{challenge_id}/{image_id}`   | 200 PNG |
//!
//! Errors carry `{"error": code, "message": text}` with a stable code.
//! No response ever includes a user's pass-images or an original raster.

use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use bytes::Bytes;
use curvepass_core::grid::{discretize, GridError};
use curvepass_core::{AuthError, ImageId, Point, Polyline, Reason, Timestamp};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::AppState;

/// Every route the service answers; anything else is a 404.
pub const ROUTES: &[(&str, &str)] = &[
    ("GET", "/healthz"),
    ("POST", "/users/{id}/enroll"),
    ("POST", "/users/{id}/challenge"),
    ("POST", "/login"),
    ("GET", "/images/{challenge_id}/{image_id}"),
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnrollRequest {
    pub image_ids: Vec<ImageId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnrollResponse {
    pub user_id: String,
    pub created_at: Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridShape {
    pub rows: u32,
    pub cols: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementEntry {
    /// `[row, col]`
    pub cell: [u32; 2],
    pub image_id: ImageId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChallengeResponse {
    pub challenge_id: String,
    pub grid: GridShape,
    pub placement: Vec<PlacementEntry>,
    pub head_image: ImageId,
    pub tail_image: ImageId,
    pub expires_at: Timestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Canvas {
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoginRequest {
    pub challenge_id: String,
    /// `[x, y]` pixel samples of one continuous stroke.
    pub polyline: Vec<[f64; 2]>,
    pub canvas: Canvas,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoginResponse {
    pub accepted: bool,
    pub reason: Reason,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
        }
    }

    fn not_found(message: impl Into<String>) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", message)
    }
}

impl From<AuthError> for ApiError {
    fn from(err: AuthError) -> Self {
        let status = match &err {
            AuthError::InvalidUserId(_)
            | AuthError::WrongCount { .. }
            | AuthError::DuplicateImage(_)
            | AuthError::UnknownImage(_) => StatusCode::BAD_REQUEST,
            AuthError::AlreadyEnrolled(_) => StatusCode::CONFLICT,
            AuthError::UnknownUser(_) | AuthError::UnknownChallenge(_) => StatusCode::NOT_FOUND,
            AuthError::LockedOut(_) => StatusCode::LOCKED,
            AuthError::CatalogSize { .. } | AuthError::InvalidPolicy(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, err.code(), err.to_string())
    }
}

impl From<GridError> for ApiError {
    fn from(err: GridError) -> Self {
        let code = match err {
            GridError::OutOfBounds { .. } => "out_of_bounds",
            GridError::BadCanvas { .. } | GridError::BadDimensions { .. } => "invalid_canvas",
            _ => "malformed_polyline",
        };
        Self::new(StatusCode::BAD_REQUEST, code, err.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.code.to_owned(),
            message: self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

/// Bodies are parsed by hand so every malformed request gets the same 400 shape.
fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "malformed_request", e.to_string()))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/users/{id}/enroll", post(enroll))
        .route("/users/{id}/challenge", post(challenge))
        .route("/login", post(login))
        .route("/images/{challenge_id}/{image_id}", get(degraded_image))
        .fallback(|| async { ApiError::not_found("no such route") })
        .with_state(state)
}

async fn healthz() -> &'static str {
    "ok"
}

async fn enroll(
    State(state): State<Arc<AppState>>,
    Path(user_id): Path<String>,
    body: Bytes,
) -> Result<(StatusCode, Json<EnrollResponse>), ApiError> {
    let req: EnrollRequest = parse_body(&body)?;
    let record = state.engine.enroll(&user_id, &req.image_ids, state.now())?;
    state.persist();
    tracing::info!(user = %user_id, "enrolled");
    Ok((
        StatusCode::CREATED,
        Json(EnrollResponse {
            user_id: record.user_id,
            created_at: record.created_at,
        }),
    ))
}

async fn challenge(
    State(state): State<Arc<AppState>>,
    Path(user_id): Path<String>,
) -> Result<Json<ChallengeResponse>, ApiError> {
    let now = state.now();
    state.engine.purge_expired(now.saturating_sub(crate::CHALLENGE_RETENTION_SECS));
    let layout = state.engine.issue_challenge(&user_id, state.next_seed(), now)?;
    let placement = layout
        .cells()
        .map(|(cell, id)| PlacementEntry {
            cell: [cell.row, cell.col],
            image_id: id.clone(),
        })
        .collect();
    Ok(Json(ChallengeResponse {
        expires_at: layout.expires_at(),
        challenge_id: layout.challenge_id,
        grid: GridShape {
            rows: layout.rows,
            cols: layout.cols,
        },
        placement,
        head_image: layout.head_image,
        tail_image: layout.tail_image,
    }))
}

async fn login(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Json<LoginResponse>, ApiError> {
    let req: LoginRequest = parse_body(&body)?;
    let Some(layout) = state.engine.challenge(&req.challenge_id) else {
        return Err(AuthError::UnknownChallenge(req.challenge_id).into());
    };
    let grid = state
        .engine
        .policy()
        .grid()
        .with_canvas(req.canvas.width, req.canvas.height)?;
    debug_assert_eq!((grid.rows(), grid.cols()), (layout.rows, layout.cols));
    let stroke = Polyline::new(req.polyline.iter().map(|&[x, y]| Point::new(x, y)).collect())?;
    let trace = discretize(&stroke, &grid)?;

    let outcome = state.engine.validate(&req.challenge_id, &trace, state.now())?;
    if outcome.accepted || outcome.reason.is_drawing_failure() {
        state.persist();
    }
    Ok(Json(LoginResponse {
        accepted: outcome.accepted,
        reason: outcome.reason,
    }))
}

async fn degraded_image(
    State(state): State<Arc<AppState>>,
    Path((challenge_id, image_id)): Path<(String, String)>,
) -> Result<Response, ApiError> {
    let live = state
        .engine
        .challenge(&challenge_id)
        .filter(|c| !c.consumed && !c.is_expired(state.now()));
    if live.is_none() {
        return Err(ApiError::not_found("no live challenge with that id"));
    }
    let png = state
        .degraded
        .get(&ImageId::new(image_id))
        .cloned()
        .ok_or_else(|| ApiError::not_found("no such image"))?;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}
