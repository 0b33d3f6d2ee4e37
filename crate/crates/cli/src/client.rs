//! Thin async client for the service's HTTP API.

use anyhow::{anyhow, Result};
use curvepass_core::ImageId;
use curvepass_service::api::{
    Canvas, ChallengeResponse, EnrollRequest, EnrollResponse, ErrorBody, LoginRequest, LoginResponse,
};
use reqwest::{Response, StatusCode};
use serde::de::DeserializeOwned;

/// Non-success reply from the service.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceError {
    pub status: u16,
    pub code: String,
    pub message: String,
}

impl std::fmt::Display for ServiceError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "service returned {} {}: {}", self.status, self.code, self.message)
    }
}

impl std::error::Error for ServiceError {}

#[derive(Debug, Clone)]
pub struct Client {
    http: reqwest::Client,
    base: String,
}

impl Client {
    pub fn new(base: impl Into<String>) -> Self {
        Self {
            http: reqwest::Client::new(),
            base: base.into().trim_end_matches('/').to_owned(),
        }
    }

    pub async fn enroll(&self, user: &str, image_ids: &[ImageId]) -> Result<EnrollResponse> {
        let body = EnrollRequest {
            image_ids: image_ids.to_vec(),
        };
        let resp = self
            .http
            .post(format!("{}/users/{user}/enroll", self.base))
            .json(&body)
            .send()
            .await?;
        decode(resp, StatusCode::CREATED).await
    }

    pub async fn challenge(&self, user: &str) -> Result<ChallengeResponse> {
        let resp = self
            .http
            .post(format!("{}/users/{user}/challenge", self.base))
            .send()
            .await?;
        decode(resp, StatusCode::OK).await
    }

    pub async fn login(&self, challenge_id: &str, polyline: Vec<[f64; 2]>, canvas: Canvas) -> Result<LoginResponse> {
        let body = LoginRequest {
            challenge_id: challenge_id.to_owned(),
            polyline,
            canvas,
        };
        let resp = self.http.post(format!("{}/login", self.base)).json(&body).send().await?;
        decode(resp, StatusCode::OK).await
    }
}

async fn decode<T: DeserializeOwned>(resp: Response, expected: StatusCode) -> Result<T> {
    let status = resp.status();
    if status == expected {
        return Ok(resp.json().await?);
    }
    let text = resp.text().await.unwrap_or_default();
    let err = match serde_json::from_str::<ErrorBody>(&text) {
        Ok(body) => ServiceError {
            status: status.as_u16(),
            code: body.error,
            message: body.message,
        },
        Err(_) => ServiceError {
            status: status.as_u16(),
            code: "unexpected_response".into(),
            message: text,
        },
    };
    Err(anyhow!(err))
}
