//! Engine for a curve-drawing graphical password.
//!
//! A user memorizes an ordered handful of catalog images. To log in they are
//! shown every catalog image, degraded and shuffled onto a grid, and draw one
//! continuous stroke that starts on a system-chosen head image, crosses
//! their pass-images in order among decoys, and ends on a tail image.
//!
//! - [`grid`]: canvas geometry and stroke discretization.
//! - [`catalog`]: image catalog loading, synthesis and degradation.
//! - [`auth`]: enrollment, challenge issuance and trace validation.
//! - [`analysis`]: password-space and observation-attack accounting.

#![forbid(unsafe_code)]

use std::fmt;

use serde::{Deserialize, Serialize};

pub mod analysis;
pub mod auth;
pub mod catalog;
pub mod grid;

pub use auth::{
    AuthError, Authenticator, ChallengeLayout, EngineConfig, PasswordRecord, Reason, Tolerance,
    ValidationOutcome, ValidationPolicy,
};
pub use catalog::{CatalogImage, DegradeParams, ImageError};
pub use grid::{Cell, CellTrace, GridError, GridSpec, Point, Polyline};

/// Seconds since the Unix epoch.
pub type Timestamp = u64;

/// Identifier of a catalog image.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ImageId(String);

impl ImageId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ImageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ImageId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl From<String> for ImageId {
    fn from(s: String) -> Self {
        Self(s)
    }
}
