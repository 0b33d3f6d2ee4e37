//! Enrollment, challenge issuance and login validation.
//!
//! The free functions are pure and operate on explicit values. The
//! [`Authenticator`] wraps them around a shared store of accounts and
//! live challenges, where consuming a challenge is an atomic check-and-set.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{chain_min_length, trace_length, Cell, CellTrace, GridSpec};
use crate::{ImageId, Timestamp};

/// Challenge lifetime used when none is configured.
pub const DEFAULT_TTL_SECS: u64 = 120;
/// Consecutive failed logins after which a user can no longer get challenges.
pub const DEFAULT_LOCKOUT_THRESHOLD: u32 = 3;
/// Number of pass-images in the prototype configuration.
pub const DEFAULT_PASSWORD_LENGTH: usize = 5;

const MAX_USER_ID_LEN: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuthError {
    #[error("invalid user id {0:?}")]
    InvalidUserId(String),
    #[error("expected {expected} pass-images, got {got}")]
    WrongCount { expected: usize, got: usize },
    #[error("image {0} chosen more than once")]
    DuplicateImage(ImageId),
    #[error("image {0} is not in the catalog")]
    UnknownImage(ImageId),
    #[error("user {0} is already enrolled")]
    AlreadyEnrolled(String),
    #[error("unknown user {0}")]
    UnknownUser(String),
    #[error("user {0} is locked out")]
    LockedOut(String),
    #[error("unknown challenge {0}")]
    UnknownChallenge(String),
    #[error("catalog has {got} images but the grid has {expected} cells")]
    CatalogSize { expected: usize, got: usize },
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
}

impl AuthError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            AuthError::InvalidUserId(_) => "invalid_user_id",
            AuthError::WrongCount { .. } => "wrong_count",
            AuthError::DuplicateImage(_) => "duplicate_image",
            AuthError::UnknownImage(_) => "unknown_image",
            AuthError::AlreadyEnrolled(_) => "already_enrolled",
            AuthError::UnknownUser(_) => "unknown_user",
            AuthError::LockedOut(_) => "locked_out",
            AuthError::UnknownChallenge(_) => "unknown_challenge",
            AuthError::CatalogSize { .. } => "catalog_size",
            AuthError::InvalidPolicy(_) => "invalid_policy",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PasswordRecord {
    pub user_id: String,
    pub pass_images: Vec<ImageId>,
    pub created_at: Timestamp,
}

/// How the maximum trace length is derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Tolerance {
    /// `(rows + cols) · (n + 1)` regardless of layout.
    Absolute,
    /// `factor` times the shortest trace through the challenge's waypoints.
    Relative { factor: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidationPolicy {
    tolerance: Tolerance,
    n: usize,
    grid: GridSpec,
}

impl ValidationPolicy {
    pub fn new(tolerance: Tolerance, n: usize, grid: GridSpec) -> Result<Self, AuthError> {
        if n == 0 {
            return Err(AuthError::InvalidPolicy("password length must be at least 1".into()));
        }
        if n > grid.cell_count() {
            return Err(AuthError::InvalidPolicy(format!(
                "password length {n} exceeds the {} grid cells",
                grid.cell_count()
            )));
        }
        if let Tolerance::Relative { factor } = tolerance {
            if !(factor.is_finite() && factor >= 1.0) {
                return Err(AuthError::InvalidPolicy(format!(
                    "relative factor must be >= 1, got {factor}"
                )));
            }
        }
        Ok(Self { tolerance, n, grid })
    }

    /// 4×6 grid, five pass-images, absolute tolerance.
    pub fn prototype() -> Self {
        Self::new(Tolerance::Absolute, DEFAULT_PASSWORD_LENGTH, GridSpec::prototype())
            .expect("prototype policy is valid")
    }

    pub fn tolerance(&self) -> Tolerance {
        self.tolerance
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }
}

/// One-time arrangement of every catalog image on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChallengeLayout {
    pub challenge_id: String,
    pub user_id: String,
    pub rows: u32,
    pub cols: u32,
    /// Image at each cell, row-major.
    pub placement: Vec<ImageId>,
    pub head_image: ImageId,
    pub tail_image: ImageId,
    pub issued_at: Timestamp,
    pub ttl: u64,
    pub consumed: bool,
}

impl ChallengeLayout {
    pub fn expires_at(&self) -> Timestamp {
        self.issued_at.saturating_add(self.ttl)
    }

    pub fn is_expired(&self, now: Timestamp) -> bool {
        now > self.expires_at()
    }

    pub fn image_at(&self, cell: Cell) -> Option<&ImageId> {
        if cell.row >= self.rows || cell.col >= self.cols {
            return None;
        }
        self.placement
            .get(cell.row as usize * self.cols as usize + cell.col as usize)
    }

    pub fn cell_of(&self, id: &ImageId) -> Option<Cell> {
        let cols = self.cols as usize;
        self.placement
            .iter()
            .position(|p| p == id)
            .map(|i| Cell::new((i / cols) as u32, (i % cols) as u32))
    }

    /// `(cell, image)` pairs in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (Cell, &ImageId)> + '_ {
        let cols = self.cols as usize;
        self.placement
            .iter()
            .enumerate()
            .map(move |(i, id)| (Cell::new((i / cols) as u32, (i % cols) as u32), id))
    }
}

/// Why a login was accepted or rejected. Checks run in declaration order
/// (after `Ok`) and the first failing one is reported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    Ok,
    Expired,
    Consumed,
    WrongHead,
    WrongTail,
    SequenceMismatch,
    TooLong,
}

impl Reason {
    pub fn as_str(self) -> &'static str {
        match self {
            Reason::Ok => "ok",
            Reason::Expired => "expired",
            Reason::Consumed => "consumed",
            Reason::WrongHead => "wrong_head",
            Reason::WrongTail => "wrong_tail",
            Reason::SequenceMismatch => "sequence_mismatch",
            Reason::TooLong => "too_long",
        }
    }

    /// Whether this rejection counts toward the lockout threshold.
    pub fn is_drawing_failure(self) -> bool {
        matches!(
            self,
            Reason::WrongHead | Reason::WrongTail | Reason::SequenceMismatch | Reason::TooLong
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationOutcome {
    pub accepted: bool,
    pub reason: Reason,
}

impl From<Reason> for ValidationOutcome {
    fn from(reason: Reason) -> Self {
        Self {
            accepted: reason == Reason::Ok,
            reason,
        }
    }
}

fn check_user_id(user_id: &str) -> Result<(), AuthError> {
    let ok = !user_id.is_empty()
        && user_id.len() <= MAX_USER_ID_LEN
        && user_id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.'));
    if ok {
        Ok(())
    } else {
        Err(AuthError::InvalidUserId(user_id.to_owned()))
    }
}

/// Checks a choice of pass-images and builds the record for it.
pub fn enroll(
    user_id: &str,
    image_ids: &[ImageId],
    catalog: &[ImageId],
    policy: &ValidationPolicy,
    now: Timestamp,
) -> Result<PasswordRecord, AuthError> {
    check_user_id(user_id)?;
    if image_ids.len() != policy.n() {
        return Err(AuthError::WrongCount {
            expected: policy.n(),
            got: image_ids.len(),
        });
    }
    let mut seen = HashSet::new();
    for id in image_ids {
        if !seen.insert(id) {
            return Err(AuthError::DuplicateImage(id.clone()));
        }
    }
    if let Some(unknown) = image_ids.iter().find(|id| !catalog.contains(id)) {
        return Err(AuthError::UnknownImage(unknown.clone()));
    }
    Ok(PasswordRecord {
        user_id: user_id.to_owned(),
        pass_images: image_ids.to_vec(),
        created_at: now,
    })
}

/// Absolute tolerance `(rows + cols) · (n + 1)`.
pub fn max_trace_length(grid: &GridSpec, n: usize) -> usize {
    (grid.rows() as usize + grid.cols() as usize) * (n + 1)
}

/// Cells the login stroke must visit in order: head, pass-images, tail.
/// `None` if a pass-image is not on the layout.
pub fn required_waypoints(challenge: &ChallengeLayout, record: &PasswordRecord) -> Option<Vec<Cell>> {
    std::iter::once(&challenge.head_image)
        .chain(&record.pass_images)
        .chain(std::iter::once(&challenge.tail_image))
        .map(|id| challenge.cell_of(id))
        .collect()
}

/// `ceil(factor · shortest chain length)` for this challenge.
pub fn relative_tolerance(challenge: &ChallengeLayout, record: &PasswordRecord, factor: f64) -> usize {
    let min = required_waypoints(challenge, record)
        .map(|w| chain_min_length(&w))
        .unwrap_or(0);
    ceil_product(factor, min)
}

/// `ceil(factor · value)`, absorbing float noise so exact products are not bumped up.
fn ceil_product(factor: f64, value: usize) -> usize {
    let product = factor * value as f64;
    (product - 1e-9 * product.max(1.0)).ceil().max(0.0) as usize
}

/// Maximum accepted trace length for this challenge under `policy`.
pub fn effective_tolerance(challenge: &ChallengeLayout, record: &PasswordRecord, policy: &ValidationPolicy) -> usize {
    match policy.tolerance() {
        Tolerance::Absolute => max_trace_length(policy.grid(), policy.n()),
        Tolerance::Relative { factor } => relative_tolerance(challenge, record, factor),
    }
}

/// Lays every catalog image onto a distinct cell and picks distinct head
/// and tail images, all uniformly from a generator seeded with `seed`.
/// Head and tail are drawn from the whole catalog, pass-images included.
pub fn new_layout(
    challenge_id: String,
    user_id: &str,
    catalog: &[ImageId],
    grid: &GridSpec,
    seed: u64,
    now: Timestamp,
    ttl: u64,
) -> Result<ChallengeLayout, AuthError> {
    check_layout_grid(grid)?;
    if catalog.len() != grid.cell_count() {
        return Err(AuthError::CatalogSize {
            expected: grid.cell_count(),
            got: catalog.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut placement = catalog.to_vec();
    placement.shuffle(&mut rng);
    let head = rng.random_range(0..catalog.len());
    let mut tail = rng.random_range(0..catalog.len() - 1);
    if tail >= head {
        tail += 1;
    }
    Ok(ChallengeLayout {
        challenge_id,
        user_id: user_id.to_owned(),
        rows: grid.rows(),
        cols: grid.cols(),
        placement,
        head_image: catalog[head].clone(),
        tail_image: catalog[tail].clone(),
        issued_at: now,
        ttl,
        consumed: false,
    })
}

/// Distinct head and tail need at least two cells.
fn check_layout_grid(grid: &GridSpec) -> Result<(), AuthError> {
    if grid.cell_count() < 2 {
        return Err(AuthError::InvalidPolicy(format!(
            "a {}x{} grid cannot hold distinct head and tail images",
            grid.rows(),
            grid.cols()
        )));
    }
    Ok(())
}

/// Whether `pattern` occurs in order (not necessarily contiguously) in `seq`.
pub fn is_subsequence<T: PartialEq>(pattern: &[T], seq: &[T]) -> bool {
    let mut it = seq.iter();
    pattern.iter().all(|p| it.any(|s| s == p))
}

/// Decides one login attempt and marks the challenge consumed.
///
/// Checks, in order: not expired, not already consumed, starts on the head
/// image, ends on the tail image, crosses the pass-images in order, and
/// stays within the tolerance.
pub fn validate_trace(
    trace: &CellTrace,
    challenge: &mut ChallengeLayout,
    record: &PasswordRecord,
    policy: &ValidationPolicy,
    now: Timestamp,
) -> ValidationOutcome {
    let was_consumed = std::mem::replace(&mut challenge.consumed, true);
    check_trace(trace, challenge, record, policy, now, was_consumed).into()
}

fn check_trace(
    trace: &CellTrace,
    challenge: &ChallengeLayout,
    record: &PasswordRecord,
    policy: &ValidationPolicy,
    now: Timestamp,
    consumed: bool,
) -> Reason {
    if challenge.is_expired(now) {
        return Reason::Expired;
    }
    if consumed {
        return Reason::Consumed;
    }
    let crossed: Option<Vec<&ImageId>> = trace.cells().iter().map(|&c| challenge.image_at(c)).collect();
    let Some(crossed) = crossed else {
        // A cell off the layout cannot start or end anywhere valid.
        return Reason::WrongHead;
    };
    if *crossed[0] != challenge.head_image {
        return Reason::WrongHead;
    }
    if *crossed[crossed.len() - 1] != challenge.tail_image {
        return Reason::WrongTail;
    }
    let wanted: Vec<&ImageId> = record.pass_images.iter().collect();
    if !is_subsequence(&wanted, &crossed) {
        return Reason::SequenceMismatch;
    }
    if trace_length(trace) > effective_tolerance(challenge, record, policy) {
        return Reason::TooLong;
    }
    Reason::Ok
}

/// Baseline recognition scheme: the pass-images selected one by one, in order.
pub fn validate_story(selected: &[ImageId], record: &PasswordRecord) -> ValidationOutcome {
    if selected == record.pass_images.as_slice() {
        Reason::Ok.into()
    } else {
        Reason::SequenceMismatch.into()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub policy: ValidationPolicy,
    pub ttl_secs: u64,
    /// Zero disables lockout.
    pub lockout_threshold: u32,
}

impl EngineConfig {
    pub fn new(policy: ValidationPolicy) -> Self {
        Self {
            policy,
            ttl_secs: DEFAULT_TTL_SECS,
            lockout_threshold: DEFAULT_LOCKOUT_THRESHOLD,
        }
    }
}

/// Persistent part of the engine state.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AccountSnapshot {
    pub users: Vec<PasswordRecord>,
    /// Consecutive drawing failures per user.
    pub failures: BTreeMap<String, u32>,
}

#[derive(Debug, Default)]
struct State {
    users: HashMap<String, PasswordRecord>,
    failures: HashMap<String, u32>,
    challenges: HashMap<String, ChallengeLayout>,
}

/// Accounts plus live challenges behind one lock.
#[derive(Debug)]
pub struct Authenticator {
    catalog: Vec<ImageId>,
    config: EngineConfig,
    state: Mutex<State>,
}

impl Authenticator {
    pub fn new(catalog: Vec<ImageId>, config: EngineConfig) -> Result<Self, AuthError> {
        let grid = config.policy.grid();
        check_layout_grid(grid)?;
        if catalog.len() != grid.cell_count() {
            return Err(AuthError::CatalogSize {
                expected: grid.cell_count(),
                got: catalog.len(),
            });
        }
        let mut seen = HashSet::new();
        if let Some(dup) = catalog.iter().find(|id| !seen.insert(*id)) {
            return Err(AuthError::DuplicateImage(dup.clone()));
        }
        Ok(Self {
            catalog,
            config,
            state: Mutex::default(),
        })
    }

    /// Restores enrolled users and failure counters.
    pub fn with_accounts(self, snapshot: AccountSnapshot) -> Self {
        {
            let mut state = self.lock();
            for record in snapshot.users {
                state.users.insert(record.user_id.clone(), record);
            }
            state.failures.extend(snapshot.failures);
        }
        self
    }

    pub fn catalog(&self) -> &[ImageId] {
        &self.catalog
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn policy(&self) -> &ValidationPolicy {
        &self.config.policy
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, State> {
        // State stays consistent across a panicking holder; every mutation is a single insert.
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn accounts(&self) -> AccountSnapshot {
        let state = self.lock();
        let mut users: Vec<_> = state.users.values().cloned().collect();
        users.sort_by(|a, b| a.user_id.cmp(&b.user_id));
        AccountSnapshot {
            users,
            failures: state.failures.iter().map(|(k, v)| (k.clone(), *v)).collect(),
        }
    }

    pub fn enroll(&self, user_id: &str, image_ids: &[ImageId], now: Timestamp) -> Result<PasswordRecord, AuthError> {
        let record = enroll(user_id, image_ids, &self.catalog, self.policy(), now)?;
        let mut state = self.lock();
        if state.users.contains_key(user_id) {
            return Err(AuthError::AlreadyEnrolled(user_id.to_owned()));
        }
        state.users.insert(user_id.to_owned(), record.clone());
        Ok(record)
    }

    pub fn is_enrolled(&self, user_id: &str) -> bool {
        self.lock().users.contains_key(user_id)
    }

    pub fn failures(&self, user_id: &str) -> u32 {
        self.lock().failures.get(user_id).copied().unwrap_or(0)
    }

    pub fn is_locked_out(&self, user_id: &str) -> bool {
        let threshold = self.config.lockout_threshold;
        threshold > 0 && self.failures(user_id) >= threshold
    }

    pub fn unlock(&self, user_id: &str) {
        self.lock().failures.remove(user_id);
    }

    /// Issues and stores a fresh challenge laid out from `seed`.
    pub fn issue_challenge(&self, user_id: &str, seed: u64, now: Timestamp) -> Result<ChallengeLayout, AuthError> {
        let challenge_id = format!("{:032x}", rand::rng().random::<u128>());
        let mut state = self.lock();
        if !state.users.contains_key(user_id) {
            return Err(AuthError::UnknownUser(user_id.to_owned()));
        }
        let threshold = self.config.lockout_threshold;
        if threshold > 0 && state.failures.get(user_id).copied().unwrap_or(0) >= threshold {
            return Err(AuthError::LockedOut(user_id.to_owned()));
        }
        let layout = new_layout(
            challenge_id,
            user_id,
            &self.catalog,
            self.policy().grid(),
            seed,
            now,
            self.config.ttl_secs,
        )?;
        state.challenges.insert(layout.challenge_id.clone(), layout.clone());
        Ok(layout)
    }

    pub fn challenge(&self, challenge_id: &str) -> Option<ChallengeLayout> {
        self.lock().challenges.get(challenge_id).cloned()
    }

    /// Consumes the challenge and validates `trace` against it. Exactly one
    /// caller per challenge sees it unconsumed.
    pub fn validate(&self, challenge_id: &str, trace: &CellTrace, now: Timestamp) -> Result<ValidationOutcome, AuthError> {
        let (mut challenge, record) = {
            let mut state = self.lock();
            let stored = state
                .challenges
                .get_mut(challenge_id)
                .ok_or_else(|| AuthError::UnknownChallenge(challenge_id.to_owned()))?;
            let before = stored.clone();
            stored.consumed = true;
            let record = state
                .users
                .get(&before.user_id)
                .cloned()
                .ok_or_else(|| AuthError::UnknownUser(before.user_id.clone()))?;
            (before, record)
        };

        let outcome = validate_trace(trace, &mut challenge, &record, self.policy(), now);

        let mut state = self.lock();
        if outcome.accepted {
            state.failures.remove(&record.user_id);
        } else if outcome.reason.is_drawing_failure() {
            *state.failures.entry(record.user_id).or_insert(0) += 1;
        }
        Ok(outcome)
    }

    /// Drops challenges that expired before `cutoff`.
    pub fn purge_expired(&self, cutoff: Timestamp) -> usize {
        let mut state = self.lock();
        let before = state.challenges.len();
        state.challenges.retain(|_, c| c.expires_at() >= cutoff);
        before - state.challenges.len()
    }
}
