//! Scripted logins through the HTTP API.
//!
//! Each run requests a challenge, draws the shortest king-move chain from
//! the head through the pass-images to the tail as a stroke through cell
//! centers, optionally jitters its vertices, and submits it.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use curvepass_core::grid::{chain_min_length, chain_trace, discretize, polyline_through, trace_length};
use curvepass_core::{Cell, GridSpec, ImageId, Point, Polyline, Reason};
use curvepass_service::api::{Canvas, ChallengeResponse};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tokio::task::JoinSet;

use crate::client::{Client, ServiceError};

/// Canvas pixels per cell used by the simulated client.
pub const CELL_PX: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Noise {
    Ideal,
    /// Uniform vertex noise with this standard deviation, in pixels.
    Jitter(f64),
}

impl FromStr for Noise {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "ideal" {
            return Ok(Noise::Ideal);
        }
        let sigma = s
            .strip_prefix("jitter:")
            .ok_or_else(|| format!("expected `ideal` or `jitter:<sigma>`, got `{s}`"))?;
        let sigma: f64 = sigma.parse().map_err(|e| format!("bad sigma `{sigma}`: {e}"))?;
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(format!("sigma must be >= 0, got {sigma}"));
        }
        Ok(Noise::Jitter(sigma))
    }
}

impl fmt::Display for Noise {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Noise::Ideal => f.write_str("ideal"),
            Noise::Jitter(s) => write!(f, "jitter:{s}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimSpec {
    pub user: String,
    pub password: Vec<ImageId>,
    pub runs: usize,
    pub noise: Noise,
    pub seed: u64,
    pub parallel: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub reason: Reason,
    pub trace_length: usize,
    /// Shortest possible trace for the run's challenge.
    pub chain_minimum: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimSummary {
    pub runs: usize,
    pub accepted: usize,
    pub lengths: Vec<usize>,
    pub chain_minimums: Vec<usize>,
    pub reasons: BTreeMap<&'static str, usize>,
}

impl SimSummary {
    pub fn from_runs(results: &[RunResult]) -> Self {
        let mut summary = SimSummary {
            runs: results.len(),
            ..Default::default()
        };
        for r in results {
            summary.accepted += usize::from(r.reason == Reason::Ok);
            summary.lengths.push(r.trace_length);
            summary.chain_minimums.push(r.chain_minimum);
            *summary.reasons.entry(r.reason.as_str()).or_insert(0) += 1;
        }
        summary
    }

    pub fn accept_rate(&self) -> f64 {
        if self.runs == 0 {
            0.0
        } else {
            self.accepted as f64 / self.runs as f64
        }
    }

    pub fn mean_length(&self) -> f64 {
        mean(&self.lengths)
    }

    pub fn mean_chain_minimum(&self) -> f64 {
        mean(&self.chain_minimums)
    }

    pub fn min_length(&self) -> usize {
        self.lengths.iter().copied().min().unwrap_or(0)
    }

    pub fn max_length(&self) -> usize {
        self.lengths.iter().copied().max().unwrap_or(0)
    }

    pub fn to_report(&self) -> crate::report::Report {
        let mut r = crate::report::Report::new();
        r.push("runs", self.runs);
        r.push("accepted", self.accepted);
        r.push("accept_rate", format!("{:.4}", self.accept_rate()));
        r.push("mean_length", format!("{:.3}", self.mean_length()));
        r.push("min_length", self.min_length());
        r.push("max_length", self.max_length());
        r.push("mean_chain_minimum", format!("{:.3}", self.mean_chain_minimum()));
        for (reason, count) in &self.reasons {
            r.push(format!("reason.{reason}"), count);
        }
        r
    }
}

fn mean(xs: &[usize]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<usize>() as f64 / xs.len() as f64
    }
}

/// Canvas geometry the simulated client draws on.
pub fn canvas_grid(ch: &ChallengeResponse) -> Result<GridSpec> {
    Ok(GridSpec::new(
        ch.grid.rows,
        ch.grid.cols,
        f64::from(ch.grid.cols) * CELL_PX,
        f64::from(ch.grid.rows) * CELL_PX,
    )?)
}

/// Stroke through the shortest chain head → password → tail, as cell centers.
pub fn ideal_stroke(ch: &ChallengeResponse, password: &[ImageId], grid: &GridSpec) -> Result<Polyline> {
    let trace = chain_trace(&waypoints(ch, password)?)?;
    Ok(polyline_through(trace.cells(), grid)?)
}

/// Cells of head, password and tail on the challenge grid.
pub fn waypoints(ch: &ChallengeResponse, password: &[ImageId]) -> Result<Vec<Cell>> {
    let cells: HashMap<&ImageId, Cell> = ch
        .placement
        .iter()
        .map(|p| (&p.image_id, Cell::new(p.cell[0], p.cell[1])))
        .collect();
    let locate = |id: &ImageId| cells.get(id).copied().ok_or_else(|| anyhow!("image {id} not on the challenge grid"));
    let mut waypoints = vec![locate(&ch.head_image)?];
    for id in password {
        waypoints.push(locate(id)?);
    }
    waypoints.push(locate(&ch.tail_image)?);
    Ok(waypoints)
}

/// Moves every vertex by independent uniform noise of standard deviation
/// `sigma`, clamped to the canvas.
pub fn jitter(stroke: &Polyline, sigma: f64, grid: &GridSpec, rng: &mut impl Rng) -> Polyline {
    let half_width = sigma * 3f64.sqrt();
    let mut shake = |v: f64, max: f64| {
        let d = if half_width > 0.0 {
            rng.random_range(-half_width..=half_width)
        } else {
            0.0
        };
        (v + d).clamp(0.0, max)
    };
    let points = stroke
        .points()
        .iter()
        .map(|p| Point::new(shake(p.x, grid.canvas_width()), shake(p.y, grid.canvas_height())))
        .collect();
    Polyline::new(points).expect("jitter keeps the point count")
}

fn run_rng(seed: u64, run: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (run as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

async fn one_run(client: &Client, spec: &SimSpec, ch: ChallengeResponse, run: usize) -> Result<RunResult> {
    let grid = canvas_grid(&ch)?;
    let chain_minimum = chain_min_length(&waypoints(&ch, &spec.password)?);
    let mut stroke = ideal_stroke(&ch, &spec.password, &grid)?;
    if let Noise::Jitter(sigma) = spec.noise {
        stroke = jitter(&stroke, sigma, &grid, &mut run_rng(spec.seed, run));
    }
    let length = trace_length(&discretize(&stroke, &grid)?);
    let polyline = stroke.points().iter().map(|p| [p.x, p.y]).collect();
    let canvas = Canvas {
        width: grid.canvas_width(),
        height: grid.canvas_height(),
    };
    let outcome = client.login(&ch.challenge_id, polyline, canvas).await?;
    Ok(RunResult {
        reason: outcome.reason,
        trace_length: length,
        chain_minimum,
    })
}

/// Runs `spec.runs` logins, at most `spec.parallel` at a time. Challenges
/// are requested in run order so a seeded service gives repeatable results
/// at any parallelism. Results are returned in run order.
pub async fn simulate(client: &Client, spec: &SimSpec) -> Result<Vec<RunResult>> {
    if spec.runs == 0 {
        bail!("runs must be at least 1");
    }
    let parallel = spec.parallel.max(1);
    let client = Arc::new(client.clone());
    let spec_arc = Arc::new(spec.clone());
    let mut results: Vec<Option<RunResult>> = vec![None; spec.runs];
    let mut tasks = JoinSet::new();
    let mut next = 0;
    while next < spec.runs || !tasks.is_empty() {
        while next < spec.runs && tasks.len() < parallel {
            let ch = client.challenge(&spec.user).await.map_err(|e| friendly(e, spec))?;
            let (client, spec, run) = (Arc::clone(&client), Arc::clone(&spec_arc), next);
            tasks.spawn(async move { (run, one_run(&client, &spec, ch, run).await) });
            next += 1;
        }
        if let Some(joined) = tasks.join_next().await {
            let (run, result) = joined.context("simulation task panicked")?;
            results[run] = Some(result.map_err(|e| friendly(e, spec))?);
        }
    }
    Ok(results.into_iter().map(|r| r.expect("every run finished")).collect())
}

fn friendly(e: anyhow::Error, spec: &SimSpec) -> anyhow::Error {
    match e.downcast_ref::<ServiceError>() {
        Some(se) if se.code == "unknown_user" => anyhow!("unknown user {}", spec.user),
        _ => e,
    }
}
