use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use curvepass_core::analysis::{observation_candidates, password_space, pin_space_ratio};
use curvepass_core::catalog::{degrade, generate_synthetic_catalog, load_catalog, write_catalog};
use curvepass_core::{DegradeParams, ImageId};
use curvepass_service::{system_clock, ServiceConfig};

use crate::client::{Client, ServiceError};
use crate::report::{attack_report, space_report, Report};
use crate::simulate::{simulate, SimSpec, SimSummary};

pub fn catalog_gen(count: usize, seed: u64, out: &Path) -> Result<Report> {
    if count == 0 {
        bail!("count must be at least 1");
    }
    let images = generate_synthetic_catalog(count, seed);
    let manifest = write_catalog(&images, out).with_context(|| format!("writing catalog to {}", out.display()))?;
    let mut r = Report::new();
    r.push("images", images.len());
    r.push("manifest", manifest.display());
    Ok(r)
}

/// Writes the degraded rendering of every catalog image as `<id>.degraded.png`.
pub fn catalog_degrade(manifest: &Path, out: &Path, params: &DegradeParams) -> Result<Report> {
    let images = load_catalog(manifest)?;
    fs::create_dir_all(out)?;
    for img in &images {
        let degraded = degrade(img, params);
        fs::write(out.join(format!("{}.png", degraded.id)), degraded.to_png()?)?;
    }
    let mut r = Report::new();
    r.push("images", images.len());
    r.push("contrast", params.contrast());
    r.push("brightness", params.brightness());
    r.push("out", out.display());
    Ok(r)
}

pub fn analyze_space(catalog_size: u64, n: u64, alphabet: u64, pin_length: u32) -> Result<Report> {
    let space = password_space(catalog_size, n)?;
    let ratio = pin_space_ratio(&space, alphabet, pin_length)?;
    let mut r = space_report(&space);
    r.push("pin_alphabet", alphabet);
    r.push("pin_length", pin_length);
    r.push("pin_space_ratio", format!("{ratio:.6}"));
    Ok(r)
}

pub fn analyze_attack(
    observed: &[ImageId],
    n: usize,
    truth: Option<&[ImageId]>,
    catalog_size: Option<u64>,
) -> Result<Report> {
    let attack = observation_candidates(observed, n, truth)?;
    let mut r = attack_report(&attack);
    if let Some(size) = catalog_size {
        let full = password_space(size, n as u64)?;
        r.push("full_space_bits", format!("{:.6}", full.bits));
    }
    Ok(r)
}

/// Where simulated logins are sent.
#[derive(Debug, Clone)]
pub enum Target {
    /// Existing service; optionally enroll the user first.
    Remote { url: String, enroll: bool },
    /// Service started on a loopback port for the duration of the run.
    InProcess { config: Option<PathBuf> },
}

pub async fn simulate_login(target: &Target, spec: &SimSpec) -> Result<Report> {
    let summary = match target {
        Target::Remote { url, enroll } => {
            let client = Client::new(url.clone());
            if *enroll {
                enroll_tolerating_existing(&client, spec).await?;
            }
            SimSummary::from_runs(&simulate(&client, spec).await?)
        }
        Target::InProcess { config } => {
            let mut cfg = match config {
                Some(path) => ServiceConfig::from_file(path)?,
                None => ServiceConfig::default(),
            };
            cfg.listen = ([127, 0, 0, 1], 0).into();
            cfg.data_dir = None;
            cfg.test_mode = true;
            cfg.seed = Some(spec.seed);
            // Rejections are the point of noisy runs; don't lock the user out.
            cfg.lockout_threshold = 0;
            let (addr, server) = curvepass_service::spawn(&cfg, system_clock()).await?;
            let client = Client::new(format!("http://{addr}"));
            let result = async {
                client.enroll(&spec.user, &spec.password).await?;
                simulate(&client, spec).await
            }
            .await;
            server.abort();
            SimSummary::from_runs(&result?)
        }
    };
    let mut report = Report::new();
    report.push("user", &spec.user);
    report.push("noise", spec.noise);
    report.push("seed", spec.seed);
    for line in summary.to_report().to_string().lines() {
        if let Some((k, v)) = line.split_once('=') {
            report.push(k, v);
        }
    }
    Ok(report)
}

async fn enroll_tolerating_existing(client: &Client, spec: &SimSpec) -> Result<()> {
    match client.enroll(&spec.user, &spec.password).await {
        Ok(_) => Ok(()),
        Err(e) if e.downcast_ref::<ServiceError>().is_some_and(|s| s.code == "already_enrolled") => Ok(()),
        Err(e) => Err(e),
    }
}

pub async fn enroll(url: &str, user: &str, images: &[ImageId]) -> Result<Report> {
    let resp = Client::new(url).enroll(user, images).await?;
    let mut r = Report::new();
    r.push("user", resp.user_id);
    r.push("created_at", resp.created_at);
    Ok(r)
}
