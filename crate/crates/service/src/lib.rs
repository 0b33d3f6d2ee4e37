//! HTTP front end for the curvepass engine.
//!
//! Accounts persist in a JSON file under the configured data directory;
//! challenges live in memory only. Strokes arrive as raw pixel polylines and
//! are discretized here, never on the client.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{ensure, Context, Result};
use bytes::Bytes;
use curvepass_core::catalog::{degrade, generate_synthetic_catalog, load_catalog};
use curvepass_core::{Authenticator, CatalogImage, ImageId, Timestamp};
use tokio::net::TcpListener;
use tokio::task::JoinHandle;

pub mod api;
pub mod config;
pub mod store;

pub use api::router;
pub use config::ServiceConfig;
use store::AccountFile;

/// Expired challenges are kept this long so late logins still see `expired`.
pub const CHALLENGE_RETENTION_SECS: u64 = 3600;

pub type Clock = Arc<dyn Fn() -> Timestamp + Send + Sync>;

pub fn system_clock() -> Clock {
    Arc::new(|| {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    })
}

pub struct AppState {
    pub engine: Authenticator,
    accounts: AccountFile,
    /// PNG bytes of the degraded rendering, per catalog id.
    degraded: HashMap<ImageId, Bytes>,
    clock: Clock,
    seed: Option<u64>,
    issued: AtomicU64,
}

impl AppState {
    pub fn build(config: &ServiceConfig, clock: Clock) -> Result<Self> {
        let engine_config = config.engine()?;
        let grid = engine_config.policy.grid();
        let catalog = load_images(config, grid.cell_count())?;
        let params = config.degrade()?;
        let degraded = catalog
            .iter()
            .map(|img| Ok((img.id.clone(), Bytes::from(degrade(img, &params).to_png()?))))
            .collect::<Result<HashMap<_, _>>>()?;

        let accounts = AccountFile::open(config.data_dir.as_deref()).context("opening data directory")?;
        let snapshot = accounts.load().context("loading accounts")?;
        let ids = catalog.into_iter().map(|img| img.id).collect();
        let engine = Authenticator::new(ids, engine_config)?.with_accounts(snapshot);

        Ok(Self {
            engine,
            accounts,
            degraded,
            clock,
            seed: config.effective_seed(),
            issued: AtomicU64::new(0),
        })
    }

    pub fn now(&self) -> Timestamp {
        (self.clock)()
    }

    fn next_seed(&self) -> u64 {
        let k = self.issued.fetch_add(1, Ordering::Relaxed);
        match self.seed {
            Some(base) => base.wrapping_add(k),
            None => rand::random(),
        }
    }

    fn persist(&self) {
        if let Err(err) = self.accounts.save_with(|| self.engine.accounts()) {
            tracing::error!(%err, "failed to write accounts");
        }
    }
}

fn load_images(config: &ServiceConfig, cells: usize) -> Result<Vec<CatalogImage>> {
    let mut images = match &config.catalog_manifest {
        Some(path) => load_catalog(path).with_context(|| format!("loading catalog {}", path.display()))?,
        None => generate_synthetic_catalog(cells, config.catalog_seed),
    };
    ensure!(
        images.len() >= cells,
        "catalog has {} images, the grid needs {cells}",
        images.len()
    );
    images.truncate(cells);
    Ok(images)
}

/// Binds `config.listen` and serves in the background.
pub async fn spawn(config: &ServiceConfig, clock: Clock) -> Result<(SocketAddr, JoinHandle<()>)> {
    let state = Arc::new(AppState::build(config, clock)?);
    let listener = TcpListener::bind(config.listen)
        .await
        .with_context(|| format!("binding {}", config.listen))?;
    let addr = listener.local_addr()?;
    let app = router(state);
    let handle = tokio::spawn(async move {
        if let Err(err) = axum::serve(listener, app).await {
            tracing::error!(%err, "server stopped");
        }
    });
    Ok((addr, handle))
}

/// Serves until interrupted.
pub async fn serve(config: &ServiceConfig) -> Result<()> {
    let state = Arc::new(AppState::build(config, system_clock())?);
    let listener = TcpListener::bind(config.listen)
        .await
        .with_context(|| format!("binding {}", config.listen))?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
