use anyhow::Result;
use curvepass_service::ServiceConfig;
use tracing_subscriber::EnvFilter;

#[tokio::main]
async fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    let config = ServiceConfig::from_env()?;
    curvepass_service::serve(&config).await
}
