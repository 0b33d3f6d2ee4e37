//! Service configuration: one TOML file plus environment overrides.

use std::env;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use curvepass_core::auth::{DEFAULT_LOCKOUT_THRESHOLD, DEFAULT_PASSWORD_LENGTH, DEFAULT_TTL_SECS};
use curvepass_core::{DegradeParams, EngineConfig, GridSpec, Tolerance, ValidationPolicy};
use serde::{Deserialize, Serialize};

pub const ENV_CONFIG: &str = "CURVEPASS_CONFIG";
pub const ENV_TEST_SEED: &str = "CURVEPASS_TEST_SEED";
pub const ENV_TEST_MODE: &str = "CURVEPASS_TEST_MODE";
pub const ENV_LISTEN: &str = "CURVEPASS_LISTEN";
pub const ENV_DATA_DIR: &str = "CURVEPASS_DATA_DIR";

/// Nominal pixel size of one cell. Only the engine's bookkeeping uses it;
/// logins are discretized against the canvas size the client reports.
const NOMINAL_CELL_PX: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToleranceMode {
    Absolute,
    Relative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    /// Directory holding the account file. `None` keeps accounts in memory.
    pub data_dir: Option<PathBuf>,
    /// Catalog manifest. `None` uses a synthetic catalog.
    pub catalog_manifest: Option<PathBuf>,
    pub catalog_seed: u64,
    pub rows: u32,
    pub cols: u32,
    pub password_length: usize,
    pub tolerance: ToleranceMode,
    pub relative_factor: f64,
    pub contrast: f64,
    pub brightness: f64,
    pub ttl_secs: u64,
    pub lockout_threshold: u32,
    /// Enables seeded, reproducible challenge layouts.
    pub test_mode: bool,
    pub seed: Option<u64>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        let degrade = DegradeParams::default();
        Self {
            listen: SocketAddr::from(([127, 0, 0, 1], 8080)),
            data_dir: None,
            catalog_manifest: None,
            catalog_seed: 7,
            rows: 4,
            cols: 6,
            password_length: DEFAULT_PASSWORD_LENGTH,
            tolerance: ToleranceMode::Absolute,
            relative_factor: 1.5,
            contrast: degrade.contrast(),
            brightness: degrade.brightness(),
            ttl_secs: DEFAULT_TTL_SECS,
            lockout_threshold: DEFAULT_LOCKOUT_THRESHOLD,
            test_mode: false,
            seed: None,
        }
    }
}

impl ServiceConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Reads `$CURVEPASS_CONFIG` (or defaults) and applies environment overrides.
    pub fn from_env() -> Result<Self> {
        let mut config = match env::var_os(ENV_CONFIG) {
            Some(path) => Self::from_file(Path::new(&path))?,
            None => Self::default(),
        };
        config.apply_overrides(|key| env::var(key).ok())?;
        Ok(config)
    }

    pub fn apply_overrides(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<()> {
        if let Some(v) = get(ENV_LISTEN) {
            self.listen = v.parse().with_context(|| format!("{ENV_LISTEN}={v}"))?;
        }
        if let Some(v) = get(ENV_DATA_DIR) {
            self.data_dir = Some(PathBuf::from(v));
        }
        if let Some(v) = get(ENV_TEST_MODE) {
            self.test_mode = matches!(v.as_str(), "1" | "true" | "yes");
        }
        if let Some(v) = get(ENV_TEST_SEED) {
            self.seed = Some(v.parse().with_context(|| format!("{ENV_TEST_SEED}={v}"))?);
        }
        Ok(())
    }

    /// Seed for challenge layouts; ignored outside test mode.
    pub fn effective_seed(&self) -> Option<u64> {
        self.seed.filter(|_| self.test_mode)
    }

    pub fn grid(&self) -> Result<GridSpec> {
        Ok(GridSpec::new(
            self.rows,
            self.cols,
            f64::from(self.cols) * NOMINAL_CELL_PX,
            f64::from(self.rows) * NOMINAL_CELL_PX,
        )?)
    }

    pub fn engine(&self) -> Result<EngineConfig> {
        let tolerance = match self.tolerance {
            ToleranceMode::Absolute => Tolerance::Absolute,
            ToleranceMode::Relative => Tolerance::Relative {
                factor: self.relative_factor,
            },
        };
        let policy = ValidationPolicy::new(tolerance, self.password_length, self.grid()?)?;
        if self.ttl_secs == 0 {
            bail!("ttl_secs must be positive");
        }
        Ok(EngineConfig {
            policy,
            ttl_secs: self.ttl_secs,
            lockout_threshold: self.lockout_threshold,
        })
    }

    pub fn degrade(&self) -> Result<DegradeParams> {
        Ok(DegradeParams::new(self.contrast, self.brightness)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_prototype() {
        let c = ServiceConfig::default();
        let engine = c.engine().unwrap();
        assert_eq!(engine.policy.grid().rows(), 4);
        assert_eq!(engine.policy.grid().cols(), 6);
        assert_eq!(engine.policy.n(), 5);
        assert_eq!(engine.ttl_secs, 120);
        assert_eq!(engine.lockout_threshold, 3);
        assert_eq!(c.degrade().unwrap(), DegradeParams::default());
    }

    #[test]
    fn parses_toml_and_rejects_unknown_keys() {
        let c: ServiceConfig = toml::from_str(
            r#"
            rows = 3
            cols = 3
            password_length = 2
            tolerance = "relative"
            relative_factor = 2.0
            "#,
        )
        .unwrap();
        assert_eq!(c.engine().unwrap().policy.tolerance(), Tolerance::Relative { factor: 2.0 });
        assert!(toml::from_str::<ServiceConfig>("colour = 1").is_err());
    }

    #[test]
    fn seed_needs_test_mode() {
        let mut c = ServiceConfig::default();
        c.apply_overrides(|k| (k == ENV_TEST_SEED).then(|| "42".to_owned())).unwrap();
        assert_eq!(c.seed, Some(42));
        assert_eq!(c.effective_seed(), None);
        c.apply_overrides(|k| (k == ENV_TEST_MODE).then(|| "1".to_owned())).unwrap();
        assert_eq!(c.effective_seed(), Some(42));
    }

    #[test]
    fn invalid_values_are_reported() {
        let c = ServiceConfig { relative_factor: 0.5, tolerance: ToleranceMode::Relative, ..Default::default() };
        assert!(c.engine().is_err());
        let c = ServiceConfig { contrast: 0.0, ..Default::default() };
        assert!(c.degrade().is_err());
        let mut c = ServiceConfig::default();
        assert!(c.apply_overrides(|k| (k == ENV_LISTEN).then(|| "nope".to_owned())).is_err());
    }
}
