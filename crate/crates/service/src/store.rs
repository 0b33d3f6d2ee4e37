//! On-disk account state.
//!
//! Enrollments and failure counters live in one JSON file that is replaced
//! atomically on every change. Challenges are never written to disk.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use curvepass_core::auth::AccountSnapshot;

pub const ACCOUNTS_FILE: &str = "accounts.json";

#[derive(Debug)]
pub struct AccountFile {
    path: Option<PathBuf>,
    write_lock: Mutex<()>,
}

impl AccountFile {
    /// Store rooted at `dir`, or a no-op store when `dir` is `None`.
    pub fn open(dir: Option<&Path>) -> io::Result<Self> {
        let path = match dir {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                Some(dir.join(ACCOUNTS_FILE))
            }
            None => None,
        };
        Ok(Self {
            path,
            write_lock: Mutex::new(()),
        })
    }

    pub fn load(&self) -> io::Result<AccountSnapshot> {
        let Some(path) = &self.path else {
            return Ok(AccountSnapshot::default());
        };
        match fs::read(path) {
            Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(AccountSnapshot::default()),
            Err(e) => Err(e),
        }
    }

    /// Writes the snapshot produced by `take`. The snapshot is taken while
    /// holding the write lock so a later writer never stores older state.
    pub fn save_with(&self, take: impl FnOnce() -> AccountSnapshot) -> io::Result<()> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        let _guard = self.write_lock.lock().unwrap_or_else(|e| e.into_inner());
        let snapshot = take();
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        serde_json::to_writer_pretty(&mut tmp, &snapshot)?;
        tmp.write_all(b"\n")?;
        tmp.as_file().sync_all()?;
        tmp.persist(path).map_err(|e| e.error)?;
        Ok(())
    }
}
