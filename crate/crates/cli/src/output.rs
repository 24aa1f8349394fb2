use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use fracosc::report::Table;

use crate::config::RunConfig;
use crate::error::CliError;

pub const LOCK: &str = ".fracosc.lock";
pub const RESOLVED: &str = "resolved-config.toml";

/// An output directory held for the lifetime of one run.
pub struct OutDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutDir {
    /// Creates the directory and takes its lock; a second run on the same
    /// directory fails instead of interleaving files.
    pub fn acquire(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        let lock = root.join(LOCK);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                return Err(CliError::Validation(format!(
                    "{} is locked by another run (remove {} if that run is gone)",
                    root.display(),
                    lock.display()
                )))
            }
            Err(e) => return Err(CliError::io(&lock, e)),
        }
        Ok(OutDir { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn table(&mut self, name: &str, t: &Table) -> Result<(), CliError> {
        let path = self.path(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        let f = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        t.write_csv(f)?;
        self.written.push(path);
        Ok(())
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.path(name);
        fs::write(&path, body).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    pub fn resolved_config(&mut self, cfg: &RunConfig) -> Result<(), CliError> {
        self.text(RESOLVED, &cfg.to_toml()?)
    }
}

impl Drop for OutDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(self.root.join(LOCK));
    }
}
