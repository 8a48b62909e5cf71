//! Run configuration, CSV tables, VTK output and atomic file writes.

mod config;
mod table;
mod vtk;

use std::io::Write;
use std::path::{Path, PathBuf};

pub use config::{
    parse_config, parse_config_with, parse_override, DataSpec, DistributionSpec, DomainSpec, OutputSpec, RunConfig,
    SolverSpec,
};
pub use config::read_text;
pub use table::{
    lebesgue_csv, nodal_field_csv, parse_knots, parse_nodal_field, parse_triangle_values, reconstruction_csv,
    sweep_csv,
};
pub use vtk::vtk_legacy;

use crate::error::{Error, Result};

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Files collected during a run and written only once everything
/// succeeded.
#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Artifacts {
    pub fn add(&mut self, path: PathBuf, bytes: Vec<u8>) {
        self.files.push((path, bytes));
    }

    pub fn paths(&self) -> impl Iterator<Item = &Path> {
        self.files.iter().map(|(p, _)| p.as_path())
    }

    pub fn commit(self) -> Result<()> {
        for (path, bytes) in &self.files {
            write_atomic(path, bytes)?;
        }
        Ok(())
    }
}

/// `TERM=<name> VALUE=<value>` with 17 significant digits.
pub fn term_line(name: &str, value: f64) -> String {
    // adding zero turns -0 into 0
    format!("TERM={name} VALUE={:.16e}", value + 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn term_line_has_17_digits() {
        assert_eq!(term_line("E", 0.25), "TERM=E VALUE=2.5000000000000000e-1");
        let x = 1.0 / 3.0;
        let line = term_line("X", x);
        let v: f64 = line.split("VALUE=").nth(1).unwrap().parse().unwrap();
        assert_eq!(v, x);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/a.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path().join("sub")).unwrap().count(), 1);
    }
}
