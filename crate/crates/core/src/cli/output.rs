//! Output files. Each begins with a header carrying the tool version, the
//! SHA-256 of the problem file, the seed and the effective configuration, so
//! that runs with equal headers produce identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::problem::ProblemFile;

#[derive(Debug, Clone, Serialize)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub problem_sha256: String,
    pub seed: u64,
    pub force: bool,
    pub config: ProblemFile,
}

impl Header {
    pub fn new(command: &str, problem_bytes: &[u8], config: &ProblemFile, force: bool) -> Self {
        Header {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            problem_sha256: hex::encode(Sha256::digest(problem_bytes)),
            seed: config.solver.seed,
            force,
            config: config.clone(),
        }
    }

    fn json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::input(format!("cannot serialize header: {e}")))
    }
}

pub struct OutDir {
    dir: PathBuf,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::from(e).context(format!("creating {}", dir.display())))?;
        Ok(OutDir { dir: dir.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn open(&self, name: &str) -> Result<BufWriter<File>> {
        let p = self.path(name);
        let f = File::create(&p).map_err(|e| Error::from(e).context(format!("creating {}", p.display())))?;
        Ok(BufWriter::new(f))
    }

    /// CSV with the header as a `#` comment line.
    pub fn write_field<S: crate::real::Real>(&self, name: &str, header: &Header, field: &Field<S>) -> Result<PathBuf> {
        let mut w = self.open(name)?;
        writeln!(w, "# {}", header.json()?)?;
        field.write_csv(&mut w)?;
        w.flush()?;
        Ok(self.path(name))
    }

    /// Line-delimited JSON: `{"header": ...}` then one record per line.
    pub fn write_records<T: Serialize>(&self, name: &str, header: &Header, records: &[T]) -> Result<PathBuf> {
        let mut w = self.open(name)?;
        writeln!(w, "{{\"header\":{}}}", header.json()?)?;
        for r in records {
            let line = serde_json::to_string(r).map_err(|e| Error::input(format!("cannot serialize record: {e}")))?;
            writeln!(w, "{line}")?;
        }
        w.flush()?;
        Ok(self.path(name))
    }
}
