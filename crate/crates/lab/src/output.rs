//! CSV and JSON emission. Every CSV starts with a versioned comment line.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{LabError, LabResult};

pub const CSV_VERSION: u32 = 1;

/// A CSV file with the `# sbvp <schema> v<N> ...` header already written.
pub struct CsvOut {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl CsvOut {
    pub fn create(path: &Path, schema: &str, config_hash: &str, seed: u64, columns: &[&str]) -> LabResult<Self> {
        let mut file = File::create(path).map_err(|e| LabError::io(path, e))?;
        writeln!(file, "# sbvp {schema} v{CSV_VERSION} config_hash={config_hash} seed={seed}").map_err(|e| LabError::io(path, e))?;
        let mut writer = csv::Writer::from_writer(file);
        writer.write_record(columns)?;
        Ok(Self {
            path: path.to_path_buf(),
            writer,
        })
    }

    pub fn row<I, T>(&mut self, fields: I) -> LabResult<()>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> LabResult<()> {
        self.writer.flush().map_err(|e| LabError::io(&self.path, e))
    }
}

/// Shortest round-trip decimal of a float.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> LabResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| LabError::io(path, e))
}

pub fn ensure_dir(dir: &Path) -> LabResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))
}
