//! Artifact writing and the error report.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use infdiv::{Error, Result};
use serde_json::{json, Value};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const OUT_DIR_ENV: &str = "INFDIV_OUT_DIR";

/// Explicit directory, else `$INFDIV_OUT_DIR`, else the working directory.
pub fn resolve_out_dir(explicit: Option<&Path>) -> PathBuf {
    explicit
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Collects artifacts written into one directory.
pub struct Artifacts {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
        Ok(Self { dir, written: Vec::new() })
    }

    /// Create `name` and hand a buffered writer to `fill`.
    pub fn write_with<F>(&mut self, name: &str, fill: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<()>,
    {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| io_error(&path, e))?;
        let mut out = BufWriter::new(file);
        fill(&mut out)?;
        out.flush().map_err(|e| io_error(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    /// JSON report with the tool version and resolved configuration
    /// embedded next to `body`'s fields.
    pub fn write_report(&mut self, name: &str, config: &Value, body: Value) -> Result<()> {
        let mut report = json!({ "version": VERSION, "config": config });
        if let (Value::Object(target), Value::Object(fields)) = (&mut report, body) {
            target.extend(fields);
        }
        self.write_with(name, |out| {
            serde_json::to_writer_pretty(&mut *out, &report).map_err(|e| Error::Io(e.to_string()))?;
            writeln!(out).map_err(Error::from)
        })
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

/// I/O failures exit with 1, everything else the library rejects with 2.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Io(_) => 1,
        _ => 2,
    }
}

pub fn error_report(e: &Error) -> Value {
    json!({ "error": { "code": e.code(), "message": e.to_string() } })
}
