//! Write-temp-then-rename output.

use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Writes `path` atomically: the content goes to a temporary file in the
/// same directory which is renamed over `path` only after `fill` succeeds
/// and the data is flushed. On any error `path` is untouched and the
/// temporary file is removed.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let output_err = |message: String| Error::Output {
        path: path.to_path_buf(),
        message,
    };
    let tmp = tempfile::Builder::new()
        .prefix(".cremer-")
        .suffix(".tmp")
        .tempfile_in(dir)
        .map_err(|e| output_err(e.to_string()))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        fill(&mut w)?;
        w.flush().map_err(|e| output_err(e.to_string()))?;
    }
    tmp.as_file()
        .sync_all()
        .map_err(|e| output_err(e.to_string()))?;
    tmp.persist(path)
        .map_err(|e| output_err(e.error.to_string()))?;
    Ok(())
}

pub fn write_bytes_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    write_atomic(path, |w| {
        w.write_all(bytes).map_err(|e| Error::Output {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    })
}
