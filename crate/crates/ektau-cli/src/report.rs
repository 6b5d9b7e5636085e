//! Output formatting: deterministic float rendering and file writing.

use crate::CliError;
use std::path::Path;

/// Shortest round-tripping exponential form; byte-stable for a given
/// value, so identical runs produce identical files.
pub fn fmt_e(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:e}")
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}
