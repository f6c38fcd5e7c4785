//! File plumbing shared by the subcommands. Everything written here is
//! deterministic: serde_json's shortest round-trip float formatting, no
//! timestamps, struct-ordered keys.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

pub fn ensure_outdir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file =
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)
        .with_context(|| format!("cannot serialize {}", path.display()))?;
    writeln!(w).and_then(|_| w.flush()).with_context(|| format!("write {}", path.display()))?;
    Ok(())
}

/// Runs a core CSV writer against a buffered file, attaching the path to
/// any error.
pub fn write_csv_with<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> ruin_core::Result<()>,
{
    let file =
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut w = BufWriter::new(file);
    body(&mut w).with_context(|| format!("cannot write {}", path.display()))?;
    w.flush().with_context(|| format!("flush {}", path.display()))?;
    Ok(())
}
