//! JSONL artifact files. Every file starts with a header object embedding
//! the run config that produced it; data lines follow, one object each.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::LenientError;

#[derive(Debug, Serialize, serde::Deserialize)]
struct Header {
    run_config: RunConfig,
}

pub fn write_jsonl<T: Serialize>(
    path: &Path,
    config: &RunConfig,
    items: impl IntoIterator<Item = T>,
) -> Result<(), LenientError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(&mut f, &Header { run_config: config.clone() })?;
    f.write_all(b"\n")?;
    for item in items {
        serde_json::to_writer(&mut f, &item)?;
        f.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a JSONL artifact, returning the embedded config and the items.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<(RunConfig, Vec<T>), LenientError> {
    let f = BufReader::new(std::fs::File::open(path)?);
    let mut lines = f.lines();
    let header_line = lines
        .next()
        .ok_or_else(|| LenientError::Config(format!("{}: empty file", path.display())))??;
    let header: Header = serde_json::from_str(&header_line)?;
    let mut items = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        items.push(serde_json::from_str(&line)?);
    }
    Ok((header.run_config, items))
}
