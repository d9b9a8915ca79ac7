//! CSV tables and the run manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

/// Shortest representation that reads back to the same `f64`, switching
/// to exponent notation for very small or large magnitudes.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Buffered CSV writer with a fixed header.
pub struct Table {
    inner: csv::Writer<BufWriter<File>>,
}

impl Table {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self, CliError> {
        let file = File::create(path)
            .map_err(|e| CliError::Output(format!("cannot create {}: {e}", path.display())))?;
        let mut inner = csv::Writer::from_writer(BufWriter::new(file));
        inner.write_record(header)?;
        Ok(Self { inner })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.inner.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.inner.flush()?;
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    software: &'static str,
    version: &'static str,
    command: &'a str,
    seed: u64,
    config_sha256: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    data_sha256: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    source_manifest_sha256: Option<&'a str>,
    config: &'a RunConfig,
}

/// Extra provenance recorded next to the configuration.
#[derive(Debug, Default)]
pub struct Provenance<'a> {
    pub data_sha256: Option<&'a str>,
    pub source_manifest_sha256: Option<&'a str>,
}

pub fn write_manifest(
    dir: &Path,
    command: &str,
    cfg: &RunConfig,
    prov: Provenance<'_>,
) -> Result<(), CliError> {
    let manifest = Manifest {
        software: "erlmix",
        version: env!("CARGO_PKG_VERSION"),
        command,
        seed: cfg.seed,
        config_sha256: sha256_hex(serde_json::to_string(cfg)?.as_bytes()),
        data_sha256: prov.data_sha256,
        source_manifest_sha256: prov.source_manifest_sha256,
        config: cfg,
    };
    write_json(&dir.join("manifest.json"), &manifest)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut f = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}
