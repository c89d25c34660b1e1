//! Reproducible batches of latency draws and their on-disk formats.

use std::fmt;
use std::io::{self, BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dlpp::DlppSampler;
use crate::error::{Error, Result};
use crate::model::QueueSystem;
use crate::rmt::RmtSampler;
use crate::rng::{draw_rng, DrawRng};

/// Salts keep the two samplers on unrelated streams for the same master seed.
pub const DLPP_SALT: u64 = 0x646c_7070;
pub const RMT_SALT: u64 = 0x726d_7400;

/// A source of independent `L(m, n)` draws.
pub trait LatencySampler: Sync {
    fn kind(&self) -> SamplerKind;
    fn draw_one(&self, rng: &mut DrawRng) -> Result<f64>;
}

impl LatencySampler for DlppSampler {
    fn kind(&self) -> SamplerKind {
        SamplerKind::Dlpp
    }
    fn draw_one(&self, rng: &mut DrawRng) -> Result<f64> {
        Ok(self.draw(rng))
    }
}

impl LatencySampler for RmtSampler {
    fn kind(&self) -> SamplerKind {
        SamplerKind::Rmt
    }
    fn draw_one(&self, rng: &mut DrawRng) -> Result<f64> {
        self.draw(rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Dlpp,
    Rmt,
}

impl SamplerKind {
    pub fn salt(self) -> u64 {
        match self {
            SamplerKind::Dlpp => DLPP_SALT,
            SamplerKind::Rmt => RMT_SALT,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SamplerKind::Dlpp => "dlpp",
            SamplerKind::Rmt => "rmt",
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SamplerKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "dlpp" => Ok(SamplerKind::Dlpp),
            "rmt" => Ok(SamplerKind::Rmt),
            other => Err(format!("unknown sampler '{other}' (expected dlpp or rmt)")),
        }
    }
}

/// Latency draws tagged with where they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub sampler: SamplerKind,
    pub seed: u64,
    pub instance_hash: String,
    pub values: Vec<f64>,
}

/// Draw `i` uses its own stream derived from `(seed, sampler, i)`, so the
/// result does not depend on the thread count.
pub fn run_sampler<S: LatencySampler>(sampler: &S, count: usize, seed: u64) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::InvalidCount);
    }
    let salt = sampler.kind().salt();
    (0..count as u64)
        .into_par_iter()
        .map(|i| sampler.draw_one(&mut draw_rng(seed, salt, i)))
        .collect()
}

pub fn sample_batch(
    sys: &QueueSystem,
    kind: SamplerKind,
    count: usize,
    seed: u64,
) -> Result<Batch> {
    sys.validate()?;
    let values = match kind {
        SamplerKind::Dlpp => run_sampler(&DlppSampler::new(sys), count, seed)?,
        SamplerKind::Rmt => run_sampler(&RmtSampler::new(sys), count, seed)?,
    };
    Ok(Batch {
        sampler: kind,
        seed,
        instance_hash: sys.instance_hash(),
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BatchFormat {
    Csv,
    Json,
}

impl FromStr for BatchFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "csv" => Ok(BatchFormat::Csv),
            "json" => Ok(BatchFormat::Json),
            other => Err(format!("unknown format '{other}' (expected csv or json)")),
        }
    }
}

pub const BATCH_CSV_HEADER: &str = "draw_index,latency";

pub fn write_batch<W: Write>(out: &mut W, values: &[f64], format: BatchFormat) -> io::Result<()> {
    match format {
        BatchFormat::Csv => {
            writeln!(out, "{BATCH_CSV_HEADER}")?;
            for (i, v) in values.iter().enumerate() {
                writeln!(out, "{i},{v}")?;
            }
        }
        BatchFormat::Json => {
            serde_json::to_writer(&mut *out, values)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Sidecar describing a batch file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchMetadata {
    pub sampler: SamplerKind,
    pub seed: u64,
    pub instance_hash: String,
    pub count: usize,
    pub instance: serde_json::Value,
    pub created_unix: u64,
}

impl BatchMetadata {
    pub fn new(batch: &Batch, sys: &QueueSystem) -> Self {
        let created_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        Self {
            sampler: batch.sampler,
            seed: batch.seed,
            instance_hash: batch.instance_hash.clone(),
            count: batch.values.len(),
            instance: sys.to_json(),
            created_unix,
        }
    }
}

/// Sidecar path for a batch file: `<file>.meta.json`.
pub fn metadata_path(batch_path: &Path) -> std::path::PathBuf {
    let mut name = batch_path.as_os_str().to_owned();
    name.push(".meta.json");
    name.into()
}

/// Reads latencies from a batch file: a JSON array, or CSV whose last column
/// holds the values (one header row allowed).
pub fn read_batch(path: impl AsRef<Path>) -> io::Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    parse_batch(&text)
}

pub fn parse_batch(text: &str) -> io::Result<Vec<f64>> {
    let bad = |msg: String| io::Error::new(io::ErrorKind::InvalidData, msg);
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(text).map_err(|e| bad(e.to_string()));
    }
    let mut values = Vec::new();
    for (lineno, line) in io::Cursor::new(text).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let field = line.rsplit(',').next().unwrap_or(line).trim();
        match field.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) if lineno == 0 => continue,
            Err(_) => return Err(bad(format!("line {}: cannot parse '{field}'", lineno + 1))),
        }
    }
    Ok(values)
}
