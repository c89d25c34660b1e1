//! Experiment drivers: goodness of fit of a batch against a limit law, and
//! the KS heat-map over slow-server rate and arrival rate.

use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;

use crate::batch::{sample_batch, SamplerKind};
use crate::error::{Error, Result};
use crate::model::QueueSystem;
use crate::rng::derive_seed;
use crate::stats::{ks_one_sample, ks_two_sample, normal_cdf, normal_pdf, Histogram};
use crate::tracy_widom::TwTable;

pub const DEFAULT_HIST_RANGE: (f64, f64) = (-6.0, 6.0);
pub const DEFAULT_HIST_BINS: usize = 60;
/// Heat-map value for cells with `alpha >= min rate`.
pub const INADMISSIBLE: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceLaw {
    Tw2,
    Normal,
}

impl ReferenceLaw {
    pub fn cdf(self, x: f64) -> f64 {
        match self {
            ReferenceLaw::Tw2 => TwTable::standard().cdf(x),
            ReferenceLaw::Normal => normal_cdf(x),
        }
    }

    pub fn pdf(self, x: f64) -> f64 {
        match self {
            ReferenceLaw::Tw2 => TwTable::standard().pdf(x),
            ReferenceLaw::Normal => normal_pdf(x),
        }
    }
}

impl FromStr for ReferenceLaw {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "tw2" => Ok(ReferenceLaw::Tw2),
            "normal" | "stdnormal" => Ok(ReferenceLaw::Normal),
            other => Err(format!("unknown law '{other}' (expected tw2 or normal)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub ks: f64,
    pub count: usize,
    pub histogram: Histogram,
    /// Law density at the histogram bin centers.
    pub law_density: Vec<f64>,
}

/// Standardizes `(L - center) / scale` and measures the fit to `law`.
pub fn compare(
    values: &[f64],
    law: ReferenceLaw,
    center: f64,
    scale: f64,
    range: (f64, f64),
    bins: usize,
) -> Result<CompareReport> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::DomainError {
            value: scale,
            expected: "scale > 0",
        });
    }
    let z: Vec<f64> = values.iter().map(|v| (v - center) / scale).collect();
    let ks = ks_one_sample(&z, |x| law.cdf(x))?;
    let histogram = Histogram::new(&z, range.0, range.1, bins)?;
    let law_density = histogram
        .centers()
        .into_iter()
        .map(|x| law.pdf(x))
        .collect();
    Ok(CompareReport {
        ks,
        count: z.len(),
        histogram,
        law_density,
    })
}

pub fn write_compare_csv<W: Write>(out: &mut W, report: &CompareReport) -> io::Result<()> {
    writeln!(out, "bin_center,empirical_density,law_density")?;
    for ((c, d), l) in report
        .histogram
        .centers()
        .iter()
        .zip(&report.histogram.density)
        .zip(&report.law_density)
    {
        writeln!(out, "{c},{d},{l}")?;
    }
    Ok(())
}

/// Values `start, start + step, ...` up to `stop` inclusive, from
/// `start:stop:step`. Each value is rounded to `1e-12`.
pub fn parse_axis(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidInstance(format!("grid axis '{spec}' is not start:stop:step"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let values = match parts.as_slice() {
        [v] => vec![*v],
        [start, stop, step] if *step > 0.0 && stop >= start => {
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            (0..count)
                .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
                .collect()
        }
        _ => return Err(bad()),
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(bad());
    }
    Ok(values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapConfig {
    pub m: usize,
    pub n: usize,
    /// Rate of every server except the first.
    pub bulk_rate: f64,
    pub mu1_values: Vec<f64>,
    pub alpha_values: Vec<f64>,
    pub count: usize,
    pub seed: u64,
    pub sampler: SamplerKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatCell {
    pub mu1: f64,
    pub alpha: f64,
    /// Two-sample KS distance to the baseline batch, or `INADMISSIBLE`.
    pub ks: f64,
}

fn cell_system(cfg: &HeatmapConfig, mu1: f64, alpha: f64) -> Result<QueueSystem> {
    let mut rates = vec![cfg.bulk_rate; cfg.m];
    rates[0] = mu1;
    QueueSystem::new(cfg.n, rates, alpha)
}

/// Baseline batch at `(mu1 = bulk, alpha = 0)`; each cell compared to it.
/// Cell `k` (alpha-major order) draws with seed `derive_seed(seed, k + 1)`.
pub fn run_heatmap(cfg: &HeatmapConfig) -> Result<Vec<HeatCell>> {
    if cfg.mu1_values.is_empty() || cfg.alpha_values.is_empty() {
        return Err(Error::InvalidInstance("heat-map grid is empty".into()));
    }
    let baseline_sys = cell_system(cfg, cfg.bulk_rate, 0.0)?;
    let baseline = sample_batch(
        &baseline_sys,
        cfg.sampler,
        cfg.count,
        derive_seed(cfg.seed, 0),
    )?;
    let cells: Vec<(usize, f64, f64)> = cfg
        .alpha_values
        .iter()
        .flat_map(|&a| cfg.mu1_values.iter().map(move |&mu1| (mu1, a)))
        .enumerate()
        .map(|(k, (mu1, a))| (k, mu1, a))
        .collect();
    cells
        .par_iter()
        .map(|&(k, mu1, alpha)| {
            if alpha >= mu1.min(cfg.bulk_rate) {
                return Ok(HeatCell {
                    mu1,
                    alpha,
                    ks: INADMISSIBLE,
                });
            }
            let sys = cell_system(cfg, mu1, alpha)?;
            let batch = sample_batch(
                &sys,
                cfg.sampler,
                cfg.count,
                derive_seed(cfg.seed, k as u64 + 1),
            )?;
            let ks = ks_two_sample(&baseline.values, &batch.values)?;
            Ok(HeatCell { mu1, alpha, ks })
        })
        .collect()
}

pub fn write_heatmap_csv<W: Write>(out: &mut W, cells: &[HeatCell]) -> io::Result<()> {
    writeln!(out, "mu1,alpha,ks_distance")?;
    for c in cells {
        writeln!(out, "{},{},{}", c.mu1, c.alpha, c.ks)?;
    }
    Ok(())
}
