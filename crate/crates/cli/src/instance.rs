//! Building a `QueueSystem` from command-line flags.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::Args;
use tandem_latency::QueueSystem;

#[derive(Debug, Clone, Args)]
pub struct InstanceArgs {
    /// Instance JSON file (`n`, `rates`, optional `m` and `alpha`)
    #[arg(long, conflicts_with_all = ["mu", "rates_file", "m", "n"])]
    pub instance: Option<PathBuf>,

    /// Number of servers
    #[arg(long)]
    pub m: Option<usize>,

    /// Batch size
    #[arg(long)]
    pub n: Option<usize>,

    /// Service rates: `v` for all servers, or run-length groups `v@k,w@j`;
    /// one group may omit `@k` to fill the remaining servers
    #[arg(long, conflicts_with = "rates_file")]
    pub mu: Option<String>,

    /// File with one service rate per line
    #[arg(long)]
    pub rates_file: Option<PathBuf>,

    /// Poisson arrival rate
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
}

impl InstanceArgs {
    pub fn is_given(&self) -> bool {
        self.instance.is_some() || self.mu.is_some() || self.rates_file.is_some()
    }

    pub fn build(&self) -> anyhow::Result<QueueSystem> {
        if let Some(path) = &self.instance {
            let mut sys = QueueSystem::from_json_file(path)?;
            if self.alpha != 0.0 {
                sys.alpha = self.alpha;
                sys.validate()?;
            }
            return Ok(sys);
        }
        let Some(n) = self.n else {
            bail!("--n is required unless --instance is given");
        };
        let rates = if let Some(spec) = &self.mu {
            parse_rate_spec(spec, self.m)?
        } else if let Some(path) = &self.rates_file {
            read_rates_file(path)?
        } else {
            bail!("one of --mu, --rates-file or --instance is required");
        };
        if let Some(m) = self.m {
            if rates.len() != m {
                bail!("--m {m} but {} rates were given", rates.len());
            }
        }
        Ok(QueueSystem::new(n, rates, self.alpha)?)
    }
}

/// Parses `v`, or `v@k,w@j,...` with at most one group lacking `@k`.
pub fn parse_rate_spec(spec: &str, m: Option<usize>) -> anyhow::Result<Vec<f64>> {
    let mut groups: Vec<(f64, Option<usize>)> = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        let (value, count) = match part.split_once('@') {
            Some((v, k)) => (
                v,
                Some(
                    k.trim()
                        .parse::<usize>()
                        .with_context(|| format!("bad count in '{part}'"))?,
                ),
            ),
            None => (part, None),
        };
        let value: f64 = value
            .trim()
            .parse()
            .with_context(|| format!("bad rate in '{part}'"))?;
        groups.push((value, count));
    }
    let open = groups.iter().filter(|(_, k)| k.is_none()).count();
    if open > 1 {
        bail!("at most one rate group may omit its count ('{spec}')");
    }
    let fixed: usize = groups.iter().filter_map(|(_, k)| *k).sum();
    let fill = if open == 1 {
        let Some(m) = m else {
            bail!("--m is required when a rate group has no count ('{spec}')");
        };
        if fixed > m {
            bail!("rate groups cover {fixed} servers but --m is {m}");
        }
        m - fixed
    } else {
        0
    };
    let mut rates = Vec::new();
    for (value, count) in groups {
        rates.extend(std::iter::repeat_n(value, count.unwrap_or(fill)));
    }
    Ok(rates)
}

fn read_rates_file(path: &PathBuf) -> anyhow::Result<Vec<f64>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.parse::<f64>()
                .with_context(|| format!("bad rate '{l}' in {}", path.display()))
        })
        .collect()
}
