mod instance;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use serde_json::json;
use tandem_latency::batch::{metadata_path, read_batch, write_batch, BatchFormat, BatchMetadata};
use tandem_latency::experiment::{
    compare, parse_axis, run_heatmap, write_compare_csv, write_heatmap_csv, HeatmapConfig,
    ReferenceLaw, DEFAULT_HIST_BINS, DEFAULT_HIST_RANGE,
};
use tandem_latency::stats::{ks_critical_value, KS_C_1PCT};
use tandem_latency::tracy_widom::{build_table, DEFAULT_S0, DEFAULT_STEP, DEFAULT_S_MIN, TABLE1};
use tandem_latency::{
    classify_phase, ks_one_sample, ks_two_sample, sample_batch, variational_leading_order, Error,
    LimitLaw, SamplerKind,
};

use crate::instance::InstanceArgs;

const EXIT_INVALID: u8 = 2;
const EXIT_BOUNDARY: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

/// Batch latency of tandem M/M/1 queues: sampling, prediction and checks.
#[derive(Debug, Parser)]
#[command(name = "tandem", version)]
struct Cli {
    /// Master seed
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output file (default: standard output)
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    /// Output format for batches
    #[arg(long, global = true, default_value = "csv")]
    format: BatchFormat,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a batch of latencies
    Sample {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value = "dlpp")]
        sampler: SamplerKind,
    },
    /// Classify the phase and print predicted centering and scale
    Predict {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Also report the path-heuristic leading order
        #[arg(long)]
        variational: bool,
    },
    /// Standardize a batch and compare it with a limit law
    Compare {
        /// Batch file (CSV or JSON)
        batch: PathBuf,
        /// tw2 or normal; defaults to the predicted law when an instance is given
        #[arg(long)]
        law: Option<ReferenceLaw>,
        #[arg(long, allow_hyphen_values = true)]
        center: Option<f64>,
        #[arg(long)]
        scale: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_HIST_BINS)]
        bins: usize,
        #[arg(long, default_value_t = DEFAULT_HIST_RANGE.0, allow_hyphen_values = true)]
        hist_min: f64,
        #[arg(long, default_value_t = DEFAULT_HIST_RANGE.1, allow_hyphen_values = true)]
        hist_max: f64,
        /// Take center, scale and law from the predicted phase of this instance
        #[command(flatten)]
        instance: InstanceArgs,
    },
    /// Kolmogorov-Smirnov distances
    Ks {
        #[command(subcommand)]
        test: KsTest,
    },
    /// KS distance to a baseline batch over a grid of (mu1, alpha)
    Heatmap {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        /// Rate of servers 2..m (and of server 1 in the baseline)
        #[arg(long, default_value_t = 1.0)]
        bulk: f64,
        /// Slow-server axis, start:stop:step
        #[arg(long, default_value = "0.1:1.0:0.1")]
        mu1: String,
        /// Arrival-rate axis, start:stop:step
        #[arg(long, default_value = "0:0.9:0.1")]
        alpha: String,
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value = "dlpp")]
        sampler: SamplerKind,
    },
    /// Tracy-Widom GUE table, quantiles and reference comparison
    Twdist {
        #[arg(long, default_value_t = DEFAULT_S0)]
        s0: f64,
        #[arg(long, default_value_t = DEFAULT_S_MIN, allow_hyphen_values = true)]
        s_min: f64,
        #[arg(long, default_value_t = DEFAULT_STEP)]
        step: f64,
        /// Print the quantile at this probability
        #[arg(long, conflicts_with = "table1")]
        quantile: Option<f64>,
        /// Print the reference percentile table next to computed values
        #[arg(long)]
        table1: bool,
    },
}

#[derive(Debug, Subcommand)]
enum KsTest {
    /// One sample against tw2 or normal after standardizing
    One {
        batch: PathBuf,
        #[arg(long)]
        law: ReferenceLaw,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        center: f64,
        #[arg(long, default_value_t = 1.0)]
        scale: f64,
    },
    /// Two samples
    Two { a: PathBuf, b: PathBuf },
}

fn open_output(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load_batch(path: &Path) -> anyhow::Result<Vec<f64>> {
    read_batch(path).map_err(|e| Error::InvalidInstance(format!("{}: {e}", path.display())).into())
}

fn print_json(value: &serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("serializable")
    );
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
            .context("configuring worker threads")?;
    }
    match cli.command {
        Command::Sample {
            instance,
            count,
            sampler,
        } => {
            let sys = instance.build()?;
            let batch = sample_batch(&sys, sampler, count, cli.seed)?;
            let mut out = open_output(cli.output.as_deref())?;
            write_batch(&mut out, &batch.values, cli.format)?;
            out.flush()?;
            if let Some(path) = &cli.output {
                let meta = BatchMetadata::new(&batch, &sys);
                let meta_path = metadata_path(path);
                std::fs::write(&meta_path, serde_json::to_string_pretty(&meta)? + "\n")
                    .with_context(|| format!("writing {}", meta_path.display()))?;
            }
            Ok(0)
        }
        Command::Predict {
            instance,
            variational,
        } => {
            let sys = instance.build()?;
            let mut report = match classify_phase(&sys) {
                Ok(d) => d.to_json(),
                Err(Error::BoundaryRegime(msg)) => {
                    print_json(&json!({ "case_label": "boundary", "message": msg }));
                    return Ok(EXIT_BOUNDARY);
                }
                Err(e) => return Err(e.into()),
            };
            if variational {
                report["variational"] = match variational_leading_order(&sys) {
                    Ok(v) => v.into(),
                    Err(Error::UnsupportedProfile(_)) => serde_json::Value::Null,
                    Err(e) => return Err(e.into()),
                };
            }
            report["instance_hash"] = sys.instance_hash().into();
            print_json(&report);
            Ok(0)
        }
        Command::Compare {
            batch,
            law,
            center,
            scale,
            bins,
            hist_min,
            hist_max,
            instance,
        } => {
            let values = load_batch(&batch)?;
            let predicted = if instance.is_given() {
                Some(classify_phase(&instance.build()?)?)
            } else {
                None
            };
            let law = match (law, &predicted) {
                (Some(l), _) => l,
                (None, Some(d)) => match d.law {
                    LimitLaw::Tw2 => ReferenceLaw::Tw2,
                    LimitLaw::StdNormal => ReferenceLaw::Normal,
                    LimitLaw::GueR => bail!("no reference cdf for the rank-r GUE law"),
                },
                (None, None) => bail!("--law is required without an instance"),
            };
            let center = center.or(predicted.as_ref().map(|d| d.center));
            let scale = scale.or(predicted.as_ref().and_then(|d| d.scale));
            let (Some(center), Some(scale)) = (center, scale) else {
                bail!("--center and --scale are required without an instance");
            };
            let report = compare(&values, law, center, scale, (hist_min, hist_max), bins)?;
            if let Some(path) = &cli.output {
                let mut out = open_output(Some(path))?;
                write_compare_csv(&mut out, &report)?;
                out.flush()?;
            }
            print_json(&json!({
                "ks_distance": report.ks,
                "count": report.count,
                "critical_value_1pct": ks_critical_value(KS_C_1PCT, report.count, usize::MAX),
                "center": center,
                "scale": scale,
                "out_of_range": report.histogram.underflow + report.histogram.overflow,
            }));
            Ok(0)
        }
        Command::Ks { test } => {
            let (d, na, nb) = match test {
                KsTest::One {
                    batch,
                    law,
                    center,
                    scale,
                } => {
                    if !(scale > 0.0) {
                        bail!(Error::DomainError {
                            value: scale,
                            expected: "scale > 0"
                        });
                    }
                    let values = load_batch(&batch)?;
                    let z: Vec<f64> = values.iter().map(|v| (v - center) / scale).collect();
                    (ks_one_sample(&z, |x| law.cdf(x))?, z.len(), None)
                }
                KsTest::Two { a, b } => {
                    let (a, b) = (load_batch(&a)?, load_batch(&b)?);
                    (ks_two_sample(&a, &b)?, a.len(), Some(b.len()))
                }
            };
            let crit = ks_critical_value(KS_C_1PCT, na, nb.unwrap_or(usize::MAX));
            print_json(&json!({
                "ks_distance": d,
                "critical_value_1pct": crit,
                "n_a": na,
                "n_b": nb,
                "reject_1pct": d > crit,
            }));
            Ok(0)
        }
        Command::Heatmap {
            m,
            n,
            bulk,
            mu1,
            alpha,
            count,
            sampler,
        } => {
            let cfg = HeatmapConfig {
                m,
                n,
                bulk_rate: bulk,
                mu1_values: parse_axis(&mu1)?,
                alpha_values: parse_axis(&alpha)?,
                count,
                seed: cli.seed,
                sampler,
            };
            let cells = run_heatmap(&cfg)?;
            let mut out = open_output(cli.output.as_deref())?;
            write_heatmap_csv(&mut out, &cells)?;
            out.flush()?;
            Ok(0)
        }
        Command::Twdist {
            s0,
            s_min,
            step,
            quantile,
            table1,
        } => {
            let table = build_table(s0, s_min, step)?;
            let mut out = open_output(cli.output.as_deref())?;
            if let Some(p) = quantile {
                if !(p > 0.0 && p < 1.0) {
                    bail!(Error::DomainError {
                        value: p,
                        expected: "0 < p < 1"
                    });
                }
                writeln!(out, "{}", table.quantile(p))?;
            } else if table1 {
                writeln!(out, "p,reference,computed,delta")?;
                for (p, reference) in TABLE1 {
                    let got = table.quantile(p);
                    writeln!(out, "{p},{reference},{got},{:e}", got - reference)?;
                }
            } else {
                writeln!(out, "s,q,F2,f2")?;
                for k in 0..table.len() {
                    writeln!(
                        out,
                        "{},{:e},{:e},{:e}",
                        table.grid[k], table.q_values[k], table.f2_cdf[k], table.f2_pdf[k]
                    )?;
                }
            }
            out.flush()?;
            Ok(0)
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::BoundaryRegime(_)) => EXIT_BOUNDARY,
        Some(
            Error::EigenNonConvergence { .. }
            | Error::NotHermitian(_)
            | Error::PoleProximity { .. }
            | Error::BracketFailure { .. }
            | Error::OdeBlowup { .. },
        ) => EXIT_NUMERICAL,
        _ => EXIT_INVALID,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            let closed_pipe = err
                .downcast_ref::<io::Error>()
                .is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe);
            if closed_pipe {
                return ExitCode::SUCCESS;
            }
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
