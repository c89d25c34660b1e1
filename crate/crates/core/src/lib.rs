//! Batch latency `L(m, n)` of `n` customers passing through `m` tandem M/M/1
//! queues in equilibrium.
//!
//! Two exact samplers (last-passage percolation and the largest eigenvalue
//! of a sample-covariance matrix), the asymptotic phase classifier, and the
//! Tracy-Widom machinery used to check the limit laws.

pub mod airy;
pub mod asymptotics;
pub mod batch;
pub mod dlpp;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod rmt;
pub mod rng;
pub mod stats;
pub mod tracy_widom;
pub mod variational;

pub use asymptotics::{classify_phase, LimitLaw, PhaseCase, PhaseDiagnosis, RateTransform};
pub use batch::{sample_batch, Batch, SamplerKind};
pub use dlpp::{last_passage_time, DlppSampler};
pub use error::{Error, Result};
pub use model::{QueueSystem, SpectralMeasure};
pub use rmt::RmtSampler;
pub use stats::{ks_one_sample, ks_two_sample, normal_cdf};
pub use tracy_widom::{build_table, tw2_cdf, tw2_quantile, TwTable};
pub use variational::variational_leading_order;
