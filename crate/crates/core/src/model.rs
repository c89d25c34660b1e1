//! Problem instances: a tandem of `m` exponential servers fed by a Poisson
//! stream of rate `alpha`, into which a batch of `n` customers is injected.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Relative tolerance under which two service rates count as the same atom.
pub const RATE_TIE_RTOL: f64 = 1e-9;

/// A tandem of M/M/1 queues in equilibrium plus the size of the injected batch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueueSystem {
    /// Batch size.
    pub n: usize,
    /// Service rates `mu_1..mu_m`, in server order.
    pub rates: Vec<f64>,
    /// External Poisson arrival rate; zero means initially empty queues.
    pub alpha: f64,
}

impl QueueSystem {
    /// Builds and validates an instance.
    pub fn new(n: usize, rates: Vec<f64>, alpha: f64) -> Result<Self> {
        let sys = Self { n, rates, alpha };
        sys.validate()?;
        Ok(sys)
    }

    /// `m` identical servers of rate `mu`.
    pub fn uniform(m: usize, n: usize, mu: f64, alpha: f64) -> Result<Self> {
        Self::new(n, vec![mu; m], alpha)
    }

    pub fn m(&self) -> usize {
        self.rates.len()
    }

    /// Checks the structural and stability constraints.
    pub fn validate(&self) -> Result<()> {
        if self.rates.is_empty() || self.n == 0 {
            return Err(Error::EmptySystem {
                m: self.rates.len(),
                n: self.n,
            });
        }
        for (index, &rate) in self.rates.iter().enumerate() {
            if !(rate > 0.0) || !rate.is_finite() {
                return Err(Error::NonPositiveRate { index, rate });
            }
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidArrivalRate(self.alpha));
        }
        let (index, rate) = self
            .rates
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        if self.alpha >= rate {
            return Err(Error::Unstable {
                alpha: self.alpha,
                index,
                rate,
            });
        }
        Ok(())
    }

    pub fn min_rate(&self) -> f64 {
        self.rates.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn spectral_measure(&self) -> SpectralMeasure {
        SpectralMeasure::from_rates(&self.rates)
    }

    /// Same instance with every rate and `alpha` multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(
            self.n,
            self.rates.iter().map(|r| r * c).collect(),
            self.alpha * c,
        )
    }

    /// Canonical hash of `(m, n, sorted rates, alpha)`, 16 hex digits.
    ///
    /// Rates are sorted nonincreasingly and printed to 15 significant digits,
    /// so permutations and sub-ulp noise map to the same tag.
    pub fn instance_hash(&self) -> String {
        let mut sorted = self.rates.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let rates: Vec<String> = sorted.iter().map(|r| format!("{r:.14e}")).collect();
        let canonical = format!(
            "m={};n={};rates={};alpha={:.14e}",
            self.m(),
            self.n,
            rates.join(","),
            self.alpha
        );
        let digest = Sha256::digest(canonical.as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidInstance(e.to_string()))?;
        file.into_system()
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInstance(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "m": self.m(),
            "n": self.n,
            "rates": self.rates,
            "alpha": self.alpha,
        })
    }
}

/// A run-length group `{"value": v, "count": k}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateGroup {
    pub value: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum RateEntry {
    Single(f64),
    Group(RateGroup),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum RatesField {
    List(Vec<RateEntry>),
    Group(RateGroup),
}

/// On-disk instance description.
#[derive(Debug, Clone, Deserialize)]
struct InstanceFile {
    m: Option<usize>,
    n: usize,
    rates: RatesField,
    #[serde(default)]
    alpha: f64,
}

impl InstanceFile {
    fn into_system(self) -> Result<QueueSystem> {
        let entries = match self.rates {
            RatesField::List(list) => list,
            RatesField::Group(g) => vec![RateEntry::Group(g)],
        };
        let mut rates = Vec::new();
        for entry in entries {
            match entry {
                RateEntry::Single(v) => rates.push(v),
                RateEntry::Group(g) => rates.extend(std::iter::repeat_n(g.value, g.count)),
            }
        }
        if let Some(m) = self.m {
            if rates.len() != m {
                return Err(Error::InvalidInstance(format!(
                    "m = {m} but {} rates were given",
                    rates.len()
                )));
            }
        }
        QueueSystem::new(self.n, rates, self.alpha)
    }
}

/// One distinct service rate of the empirical measure `H_m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Atom {
    pub rate: f64,
    pub multiplicity: usize,
    pub weight: f64,
}

/// The empirical distribution `H_m = (1/m) sum_i delta_{mu_i}` of the service rates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralMeasure {
    /// Distinct rates in increasing order.
    pub atoms: Vec<Atom>,
    /// `mu_(1) >= ... >= mu_(m)`.
    pub sorted_rates: Vec<f64>,
    pub min_rate: f64,
    /// Number of rates tied with the minimum (`r`).
    pub min_multiplicity: usize,
}

impl SpectralMeasure {
    pub fn from_rates(rates: &[f64]) -> Self {
        let m = rates.len();
        let mut ascending = rates.to_vec();
        ascending.sort_by(f64::total_cmp);

        let mut atoms: Vec<Atom> = Vec::new();
        for &r in &ascending {
            match atoms.last_mut() {
                Some(a) if (r - a.rate).abs() <= RATE_TIE_RTOL * a.rate.abs() => {
                    a.multiplicity += 1
                }
                _ => atoms.push(Atom {
                    rate: r,
                    multiplicity: 1,
                    weight: 0.0,
                }),
            }
        }
        for a in &mut atoms {
            a.weight = a.multiplicity as f64 / m as f64;
        }

        let min_rate = ascending.first().copied().unwrap_or(f64::NAN);
        let min_multiplicity = atoms.first().map_or(0, |a| a.multiplicity);
        ascending.reverse();
        Self {
            atoms,
            sorted_rates: ascending,
            min_rate,
            min_multiplicity,
        }
    }

    pub fn m(&self) -> usize {
        self.sorted_rates.len()
    }

    /// `mu_(i)` with 1-based `i` as in the usual order-statistics notation.
    pub fn order_statistic(&self, i: usize) -> f64 {
        self.sorted_rates[i - 1]
    }
}
