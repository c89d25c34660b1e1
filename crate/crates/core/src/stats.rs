//! Empirical distributions, Kolmogorov-Smirnov distances, histograms and
//! the standard normal law.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

/// Asymptotic KS constant at the 1% level.
pub const KS_C_1PCT: f64 = 1.63;

/// `c sqrt((na + nb) / (na nb))`; for a one-sample test pass `nb = usize::MAX`.
pub fn ks_critical_value(c: f64, na: usize, nb: usize) -> f64 {
    if nb == usize::MAX {
        return c / (na as f64).sqrt();
    }
    let (a, b) = (na as f64, nb as f64);
    c * ((a + b) / (a * b)).sqrt()
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted_values: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        Ok(Self {
            sorted_values: sorted(values),
        })
    }

    pub fn len(&self) -> usize {
        self.sorted_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted_values.is_empty()
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted_values
    }

    /// `#{x_i <= x} / N`.
    pub fn eval(&self, x: f64) -> f64 {
        let count = self.sorted_values.partition_point(|&v| v <= x);
        count as f64 / self.len() as f64
    }
}

/// Exact two-sample KS distance. Ties are consumed as a block on both sides
/// before the gap is measured.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let (a, b) = (sorted(a), sorted(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Exact one-sample KS distance against a continuous cdf.
pub fn ks_one_sample(a: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if a.is_empty() {
        return Err(Error::EmptySample);
    }
    let a = sorted(a);
    let n = a.len() as f64;
    Ok(a.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        let hi = (i + 1) as f64 / n;
        let lo = i as f64 / n;
        d.max((f - hi).abs()).max((f - lo).abs())
    }))
}

/// `erfc(x)`: power series for `erf` when `|x| < 2.5`, continued fraction
/// beyond. Negative arguments use `erfc(-x) = 2 - erfc(x)`.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 2.5 {
        1.0 - erf_series(x)
    } else {
        erfc_continued_fraction(x)
    }
}

/// `erf x = 2/sqrt(pi) e^{-x^2} sum_n 2^n x^{2n+1} / (1*3*...*(2n+1))`.
fn erf_series(x: f64) -> f64 {
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    for n in 1..500 {
        term *= 2.0 * x2 / (2 * n + 1) as f64;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    2.0 / PI.sqrt() * (-x2).exp() * sum
}

/// `erfc x = e^{-x^2}/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))`,
/// evaluated by modified Lentz.
fn erfc_continued_fraction(x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = x;
    let mut c = x;
    let mut d = 0.0;
    for k in 1..1000 {
        let a = k as f64 / 2.0;
        d = x + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = x + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / PI.sqrt() / f
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Equal-width histogram on `[lo, hi)`, normalized by the full sample size
/// so out-of-range mass is not redistributed.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
    pub density: Vec<f64>,
    pub underflow: usize,
    pub overflow: usize,
    pub total: usize,
}

impl Histogram {
    pub fn new(values: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if bins == 0 || !(hi > lo) {
            return Err(Error::InvalidInstance(format!(
                "histogram needs bins > 0 and lo < hi (got {bins} bins on [{lo}, {hi}])"
            )));
        }
        let width = (hi - lo) / bins as f64;
        let mut counts = vec![0usize; bins];
        let (mut underflow, mut overflow) = (0, 0);
        for &v in values {
            if v < lo {
                underflow += 1;
            } else if v >= hi {
                overflow += 1;
            } else {
                let k = (((v - lo) / width) as usize).min(bins - 1);
                counts[k] += 1;
            }
        }
        let total = values.len();
        let density = counts
            .iter()
            .map(|&c| c as f64 / (total as f64 * width))
            .collect();
        Ok(Self {
            lo,
            hi,
            counts,
            density,
            underflow,
            overflow,
            total,
        })
    }

    pub fn bin_width(&self) -> f64 {
        (self.hi - self.lo) / self.counts.len() as f64
    }

    pub fn centers(&self) -> Vec<f64> {
        let w = self.bin_width();
        (0..self.counts.len())
            .map(|k| self.lo + (k as f64 + 0.5) * w)
            .collect()
    }

    /// Sum of `width * density`: the in-range fraction of the sample.
    pub fn integral(&self) -> f64 {
        let w = self.bin_width();
        self.density.iter().map(|d| d * w).sum()
    }
}
