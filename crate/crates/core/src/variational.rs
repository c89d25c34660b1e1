//! Leading-order latency from the path-decomposition heuristic.
//!
//! A maximal path either runs along the first customer column (rate
//! `mu - alpha`) for a fraction `x` of the servers and then crosses the bulk,
//! or runs along the rows of the slow servers for fractions of the customers
//! before crossing the bulk. Using the empty-system asymptotic
//! `(sqrt(a) + sqrt(b))^2 / mu` for a bulk rectangle turns each choice into a
//! concave function of the split point, maximized numerically here.

use crate::error::{Error, Result};
use crate::model::QueueSystem;

const GRID_STEP: f64 = 1e-4;
const REFINE_TOL: f64 = 1e-10;

/// Location and value of a maximum on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum {
    pub x: f64,
    pub value: f64,
}

/// Maximizes a unimodal function on `[0, 1]`: a `1e-4` grid, then golden
/// section inside the best grid cell pair.
pub fn maximize_on_unit_interval(f: impl Fn(f64) -> f64) -> Optimum {
    let steps = (1.0 / GRID_STEP).round() as usize;
    let mut best = Optimum {
        x: 0.0,
        value: f(0.0),
    };
    let mut best_k = 0;
    for k in 1..=steps {
        let x = k as f64 / steps as f64;
        let v = f(x);
        if v > best.value {
            best = Optimum { x, value: v };
            best_k = k;
        }
    }
    let mut a = best_k.saturating_sub(1) as f64 / steps as f64;
    let mut b = (best_k + 1).min(steps) as f64 / steps as f64;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > REFINE_TOL {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let v = f(x);
    if v > best.value {
        Optimum { x, value: v }
    } else {
        best
    }
}

/// Rate profile the heuristic covers: a bulk rate (the fastest, shared by
/// all but at most two servers) and up to two slower values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThreeRateProfile {
    pub bulk: f64,
    /// Slowest rate, if distinct from the bulk.
    pub slowest: Option<f64>,
    /// Second-slowest distinct rate, if there are three values.
    pub second: Option<f64>,
}

impl ThreeRateProfile {
    pub fn detect(sys: &QueueSystem) -> Result<Self> {
        let h = sys.spectral_measure();
        let m = sys.m();
        if h.atoms.len() > 3 {
            return Err(Error::UnsupportedProfile(format!(
                "{} distinct rates (at most 3 supported)",
                h.atoms.len()
            )));
        }
        let bulk = h.atoms.last().expect("nonempty");
        if bulk.multiplicity + 2 < m {
            return Err(Error::UnsupportedProfile(format!(
                "bulk rate {} covers only {} of {m} servers",
                bulk.rate, bulk.multiplicity
            )));
        }
        Ok(Self {
            bulk: bulk.rate,
            slowest: (h.atoms.len() >= 2).then(|| h.atoms[0].rate),
            second: (h.atoms.len() == 3).then(|| h.atoms[1].rate),
        })
    }
}

/// `max_x [ m x / (mu - alpha) + (sqrt(m (1 - x)) + sqrt(n))^2 / mu ]`.
pub fn arrival_path_optimum(m: f64, n: f64, mu: f64, alpha: f64) -> Optimum {
    maximize_on_unit_interval(|x| {
        m * x / (mu - alpha) + ((m * (1.0 - x)).max(0.0).sqrt() + n.sqrt()).powi(2) / mu
    })
}

/// `max_{x <= y} [ n x / mu' + n (y - x) / mu'' + (sqrt(m) + sqrt(n (1 - y)))^2 / mu ]`.
///
/// The objective is linear in `x`, so for each `y` the inner maximum sits at
/// `x = 0` or `x = y`; the returned `x` is the outer split `y`.
pub fn slow_server_path_optimum(m: f64, n: f64, mu: f64, slowest: f64, second: f64) -> Optimum {
    let bulk = |y: f64| (m.sqrt() + (n * (1.0 - y)).max(0.0).sqrt()).powi(2) / mu;
    maximize_on_unit_interval(|y| {
        let along_slowest = n * y / slowest;
        let along_second = n * y / second;
        along_slowest.max(along_second) + bulk(y)
    })
}

/// Leading-order latency predicted by the path heuristic.
pub fn variational_leading_order(sys: &QueueSystem) -> Result<f64> {
    sys.validate()?;
    let profile = ThreeRateProfile::detect(sys)?;
    let (m, n) = (sys.m() as f64, sys.n as f64);
    let arrival = arrival_path_optimum(m, n, profile.bulk, sys.alpha).value;
    let Some(slowest) = profile.slowest else {
        return Ok(arrival);
    };
    let second = profile.second.unwrap_or(slowest);
    let slow = slow_server_path_optimum(m, n, profile.bulk, slowest, second).value;
    Ok(if sys.alpha > 0.0 {
        slow.max(arrival)
    } else {
        slow
    })
}
