//! The GUE Tracy-Widom law `F2` from the Hastings-McLeod solution of
//! Painleve II, `q'' = s q + 2 q^3`, `q(s) ~ Ai(s)` as `s -> +inf`.
//!
//! The state `[q, q', I, J]` is integrated backward from `s0`, where
//! `I(s) = int_s^inf q^2` and `J(s) = int_s^inf (x - s) q(x)^2`, so that
//! `I' = -q^2`, `J' = -I`, `F2 = exp(-J)` and `f2 = I F2`.

use std::sync::OnceLock;

use crate::airy::{airy_ai_and_prime, airy_bi_asymptotic};
use crate::error::{Error, Result};
use crate::ode::{dense_eval, integrate, OdeOptions};

pub const DEFAULT_S0: f64 = 6.0;
pub const DEFAULT_S_MIN: f64 = -10.0;
pub const DEFAULT_STEP: f64 = 0.005;
pub const BLOWUP_LIMIT: f64 = 1e6;

/// Quantiles `(p, F2^{-1}(p))` of the reference table.
pub const TABLE1: [(f64, f64); 13] = [
    (0.01, -3.72444594640057),
    (0.05, -3.19416673215810),
    (0.10, -2.90135093847591),
    (0.30, -2.26618203984916),
    (0.50, -1.80491240893658),
    (0.70, -1.32485955606020),
    (0.90, -0.59685129711735),
    (0.95, -0.23247446976400),
    (0.99, 0.47763604739084),
    (0.999, 1.31441948008634),
    (0.9999, 2.03469175457082),
    (0.99999, 2.68220732168978),
    (0.999999, 3.27858828203370),
];

pub const TW2_MEAN: f64 = -1.771086807411;
pub const TW2_VARIANCE: f64 = 0.8131947928329;

/// Integrator tolerances for the table. The backward problem is unstable, so
/// the tolerance is purely relative and as tight as double precision allows.
pub const TABLE_ODE_OPTIONS: OdeOptions = OdeOptions {
    rtol: 1e-14,
    atol: 1e-300,
    max_steps: 1_000_000,
};

/// `q`, `F2`, `f2` and the auxiliary integrals on a uniform grid.
#[derive(Debug, Clone)]
pub struct TwTable {
    pub grid: Vec<f64>,
    pub q_values: Vec<f64>,
    pub f2_cdf: Vec<f64>,
    pub f2_pdf: Vec<f64>,
    i_values: Vec<f64>,
    step: f64,
}

/// Closed forms of `int_s^inf Ai^2` and `int_s^inf (x - s) Ai(x)^2`.
pub fn airy_tail_integrals(s: f64) -> Result<(f64, f64)> {
    let (ai, aip) = airy_ai_and_prime(s)?;
    let i = aip * aip - s * ai * ai;
    let j = (2.0 / 3.0) * s * s * ai * ai - (2.0 / 3.0) * s * aip * aip - ai * aip / 3.0;
    Ok((i, j))
}

/// `q(s0)` and `q'(s0)` on the Hastings-McLeod branch, to first order in the
/// cubic term: `q = Ai + 2 pi [Ai(s) int_s^inf Bi Ai^3 - Bi(s) int_s^inf Ai^4]`.
/// At `s0 = 6` the correction is a relative `4e-12`, which the backward
/// instability would otherwise amplify to an order-one error near `s = -9`.
pub fn hastings_mcleod_seed(s0: f64) -> Result<(f64, f64)> {
    let (ai, aip) = airy_ai_and_prime(s0)?;
    let (bi, bip) = airy_bi_asymptotic(s0)?;
    // integrands decay like exp(-2 zeta); six units out is far past underflow of the sum
    let (len, steps) = (6.0, 4000);
    let h = len / steps as f64;
    let (mut a, mut b) = (0.0, 0.0);
    for k in 0..=steps {
        let t = s0 + k as f64 * h;
        let w = if k == 0 || k == steps {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let (at, _) = airy_ai_and_prime(t)?;
        let (bt, _) = airy_bi_asymptotic(t)?;
        a += w * bt * at.powi(3);
        b += w * at.powi(4);
    }
    a *= h / 3.0;
    b *= h / 3.0;
    let two_pi = 2.0 * std::f64::consts::PI;
    Ok((
        ai + two_pi * (ai * a - bi * b),
        aip + two_pi * (aip * a - bip * b),
    ))
}

pub fn build_table(s0: f64, s_min: f64, h: f64) -> Result<TwTable> {
    build_table_with(s0, s_min, h, TABLE_ODE_OPTIONS)
}

pub fn build_table_with(s0: f64, s_min: f64, h: f64, opts: OdeOptions) -> Result<TwTable> {
    if !(4.0..=8.0).contains(&s0) {
        return Err(Error::DomainError {
            value: s0,
            expected: "4 <= s0 <= 8",
        });
    }
    if !(s_min >= -12.0 && s_min < s0) {
        return Err(Error::DomainError {
            value: s_min,
            expected: "-12 <= s_min < s0",
        });
    }
    if !(h > 0.0 && h <= (s0 - s_min) / 2.0) {
        return Err(Error::DomainError {
            value: h,
            expected: "0 < h <= (s0 - s_min) / 2",
        });
    }
    let (q0, qp0) = hastings_mcleod_seed(s0)?;
    let (i0, j0) = airy_tail_integrals(s0)?;
    let rhs = |s: f64, y: &[f64; 4]| [y[1], s * y[0] + 2.0 * y[0].powi(3), -y[0] * y[0], -y[2]];
    let steps = integrate(rhs, s0, [q0, qp0, i0, j0], s_min, opts, |s, y| {
        if y[0].abs() > BLOWUP_LIMIT || !y[0].is_finite() {
            Err(Error::OdeBlowup { s, q: y[0] })
        } else {
            Ok(())
        }
    })?;

    let count = ((s0 - s_min) / h).round() as usize + 1;
    let mut table = TwTable {
        grid: Vec::with_capacity(count),
        q_values: Vec::with_capacity(count),
        f2_cdf: Vec::with_capacity(count),
        f2_pdf: Vec::with_capacity(count),
        i_values: Vec::with_capacity(count),
        step: h,
    };
    for k in 0..count {
        let s = if k + 1 == count {
            s0
        } else {
            s_min + k as f64 * h
        };
        let y = if s == s0 {
            [q0, qp0, i0, j0]
        } else {
            dense_eval(&steps, s).expect("grid inside integrated range")
        };
        let cdf = (-y[3]).exp();
        table.grid.push(s);
        table.q_values.push(y[0]);
        table.f2_cdf.push(cdf);
        table.f2_pdf.push(y[2] * cdf);
        table.i_values.push(y[2]);
    }
    Ok(table)
}

/// Cubic Hermite interpolation on `[0, 1]` in the local variable `t`.
fn hermite(t: f64, h: f64, y0: f64, y1: f64, d0: f64, d1: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * h * d0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * h * d1
}

impl TwTable {
    /// Table with the default grid, built once per process.
    pub fn standard() -> &'static TwTable {
        static TABLE: OnceLock<TwTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            build_table(DEFAULT_S0, DEFAULT_S_MIN, DEFAULT_STEP).expect("default table builds")
        })
    }

    pub fn s_min(&self) -> f64 {
        self.grid[0]
    }

    pub fn s_max(&self) -> f64 {
        *self.grid.last().expect("nonempty grid")
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// `f2'(s) = F2 (I^2 - q^2)` at grid index `k`.
    fn pdf_slope(&self, k: usize) -> f64 {
        let (i, q) = (self.i_values[k], self.q_values[k]);
        self.f2_cdf[k] * (i * i - q * q)
    }

    fn locate(&self, s: f64) -> (usize, f64, f64) {
        let last = self.len() - 2;
        let k = (((s - self.s_min()) / self.step).floor().max(0.0) as usize).min(last);
        let width = self.grid[k + 1] - self.grid[k];
        (k, (s - self.grid[k]) / width, width)
    }

    pub fn cdf(&self, s: f64) -> f64 {
        if s.is_nan() {
            return f64::NAN;
        }
        if s <= self.s_min() {
            return 0.0;
        }
        if s >= self.s_max() {
            return 1.0;
        }
        let (k, t, w) = self.locate(s);
        let v = hermite(
            t,
            w,
            self.f2_cdf[k],
            self.f2_cdf[k + 1],
            self.f2_pdf[k],
            self.f2_pdf[k + 1],
        );
        v.clamp(0.0, 1.0)
    }

    pub fn pdf(&self, s: f64) -> f64 {
        if !(s >= self.s_min() && s <= self.s_max()) {
            return 0.0;
        }
        let (k, t, w) = self.locate(s);
        let v = hermite(
            t,
            w,
            self.f2_pdf[k],
            self.f2_pdf[k + 1],
            self.pdf_slope(k),
            self.pdf_slope(k + 1),
        );
        v.max(0.0)
    }

    /// Bisection on the interpolated cdf to `1e-10` in `s`; values of `p`
    /// beyond the tabulated mass map to the grid ends.
    pub fn quantile(&self, p: f64) -> f64 {
        let (mut lo, mut hi) = (self.s_min(), self.s_max());
        if p <= self.f2_cdf[0] {
            return lo;
        }
        if p >= 1.0 {
            return hi;
        }
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn simpson(&self, g: impl Fn(usize) -> f64) -> f64 {
        let n = self.len() - 1;
        let h = self.step;
        let even = n - n % 2;
        let mut acc = g(0) + g(even);
        for k in 1..even {
            acc += if k % 2 == 1 { 4.0 * g(k) } else { 2.0 * g(k) };
        }
        let mut total = acc * h / 3.0;
        if even < n {
            total += 0.5 * (self.grid[n] - self.grid[even]) * (g(even) + g(n));
        }
        total
    }

    pub fn mean(&self) -> f64 {
        self.simpson(|k| self.grid[k] * self.f2_pdf[k])
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.simpson(|k| (self.grid[k] - mu).powi(2) * self.f2_pdf[k])
    }

    pub fn trapezoid_mass(&self) -> f64 {
        self.f2_pdf
            .windows(2)
            .zip(self.grid.windows(2))
            .map(|(f, s)| 0.5 * (f[0] + f[1]) * (s[1] - s[0]))
            .sum()
    }
}

pub fn tw2_cdf(table: &TwTable, s: f64) -> f64 {
    table.cdf(s)
}

pub fn tw2_pdf(table: &TwTable, s: f64) -> f64 {
    table.pdf(s)
}

pub fn tw2_quantile(table: &TwTable, p: f64) -> f64 {
    table.quantile(p)
}
