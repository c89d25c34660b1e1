//! Airy function `Ai` and its derivative on the positive axis `s >= 4`,
//! used to seed the Painleve II integration.
//!
//! Large arguments use the asymptotic expansion
//! `Ai(s) ~ e^{-zeta} / (2 sqrt(pi) s^{1/4}) sum_k (-1)^k u_k / zeta^k`,
//! `zeta = (2/3) s^{3/2}`, truncated at its smallest term. Where that term is
//! not yet below double precision the functions go through
//! `Ai(s) = sqrt(s/3) K_{1/3}(zeta) / pi` and
//! `Ai'(s) = -s K_{2/3}(zeta) / (pi sqrt 3)`, with `K_nu` from Temme's
//! continued fraction.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const AIRY_MIN_ARG: f64 = 4.0;

/// Relative size of the smallest asymptotic term below which the expansion
/// alone is trusted.
const SERIES_TRUST: f64 = 2e-17;

fn check_domain(s: f64) -> Result<()> {
    if s >= AIRY_MIN_ARG && s.is_finite() {
        Ok(())
    } else {
        Err(Error::DomainError {
            value: s,
            expected: "s >= 4",
        })
    }
}

pub fn airy_ai(s: f64) -> Result<f64> {
    check_domain(s)?;
    Ok(airy_pair(s).0)
}

pub fn airy_ai_prime(s: f64) -> Result<f64> {
    check_domain(s)?;
    Ok(airy_pair(s).1)
}

/// `(Ai(s), Ai'(s))` for `s >= 4`.
pub fn airy_ai_and_prime(s: f64) -> Result<(f64, f64)> {
    check_domain(s)?;
    Ok(airy_pair(s))
}

fn airy_pair(s: f64) -> (f64, f64) {
    match asymptotic_series(s) {
        Some((ai, aip, smallest)) if smallest <= SERIES_TRUST => (ai, aip),
        _ => bessel_route(s),
    }
}

/// Asymptotic expansion truncated before its smallest term. Returns the
/// values and the relative size of the first omitted term.
pub fn asymptotic_series(s: f64) -> Option<(f64, f64, f64)> {
    if s <= 0.0 {
        return None;
    }
    let zeta = 2.0 / 3.0 * s.powf(1.5);
    let mut u = 1.0f64;
    let mut sum_ai = 1.0f64;
    let mut sum_aip = 1.0f64;
    let mut zpow = 1.0f64;
    let mut prev = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        u *= (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0)
            / ((2.0 * kf - 1.0) * 216.0 * kf);
        let v = -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * u;
        zpow *= zeta;
        let term = u / zpow;
        if term.abs() >= prev {
            break;
        }
        prev = term.abs();
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum_ai += sign * term;
        sum_aip += sign * v / zpow;
    }
    let pref = (-zeta).exp() / (2.0 * PI.sqrt());
    let ai = pref / s.powf(0.25) * sum_ai;
    let aip = -pref * s.powf(0.25) * sum_aip;
    Some((ai, aip, prev))
}

/// `(Bi(s), Bi'(s))` from the asymptotic expansion (all terms positive),
/// truncated at the smallest term. Relative accuracy is about `e^{-2 zeta}`,
/// roughly `1e-8` at `s = 6`; good enough for correction terms only.
pub fn airy_bi_asymptotic(s: f64) -> Result<(f64, f64)> {
    check_domain(s)?;
    let zeta = 2.0 / 3.0 * s.powf(1.5);
    let (mut u, mut zpow, mut prev) = (1.0f64, 1.0f64, f64::INFINITY);
    let (mut sum_bi, mut sum_bip) = (1.0f64, 1.0f64);
    for k in 1..200 {
        let kf = k as f64;
        u *= (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0)
            / ((2.0 * kf - 1.0) * 216.0 * kf);
        let v = -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * u;
        zpow *= zeta;
        let term = u / zpow;
        if term >= prev {
            break;
        }
        prev = term;
        sum_bi += term;
        sum_bip += v / zpow;
    }
    let pref = zeta.exp() / PI.sqrt();
    Ok((pref / s.powf(0.25) * sum_bi, pref * s.powf(0.25) * sum_bip))
}

/// `K_nu(x)` and `K_{nu+1}(x)` for `|nu| <= 1/2`, `x >= 2`, by Steed's
/// evaluation of Temme's continued fraction.
pub fn bessel_k_pair(nu: f64, x: f64) -> (f64, f64) {
    debug_assert!(nu.abs() <= 0.5 && x >= 2.0);
    let a1 = 0.25 - nu * nu;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    for i in 2..10_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    h *= a1;
    let k_nu = (PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    let k_nu1 = k_nu * (nu + x + 0.5 - h) / x;
    (k_nu, k_nu1)
}

fn bessel_route(s: f64) -> (f64, f64) {
    let zeta = 2.0 / 3.0 * s.powf(1.5);
    let (k13, k43) = bessel_k_pair(1.0 / 3.0, zeta);
    let k23 = k43 - 2.0 / (3.0 * zeta) * k13;
    let ai = (s / 3.0).sqrt() * k13 / PI;
    let aip = -s * k23 / (PI * 3f64.sqrt());
    (ai, aip)
}
