//! Leading-order and fluctuation predictions for `L(m, n)`.
//!
//! Everything is driven by
//! `l(z) = sum_i c_i / (mu_i - z) + n / z`, a finite sum over the atoms of the
//! rate measure (`c_i` = multiplicity), its unique critical point on
//! `(0, min retained rate)`, and which of the arrival rate or the slowest
//! server sits beyond that critical point.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{QueueSystem, SpectralMeasure};

/// Width of the window (relative to the slowest rate) around a phase
/// boundary inside which no classification is attempted.
pub const EDGE_DELTA: f64 = 1e-6;

/// Distance below which `z` is treated as sitting on a pole of `l`.
pub const POLE_EPS: f64 = 1e-12;

/// `l(z)` built from the `m - r` fastest rates (`r = truncation`).
#[derive(Debug, Clone, PartialEq)]
pub struct RateTransform {
    /// `(rate, coefficient)`, increasing rate. The coefficient is the
    /// multiplicity unless the transform was renormalized.
    atoms: Vec<(f64, f64)>,
    m: usize,
    n: usize,
    truncation: usize,
}

impl RateTransform {
    /// `l_m(z)` over the whole measure.
    pub fn new(measure: &SpectralMeasure, n: usize) -> Self {
        Self {
            atoms: measure
                .atoms
                .iter()
                .map(|a| (a.rate, a.multiplicity as f64))
                .collect(),
            m: measure.m(),
            n,
            truncation: 0,
        }
    }

    /// `l_m^{(r)}(z)`: the `r` smallest rates removed, the factor `m` kept.
    pub fn truncated(measure: &SpectralMeasure, n: usize, r: usize) -> Result<Self> {
        let m = measure.m();
        if r >= m {
            return Err(Error::DomainError {
                value: r as f64,
                expected: "truncation r < m",
            });
        }
        let kept = SpectralMeasure::from_rates(&measure.sorted_rates[..m - r]);
        Ok(Self {
            atoms: kept
                .atoms
                .iter()
                .map(|a| (a.rate, a.multiplicity as f64))
                .collect(),
            m,
            n,
            truncation: r,
        })
    }

    /// Rescales the retained atoms to total coefficient `m`, i.e. replaces the
    /// truncated measure by the probability measure of the remaining bulk.
    pub fn renormalized(&self) -> Self {
        let kept = (self.m - self.truncation) as f64;
        let factor = self.m as f64 / kept;
        Self {
            atoms: self.atoms.iter().map(|&(r, c)| (r, c * factor)).collect(),
            ..self.clone()
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// Smallest retained rate: the right end of the interval holding the
    /// critical point.
    pub fn min_retained_rate(&self) -> f64 {
        self.atoms[0].0
    }

    fn check_pole(&self, z: f64) -> Result<()> {
        if !(z > 0.0) || self.atoms.iter().any(|&(r, _)| (r - z).abs() <= POLE_EPS) {
            return Err(Error::PoleProximity { z });
        }
        Ok(())
    }

    pub fn value(&self, z: f64) -> Result<f64> {
        self.derivative(z, 0)
    }

    /// `k`-th derivative of `l` at `z`, `k <= 3`.
    pub fn derivative(&self, z: f64, k: u32) -> Result<f64> {
        assert!(k <= 3, "derivative order {k} not supported");
        self.check_pole(z)?;
        Ok(self.derivative_unchecked(z, k))
    }

    fn derivative_unchecked(&self, z: f64, k: u32) -> f64 {
        let fact = [1.0, 1.0, 2.0, 6.0][k as usize];
        let p = k as i32 + 1;
        let servers: f64 = self.atoms.iter().map(|&(r, c)| c / (r - z).powi(p)).sum();
        let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        fact * (servers + sign * self.n as f64 / z.powi(p))
    }

    /// Unique root of `l'` in `(0, min retained rate)`, by bisection on the
    /// increasing function `l'` and a final Newton step.
    pub fn solve_lambda(&self) -> Result<f64> {
        let top = self.min_retained_rate();
        let mut lo = 1e-9 * top;
        let mut hi = top * (1.0 - 1e-9);
        let (flo, fhi) = (
            self.derivative_unchecked(lo, 1),
            self.derivative_unchecked(hi, 1),
        );
        if !(flo < 0.0 && fhi > 0.0) {
            return Err(Error::BracketFailure { lo, hi });
        }
        while hi - lo > 1e-14 * top {
            let mid = 0.5 * (lo + hi);
            let f = self.derivative_unchecked(mid, 1);
            if f == 0.0 {
                return Ok(mid);
            }
            if f < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mid = 0.5 * (lo + hi);
        let step = self.derivative_unchecked(mid, 1) / self.derivative_unchecked(mid, 2);
        let polished = mid - step;
        Ok(if polished > lo && polished < hi {
            polished
        } else {
            mid
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PhaseCase {
    /// No bottleneck: Tracy-Widom fluctuations on the `m^{1/3}` scale.
    ATracyWidom,
    /// Arrival rate above the critical point: Gaussian, `m^{1/2}` scale.
    BArrivalGaussian,
    /// A single slowest server below the critical point: Gaussian.
    CSlowServerGaussian,
    /// `r > 1` tied slowest servers below the critical point.
    CRankRGue,
}

impl PhaseCase {
    pub fn label(self) -> &'static str {
        match self {
            PhaseCase::ATracyWidom => "A_TracyWidom",
            PhaseCase::BArrivalGaussian => "B_ArrivalGaussian",
            PhaseCase::CSlowServerGaussian => "C_SlowServerGaussian",
            PhaseCase::CRankRGue => "C_RankR_GUE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LimitLaw {
    Tw2,
    StdNormal,
    /// Largest eigenvalue of an `r x r` GUE matrix; no CDF is provided.
    GueR,
}

impl LimitLaw {
    pub fn label(self) -> &'static str {
        match self {
            LimitLaw::Tw2 => "TW2",
            LimitLaw::StdNormal => "StdNormal",
            LimitLaw::GueR => "GUE_r",
        }
    }
}

/// Predicted centering, fluctuation scale and limit law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseDiagnosis {
    pub case: PhaseCase,
    /// Critical point `lambda_m` of the untruncated transform.
    pub lambda: f64,
    /// Critical point of the bulk transform once the `r` slowest servers are
    /// removed (case C only).
    pub lambda_truncated: Option<f64>,
    pub center: f64,
    /// Absent for the rank-`r` GUE case.
    pub scale: Option<f64>,
    pub scale_exponent: Option<f64>,
    pub law: LimitLaw,
    /// Number of slowest servers split off (0 outside case C).
    pub r: usize,
}

impl PhaseDiagnosis {
    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::json!({
            "case_label": self.case.label(),
            "lambda_m": self.lambda,
            "center": self.center,
            "scale": self.scale,
            "scale_exponent": self.scale_exponent,
            "limit_law": self.law.label(),
            "r": self.r,
        });
        if let Some(lr) = self.lambda_truncated {
            v["lambda_m_truncated"] = lr.into();
        }
        v
    }

    /// `(L - center) / scale`, when a scale exists.
    pub fn standardize(&self, latency: f64) -> Option<f64> {
        self.scale.map(|s| (latency - self.center) / s)
    }
}

/// Decides which limit regime applies to a finite instance.
///
/// The slowest servers are split off first: if the critical point of the
/// remaining bulk lies above the slowest rate, that server dominates (case C).
/// Otherwise the arrival rate is compared with `lambda_m` (cases A and B).
/// Instances within `EDGE_DELTA` of a boundary are refused.
pub fn classify_phase(sys: &QueueSystem) -> Result<PhaseDiagnosis> {
    sys.validate()?;
    let measure = sys.spectral_measure();
    let (m, n) = (sys.m(), sys.n);
    let mu_min = measure.min_rate;
    let r = measure.min_multiplicity;
    let delta = EDGE_DELTA * mu_min;

    let full = RateTransform::new(&measure, n);
    let lambda = full.solve_lambda()?;

    if r < m {
        let bulk = RateTransform::truncated(&measure, n, r)?.renormalized();
        let lambda_r = bulk.solve_lambda()?;
        if lambda_r > mu_min + delta {
            let center = bulk.value(mu_min)?;
            let (case, scale, law) = if r == 1 {
                let radicand = -bulk.derivative(mu_min, 1)?;
                debug_assert!(radicand > 0.0);
                (
                    PhaseCase::CSlowServerGaussian,
                    Some(radicand.sqrt()),
                    LimitLaw::StdNormal,
                )
            } else {
                (PhaseCase::CRankRGue, None, LimitLaw::GueR)
            };
            return Ok(PhaseDiagnosis {
                case,
                lambda,
                lambda_truncated: Some(lambda_r),
                center,
                scale,
                scale_exponent: Some(0.5),
                law,
                r,
            });
        }
        if (lambda_r - mu_min).abs() <= delta {
            return Err(Error::BoundaryRegime(format!(
                "slowest rate {mu_min} is within {EDGE_DELTA:e} (relative) of the bulk critical point {lambda_r}"
            )));
        }
    }

    let alpha = sys.alpha;
    if alpha < lambda - delta {
        let curvature = full.derivative(lambda, 2)?;
        Ok(PhaseDiagnosis {
            case: PhaseCase::ATracyWidom,
            lambda,
            lambda_truncated: None,
            center: full.value(lambda)?,
            scale: Some((curvature / 2.0).cbrt()),
            scale_exponent: Some(1.0 / 3.0),
            law: LimitLaw::Tw2,
            r: 0,
        })
    } else if alpha > lambda + delta {
        let slope = full.derivative(alpha, 1)?;
        debug_assert!(slope > 0.0);
        Ok(PhaseDiagnosis {
            case: PhaseCase::BArrivalGaussian,
            lambda,
            lambda_truncated: None,
            center: full.value(alpha)?,
            scale: Some(slope.sqrt()),
            scale_exponent: Some(0.5),
            law: LimitLaw::StdNormal,
            r: 0,
        })
    } else {
        Err(Error::BoundaryRegime(format!(
            "arrival rate {alpha} is within {EDGE_DELTA:e} (relative) of the critical point {lambda}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn transform(rates: &[f64], n: usize) -> RateTransform {
        RateTransform::new(&SpectralMeasure::from_rates(rates), n)
    }

    fn one_slow(m: usize, slow: f64) -> Vec<f64> {
        let mut rates = vec![slow];
        rates.extend(std::iter::repeat_n(1.0, m - 1));
        rates
    }

    #[test]
    fn value_for_equal_rates() {
        let t = transform(&[1.0; 100], 100);
        assert!((t.value(0.5).unwrap() - 400.0).abs() < 1e-12);
    }

    #[test]
    fn value_by_hand_summation() {
        let t = transform(&[1.0, 1.5, 2.2], 2);
        let hand = 1.0 / 0.6 + 1.0 / 1.1 + 1.0 / 1.8 + 2.0 / 0.4;
        assert!((t.value(0.4).unwrap() - hand).abs() < 1e-14);
        assert!((hand - 8.131_313_131_313_13).abs() < 1e-12);
    }

    #[test]
    fn poles_are_refused() {
        let t = transform(&[1.0, 2.0], 3);
        assert!(matches!(t.value(1.0), Err(Error::PoleProximity { .. })));
        assert!(matches!(
            t.value(2.0 + 1e-13),
            Err(Error::PoleProximity { .. })
        ));
        assert!(matches!(t.value(0.0), Err(Error::PoleProximity { .. })));
        assert!(matches!(
            t.derivative(-0.5, 1),
            Err(Error::PoleProximity { .. })
        ));
    }

    #[test]
    fn derivatives_match_central_differences() {
        let t = transform(&[0.7, 1.0, 1.0, 1.3, 2.0], 4);
        let h = 1e-5 * 0.7;
        for &z in &[0.1, 0.25, 0.4, 0.55, 0.65] {
            for k in 1..=3 {
                let fd = (t.derivative(z + h, k - 1).unwrap()
                    - t.derivative(z - h, k - 1).unwrap())
                    / (2.0 * h);
                let exact = t.derivative(z, k).unwrap();
                assert!(
                    (fd - exact).abs() <= 1e-6 * exact.abs().max(1.0),
                    "k={k} z={z}: {fd} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn third_derivative_of_l_changes_sign() {
        // l''' = 6 sum 1/(mu-z)^4 - 6n/z^4 is negative near 0; only l'' is
        // sign-definite on (0, mu_min)
        let t = transform(&[1.0; 10], 10);
        assert!(t.derivative(0.05, 3).unwrap() < 0.0);
        assert!(t.derivative(0.95, 3).unwrap() > 0.0);
    }

    #[test]
    fn equal_rates_closed_form_lambda() {
        let t = transform(&[1.0; 100], 100);
        assert!((t.solve_lambda().unwrap() - 0.5).abs() < 1e-10);
    }

    /// Sign change of l' located by a 1e-6 grid scan.
    fn grid_scan_root(t: &RateTransform) -> (f64, f64) {
        let top = t.min_retained_rate();
        let step = 1e-6;
        let mut z = step;
        let mut prev = t.derivative(z, 1).unwrap();
        while z + step < top {
            let next = t.derivative(z + step, 1).unwrap();
            if prev < 0.0 && next >= 0.0 {
                return (z, z + step);
            }
            prev = next;
            z += step;
        }
        panic!("no sign change");
    }

    #[test]
    fn three_server_lambda_matches_grid_scan() {
        let t = transform(&[1.0, 1.5, 2.2], 2);
        let (lo, hi) = grid_scan_root(&t);
        // frozen from an independent scan: root in [0.554054, 0.554055]
        assert!((lo - 0.554054).abs() < 2e-6 && (hi - 0.554055).abs() < 2e-6);
        let lambda = t.solve_lambda().unwrap();
        assert!(lambda >= lo - 1e-12 && lambda <= hi + 1e-12, "{lambda}");
        assert!((lambda - 0.554_054_687_132_202).abs() < 1e-12);
        let d1 = t.derivative(lambda, 1).unwrap();
        let d2 = t.derivative(lambda, 2).unwrap();
        assert!(d1.abs() <= 1e-10 * d2.abs().max(1.0));
    }

    #[test]
    fn lambda_scales_with_rates() {
        let rates = [0.4, 0.9, 1.0, 1.0, 2.5];
        let base = transform(&rates, 7).solve_lambda().unwrap();
        for c in [0.01, 0.3, 7.0, 1e3] {
            let scaled: Vec<f64> = rates.iter().map(|r| r * c).collect();
            let l = transform(&scaled, 7).solve_lambda().unwrap();
            assert!((l / (base * c) - 1.0).abs() < 1e-9, "c={c}");
        }
    }

    #[test]
    fn lambda_is_the_argmin() {
        let t = transform(&one_slow(50, 0.6), 80);
        let lambda = t.solve_lambda().unwrap();
        let eps = 1e-4 * t.min_retained_rate();
        let v = t.value(lambda).unwrap();
        assert!(t.value(lambda - eps).unwrap() > v);
        assert!(t.value(lambda + eps).unwrap() > v);
    }

    #[test]
    fn truncation_drops_smallest_rates() {
        let h = SpectralMeasure::from_rates(&[0.3, 0.4, 1.0, 1.0]);
        let t = RateTransform::truncated(&h, 5, 1).unwrap();
        assert_eq!(t.min_retained_rate(), 0.4);
        let direct = 1.0 / (0.4 - 0.2) + 2.0 / 0.8 + 5.0 / 0.2;
        assert!((t.value(0.2).unwrap() - direct).abs() < 1e-12);
        let bulk = t.renormalized();
        let direct = (4.0 / 3.0) * (1.0 / 0.2 + 2.0 / 0.8) + 5.0 / 0.2;
        assert!((bulk.value(0.2).unwrap() - direct).abs() < 1e-12);
        assert!(RateTransform::truncated(&h, 5, 4).is_err());
    }

    #[test]
    fn large_equal_rate_system_is_case_a() {
        let sys = QueueSystem::uniform(1000, 1000, 1.0, 0.0).unwrap();
        let d = classify_phase(&sys).unwrap();
        assert_eq!(d.case, PhaseCase::ATracyWidom);
        assert_eq!(d.law, LimitLaw::Tw2);
        assert!((d.center - 4000.0).abs() < 1e-9 * 4000.0);
        let curvature = 2.0 * 1000.0 / 0.125 + 2.0 * 1000.0 / 0.125;
        let scale = (curvature / 2.0f64).cbrt();
        assert!((d.scale.unwrap() - scale).abs() < 1e-9 * scale);
    }

    #[test]
    fn high_arrival_rate_is_case_b() {
        let sys = QueueSystem::uniform(100, 100, 1.0, 0.7).unwrap();
        let d = classify_phase(&sys).unwrap();
        assert_eq!(d.case, PhaseCase::BArrivalGaussian);
        assert!((d.center - 476.190_476_190_476).abs() < 1e-9);
        // (m/(mu-alpha)^2 - n/alpha^2)^{1/2}, frozen from a 30-digit evaluation
        assert!((d.scale.unwrap() - 30.116_930_096_841_708).abs() < 1e-9);
    }

    #[test]
    fn slow_server_is_case_c() {
        let sys = QueueSystem::new(100, one_slow(100, 0.3), 0.0).unwrap();
        let d = classify_phase(&sys).unwrap();
        assert_eq!(d.case, PhaseCase::CSlowServerGaussian);
        assert_eq!(d.r, 1);
        let expect = 100.0 / 0.7 + 100.0 / 0.3;
        assert!((d.center - expect).abs() < 1e-9 * expect);
        let scale = (100.0 / 0.09 - 100.0 / 0.49f64).sqrt();
        assert!((d.scale.unwrap() - scale).abs() < 1e-9 * scale);
        assert!((d.lambda_truncated.unwrap() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn mild_slow_server_stays_case_a() {
        let sys = QueueSystem::new(100, one_slow(100, 0.7), 0.2).unwrap();
        let d = classify_phase(&sys).unwrap();
        assert_eq!(d.case, PhaseCase::ATracyWidom);
    }

    #[test]
    fn tied_slow_servers_are_gue() {
        let mut rates = vec![0.3, 0.3];
        rates.extend(std::iter::repeat_n(1.0, 98));
        let d = classify_phase(&QueueSystem::new(100, rates, 0.1).unwrap()).unwrap();
        assert_eq!(d.case, PhaseCase::CRankRGue);
        assert_eq!(d.r, 2);
        assert_eq!(d.scale, None);
        assert_eq!(d.law, LimitLaw::GueR);
        let expect = 100.0 / 0.7 + 100.0 / 0.3;
        assert!((d.center - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn alpha_at_threshold_is_boundary() {
        let sys = QueueSystem::uniform(100, 100, 1.0, 0.5).unwrap();
        assert!(matches!(
            classify_phase(&sys),
            Err(Error::BoundaryRegime(_))
        ));
        let sys = QueueSystem::new(100, one_slow(100, 0.5), 0.0).unwrap();
        assert!(matches!(
            classify_phase(&sys),
            Err(Error::BoundaryRegime(_))
        ));
    }

    #[test]
    fn json_shape() {
        let d = classify_phase(&QueueSystem::uniform(100, 100, 1.0, 0.3).unwrap()).unwrap();
        let v = d.to_json();
        assert_eq!(v["case_label"], "A_TracyWidom");
        assert_eq!(v["limit_law"], "TW2");
        assert_eq!(v["r"], 0);
        assert!((v["center"].as_f64().unwrap() - 400.0).abs() < 1e-9);
        for key in ["lambda_m", "scale", "scale_exponent"] {
            assert!(v[key].is_number(), "{key}");
        }
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn rates_strategy() -> impl Strategy<Value = Vec<f64>> {
            prop::collection::vec(0.2f64..3.0, 1..40)
        }

        proptest! {
            #[test]
            fn curvature_of_exponent_is_positive(rates in rates_strategy(), n in 1usize..200) {
                // l'' = m * (third derivative of the steepest-descent exponent)
                let t = RateTransform::new(&SpectralMeasure::from_rates(&rates), n);
                let top = t.min_retained_rate();
                for k in 1..100 {
                    let z = top * k as f64 / 100.0;
                    prop_assert!(t.derivative(z, 2).unwrap() > 0.0);
                }
            }

            #[test]
            fn classification_ignores_rate_order(
                rates in rates_strategy(),
                n in 1usize..200,
                frac in 0.0f64..0.95,
                seed in any::<u64>(),
            ) {
                use rand::seq::SliceRandom;
                use rand::SeedableRng;
                let alpha = frac * rates.iter().cloned().fold(f64::INFINITY, f64::min);
                let mut shuffled = rates.clone();
                shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
                let a = classify_phase(&QueueSystem::new(n, rates, alpha).unwrap());
                let b = classify_phase(&QueueSystem::new(n, shuffled, alpha).unwrap());
                match (a, b) {
                    (Ok(a), Ok(b)) => {
                        prop_assert_eq!(a.center.to_bits(), b.center.to_bits());
                        prop_assert_eq!(a.scale.map(f64::to_bits), b.scale.map(f64::to_bits));
                        prop_assert_eq!(a.case, b.case);
                    }
                    (Err(a), Err(b)) => prop_assert_eq!(a, b),
                    (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
                }
            }
        }
    }
}
