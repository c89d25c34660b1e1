//! Seed derivation and the few variates the samplers need.
//!
//! Every draw of a batch gets its own ChaCha8 stream keyed by
//! `(master seed, sampler salt)` and selected by the draw index, so a batch is
//! reproducible regardless of how draws are scheduled across threads.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type DrawRng = ChaCha8Rng;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent child seed from a parent seed and a label.
pub fn derive_seed(parent: u64, label: u64) -> u64 {
    mix64(mix64(parent) ^ label.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Generator for draw `index` of a batch.
pub fn draw_rng(master: u64, salt: u64, index: u64) -> DrawRng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(master, salt));
    rng.set_stream(index);
    rng
}

/// Uniform on `(0, 1]`.
#[inline]
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}

/// `Exp(rate)` by inversion.
#[inline]
pub fn exponential<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    -open_unit(rng).ln() / rate
}

/// Standard complex normal: real and imaginary parts i.i.d. `N(0, 1/2)`.
#[inline]
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut r1 = draw_rng(42, 1, 7);
        let mut r2 = draw_rng(42, 1, 7);
        let mut r3 = draw_rng(42, 1, 8);
        let mut r4 = draw_rng(42, 2, 7);
        let x1: u64 = r1.random();
        assert_eq!(x1, r2.random::<u64>());
        assert_ne!(x1, r3.random::<u64>());
        assert_ne!(x1, r4.random::<u64>());
    }

    #[test]
    fn open_unit_never_zero() {
        let mut rng = draw_rng(0, 0, 0);
        for _ in 0..100_000 {
            let u = open_unit(&mut rng);
            assert!(u > 0.0 && u <= 1.0);
        }
    }

    #[test]
    fn complex_normal_unit_second_moment() {
        let mut rng = draw_rng(3, 0, 0);
        let n = 200_000;
        let (mut m2, mut re2) = (0.0, 0.0);
        for _ in 0..n {
            let z = complex_normal(&mut rng);
            m2 += z.norm_sqr();
            re2 += z.re * z.re;
        }
        let m2 = m2 / n as f64;
        let re2 = re2 / n as f64;
        // E|z|^2 = 1 with sd 1/sqrt(n); E[re^2] = 1/2
        assert!((m2 - 1.0).abs() < 5.0 / (n as f64).sqrt(), "{m2}");
        assert!((re2 - 0.5).abs() < 5.0 / (n as f64).sqrt(), "{re2}");
    }
}
