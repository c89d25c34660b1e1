//! Sampling `L(m, n)` as the largest eigenvalue of
//! `W = Γ^{1/2} g g* Γ^{1/2} + Σ^{1/2} G G* Σ^{1/2}`, with `Σ = diag(1/mu_i)`,
//! `Γ = diag(1/(mu_i - alpha))` and standard complex Gaussian `g` (m x 1),
//! `G` (m x (n-1)).
//!
//! `W = A A*` for the m x n factor `A = [Γ^{1/2} g | Σ^{1/2} G]`, so the
//! sampler eigensolves whichever of `A A*` and `A* A` is smaller.

use num_complex::Complex64;
use rand::Rng;

use crate::error::Result;
use crate::linalg::{largest_eigenvalue_hermitian, HermitianMatrix};
use crate::model::QueueSystem;
use crate::rng::complex_normal;

/// Diagonals of `Σ` and `Γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFactors {
    pub sigma_diag: Vec<f64>,
    pub gamma_diag: Vec<f64>,
}

impl MatrixFactors {
    pub fn new(sys: &QueueSystem) -> Self {
        Self {
            sigma_diag: sys.rates.iter().map(|mu| 1.0 / mu).collect(),
            gamma_diag: sys.rates.iter().map(|mu| 1.0 / (mu - sys.alpha)).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RmtSampler {
    n: usize,
    sqrt_sigma: Vec<f64>,
    sqrt_gamma: Vec<f64>,
}

impl RmtSampler {
    pub fn new(sys: &QueueSystem) -> Self {
        let f = MatrixFactors::new(sys);
        Self {
            n: sys.n,
            sqrt_sigma: f.sigma_diag.iter().map(|x| x.sqrt()).collect(),
            sqrt_gamma: f.gamma_diag.iter().map(|x| x.sqrt()).collect(),
        }
    }

    /// Draws the factor `A` (row-major, m x n): column 0 from `g`, the rest from `G`.
    pub fn draw_factor<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Complex64> {
        let (m, n) = (self.sqrt_sigma.len(), self.n);
        let mut a = vec![Complex64::new(0.0, 0.0); m * n];
        for i in 0..m {
            a[i * n] = complex_normal(rng) * self.sqrt_gamma[i];
        }
        for i in 0..m {
            for j in 1..n {
                a[i * n + j] = complex_normal(rng) * self.sqrt_sigma[i];
            }
        }
        a
    }

    /// The m x m matrix `W` for a given factor.
    pub fn w_matrix(&self, factor: &[Complex64]) -> HermitianMatrix {
        HermitianMatrix::gram_of_rows(factor, self.sqrt_sigma.len(), self.n)
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let (m, n) = (self.sqrt_sigma.len(), self.n);
        let a = self.draw_factor(rng);
        let gram = if m <= n {
            HermitianMatrix::gram_of_rows(&a, m, n)
        } else {
            HermitianMatrix::gram_of_columns(&a, m, n)
        };
        Ok(largest_eigenvalue_hermitian(&gram)?.max(0.0))
    }
}

/// One draw of `Λ_max(W)` from a seed.
pub fn sample_eigen_latency(sys: &QueueSystem, seed: u64) -> Result<f64> {
    RmtSampler::new(sys).draw(&mut crate::rng::draw_rng(seed, crate::batch::RMT_SALT, 0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigenvalues;
    use crate::rng::draw_rng;

    #[test]
    fn factors_are_reciprocal_rates() {
        let sys = QueueSystem::new(2, vec![2.0, 4.0], 1.0).unwrap();
        let f = MatrixFactors::new(&sys);
        assert_eq!(f.sigma_diag, vec![0.5, 0.25]);
        assert_eq!(f.gamma_diag, vec![1.0, 1.0 / 3.0]);
    }

    #[test]
    fn one_by_one_is_exponential() {
        let sys = QueueSystem::new(1, vec![2.0], 0.5).unwrap();
        let s = RmtSampler::new(&sys);
        let mut rng = draw_rng(17, 0, 0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| s.draw(&mut rng).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        let se = sd / (n as f64).sqrt();
        assert!((mean - 1.0 / 1.5).abs() < 3.0 * se, "{mean} ± {se}");
    }

    #[test]
    fn small_side_route_matches_w() {
        // m > n uses A*A; the answer must equal the top eigenvalue of W itself
        let sys = QueueSystem::new(3, vec![0.7, 1.0, 1.3, 0.9, 2.0, 1.1], 0.2).unwrap();
        let s = RmtSampler::new(&sys);
        for idx in 0..20 {
            let direct = s.draw(&mut draw_rng(5, 0, idx)).unwrap();
            let factor = s.draw_factor(&mut draw_rng(5, 0, idx));
            let w = s.w_matrix(&factor);
            let top = largest_eigenvalue_hermitian(&w).unwrap();
            assert!((direct - top).abs() < 1e-10 * top, "{direct} vs {top}");
        }
    }

    #[test]
    fn w_is_positive_semidefinite() {
        let sys = QueueSystem::new(6, vec![0.4, 1.0, 1.0, 0.8, 3.0, 1.2, 0.9, 1.1], 0.3).unwrap();
        let s = RmtSampler::new(&sys);
        let mut rng = draw_rng(8, 0, 0);
        for _ in 0..200 {
            let w = s.w_matrix(&s.draw_factor(&mut rng));
            let vals = eigenvalues(&w).unwrap();
            assert!(vals.iter().all(|&v| v >= -1e-10), "{vals:?}");
        }
    }
}
