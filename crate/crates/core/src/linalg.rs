//! Dense complex Hermitian eigensolver: Householder reduction to a real
//! symmetric tridiagonal matrix followed by the implicitly shifted QL method.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// QL iterations allowed per eigenvalue before giving up.
pub const QL_SWEEP_BUDGET: usize = 50;

/// Relative asymmetry tolerated on input.
pub const HERMITIAN_RTOL: f64 = 1e-12;

/// Square complex matrix in row-major order, expected to be Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl HermitianMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i * dim + j] = f(i, j);
            }
        }
        m
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        Self::from_fn(diag.len(), |i, j| {
            if i == j {
                Complex64::new(diag[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// `B B*` for a row-major `rows x cols` factor `B`. Only the lower
    /// triangle is computed; the upper is mirrored so the result is exactly
    /// Hermitian.
    pub fn gram_of_rows(factor: &[Complex64], rows: usize, cols: usize) -> Self {
        assert_eq!(factor.len(), rows * cols);
        let mut m = Self::zeros(rows);
        for i in 0..rows {
            let ri = &factor[i * cols..(i + 1) * cols];
            for k in 0..=i {
                let rk = &factor[k * cols..(k + 1) * cols];
                let mut acc = Complex64::new(0.0, 0.0);
                for (a, b) in ri.iter().zip(rk) {
                    acc += a * b.conj();
                }
                if i == k {
                    acc.im = 0.0;
                }
                m.data[i * rows + k] = acc;
                m.data[k * rows + i] = acc.conj();
            }
        }
        m
    }

    /// `B* B` for a row-major `rows x cols` factor `B`.
    pub fn gram_of_columns(factor: &[Complex64], rows: usize, cols: usize) -> Self {
        assert_eq!(factor.len(), rows * cols);
        let mut m = Self::zeros(cols);
        for r in 0..rows {
            let row = &factor[r * cols..(r + 1) * cols];
            for i in 0..cols {
                let ci = row[i].conj();
                for k in 0..=i {
                    m.data[i * cols + k] += ci * row[k];
                }
            }
        }
        for i in 0..cols {
            m.data[i * cols + i].im = 0.0;
            for k in 0..i {
                m.data[k * cols + i] = m.data[i * cols + k].conj();
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim)
            .map(|i| {
                self.data[i * self.dim..(i + 1) * self.dim]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in 0..=i {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    fn check_hermitian(&self) -> Result<()> {
        let scale = self.frobenius_norm();
        let asym = self.asymmetry();
        if asym > HERMITIAN_RTOL * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::NotHermitian(asym / scale));
        }
        Ok(())
    }
}

struct Reflector {
    offset: usize,
    v: Vec<Complex64>,
    tau: f64,
}

/// Reduces `a` in place to Hermitian tridiagonal form. Returns the real
/// diagonal, the complex subdiagonal and the reflectors applied.
fn tridiagonalize(
    a: &mut HermitianMatrix,
    keep: bool,
) -> (Vec<f64>, Vec<Complex64>, Vec<Reflector>) {
    let n = a.dim;
    let mut reflectors = Vec::new();
    let mut p = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let x0 = a.get(k + 1, k);
        let alpha = (k + 1..n)
            .map(|i| a.get(i, k).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let tail = alpha * alpha - x0.norm_sqr();
        if alpha == 0.0 || tail <= f64::EPSILON * f64::EPSILON * alpha * alpha {
            continue;
        }
        let phase = if x0.norm() > 0.0 {
            x0 / x0.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let mut v: Vec<Complex64> = (k + 1..n).map(|i| a.get(i, k)).collect();
        v[0] += phase * alpha;
        let tau = 1.0 / (alpha * (alpha + x0.norm()));

        // p = tau * A22 v
        for (r, pr) in p[..len].iter_mut().enumerate() {
            let row = &a.data[(k + 1 + r) * n + k + 1..(k + 2 + r) * n];
            let mut acc = Complex64::new(0.0, 0.0);
            for (x, y) in row.iter().zip(&v) {
                acc += x * y;
            }
            *pr = acc * tau;
        }
        let vhp: Complex64 = v.iter().zip(&p[..len]).map(|(x, y)| x.conj() * y).sum();
        let kk = 0.5 * tau * vhp.re;
        for (pr, vr) in p[..len].iter_mut().zip(&v) {
            *pr -= vr * kk;
        }
        // A22 -= v w* + w v*
        for r in 0..len {
            let (vr, wr) = (v[r], p[r]);
            let row = &mut a.data[(k + 1 + r) * n + k + 1..(k + 2 + r) * n];
            for c in 0..len {
                row[c] -= vr * p[c].conj() + wr * v[c].conj();
            }
        }
        let beta = -phase * alpha;
        a.set(k + 1, k, beta);
        a.set(k, k + 1, beta.conj());
        for i in k + 2..n {
            a.set(i, k, Complex64::new(0.0, 0.0));
            a.set(k, i, Complex64::new(0.0, 0.0));
        }
        if keep {
            reflectors.push(Reflector {
                offset: k + 1,
                v,
                tau,
            });
        }
    }
    let diag = (0..n).map(|i| a.get(i, i).re).collect();
    let sub = (0..n.saturating_sub(1)).map(|i| a.get(i + 1, i)).collect();
    (diag, sub, reflectors)
}

/// Implicit QL on a real symmetric tridiagonal matrix. `e[i]` couples rows
/// `i` and `i+1`; `e` must have length `n` (last entry ignored). When `z` is
/// given, the plane rotations are accumulated into its columns (`z[row][col]`).
fn tql(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [Vec<f64>]>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_SWEEP_BUDGET {
                return Err(Error::EigenNonConvergence {
                    sweeps: QL_SWEEP_BUDGET,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0f64, 1.0f64, 0.0f64);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    for row in z.iter_mut() {
                        let f = row[i + 1];
                        row[i + 1] = s * row[i] + c * f;
                        row[i] = c * row[i] - s * f;
                    }
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// All eigenvalues, ascending.
pub fn eigenvalues(matrix: &HermitianMatrix) -> Result<Vec<f64>> {
    matrix.check_hermitian()?;
    let mut work = matrix.clone();
    let (mut d, sub, _) = tridiagonalize(&mut work, false);
    let mut e: Vec<f64> = sub.iter().map(|z| z.norm()).collect();
    e.push(0.0);
    tql(&mut d, &mut e, None)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// `vectors[k]` is the unit eigenvector for `values[k]`.
    pub vectors: Vec<Vec<Complex64>>,
}

/// Eigenvalues and eigenvectors.
pub fn eigh(matrix: &HermitianMatrix) -> Result<HermitianEigen> {
    matrix.check_hermitian()?;
    let n = matrix.dim;
    let mut work = matrix.clone();
    let (mut d, sub, reflectors) = tridiagonalize(&mut work, true);

    // diagonal phases that make the subdiagonal real and nonnegative
    let mut phases = vec![Complex64::new(1.0, 0.0); n];
    let mut e = Vec::with_capacity(n);
    for (k, s) in sub.iter().enumerate() {
        let mag = s.norm();
        phases[k + 1] = if mag > 0.0 {
            phases[k] * (s / mag)
        } else {
            phases[k]
        };
        e.push(mag);
    }
    e.push(0.0);

    let mut z: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    tql(&mut d, &mut e, Some(&mut z))?;

    // Q = P_0 P_1 ... applied to the identity
    let mut q: Vec<Vec<Complex64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
                .collect()
        })
        .collect();
    for refl in &reflectors {
        for row in q.iter_mut() {
            let dot: Complex64 = row[refl.offset..]
                .iter()
                .zip(&refl.v)
                .map(|(x, v)| x * v)
                .sum();
            let scale = dot * refl.tau;
            for (x, v) in row[refl.offset..].iter_mut().zip(&refl.v) {
                *x -= scale * v.conj();
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&k| d[k]).collect();
    let vectors = order
        .iter()
        .map(|&k| {
            (0..n)
                .map(|i| (0..n).map(|l| q[i][l] * phases[l] * z[l][k]).sum())
                .collect()
        })
        .collect();
    Ok(HermitianEigen { values, vectors })
}

/// Largest eigenvalue of a Hermitian matrix.
pub fn largest_eigenvalue_hermitian(matrix: &HermitianMatrix) -> Result<f64> {
    let vals = eigenvalues(matrix)?;
    Ok(vals.last().copied().unwrap_or(f64::NAN))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_normal, draw_rng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_hermitian(n: usize, seed: u64) -> HermitianMatrix {
        let mut rng = draw_rng(seed, 0, 0);
        let mut m = HermitianMatrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let z = complex_normal(&mut rng);
                if i == j {
                    m.set(i, i, c(z.re * 2.0, 0.0));
                } else {
                    m.set(i, j, z);
                    m.set(j, i, z.conj());
                }
            }
        }
        m
    }

    /// Power iteration with Hotelling deflation on the shifted matrix
    /// `A + s I` (`s = ||A||_F` makes it positive definite); returns the
    /// spectrum in descending order.
    fn power_iteration_spectrum(a: &HermitianMatrix) -> Vec<f64> {
        let n = a.dim();
        let shift = a.frobenius_norm();
        let mut b = a.clone();
        for i in 0..n {
            b.set(i, i, b.get(i, i) + shift);
        }
        let mut found = Vec::new();
        let mut rng = draw_rng(99, 0, 0);
        for _ in 0..n {
            let mut v: Vec<Complex64> = (0..n).map(|_| complex_normal(&mut rng)).collect();
            let mut lambda = 0.0;
            for _ in 0..200_000 {
                let w = b.mul_vec(&v);
                let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                let rq: f64 = v.iter().zip(&w).map(|(x, y)| (x.conj() * y).re).sum();
                v = w.into_iter().map(|z| z / norm).collect();
                if (rq - lambda).abs() <= 1e-15 * rq.abs() {
                    lambda = rq;
                    break;
                }
                lambda = rq;
            }
            // deflate: B -= lambda v v*
            for i in 0..n {
                for j in 0..n {
                    b.set(i, j, b.get(i, j) - v[i] * v[j].conj() * lambda);
                }
            }
            found.push(lambda - shift);
        }
        found
    }

    #[test]
    fn diagonal_matrix() {
        let m = HermitianMatrix::from_real_diagonal(&[3.0, 1.0, 2.0]);
        assert_eq!(largest_eigenvalue_hermitian(&m).unwrap(), 3.0);
        assert_eq!(eigenvalues(&m).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn two_by_two_closed_form() {
        for &(a, b) in &[(1.5, c(0.3, -0.4)), (-2.0, c(0.0, 1.0)), (0.0, c(2.0, 0.0))] {
            let m = HermitianMatrix::from_fn(2, |i, j| match (i, j) {
                (0, 1) => b,
                (1, 0) => b.conj(),
                _ => c(a, 0.0),
            });
            let top = largest_eigenvalue_hermitian(&m).unwrap();
            assert!((top - (a + b.norm())).abs() < 1e-14, "{top}");
        }
    }

    #[test]
    fn matches_power_iteration_oracle() {
        for seed in 0..3 {
            let m = random_hermitian(10, seed);
            let ours = eigenvalues(&m).unwrap();
            let oracle = power_iteration_spectrum(&m);
            let top = *ours.last().unwrap();
            assert!((top - oracle[0]).abs() <= 1e-8, "{top} vs {}", oracle[0]);
            // the full spectra agree as well
            let mut oracle_sorted = oracle.clone();
            oracle_sorted.sort_by(f64::total_cmp);
            for (x, y) in ours.iter().zip(&oracle_sorted) {
                assert!((x - y).abs() <= 1e-6, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn eigenpairs_have_small_residuals() {
        for (n, seed) in [(1, 1), (2, 2), (5, 3), (17, 4), (40, 5)] {
            let m = random_hermitian(n, seed);
            let eig = eigh(&m).unwrap();
            let scale = m.frobenius_norm();
            for (val, vec) in eig.values.iter().zip(&eig.vectors) {
                let mv = m.mul_vec(vec);
                let res: f64 = mv
                    .iter()
                    .zip(vec)
                    .map(|(x, y)| (x - y * val).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                assert!(res <= 1e-8 * scale, "n={n} residual {res}");
                let nrm: f64 = vec.iter().map(|z| z.norm_sqr()).sum();
                assert!((nrm - 1.0).abs() < 1e-10);
            }
            let plain = eigenvalues(&m).unwrap();
            for (a, b) in plain.iter().zip(&eig.values) {
                assert!((a - b).abs() < 1e-10 * scale);
            }
        }
    }

    #[test]
    fn trace_is_preserved() {
        let m = random_hermitian(25, 8);
        let trace: f64 = (0..25).map(|i| m.get(i, i).re).sum();
        let sum: f64 = eigenvalues(&m).unwrap().iter().sum();
        assert!((trace - sum).abs() < 1e-10 * m.frobenius_norm());
    }

    #[test]
    fn gram_routes_share_nonzero_spectrum() {
        let mut rng = draw_rng(4, 0, 0);
        let (rows, cols) = (7, 4);
        let factor: Vec<Complex64> = (0..rows * cols).map(|_| complex_normal(&mut rng)).collect();
        let big = HermitianMatrix::gram_of_rows(&factor, rows, cols);
        let small = HermitianMatrix::gram_of_columns(&factor, rows, cols);
        let a = largest_eigenvalue_hermitian(&big).unwrap();
        let b = largest_eigenvalue_hermitian(&small).unwrap();
        assert!((a - b).abs() < 1e-12 * a, "{a} vs {b}");
        // the big Gram matrix is PSD with rank <= cols
        let vals = eigenvalues(&big).unwrap();
        assert!(vals.iter().all(|&v| v >= -1e-10 * a));
        assert!(vals[..rows - cols].iter().all(|&v| v.abs() < 1e-10 * a));
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = HermitianMatrix::from_fn(2, |i, j| if i < j { c(1.0, 0.0) } else { c(0.0, 0.0) });
        assert!(matches!(eigenvalues(&m), Err(Error::NotHermitian(_))));
    }
}
