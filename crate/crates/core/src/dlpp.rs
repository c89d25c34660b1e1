//! Exact sampling of `L(m, n)` through directed last passage percolation.
//!
//! The exit time of customer `j` from server `i` obeys
//! `L(i,j) = max(L(i-1,j), L(i,j-1)) + w(i,j)` with zero boundary values.
//! For a system in equilibrium the weights are independent exponentials with
//! rate `mu_i - alpha` in the first customer column and `mu_i` elsewhere.

use rand::Rng;

use crate::model::QueueSystem;
use crate::rng;

/// Rates of the exponential weights `w(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightRateGrid {
    pub n: usize,
    first_column: Vec<f64>,
    bulk: Vec<f64>,
}

impl WeightRateGrid {
    pub fn new(sys: &QueueSystem) -> Self {
        Self {
            n: sys.n,
            first_column: sys.rates.iter().map(|mu| mu - sys.alpha).collect(),
            bulk: sys.rates.clone(),
        }
    }

    pub fn m(&self) -> usize {
        self.bulk.len()
    }

    /// Rate of `w(i, j)`, both indices 1-based.
    pub fn rate_of(&self, i: usize, j: usize) -> f64 {
        assert!(i >= 1 && i <= self.m() && j >= 1 && j <= self.n);
        if j == 1 {
            self.first_column[i - 1]
        } else {
            self.bulk[i - 1]
        }
    }

    /// Materializes one full weight grid, `grid[j][i]` for customer `j`, server `i`
    /// (0-based). Only used for small instances and tests.
    pub fn sample_grid<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Vec<f64>> {
        (1..=self.n)
            .map(|j| {
                (1..=self.m())
                    .map(|i| rng::exponential(rng, self.rate_of(i, j)))
                    .collect()
            })
            .collect()
    }
}

/// Last passage time to the far corner of an explicit weight grid
/// (`grid[j][i]`, customers outer), by a column sweep keeping one
/// length-`m` buffer.
pub fn last_passage_time(grid: &[Vec<f64>]) -> f64 {
    let m = grid.first().map_or(0, Vec::len);
    let mut column = vec![0.0f64; m];
    for customer in grid {
        debug_assert_eq!(customer.len(), m);
        let mut above = 0.0f64;
        for (cell, &w) in column.iter_mut().zip(customer) {
            above = cell.max(above) + w;
            *cell = above;
        }
    }
    column.last().copied().unwrap_or(0.0)
}

/// Samples one `L(m, n)`, drawing weights on the fly.
#[derive(Debug, Clone)]
pub struct DlppSampler {
    n: usize,
    inv_first: Vec<f64>,
    inv_bulk: Vec<f64>,
}

impl DlppSampler {
    pub fn new(sys: &QueueSystem) -> Self {
        Self {
            n: sys.n,
            inv_first: sys.rates.iter().map(|mu| 1.0 / (mu - sys.alpha)).collect(),
            inv_bulk: sys.rates.iter().map(|mu| 1.0 / mu).collect(),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let m = self.inv_bulk.len();
        let mut column = vec![0.0f64; m];
        for j in 0..self.n {
            let means = if j == 0 {
                &self.inv_first
            } else {
                &self.inv_bulk
            };
            let mut above = 0.0f64;
            for (cell, &mean) in column.iter_mut().zip(means) {
                let w = -rng::open_unit(rng).ln() * mean;
                above = cell.max(above) + w;
                *cell = above;
            }
        }
        column[m - 1]
    }
}

/// One draw of `L(m, n)` from a seed.
pub fn sample_latency(sys: &QueueSystem, seed: u64) -> f64 {
    DlppSampler::new(sys).draw(&mut rng::draw_rng(seed, crate::batch::DLPP_SALT, 0))
}
