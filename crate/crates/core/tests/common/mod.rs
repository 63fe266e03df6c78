#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use qrt_core::oracle::{cell_isometry, dense_hamiltonian};
use qrt_core::qrt::{CellPartition, LevelHamiltonian, SectorState};
use rand::seq::SliceRandom;
use rand::Rng;

/// Two nested level sets `cur` inside `prev` inside an `n`-point register,
/// scattered over the register at random.
#[derive(Debug, Clone)]
pub struct Nested {
    pub n: u64,
    pub n_prev: u64,
    pub n_cur: u64,
    pub m_prev: u64,
    pub m_cur: u64,
    /// Cell of each register index: 0 = cur, 1 = prev minus cur, 2 = rest.
    pub label: Vec<usize>,
}

impl Nested {
    pub fn random<R: Rng>(rng: &mut R, max_n: u64) -> Self {
        let n = rng.gen_range(4..=max_n);
        let n_prev = rng.gen_range(2..=n);
        let n_cur = rng.gen_range(1..n_prev);
        let m_prev = rng.gen_range(1..=n);
        let m_cur = rng.gen_range(1..=n);
        Self::scattered(rng, n, n_prev, n_cur, m_prev, m_cur)
    }

    pub fn scattered<R: Rng>(rng: &mut R, n: u64, n_prev: u64, n_cur: u64, m_prev: u64, m_cur: u64) -> Self {
        let mut label: Vec<usize> = (0..n)
            .map(|q| if q < n_cur { 0 } else if q < n_prev { 1 } else { 2 })
            .collect();
        label.shuffle(rng);
        Self { n, n_prev, n_cur, m_prev, m_cur, label }
    }

    pub fn partition(&self) -> CellPartition {
        CellPartition::nested(self.n, self.n_prev, self.n_cur).unwrap()
    }

    pub fn levels(&self, part: &CellPartition) -> (LevelHamiltonian, LevelHamiltonian) {
        let prev = LevelHamiltonian { m: self.m_prev, prefix: part.prefix_for(self.n_prev).unwrap() };
        let cur = LevelHamiltonian { m: self.m_cur, prefix: part.prefix_for(self.n_cur).unwrap() };
        (prev, cur)
    }

    pub fn dense(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = self.n as usize;
        let prev: Vec<bool> = self.label.iter().map(|&c| c < 2).collect();
        let cur: Vec<bool> = self.label.iter().map(|&c| c == 0).collect();
        (
            dense_hamiltonian(n, &prev, self.m_prev).unwrap(),
            dense_hamiltonian(n, &cur, self.m_cur).unwrap(),
        )
    }

    /// Register-space embedding of the partition's cells (empty cells are
    /// dropped by the partition, so the labels are renumbered to match).
    pub fn isometry(&self) -> DMatrix<f64> {
        let mut sizes = [0u64; 3];
        for &c in &self.label {
            sizes[c] += 1;
        }
        let mut map = [usize::MAX; 3];
        let mut next = 0;
        for c in 0..3 {
            if sizes[c] > 0 {
                map[c] = next;
                next += 1;
            }
        }
        let relabelled: Vec<usize> = self.label.iter().map(|&c| map[c]).collect();
        cell_isometry(&relabelled, next)
    }

    /// Lifts a sector state to the probe-major dense state.
    pub fn lift(&self, s: &SectorState) -> Vec<Complex64> {
        let w = self.isometry();
        let mut out = Vec::with_capacity(2 * self.n as usize);
        for bit in 0..2u8 {
            let branch = s.branch(bit);
            for q in 0..self.n as usize {
                out.push((0..branch.len()).map(|j| branch[j] * w[(q, j)]).sum());
            }
        }
        out
    }
}

/// Least-squares slope of `log10 y` against `log10 x`.
pub fn log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.log10()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.log10()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
