//! The collapsed sector: probe bit tensored with uniform superpositions over
//! the cells of a nested partition of the grid.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral;

/// Disjoint cells listed innermost first, so every level set of the
/// schedule is a union of a prefix of cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellPartition {
    sizes: Vec<u64>,
    /// Threshold of the smallest level set containing each cell; `None` for
    /// the complement of every level set.
    outer: Vec<Option<f64>>,
}

impl CellPartition {
    /// Cells from explicit sizes; empty cells are dropped.
    pub fn new(sizes: Vec<u64>) -> Result<Self> {
        let k = sizes.len();
        Self::with_thresholds(sizes, vec![None; k])
    }

    pub fn with_thresholds(sizes: Vec<u64>, outer: Vec<Option<f64>>) -> Result<Self> {
        if sizes.len() != outer.len() {
            return Err(Error::InvalidArgument("one threshold per cell expected".into()));
        }
        if sizes.first().copied().unwrap_or(0) == 0 {
            return Err(Error::InvalidArgument("innermost cell must be non-empty".into()));
        }
        let (sizes, outer) = sizes.into_iter().zip(outer).filter(|(s, _)| *s > 0).unzip();
        Ok(Self { sizes, outer })
    }

    /// `A_cur`, `A_prev \ A_cur`, complement of `A_prev`.
    pub fn nested(n: u64, n_prev: u64, n_cur: u64) -> Result<Self> {
        if !(1 <= n_cur && n_cur <= n_prev && n_prev <= n) {
            return Err(Error::InvalidArgument(format!(
                "nesting violated: N_cur = {n_cur}, N_prev = {n_prev}, N = {n}"
            )));
        }
        Self::new(vec![n_cur, n_prev - n_cur, n - n_prev])
    }

    /// One cell per shell of a decreasing chain `N_1 >= ... >= N_m`.
    pub fn chain(n: u64, sizes: &[u64], thresholds: Option<&[f64]>) -> Result<Self> {
        if sizes.is_empty() || sizes.windows(2).any(|w| w[1] > w[0]) || sizes[0] > n {
            return Err(Error::InvalidArgument(format!("sizes {sizes:?} are not a nested chain in N = {n}")));
        }
        let m = sizes.len();
        let mut cells = Vec::with_capacity(m + 1);
        let mut outer = Vec::with_capacity(m + 1);
        for i in (0..m).rev() {
            let inner = if i + 1 < m { sizes[i + 1] } else { 0 };
            cells.push(sizes[i] - inner);
            outer.push(thresholds.map(|d| d[i]));
        }
        cells.push(n - sizes[0]);
        outer.push(None);
        Self::with_thresholds(cells, outer)
    }

    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[u64] {
        &self.sizes
    }

    pub fn outer(&self) -> &[Option<f64>] {
        &self.outer
    }

    pub fn n(&self) -> u64 {
        self.sizes.iter().sum()
    }

    /// Number of leading cells whose union has `size` states.
    pub fn prefix_for(&self, size: u64) -> Result<usize> {
        let mut acc = 0;
        for (p, &s) in self.sizes.iter().enumerate() {
            acc += s;
            if acc == size {
                return Ok(p + 1);
            }
            if acc > size {
                break;
            }
        }
        Err(Error::InvalidArgument(format!(
            "no union of leading cells has {size} states (cells {:?})",
            self.sizes
        )))
    }

    pub fn prefix_size(&self, prefix: usize) -> u64 {
        self.sizes[..prefix].iter().sum()
    }

    /// `<u(C_j)|psi_0> = sqrt(|C_j| / N)`.
    pub fn uniform(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.sizes.iter().map(|&s| (s as f64 / n).sqrt()).collect()
    }
}

/// `b H_0 + (1 - b) H_P` with `b = m / N`, where the level set of `H_P` is
/// the union of the first `prefix` cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelHamiltonian {
    pub m: u64,
    pub prefix: usize,
}

impl LevelHamiltonian {
    pub fn h0(part: &CellPartition) -> Self {
        Self { m: part.n(), prefix: part.k() }
    }

    pub fn problem(prefix: usize) -> Self {
        Self { m: 0, prefix }
    }

    pub fn a(&self, part: &CellPartition) -> f64 {
        part.prefix_size(self.prefix) as f64 / part.n() as f64
    }

    pub fn b(&self, part: &CellPartition) -> f64 {
        self.m as f64 / part.n() as f64
    }

    pub fn params(&self, part: &CellPartition) -> Result<spectral::MixingParams> {
        spectral::MixingParams::new(part.n(), part.prefix_size(self.prefix), self.m)
    }

    /// Matrix in the cell basis.
    pub fn matrix(&self, part: &CellPartition) -> DMatrix<f64> {
        let s = part.uniform();
        let k = part.k();
        let b = self.b(part);
        let mut h = DMatrix::from_fn(k, k, |i, j| -b * s[i] * s[j]);
        for j in 0..self.prefix {
            h[(j, j)] -= 1.0 - b;
        }
        h
    }

    /// Ground energy and ground vector in the cell basis, from the two-cell
    /// closed form. For `b = 0` this is `u(A)`, the component reached from a
    /// state with positive overlap.
    pub fn ground(&self, part: &CellPartition) -> Result<(f64, Vec<f64>)> {
        let (a, b) = (self.a(part), self.b(part));
        let (e0, _) = spectral::eigenpair_ab(a, b)?;
        let (x1, x2) = spectral::ground_cells(a, b)?;
        let inside = part.prefix_size(self.prefix) as f64;
        let outside = part.n() as f64 - inside;
        let v = part
            .sizes()
            .iter()
            .enumerate()
            .map(|(j, &s)| {
                if j < self.prefix {
                    x1 * (s as f64 / inside).sqrt()
                } else {
                    x2 * (s as f64 / outside).sqrt()
                }
            })
            .collect();
        Ok((e0, v))
    }
}

/// Amplitudes over `|bit> (x) u(C_j)`, index `bit * k + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorState {
    amps: Vec<Complex64>,
    k: usize,
}

impl SectorState {
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if amps.is_empty() || !amps.len().is_multiple_of(2) {
            return Err(Error::InvalidArgument("sector state needs 2k amplitudes".into()));
        }
        if amps.iter().any(|z| !z.is_finite()) {
            return Err(Error::NumericDomain("non-finite amplitude".into()));
        }
        let k = amps.len() / 2;
        Ok(Self { amps, k })
    }

    /// `|bit> (x) register` for a real register vector in the cell basis.
    pub fn with_probe(bit: u8, register: &[f64]) -> Self {
        let k = register.len();
        let mut amps = vec![Complex64::new(0.0, 0.0); 2 * k];
        let off = bit as usize * k;
        for (j, &x) in register.iter().enumerate() {
            amps[off + j] = Complex64::new(x, 0.0);
        }
        Self { amps, k }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn population(&self, bit: u8) -> f64 {
        self.branch(bit).iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn branch(&self, bit: u8) -> &[Complex64] {
        let off = bit as usize * self.k;
        &self.amps[off..off + self.k]
    }

    /// Per-cell probabilities of the register within one probe branch.
    pub fn cell_probabilities(&self, bit: u8) -> Vec<f64> {
        self.branch(bit).iter().map(|z| z.norm_sqr()).collect()
    }

    /// `|<target|register>|^2` within one probe branch, normalized.
    pub fn register_fidelity(&self, bit: u8, target: &[f64]) -> f64 {
        let p = self.population(bit);
        if p == 0.0 {
            return 0.0;
        }
        let ov: Complex64 = self.branch(bit).iter().zip(target).map(|(z, &t)| z * t).sum();
        ov.norm_sqr() / p
    }

    /// Swaps the probe branches (a probe pi pulse).
    pub fn flip_probe(&self) -> Self {
        let mut amps = self.amps[self.k..].to_vec();
        amps.extend_from_slice(&self.amps[..self.k]);
        Self { amps, k: self.k }
    }

    /// Keeps one probe branch and renormalizes.
    pub fn project(&self, bit: u8) -> Option<Self> {
        let p = self.population(bit);
        if p <= 0.0 {
            return None;
        }
        let scale = 1.0 / p.sqrt();
        let off = bit as usize * self.k;
        let amps = (0..2 * self.k)
            .map(|i| {
                if i >= off && i < off + self.k {
                    self.amps[i] * scale
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Some(Self { amps, k: self.k })
    }
}

/// Step Hamiltonian restricted to the sector, `2k x 2k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorMatrix {
    pub matrix: DMatrix<f64>,
}

/// `-(w/2) sz (x) I + alpha |1><1| (x) H_prev + |0><0| (x) H_cur + c sx (x) I`.
pub fn sector_matrix(
    part: &CellPartition,
    cur: &LevelHamiltonian,
    prev: &LevelHamiltonian,
    omega: f64,
    alpha: f64,
    c: f64,
) -> SectorMatrix {
    let k = part.k();
    let hc = cur.matrix(part);
    let hp = prev.matrix(part);
    let mut m = DMatrix::zeros(2 * k, 2 * k);
    for i in 0..k {
        for j in 0..k {
            m[(i, j)] = hc[(i, j)];
            m[(k + i, k + j)] = alpha * hp[(i, j)];
        }
        m[(i, i)] -= omega / 2.0;
        m[(k + i, k + i)] += omega / 2.0;
        m[(i, k + i)] = c;
        m[(k + i, i)] = c;
    }
    SectorMatrix { matrix: m }
}

/// `exp(-i H t)` through the eigendecomposition of a sector matrix.
#[derive(Debug, Clone)]
pub struct Propagator {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl Propagator {
    pub fn new(h: &SectorMatrix) -> Result<Self> {
        let m = &h.matrix;
        let mut skew = 0.0f64;
        for i in 0..m.nrows() {
            for j in (i + 1)..m.ncols() {
                skew = skew.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        if skew > 1e-12 {
            return Err(Error::NonHermitian(skew));
        }
        let (values, vectors) = crate::linalg::symmetric_eigen(m);
        Ok(Self { values, vectors })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    pub fn apply(&self, s: &SectorState, t: f64) -> SectorState {
        let v = &self.vectors;
        let d = v.nrows();
        let amps = s.amplitudes();
        let coeff: Vec<Complex64> = (0..d)
            .map(|k| {
                let c: Complex64 = (0..d).map(|q| amps[q] * v[(q, k)]).sum();
                c * Complex64::from_polar(1.0, -self.values[k] * t)
            })
            .collect();
        let out = (0..d).map(|q| (0..d).map(|k| coeff[k] * v[(q, k)]).sum()).collect();
        SectorState { amps: out, k: s.k }
    }
}

pub fn evolve(s: &SectorState, h: &SectorMatrix, t: f64) -> Result<SectorState> {
    if h.matrix.nrows() != 2 * s.k() {
        return Err(Error::InvalidArgument("state and sector matrix dimensions differ".into()));
    }
    Ok(Propagator::new(h)?.apply(s, t))
}

/// Draws the probe bit and collapses the state onto it.
pub fn measure_probe<R: Rng + ?Sized>(s: &SectorState, rng: &mut R) -> (u8, SectorState) {
    let p0 = s.population(0) / (s.population(0) + s.population(1));
    let bit = if rng.gen::<f64>() < p0 { 0 } else { 1 };
    match s.project(bit) {
        Some(post) => (bit, post),
        None => {
            let other = 1 - bit;
            (other, s.project(other).expect("normalized state has a populated branch"))
        }
    }
}
