//! Closed-form eigenstructure of the intermediate Hamiltonians
//! `H_i = b H_0 + (1 - b) H_P` with `a = N_i / N` and `b = M_i / N`.
//!
//! Everything reduces to the 2x2 block on the cell vectors `u(A_i)`,
//! `u(A_i^c)` plus two flat levels. Radicands are written as sums of
//! non-negative terms so small `a`, `b` do not cancel.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::output::{fmt_float, Table};

/// Integer mixing parameters of one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixingParams {
    pub n: u64,
    pub n_i: u64,
    pub m_i: u64,
}

impl MixingParams {
    /// `M_i = 0` is accepted and denotes the bare problem Hamiltonian.
    pub fn new(n: u64, n_i: u64, m_i: u64) -> Result<Self> {
        if n == 0 || n_i == 0 || n_i > n {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= N_i <= N, got N_i = {n_i}, N = {n}"
            )));
        }
        if m_i > n {
            return Err(Error::InvalidArgument(format!("need M_i <= N, got M_i = {m_i}, N = {n}")));
        }
        Ok(Self { n, n_i, m_i })
    }

    pub fn a(&self) -> f64 {
        self.n_i as f64 / self.n as f64
    }

    pub fn b(&self) -> f64 {
        self.m_i as f64 / self.n as f64
    }

    pub fn delta(&self) -> f64 {
        self.b() - self.a()
    }

    /// Complement cell size `N - N_i`.
    pub fn rest(&self) -> u64 {
        self.n - self.n_i
    }
}

/// Coefficients of `H_i = alpha e e^T + beta (e e_n^T + e_n e^T)
/// + (gamma - 2 beta) e_n e_n^T - (1 - b) I` on the space where the
/// complement cell is collapsed to the single vector `e_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedCoefficients {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub n_i: f64,
    pub b: f64,
}

impl ReducedCoefficients {
    pub fn new(p: &MixingParams) -> Self {
        let n = p.n as f64;
        let m = p.m_i as f64;
        let s1 = (p.rest() as f64).sqrt() - 1.0;
        let alpha = -m / (n * n);
        let beta = -m * s1 / (n * n);
        let gamma = 2.0 * beta + 1.0 - m / n - m * s1 * s1 / (n * n);
        Self {
            alpha,
            beta,
            gamma,
            n_i: p.n_i as f64,
            b: p.b(),
        }
    }

    /// `W^T H_i W` in the orthonormal basis `{u(A_i), e_n}`.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        let shift = 1.0 - self.b;
        let off = (self.alpha + self.beta) * self.n_i.sqrt();
        [
            [self.alpha * self.n_i - shift, off],
            [off, self.alpha + self.gamma - shift],
        ]
    }

    /// Eigenvalues of [`Self::matrix`], ascending.
    pub fn eigenvalues(&self) -> (f64, f64) {
        sym2_eigenvalues(self.matrix())
    }
}

/// Ascending eigenvalues of a real symmetric 2x2 matrix.
pub fn sym2_eigenvalues(m: [[f64; 2]; 2]) -> (f64, f64) {
    let mean = 0.5 * (m[0][0] + m[1][1]);
    let half = 0.5 * (m[0][0] - m[1][1]);
    let r = half.hypot(m[0][1]);
    (mean - r, mean + r)
}

/// `H_i` restricted to `{u(A), u(A^c)}`.
pub fn cell_matrix(a: f64, b: f64) -> [[f64; 2]; 2] {
    let off = -b * (a * (1.0 - a)).sqrt();
    [[-a * b - (1.0 - b), off], [off, -b * (1.0 - a)]]
}

/// `(1 - 2b)^2 + 4ab(1 - b)`, the squared 2x2 splitting.
#[inline]
pub fn radicand(a: f64, b: f64) -> f64 {
    let c = 1.0 - 2.0 * b;
    c * c + 4.0 * a * b * (1.0 - b)
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::NumericDomain(format!("{name} = {v} outside [0, 1]")))
    }
}

/// `(E_-, E_+)` of the 2x2 block at real `(a, b)`.
pub fn eigenpair_ab(a: f64, b: f64) -> Result<(f64, f64)> {
    check_unit("a", a)?;
    check_unit("b", b)?;
    let r = radicand(a, b);
    if r < 0.0 {
        return Err(Error::NumericDomain(format!("negative radicand {r}")));
    }
    let s = r.sqrt();
    Ok((-0.5 - 0.5 * s, -0.5 + 0.5 * s))
}

pub fn eigenpair(p: &MixingParams) -> (f64, f64) {
    eigenpair_ab(p.a(), p.b()).expect("valid mixing params lie in the unit square")
}

/// `E_+ - E_-` at real `(a, b)`; vanishes only at `(0, 1/2)`.
pub fn delta_e_ab(a: f64, b: f64) -> Result<f64> {
    let (lo, hi) = eigenpair_ab(a, b)?;
    Ok(hi - lo)
}

/// Distance from `E_-` to the flat level `-(1 - b)`.
pub fn flat_gap_ab(a: f64, b: f64) -> f64 {
    let s = radicand(a, b).sqrt();
    let c = 1.0 - 2.0 * b;
    if c > 0.0 {
        2.0 * a * b * (1.0 - b) / (s + c)
    } else {
        0.5 * (s - c)
    }
}

/// Both gap notions of one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyGap {
    /// `E_+ - E_-` of the 2x2 block.
    pub delta_e: f64,
    /// Ground level to the next distinct level of the full spectrum.
    pub ground_gap: f64,
    /// Whether the next level is the flat `-(1 - b)` level rather than `E_+`.
    pub flat_is_next: bool,
}

pub fn energy_gap(p: &MixingParams) -> EnergyGap {
    let (a, b) = (p.a(), p.b());
    let delta_e = delta_e_ab(a, b).expect("valid mixing params");
    let mut ground_gap = f64::INFINITY;
    let mut flat_is_next = false;
    if p.n_i >= 2 {
        ground_gap = flat_gap_ab(a, b);
        flat_is_next = true;
    }
    if p.n_i < p.n && delta_e < ground_gap {
        ground_gap = delta_e;
        flat_is_next = false;
    }
    if p.n_i == p.n && p.n == 1 {
        ground_gap = 0.0;
    }
    EnergyGap {
        delta_e,
        ground_gap,
        flat_is_next,
    }
}

/// Distinct eigenvalues with multiplicities, ascending. Levels closer than
/// `1e-12` are merged.
pub fn full_spectrum(p: &MixingParams) -> Vec<(f64, u64)> {
    let (lo, hi) = eigenpair(p);
    let b = p.b();
    let mut levels = vec![(lo, 1u64), (-(1.0 - b), p.n_i - 1)];
    if p.n_i < p.n {
        levels.push((hi, 1));
        levels.push((0.0, p.rest() - 1));
    }
    levels.retain(|&(_, m)| m > 0);
    levels.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut merged: Vec<(f64, u64)> = Vec::with_capacity(levels.len());
    for (v, m) in levels {
        match merged.last_mut() {
            Some(last) if (last.0 - v).abs() <= 1e-12 => last.1 += m,
            _ => merged.push((v, m)),
        }
    }
    merged
}

/// Every eigenvalue listed with repetition, ascending.
pub fn spectrum_values(p: &MixingParams) -> Vec<f64> {
    full_spectrum(p)
        .into_iter()
        .flat_map(|(v, m)| std::iter::repeat_n(v, m as usize))
        .collect()
}

/// `x1 / x2` of the ground state for `a` in `(0, 1)`, `b > 0`.
pub fn ground_ratio_ab(a: f64, b: f64) -> f64 {
    let s = radicand(a, b).sqrt();
    (1.0 + s) / (2.0 * b * (a * (1.0 - a)).sqrt()) - ((1.0 - a) / a).sqrt()
}

/// Ground state amplitudes on `u(A)` and `u(A^c)` at real `(a, b)`.
///
/// `b = 0` gives `(1, 0)` by continuity.
pub fn ground_components_ab(a: f64, b: f64) -> Result<(f64, f64)> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::DegeneratePartition { a });
    }
    check_unit("b", b)?;
    if b == 0.0 {
        return Ok((1.0, 0.0));
    }
    let r = ground_ratio_ab(a, b);
    if !r.is_finite() {
        return Ok((1.0, 0.0));
    }
    let x2 = 1.0 / r.hypot(1.0);
    Ok((r * x2, x2))
}

pub fn ground_components(p: &MixingParams) -> Result<(f64, f64)> {
    ground_components_ab(p.a(), p.b())
}

/// Like [`ground_components_ab`] but with `a = 1` mapped to `(1, 0)`: the
/// complement cell is empty and the ground state is `u(A)`.
pub fn ground_cells(a: f64, b: f64) -> Result<(f64, f64)> {
    if a == 1.0 {
        return Ok((1.0, 0.0));
    }
    ground_components_ab(a, b)
}

/// Inner product of the ground states of two nested steps, previous first.
///
/// `N_prev = N` is the uniform initial state.
pub fn overlap(n: u64, n_prev: u64, n_cur: u64, m_prev: u64, m_cur: u64) -> Result<f64> {
    if !(n_cur <= n_prev && n_prev <= n) {
        return Err(Error::InvalidArgument(format!(
            "nesting violated: N_cur = {n_cur}, N_prev = {n_prev}, N = {n}"
        )));
    }
    let prev = MixingParams::new(n, n_prev, m_prev)?;
    let cur = MixingParams::new(n, n_cur, m_cur)?;
    let (p1, p2) = ground_cells(prev.a(), prev.b())?;
    let (c1, c2) = ground_cells(cur.a(), cur.b())?;
    if n_cur == n {
        return Ok(p1 * c1);
    }
    let (pf, cf) = (n_prev as f64, n_cur as f64);
    let rest_cur = (n - n_cur) as f64;
    let t1 = (cf / pf).sqrt() * p1 * c1;
    let t2 = (n_prev - n_cur) as f64 / (pf * rest_cur).sqrt() * p1 * c2;
    let t3 = ((n - n_prev) as f64 / rest_cur).sqrt() * p2 * c2;
    Ok(t1 + t2 + t3)
}

pub fn overlap_params(prev: &MixingParams, cur: &MixingParams) -> Result<f64> {
    if prev.n != cur.n {
        return Err(Error::InvalidArgument("steps on different grids".into()));
    }
    overlap(prev.n, prev.n_i, cur.n_i, prev.m_i, cur.m_i)
}

/// `1 - 4a + 8a^2 - 4a^3`, the radicand on the diagonal `b = a`.
#[inline]
fn diag_radicand(a: f64) -> f64 {
    radicand(a, a)
}

/// Second-order expansion of `E_+ - E_-` around `b = a` in `delta = b - a`.
pub fn gap_expansion(a: f64, delta: f64) -> f64 {
    let s = diag_radicand(a);
    let r = s.sqrt();
    r - 2.0 * (1.0 - a) * (1.0 - 2.0 * a) / r * delta + 2.0 * a * (1.0 - a) / (s * r) * delta * delta
}

/// First-order expansion of `x1 / x2` around `b = a`.
pub fn ratio_expansion(a: f64, delta: f64) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::DegeneratePartition { a });
    }
    let r = diag_radicand(a).sqrt();
    let q = 1.0 - 2.0 * a + 2.0 * a * a;
    let w = (a * (1.0 - a)).sqrt();
    let c0 = (q + r) / (2.0 * a * w);
    let c1 = -(q + r) / (2.0 * a * a * w * r);
    Ok(c0 + c1 * delta)
}

/// Spectrum, gaps and ground components of one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub params: MixingParams,
    pub e_minus: f64,
    pub e_plus: f64,
    pub gap: EnergyGap,
    pub flat: f64,
    pub flat_multiplicity: u64,
    pub zero_multiplicity: u64,
    pub x1: f64,
    pub x2: f64,
    pub levels: Vec<(f64, u64)>,
}

pub fn summarize(p: &MixingParams) -> Result<SpectralSummary> {
    let (e_minus, e_plus) = eigenpair(p);
    let (x1, x2) = ground_cells(p.a(), p.b())?;
    Ok(SpectralSummary {
        params: *p,
        e_minus,
        e_plus,
        gap: energy_gap(p),
        flat: -(1.0 - p.b()),
        flat_multiplicity: p.n_i - 1,
        zero_multiplicity: p.rest().saturating_sub(1),
        x1,
        x2,
        levels: full_spectrum(p),
    })
}

/// `spectral.csv` over an `(a, b)` mesh. Ground components are NaN at
/// `a = 0`, where the level set is empty.
pub fn spectral_table(mesh: &[(f64, f64)]) -> Result<Table> {
    let mut t = Table::new(["a", "b", "E_minus", "E_plus", "gap", "x1", "x2"]);
    for &(a, b) in mesh {
        let (lo, hi) = eigenpair_ab(a, b)?;
        let (x1, x2) = match ground_cells(a, b) {
            Ok(x) => x,
            Err(Error::DegeneratePartition { .. }) => (f64::NAN, f64::NAN),
            Err(e) => return Err(e),
        };
        t.push(
            [a, b, lo, hi, hi - lo, x1, x2]
                .iter()
                .map(|&v| fmt_float(v))
                .collect(),
        );
    }
    Ok(t)
}

/// Regular mesh with `steps` points per axis over `[lo, hi]^2`.
pub fn mesh(lo: f64, hi: f64, steps: usize) -> Vec<(f64, f64)> {
    let at = |k: usize| {
        if steps <= 1 {
            lo
        } else {
            lo + (hi - lo) * k as f64 / (steps - 1) as f64
        }
    };
    (0..steps)
        .flat_map(|i| (0..steps).map(move |j| (at(i), at(j))))
        .collect()
}
