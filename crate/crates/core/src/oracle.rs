//! Brute-force references: dense Hamiltonians in the computational basis,
//! dense eigensolves and propagation, exhaustive grid argmin. Size caps keep
//! these to small validation instances.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{index_to_point, BasisIndex, GridSpec, ObjectiveFunction};
use crate::output::{fmt_float, Table};

/// Largest register dimension for dense Hamiltonians.
pub const HAMILTONIAN_CAP: usize = 4096;
/// Largest register dimension for dense probe-coupled evolution.
pub const EVOLVE_CAP: usize = 256;
/// Largest grid for exhaustive minimization.
pub const BRUTE_FORCE_CAP: u64 = 10_000_000;

const SYMMETRY_TOL: f64 = 1e-12;

fn check_cap(size: usize, cap: usize) -> Result<()> {
    if size > cap {
        Err(Error::SizeCapExceeded { size, cap })
    } else {
        Ok(())
    }
}

/// `H_0 = -|psi_0><psi_0|` with `psi_0` uniform.
pub fn dense_h0(n: usize) -> Result<DMatrix<f64>> {
    check_cap(n, HAMILTONIAN_CAP)?;
    Ok(DMatrix::from_element(n, n, -1.0 / n as f64))
}

/// `H_P = -sum_{q in A} |q><q|`.
pub fn dense_projector(mask: &[bool]) -> Result<DMatrix<f64>> {
    check_cap(mask.len(), HAMILTONIAN_CAP)?;
    let d = DVector::from_iterator(mask.len(), mask.iter().map(|&m| if m { -1.0 } else { 0.0 }));
    Ok(DMatrix::from_diagonal(&d))
}

/// `(M/N) H_0 + (1 - M/N) H_P` for level-set mask `A`, entry by entry.
pub fn dense_hamiltonian(n: usize, mask: &[bool], m: u64) -> Result<DMatrix<f64>> {
    check_cap(n, HAMILTONIAN_CAP)?;
    if mask.len() != n {
        return Err(Error::InvalidArgument(format!("mask has {} entries, N = {n}", mask.len())));
    }
    if !mask.iter().any(|&x| x) {
        return Err(Error::InvalidArgument("level set is empty".into()));
    }
    let nf = n as f64;
    let b = m as f64 / nf;
    let mut h = DMatrix::from_element(n, n, -b / nf);
    for (q, &inside) in mask.iter().enumerate() {
        if inside {
            h[(q, q)] -= 1.0 - b;
        }
    }
    Ok(h)
}

/// The probe-coupled step Hamiltonian on `C^2 (x) C^N`, probe bit major:
/// `[[-w/2 + H_cur, c], [c, w/2 + alpha H_prev]]`.
pub fn dense_step_hamiltonian(
    h_cur: &DMatrix<f64>,
    h_prev: &DMatrix<f64>,
    omega: f64,
    alpha: f64,
    c: f64,
) -> Result<DMatrix<f64>> {
    let n = h_cur.nrows();
    check_cap(n, EVOLVE_CAP)?;
    if h_prev.nrows() != n {
        return Err(Error::InvalidArgument("register dimensions differ".into()));
    }
    let mut h = DMatrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(h_cur);
    h.view_mut((n, n), (n, n)).copy_from(&(h_prev * alpha));
    for q in 0..n {
        h[(q, q)] -= omega / 2.0;
        h[(n + q, n + q)] += omega / 2.0;
        h[(q, n + q)] = c;
        h[(n + q, q)] = c;
    }
    Ok(h)
}

/// Largest `|H - H^T|` entry.
pub fn asymmetry(h: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..h.nrows() {
        for j in (i + 1)..h.ncols() {
            worst = worst.max((h[(i, j)] - h[(j, i)]).abs());
        }
    }
    worst
}

/// Eigenvalues ascending with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct DenseEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl DenseEigen {
    pub fn ground(&self) -> DVector<f64> {
        self.vectors.column(0).into_owned()
    }

    /// Distinct levels with multiplicities, merged within `tol`.
    pub fn levels(&self, tol: f64) -> Vec<(f64, u64)> {
        let mut out: Vec<(f64, u64)> = Vec::new();
        for &v in &self.values {
            match out.last_mut() {
                Some(last) if (v - last.0).abs() <= tol => last.1 += 1,
                _ => out.push((v, 1)),
            }
        }
        out
    }
}

pub fn dense_eigensolve(h: &DMatrix<f64>) -> Result<DenseEigen> {
    if !h.is_square() {
        return Err(Error::InvalidArgument("matrix is not square".into()));
    }
    let skew = asymmetry(h);
    if skew > SYMMETRY_TOL {
        return Err(Error::NonHermitian(skew));
    }
    let (values, vectors) = crate::linalg::symmetric_eigen(h);
    Ok(DenseEigen { values, vectors })
}

/// `exp(-i H t)` applied through a stored eigendecomposition.
#[derive(Debug, Clone)]
pub struct DensePropagator {
    eig: DenseEigen,
}

impl DensePropagator {
    pub fn new(h: &DMatrix<f64>) -> Result<Self> {
        check_cap(h.nrows(), 2 * EVOLVE_CAP)?;
        Ok(Self {
            eig: dense_eigensolve(h)?,
        })
    }

    pub fn apply(&self, state: &[Complex64], t: f64) -> Vec<Complex64> {
        let v = &self.eig.vectors;
        let n = v.nrows();
        let mut coeff = vec![Complex64::new(0.0, 0.0); n];
        for (k, c) in coeff.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for q in 0..n {
                acc += state[q] * v[(q, k)];
            }
            *c = acc * Complex64::from_polar(1.0, -self.eig.values[k] * t);
        }
        (0..n)
            .map(|q| (0..n).map(|k| coeff[k] * v[(q, k)]).sum())
            .collect()
    }
}

pub fn dense_evolve(h: &DMatrix<f64>, state: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
    if state.len() != h.nrows() {
        return Err(Error::InvalidArgument("state and matrix dimensions differ".into()));
    }
    Ok(DensePropagator::new(h)?.apply(state, t))
}

/// `|<u|v>|^2` for unit vectors.
pub fn fidelity(u: &[Complex64], v: &[Complex64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum::<Complex64>().norm_sqr()
}

/// Columns `u(C_j)` for a cell labelling of the register; empty cells give
/// zero columns.
pub fn cell_isometry(cell_of: &[usize], k: usize) -> DMatrix<f64> {
    let mut sizes = vec![0usize; k];
    for &c in cell_of {
        sizes[c] += 1;
    }
    let mut w = DMatrix::zeros(cell_of.len(), k);
    for (q, &c) in cell_of.iter().enumerate() {
        w[(q, c)] = 1.0 / (sizes[c] as f64).sqrt();
    }
    w
}

/// Debug dump of a matrix, one CSV row per matrix row.
pub fn matrix_table(h: &DMatrix<f64>) -> Table {
    let mut t = Table::new((0..h.ncols()).map(|j| format!("c{j}")));
    for i in 0..h.nrows() {
        t.push((0..h.ncols()).map(|j| fmt_float(h[(i, j)])).collect());
    }
    t
}

/// Exhaustive minimum of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForceMinimum {
    /// Smallest `J` attaining the minimum.
    pub index: BasisIndex,
    pub point: Vec<f64>,
    pub value: f64,
    /// Every minimizer, ascending.
    pub minimizers: Vec<BasisIndex>,
}

pub fn brute_force_minimum(f: &ObjectiveFunction, g: &GridSpec) -> Result<BruteForceMinimum> {
    let n = g.len();
    check_cap(n.min(usize::MAX as u64) as usize, BRUTE_FORCE_CAP as usize)?;
    const CHUNK: u64 = 1 << 14;
    let (value, minimizers) = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut x = vec![0.0; g.dims()];
            let mut best = f64::INFINITY;
            let mut at = Vec::new();
            for j in c * CHUNK..((c + 1) * CHUNK).min(n) {
                g.fill_point(j, &mut x);
                let v = f.eval(&x);
                if v < best {
                    best = v;
                    at.clear();
                }
                if v == best {
                    at.push(BasisIndex(j));
                }
            }
            (best, at)
        })
        .reduce(
            || (f64::INFINITY, Vec::new()),
            |a, b| match a.0.total_cmp(&b.0) {
                std::cmp::Ordering::Less => a,
                std::cmp::Ordering::Greater => b,
                std::cmp::Ordering::Equal => {
                    let mut all = a.1;
                    all.extend(b.1);
                    (a.0, all)
                }
            },
        );
    let mut minimizers = minimizers;
    minimizers.sort();
    let index = *minimizers
        .first()
        .ok_or_else(|| Error::NumericDomain("objective has no finite minimum".into()))?;
    Ok(BruteForceMinimum {
        index,
        point: index_to_point(index, g)?,
        value,
        minimizers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{self, MixingParams};

    #[test]
    fn two_state_hamiltonian() {
        let h = dense_hamiltonian(2, &[true, false], 1).unwrap();
        let want = [[-0.75, -0.25], [-0.25, -0.25]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((h[(i, j)] - want[i][j]).abs() < 1e-15);
            }
        }
        let e = dense_eigensolve(&h).unwrap();
        let (lo, hi) = spectral::eigenpair_ab(0.5, 0.5).unwrap();
        assert!((e.values[0] - lo).abs() < 1e-14 && (e.values[1] - hi).abs() < 1e-14);
    }

    #[test]
    fn limits_of_the_mix() {
        let mask = [true, false, true, false, false];
        let h = dense_hamiltonian(5, &mask, 0).unwrap();
        assert_eq!(h, dense_projector(&mask).unwrap());
        let h = dense_hamiltonian(5, &[true; 5], 5).unwrap();
        assert!((h - dense_h0(5).unwrap()).abs().max() < 1e-15);
        assert!(dense_hamiltonian(5, &[false; 5], 2).is_err());
        assert!(matches!(dense_h0(5000), Err(Error::SizeCapExceeded { .. })));
    }

    #[test]
    fn mix_is_convex_combination() {
        let n = 12;
        let mask: Vec<bool> = (0..n).map(|q| q % 3 == 0).collect();
        let m = 7;
        let b = m as f64 / n as f64;
        let direct = dense_h0(n).unwrap() * b + dense_projector(&mask).unwrap() * (1.0 - b);
        assert!((dense_hamiltonian(n, &mask, m).unwrap() - direct).abs().max() <= 1e-15);
    }

    #[test]
    fn h0_spectrum() {
        let e = dense_eigensolve(&dense_h0(32).unwrap()).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-12);
        assert!(e.values[1..].iter().all(|v| v.abs() < 1e-12));
        assert_eq!(e.levels(1e-10), vec![(e.values[0], 1), (e.values[1], 31)]);
    }

    #[test]
    fn matches_closed_form_spectrum() {
        let n = 8;
        let mask: Vec<bool> = (0..n).map(|q| q < 4).collect();
        let e = dense_eigensolve(&dense_hamiltonian(n, &mask, 4).unwrap()).unwrap();
        let p = MixingParams::new(8, 4, 4).unwrap();
        let want = spectral::spectrum_values(&p);
        for (a, b) in e.values.iter().zip(&want) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn refuses_asymmetric() {
        let mut h = DMatrix::identity(3, 3);
        h[(0, 1)] = 1e-6;
        assert!(matches!(dense_eigensolve(&h), Err(Error::NonHermitian(_))));
    }

    #[test]
    fn evolution_basics() {
        let n = 6;
        let mask: Vec<bool> = (0..n).map(|q| q < 2).collect();
        let hc = dense_hamiltonian(n, &mask, 3).unwrap();
        let hp = dense_h0(n).unwrap();
        let h = dense_step_hamiltonian(&hc, &hp, 1.0, 0.7, 0.0).unwrap();
        let mut psi = vec![Complex64::new(0.0, 0.0); 2 * n];
        for q in 0..n {
            psi[n + q] = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
        }
        let same = dense_evolve(&h, &psi, 0.0).unwrap();
        assert!(fidelity(&same, &psi) > 1.0 - 1e-14);
        // uncoupled probe: |1>|psi_0> is an eigenstate
        let later = dense_evolve(&h, &psi, 123.0).unwrap();
        assert!((fidelity(&later, &psi) - 1.0).abs() < 1e-12);
        let norm: f64 = later.iter().map(|z| z.norm_sqr()).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn isometry_columns_are_orthonormal() {
        let w = cell_isometry(&[0, 1, 1, 2, 2, 2], 3);
        let g = w.transpose() * &w;
        assert!((g - DMatrix::identity(3, 3)).abs().max() < 1e-15);
    }

    #[test]
    fn brute_force_grids() {
        let f = ObjectiveFunction::price();
        let r = brute_force_minimum(&f, &f.default_grid().unwrap()).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.minimizers.len(), 4);
        assert_eq!(r.index, r.minimizers[0]);
        assert_eq!(r.point, vec![-5.0, -5.0]);

        let d = ObjectiveFunction::damavandi();
        let r = brute_force_minimum(&d, &d.default_grid().unwrap()).unwrap();
        assert_eq!(r.point, vec![2.0, 2.0]);
        assert!(r.value.abs() < 1e-12);

        let gw = ObjectiveFunction::griewank(2);
        let r = brute_force_minimum(&gw, &gw.default_grid().unwrap()).unwrap();
        assert_eq!(r.point, vec![0.0, 0.0]);
        assert_eq!(r.minimizers.len(), 1);
    }
}
