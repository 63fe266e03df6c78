//! Symmetric eigendecomposition shared by the sector and dense simulators.

use nalgebra::DMatrix;

/// Eigenvalues ascending and the matching orthonormal eigenvector columns of
/// a real symmetric matrix. Only the lower triangle is read.
pub fn symmetric_eigen(h: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = h.nrows();
    let m = faer::Mat::<f64>::from_fn(n, n, |i, j| h[(i, j)]);
    let eig = m
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("symmetric eigensolver did not converge");
    let (s, u) = (eig.S(), eig.U());
    let values = (0..n).map(|k| s[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| u[(i, j)]);
    (values, vectors)
}
