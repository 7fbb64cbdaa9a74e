//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::tf::C64;

pub type CMatrix = DMatrix<C64>;

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

pub fn is_hermitian(m: &CMatrix, rel_tol: f64) -> bool {
    frobenius(&(m - m.adjoint())) <= rel_tol * frobenius(m)
}

/// Eigenvalues (ascending) and eigenvectors of the Hermitian part of `m`.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    hermitian_eigen(m).0
}

/// `U diag(f(lambda)) U^H` for the Hermitian part of `m`.
pub fn hermitian_function(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    let (values, u) = hermitian_eigen(m);
    let mut scaled = u.clone();
    for (j, &lambda) in values.iter().enumerate() {
        scaled.column_mut(j).scale_mut(f(lambda));
    }
    scaled * u.adjoint()
}

/// Smallest and largest singular values.
pub fn singular_value_range(m: &CMatrix) -> (f64, f64) {
    let sv = m.clone().singular_values();
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let max = sv.iter().copied().fold(0.0, f64::max);
    (min, max)
}

/// Eigenvalues of a general complex matrix via the complex Schur form.
pub fn eigenvalues(m: &CMatrix) -> Vec<C64> {
    let schur = m.clone().schur();
    let (_, t) = schur.unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}
