//! Small dense complex linear algebra.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. The free functions here add the
//! checks and conventions the rest of the crate relies on.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

pub const HERM_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-9;
/// Eigenvalues below this are treated as zero by negative powers.
pub const SUPPORT_TOL: f64 = 1e-12;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// Build a matrix from row-major entries.
pub fn from_rows(rows: usize, cols: usize, entries: &[Complex64]) -> Result<ComplexMatrix> {
    if entries.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "{} entries for a {rows}x{cols} matrix",
            entries.len()
        )));
    }
    Ok(ComplexMatrix::from_row_slice(rows, cols, entries))
}

pub fn matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.ncols() != b.nrows() {
        return Err(Error::Dimension(format!(
            "cannot multiply {}x{} by {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(a * b)
}

pub fn dagger(a: &ComplexMatrix) -> ComplexMatrix {
    a.adjoint()
}

/// Kronecker product, left factor is the slow index.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn outer(u: &ComplexVector, v: &ComplexVector) -> ComplexMatrix {
    u * v.adjoint()
}

pub fn projector(v: &ComplexVector) -> ComplexMatrix {
    outer(v, v)
}

pub fn frobenius(a: &ComplexMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(a: &ComplexMatrix) -> Complex64 {
    a.trace()
}

pub fn is_hermitian(a: &ComplexMatrix, tol: f64) -> bool {
    if a.nrows() != a.ncols() {
        return false;
    }
    let n = a.nrows();
    for i in 0..n {
        for j in i..n {
            if (a[(i, j)] - a[(j, i)].conj()).norm() > tol {
                return false;
            }
        }
    }
    true
}

pub fn is_unitary(a: &ComplexMatrix, tol: f64) -> bool {
    a.nrows() == a.ncols() && frobenius(&(a.adjoint() * a - identity(a.nrows()))) < tol
}

/// Hermitian eigendecomposition with ascending eigenvalues.
pub fn herm_eig(a: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    if !is_hermitian(a, HERM_TOL) {
        return Err(Error::NotHermitian);
    }
    let n = a.nrows();
    // symmetrize so the solver sees an exactly Hermitian matrix
    let h = (a + a.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = ComplexMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vecs.set_column(k, &eig.eigenvectors.column(i));
    }
    Ok((vals, vecs))
}

/// Matrix power of a PSD matrix, taken on the support only.
pub fn psd_power(a: &ComplexMatrix, p: f64) -> Result<ComplexMatrix> {
    let (vals, vecs) = herm_eig(a)?;
    if let Some(&min) = vals.first() {
        if min < -PSD_TOL {
            return Err(Error::NotPsd(min));
        }
    }
    let n = a.nrows();
    let mut d = ComplexMatrix::zeros(n, n);
    for (i, &l) in vals.iter().enumerate() {
        let l = l.max(0.0);
        // zero eigenvalues stay zero, so p = 0 gives the support projector
        let v = if l <= SUPPORT_TOL { 0.0 } else { l.powf(p) };
        d[(i, i)] = cr(v);
    }
    Ok(&vecs * d * vecs.adjoint())
}

pub fn is_psd(a: &ComplexMatrix, tol: f64) -> bool {
    match herm_eig(a) {
        Ok((vals, _)) => vals.first().map_or(true, |&m| m >= -tol),
        Err(_) => false,
    }
}

/// Pauli matrices (σx, σy, σz).
pub fn paulis() -> [ComplexMatrix; 3] {
    let z = cr(0.0);
    let o = cr(1.0);
    let i = c(0.0, 1.0);
    [
        ComplexMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        ComplexMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        ComplexMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    ]
}

/// Rows of `[re, im]` pairs, the JSON form used for matrices.
pub fn to_pairs(a: &ComplexMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| [a[(i, j)].re, a[(i, j)].im]).collect())
        .collect()
}

pub fn from_pairs(rows: &[Vec<[f64; 2]>]) -> Result<ComplexMatrix> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Dimension("ragged matrix rows".into()));
    }
    Ok(ComplexMatrix::from_fn(n, m, |i, j| c(rows[i][j][0], rows[i][j][1])))
}
