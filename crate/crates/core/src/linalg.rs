//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative floor applied to eigenvalues when taking symmetric roots.
pub const EIGEN_FLOOR: f64 = 1e-12;

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn eigen_map(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let max = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
    let floor = EIGEN_FLOOR * max;
    let mapped = eig.eigenvalues.map(|l| f(l.max(floor)));
    let q = &eig.eigenvectors;
    let out = q * DMatrix::from_diagonal(&mapped) * q.transpose();
    symmetrize(&out)
}

/// Symmetric square root, eigenvalues clamped below at `1e-12 * max eigenvalue`.
pub fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    eigen_map(m, f64::sqrt)
}

/// Symmetric inverse square root with the same eigenvalue clamp.
pub fn sym_inv_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    eigen_map(m, |l| 1.0 / l.sqrt())
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(symmetrize(m))
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

pub fn max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(symmetrize(m))
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let scale = m.amax().max(1.0);
    (0..m.nrows()).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol * scale))
}

/// Checks symmetry and strict positive definiteness via Cholesky.
pub fn require_spd(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if !is_symmetric(m, 1e-10) {
        return Err(Error::Invalid(format!("{what} is not symmetric")));
    }
    if m.clone().cholesky().is_none() {
        return Err(Error::Invalid(format!("{what} is not positive definite")));
    }
    Ok(())
}

/// `(x - mu)^T inv(sigma) (x - mu)` through a Cholesky solve.
pub fn mahalanobis_sq(x: &DVector<f64>, mu: &DVector<f64>, sigma: &DMatrix<f64>) -> Result<f64> {
    let chol = sigma
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Invalid("shape matrix is not positive definite".into()))?;
    let d = x - mu;
    let y = chol
        .l()
        .solve_lower_triangular(&d)
        .expect("cholesky factor is invertible");
    Ok(y.norm_squared())
}

pub fn norm(v: &[f64], q: crate::conic::NormIndex) -> f64 {
    use crate::conic::NormIndex;
    match q {
        NormIndex::One => v.iter().map(|x| x.abs()).sum(),
        NormIndex::Two => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        NormIndex::Inf => v.iter().fold(0.0, |m, x| m.max(x.abs())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_squares_back() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let r = sym_sqrt(&m);
        assert!((&r * &r - &m).amax() < 1e-12);
        let ri = sym_inv_sqrt(&m);
        assert!((&ri * &m * &ri - DMatrix::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn mahalanobis_diag() {
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]));
        let d = mahalanobis_sq(&DVector::from_vec(vec![2.0, 1.0]), &DVector::zeros(2), &s).unwrap();
        assert!((d - 2.0).abs() < 1e-14);
    }
}
