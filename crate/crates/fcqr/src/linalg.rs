//! Thin bridge between `ndarray` storage and `nalgebra` factorizations.
//!
//! Data lives in `ndarray` (row-major, matches the hot paths); the few
//! places that need a Cholesky factor or a symmetric eigendecomposition
//! convert to `nalgebra` here.

use nalgebra::{Cholesky, DMatrix, Dyn, SymmetricEigen};
use ndarray::{Array1, Array2};

use crate::error::{FcqrError, Result};

fn to_nalgebra(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

/// Cholesky factor of a symmetric positive definite matrix.
pub struct SpdFactor {
    chol: Cholesky<f64, Dyn>,
}

impl SpdFactor {
    /// Factor `a`; fails when the matrix is not positive definite, reporting
    /// an eigenvalue-based condition diagnostic.
    pub fn new(a: &Array2<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(FcqrError::InvalidArgument(format!(
                "matrix must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let m = to_nalgebra(a);
        match Cholesky::new(m) {
            Some(chol) => Ok(Self { chol }),
            None => {
                let eig = sym_eigenvalues(a);
                let max = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
                Err(FcqrError::Numerical(format!(
                    "matrix is not positive definite (eigenvalue range [{min:.3e}, {max:.3e}], \
                     condition estimate {:.3e})",
                    if min > 0.0 { max / min } else { f64::INFINITY }
                )))
            }
        }
    }

    /// Solve `A x = b`.
    pub fn solve_vec(&self, b: &Array1<f64>) -> Array1<f64> {
        let rhs = nalgebra::DVector::from_iterator(b.len(), b.iter().cloned());
        let x = self.chol.solve(&rhs);
        Array1::from_iter(x.iter().cloned())
    }

    /// The full inverse `A^{-1}` (small matrices only).
    pub fn inverse(&self) -> Array2<f64> {
        let inv = self.chol.inverse();
        Array2::from_shape_fn((inv.nrows(), inv.ncols()), |(i, j)| inv[(i, j)])
    }
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn sym_eigenvalues(a: &Array2<f64>) -> Vec<f64> {
    let eig = SymmetricEigen::new(to_nalgebra(a));
    let mut vals: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
    vals
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky_lower(a: &Array2<f64>) -> Result<Array2<f64>> {
    let f = SpdFactor::new(a)?;
    let l = f.chol.l();
    Ok(Array2::from_shape_fn((l.nrows(), l.ncols()), |(i, j)| {
        l[(i, j)]
    }))
}
