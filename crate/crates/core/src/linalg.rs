//! Small dense complex-matrix helpers: norms, Hermitian checks, PSD square roots
//! and signature matrices.

use nalgebra::{ComplexField, Schur};

use crate::error::{Error, Result};
use crate::scalar::{creal, CMatrix, Real, C};

/// Largest absolute entry; the norm used for every check in this crate.
pub fn max_norm<T: Real>(m: &CMatrix<T>) -> T {
    m.iter()
        .map(|z| z.modulus())
        .fold(T::zero(), |acc, v| if v > acc { v } else { acc })
}

pub fn identity<T: Real>(n: usize) -> CMatrix<T> {
    CMatrix::identity(n, n)
}

pub fn hermitian_defect<T: Real>(m: &CMatrix<T>) -> T {
    if !m.is_square() {
        return T::max_value().unwrap_or_else(T::one);
    }
    max_norm(&(m - m.adjoint()))
}

pub fn is_hermitian<T: Real>(m: &CMatrix<T>, tol: T) -> bool {
    m.is_square() && hermitian_defect(m) <= tol
}

/// `(M + M*) / 2`.
pub fn hermitian_part<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    (m + m.adjoint()) * creal(T::lit(0.5))
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn hermitian_eigen<T: Real>(m: &CMatrix<T>) -> (Vec<T>, CMatrix<T>) {
    let eig = hermitian_part(m).symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn min_eigenvalue<T: Real>(m: &CMatrix<T>) -> T {
    if m.nrows() == 0 {
        return T::zero();
    }
    hermitian_eigen(m).0[0]
}

/// Eigenvalues of a general square matrix, read off the complex Schur form.
pub fn eigenvalues<T: Real>(m: &CMatrix<T>) -> Vec<C<T>> {
    let (_, t) = Schur::new(m.clone()).unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// Principal square root of a Hermitian positive semidefinite matrix.
///
/// Eigenvalues in `[-psd_tol, 0)` are treated as zero.
pub fn principal_sqrt_psd<T: Real>(m: &CMatrix<T>, psd_tol: T) -> Result<CMatrix<T>> {
    if !m.is_square() {
        return Err(Error::ShapeMismatch {
            expected: "square matrix".into(),
            found: format!("{}x{}", m.nrows(), m.ncols()),
        });
    }
    if !is_hermitian(m, psd_tol) {
        return Err(Error::InvalidArgument(format!(
            "matrix is not Hermitian (defect {:e})",
            hermitian_defect(m)
        )));
    }
    let (values, vectors) = hermitian_eigen(m);
    if let Some(&lo) = values.first() {
        if lo < -psd_tol {
            return Err(Error::NotPsd {
                min_eigenvalue: lo.as_f64(),
            });
        }
    }
    let roots = values
        .iter()
        .map(|&v| creal(if v > T::zero() { v.sqrt() } else { T::zero() }));
    let diag = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(values.len(), roots));
    Ok(hermitian_part(&(&vectors * diag * vectors.adjoint())))
}

/// True iff `J = J*` and `J^2 = I` within `tol`.
pub fn check_signature<T: Real>(j: &CMatrix<T>, tol: T) -> bool {
    if !j.is_square() {
        return false;
    }
    let n = j.nrows();
    hermitian_defect(j) <= tol && max_norm(&(j * j - identity::<T>(n))) <= tol
}

/// Hermitian involution `J` fixing the indefinite metric.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureMatrix<T: Real>(CMatrix<T>);

impl<T: Real> SignatureMatrix<T> {
    pub fn new(j: CMatrix<T>, tol: T) -> Result<Self> {
        if !j.is_square() {
            return Err(Error::InvalidSignature(format!(
                "not square ({}x{})",
                j.nrows(),
                j.ncols()
            )));
        }
        if hermitian_defect(&j) > tol {
            return Err(Error::InvalidSignature(format!(
                "J = J* violated by {:e}",
                hermitian_defect(&j)
            )));
        }
        let sq = max_norm(&(&j * &j - identity::<T>(j.nrows())));
        if sq > tol {
            return Err(Error::InvalidSignature(format!("J^2 = I violated by {sq:e}")));
        }
        Ok(Self(j))
    }

    /// Diagonal signature; every entry must be `±1`.
    pub fn diagonal(signs: &[f64]) -> Result<Self> {
        let d = nalgebra::DVector::from_iterator(signs.len(), signs.iter().map(|&s| creal(T::lit(s))));
        Self::new(CMatrix::from_diagonal(&d), T::lit(1e-12))
    }

    /// `diag(-I_m, I_m)`.
    pub fn split(m: usize) -> Self {
        let d = nalgebra::DVector::from_fn(2 * m, |i, _| creal(if i < m { -T::one() } else { T::one() }));
        Self(CMatrix::from_diagonal(&d))
    }

    pub fn identity(m: usize) -> Self {
        Self(identity(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.0
    }
}

impl<T: Real> AsRef<CMatrix<T>> for SignatureMatrix<T> {
    fn as_ref(&self) -> &CMatrix<T> {
        &self.0
    }
}

/// Row-major construction helper for tests and example tables.
pub fn from_rows<T: Real>(rows: usize, cols: usize, entries: &[C<T>]) -> CMatrix<T> {
    CMatrix::from_row_slice(rows, cols, entries)
}
