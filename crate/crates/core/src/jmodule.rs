//! J-module validation, the defect `D(x) = J[R(x) - R(x)^{-1}]` and its factor `F1`.

use nalgebra::ComplexField;

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, hermitian_eigen, hermitian_part, identity, max_norm, SignatureMatrix};
use crate::quadrature::{Interval, QuadratureGrid};
use crate::sampled::SampledMatrixFunction;
use crate::scalar::{creal, CMatrix, Real};
use crate::tolerance::Tolerances;

/// A validated J-module `R(x)` sampled on a grid.
#[derive(Debug, Clone)]
pub struct JModuleField<T: Real> {
    j: SignatureMatrix<T>,
    r: SampledMatrixFunction<T>,
}

impl<T: Real> JModuleField<T> {
    /// Checks `JR(x) = R*(x)J` and that the spectrum of `R(x)` is positive at every node.
    pub fn new(j: SignatureMatrix<T>, r: SampledMatrixFunction<T>, tol: &Tolerances) -> Result<Self> {
        let m = j.dim();
        if r.shape() != (m, m) {
            return Err(Error::ShapeMismatch {
                expected: format!("{m}x{m}"),
                found: format!("{}x{}", r.shape().0, r.shape().1),
            });
        }
        let jm = j.matrix();
        let jmod_tol = T::lit(tol.jmodule);
        for (x, rx) in r.iter() {
            let scale = T::one() + max_norm(rx);
            let defect = max_norm(&(jm * rx - rx.adjoint() * jm));
            if defect > jmod_tol * scale {
                return Err(Error::InvalidJModule {
                    x: x.as_f64(),
                    reason: format!("JR = R*J violated by {defect:e}"),
                });
            }
            // Unipotent J-modules are Jordan blocks, whose computed eigenvalues
            // scatter like sqrt(rounding); widen the imaginary-part window accordingly.
            let im_tol = jmod_tol.max(T::machine_eps().sqrt() * T::lit(10.0) * scale);
            for ev in eigenvalues(rx) {
                if ev.re <= T::zero() || ev.im.abs() > im_tol {
                    return Err(Error::InvalidJModule {
                        x: x.as_f64(),
                        reason: format!("eigenvalue {}{:+}i is not positive", ev.re, ev.im),
                    });
                }
            }
        }
        Ok(Self { j, r })
    }

    pub fn from_fn<F: Fn(T) -> CMatrix<T>>(
        j: SignatureMatrix<T>,
        grid: QuadratureGrid<T>,
        f: F,
        tol: &Tolerances,
    ) -> Result<Self> {
        Self::new(j, SampledMatrixFunction::from_fn(grid, f)?, tol)
    }

    pub fn signature(&self) -> &SignatureMatrix<T> {
        &self.j
    }

    pub fn r(&self) -> &SampledMatrixFunction<T> {
        &self.r
    }

    pub fn interval(&self) -> Interval<T> {
        self.r.grid().interval()
    }

    /// The jump matrix `R^2(x)`.
    pub fn r_squared(&self) -> SampledMatrixFunction<T> {
        self.r.map(|_, rx| rx * rx).expect("same grid and shape")
    }
}

/// `D(x) = J[R(x) - R^{-1}(x)]`, Hermitian PSD at every node.
pub fn defect_matrix<T: Real>(field: &JModuleField<T>, tol: &Tolerances) -> Result<SampledMatrixFunction<T>> {
    let jm = field.signature().matrix();
    let mut values = Vec::with_capacity(field.r().len());
    for (x, rx) in field.r().iter() {
        let inv = rx
            .clone()
            .try_inverse()
            .ok_or(Error::SingularJModule { x: x.as_f64() })?;
        let d = jm * (rx - inv);
        let scale = T::one() + max_norm(&d);
        let herm = max_norm(&(&d - d.adjoint()));
        if herm > T::lit(tol.jmodule) * scale {
            return Err(Error::InvalidJModule {
                x: x.as_f64(),
                reason: format!("D(x) is not Hermitian (defect {herm:e})"),
            });
        }
        let d = hermitian_part(&d);
        let lo = hermitian_eigen(&d).0.first().copied().unwrap_or_else(T::zero);
        if lo < -T::lit(tol.psd) * scale {
            return Err(Error::InvalidJModule {
                x: x.as_f64(),
                reason: format!("D(x) has negative eigenvalue {lo:e}"),
            });
        }
        values.push(d);
    }
    SampledMatrixFunction::new(field.r().grid().clone(), values)
}

/// `F1` with `F1* F1 = D`, `k` rows, zero-padded where the local rank is lower.
#[derive(Debug, Clone)]
pub struct DefectFactor<T: Real> {
    pub f1: SampledMatrixFunction<T>,
    pub k: usize,
    pub rank_tol: T,
    /// Thresholded rank of `D(x)` at each node.
    pub ranks: Vec<usize>,
}

/// Factor each `D(x)` through its eigen-decomposition.
///
/// Rows are `sqrt(λ) v*` for eigenvalues `λ > rank_tol·|D(x)|`, in descending
/// order, with each eigenvector's first non-negligible component made real positive.
pub fn factor_defect<T: Real>(d: &SampledMatrixFunction<T>, rank_tol: T, tol: &Tolerances) -> Result<DefectFactor<T>> {
    let m = d.shape().1;
    let mut rows_per_node = Vec::with_capacity(d.len());
    for (_, dx) in d.iter() {
        let norm = max_norm(dx);
        let (values, vectors) = hermitian_eigen(dx);
        if let Some(&lo) = values.first() {
            if lo < -T::lit(tol.psd) * (T::one() + norm) {
                return Err(Error::NotPsd {
                    min_eigenvalue: lo.as_f64(),
                });
            }
        }
        let cutoff = rank_tol * norm;
        let mut rows: Vec<Vec<_>> = Vec::new();
        for idx in (0..values.len()).rev() {
            let lambda = values[idx];
            if norm == T::zero() || lambda <= cutoff {
                break;
            }
            let v = vectors.column(idx);
            let vmax = v.iter().map(|z| z.modulus()).fold(T::zero(), |a, b| a.max(b));
            let lead = v
                .iter()
                .find(|z| z.modulus() > T::lit(1e-8) * vmax)
                .copied()
                .unwrap_or_else(|| creal(T::one()));
            let phase = lead.conj() / creal(lead.modulus());
            // row = sqrt(λ) (phase v)^*
            let s = lambda.sqrt();
            rows.push(v.iter().map(|z| (phase * z).conj() * creal(s)).collect());
        }
        rows_per_node.push(rows);
    }
    let ranks: Vec<usize> = rows_per_node.iter().map(Vec::len).collect();
    let k = ranks.iter().copied().max().unwrap_or(0);
    let values: Vec<CMatrix<T>> = rows_per_node
        .into_iter()
        .map(|rows| {
            CMatrix::from_fn(k, m, |r, c| {
                rows.get(r).map(|row| row[c]).unwrap_or_else(|| creal(T::zero()))
            })
        })
        .collect();
    let f1 = SampledMatrixFunction::new(d.grid().clone(), values)?;
    for ((x, dx), fx) in d.iter().zip(f1.values()) {
        let err = max_norm(&(fx.adjoint() * fx - dx));
        if err > T::lit(tol.factor) * (T::one() + max_norm(dx)) {
            return Err(Error::InvalidJModule {
                x: x.as_f64(),
                reason: format!("factor reconstruction error {err:e}"),
            });
        }
    }
    Ok(DefectFactor { f1, k, rank_tol, ranks })
}

/// True iff `(R^2(x) - I)^2 = 0` within `tol` at every node.
pub fn check_unipotent_class<T: Real>(r2: &SampledMatrixFunction<T>, tol: T) -> bool {
    let (m, n) = r2.shape();
    if m != n {
        return false;
    }
    let id = identity::<T>(m);
    r2.values().iter().all(|v| {
        let e = v - &id;
        max_norm(&(&e * &e)) <= tol
    })
}

/// For `(R^2 - I)^2 = 0` the principal root is `R = (R^2 + I)/2`.
pub fn unipotent_root<T: Real>(r2: &CMatrix<T>) -> CMatrix<T> {
    (r2 + identity::<T>(r2.nrows())) * creal(T::lit(0.5))
}
