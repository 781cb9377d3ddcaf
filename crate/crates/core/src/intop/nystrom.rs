use std::sync::OnceLock;

use rayon::prelude::*;

use super::{diagonal_kernel, i_over_two_pi, scalar_weight, KernelSpec};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_defect, hermitian_eigen, max_norm};
use crate::quadrature::{gauss_legendre_grid, Interval, QuadratureGrid};
use crate::scalar::{creal, CMatrix, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NystromPath {
    /// `F1(x) J F1*(x) = 0`; the kernel diagonal is a removable singularity.
    Smooth,
    /// Singular diagonal handled by subtracting `N(x,x) f(x)` and adding the
    /// exact principal value of `1/(x - t)`. First-order accurate.
    PrincipalValue,
}

/// Nyström matrix of `S_ξ` on a Gauss–Legendre grid over `[a, ξ]`, stored as
/// `n x n` blocks of size `k x k`: `S_ij = L(x_i) δ_ij + K(x_i, x_j) w_j`.
#[derive(Debug, Clone)]
pub struct DiscretizedOperator<T: Real> {
    grid: QuadratureGrid<T>,
    xi: T,
    k: usize,
    matrix: CMatrix<T>,
    path: NystromPath,
    spectrum: OnceLock<Spectrum<T>>,
}

#[derive(Debug, Clone, Copy)]
struct Spectrum<T> {
    min: T,
    condition: T,
}

impl<T: Real> DiscretizedOperator<T> {
    pub fn grid(&self) -> &QuadratureGrid<T> {
        &self.grid
    }

    pub fn xi(&self) -> T {
        self.xi
    }

    pub fn block_size(&self) -> usize {
        self.k
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.matrix
    }

    pub fn path(&self) -> NystromPath {
        self.path
    }

    /// `Ω^{1/2} S Ω^{-1/2}` with `Ω = diag(w)`; Hermitian on the smooth path.
    pub fn symmetrized(&self) -> CMatrix<T> {
        let k = self.k;
        let w = self.grid.weights();
        CMatrix::from_fn(self.matrix.nrows(), self.matrix.ncols(), |r, c| {
            self.matrix[(r, c)] * creal((w[r / k] / w[c / k]).sqrt())
        })
    }

    pub fn symmetrized_hermitian_defect(&self) -> T {
        hermitian_defect(&self.symmetrized())
    }

    fn spectrum(&self) -> Spectrum<T> {
        *self.spectrum.get_or_init(|| {
            let s = self.symmetrized();
            if s.nrows() == 0 {
                return Spectrum {
                    min: T::one(),
                    condition: T::one(),
                };
            }
            let values = hermitian_eigen(&s).0;
            let min = values[0];
            let condition = match self.path {
                NystromPath::Smooth => {
                    let abs: Vec<T> = values.iter().map(|v| v.abs()).collect();
                    ratio(&abs)
                }
                NystromPath::PrincipalValue => {
                    let sv = s.singular_values();
                    ratio(sv.as_slice())
                }
            };
            Spectrum { min, condition }
        })
    }

    /// Smallest eigenvalue of the Hermitian part of the symmetrized matrix.
    pub fn min_eigenvalue(&self) -> T {
        self.spectrum().min
    }

    /// 2-norm condition number of the symmetrized matrix.
    pub fn condition_number(&self) -> T {
        self.spectrum().condition
    }

    /// Row block `i`, column block `j`.
    pub fn block(&self, i: usize, j: usize) -> CMatrix<T> {
        self.matrix
            .view((i * self.k, j * self.k), (self.k, self.k))
            .into_owned()
    }
}

fn ratio<T: Real>(values: &[T]) -> T {
    let mut lo = T::max_value().unwrap_or_else(T::one);
    let mut hi = T::zero();
    for &v in values {
        if v < lo {
            lo = v;
        }
        if v > hi {
            hi = v;
        }
    }
    if lo <= T::zero() {
        T::max_value().unwrap_or_else(T::one)
    } else {
        hi / lo
    }
}

/// Checks `a < xi <= b`.
pub(crate) fn truncated_interval<T: Real>(spec: &KernelSpec<T>, xi: T) -> Result<Interval<T>> {
    let iv = spec.interval();
    if !(xi > iv.a()) || xi > iv.b() {
        return Err(Error::OutOfRange {
            x: xi.as_f64(),
            lo: iv.a().as_f64(),
            hi: iv.b().as_f64(),
        });
    }
    Interval::new(iv.a(), xi)
}

/// Assembles the Nyström matrix of `S_ξ` with `n` Gauss–Legendre nodes on `[a, ξ]`.
pub fn build_nystrom<T: Real>(spec: &KernelSpec<T>, xi: T, n: usize) -> Result<DiscretizedOperator<T>> {
    let sub = truncated_interval(spec, xi)?;
    let grid = gauss_legendre_grid(sub, n)?;
    let k = spec.k();
    let nodes = grid.nodes();
    let w = grid.weights();
    let f1: Vec<CMatrix<T>> = nodes.iter().map(|&x| spec.f1(x)).collect();
    // J F1*(t_j), reused by every row
    let jf1s: Vec<CMatrix<T>> = f1.iter().map(|f| spec.signature().matrix() * f.adjoint()).collect();
    let path = if spec.is_smooth_diagonal() {
        NystromPath::Smooth
    } else {
        NystromPath::PrincipalValue
    };
    let c = i_over_two_pi::<T>();
    let a = sub.a();

    let rows: Vec<Result<CMatrix<T>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi_node = nodes[i];
            let mut row = CMatrix::zeros(k, n * k);
            let mut pv_sum = T::zero();
            for j in 0..n {
                if j == i {
                    continue;
                }
                let d = xi_node - nodes[j];
                let block = &f1[i] * &jf1s[j] * (c * creal(w[j] / d));
                row.view_mut((0, j * k), (k, k)).copy_from(&block);
                pv_sum += w[j] / d;
            }
            let mut diag = scalar_weight(spec, xi_node)? + diagonal_kernel(spec, xi_node) * creal(w[i]);
            if path == NystromPath::PrincipalValue {
                let n_ii = &f1[i] * &jf1s[i];
                let log = ((xi_node - a) / (xi - xi_node)).ln();
                diag += n_ii * (c * creal(log - pv_sum));
            }
            row.view_mut((0, i * k), (k, k)).copy_from(&diag);
            Ok(row)
        })
        .collect();

    let mut matrix = CMatrix::zeros(n * k, n * k);
    for (i, row) in rows.into_iter().enumerate() {
        matrix.view_mut((i * k, 0), (k, n * k)).copy_from(&row?);
    }
    Ok(DiscretizedOperator {
        grid,
        xi,
        k,
        matrix,
        path,
        spectrum: OnceLock::new(),
    })
}

/// `max_{i≠j} |(x_i - x_j) S_ij - (i/2π) F1(x_i) J F1*(x_j) w_j|`.
pub fn commutator_identity_residual<T: Real>(op: &DiscretizedOperator<T>, spec: &KernelSpec<T>) -> T {
    let nodes = op.grid().nodes();
    let w = op.grid().weights();
    let c = i_over_two_pi::<T>();
    let mut worst = T::zero();
    for i in 0..nodes.len() {
        for j in 0..nodes.len() {
            if i == j {
                continue;
            }
            let lhs = op.block(i, j) * creal(nodes[i] - nodes[j]);
            let rhs = spec.numerator(nodes[i], nodes[j]) * (c * creal(w[j]));
            let r = max_norm(&(lhs - rhs));
            if r > worst {
                worst = r;
            }
        }
    }
    worst
}
