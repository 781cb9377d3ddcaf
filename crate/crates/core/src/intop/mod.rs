//! Integrable operators
//! `S_ξ f = L(x) f(x) + (i/2π) P.V.∫_a^ξ F1(x) J F1*(t) / (x - t) f(t) dt`
//! and their Nyström discretization.

mod nystrom;
mod resolvent;

use std::fmt;
use std::sync::Arc;

pub use nystrom::{build_nystrom, commutator_identity_residual, DiscretizedOperator, NystromPath};
pub use resolvent::{compute_f2, inverse_operator_matrix, solve_phi, Resolvent};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_defect, hermitian_eigen, identity, max_norm, principal_sqrt_psd, SignatureMatrix};
use crate::quadrature::Interval;
use crate::scalar::{cplx, creal, CMatrix, Real, C};
use crate::tolerance::Tolerances;

/// Matrix-valued function of one real variable.
pub type MatrixFn<T> = Arc<dyn Fn(T) -> CMatrix<T> + Send + Sync>;

/// Number of equally spaced samples used to classify the kernel diagonal.
const DIAGONAL_SAMPLES: usize = 101;

/// Kernel data `(interval, J, F1)` of an integrable operator.
#[derive(Clone)]
pub struct KernelSpec<T: Real> {
    interval: Interval<T>,
    j: SignatureMatrix<T>,
    f1: MatrixFn<T>,
    f1_deriv: Option<MatrixFn<T>>,
    smooth_diagonal: bool,
    k: usize,
    m: usize,
    tol: Tolerances,
}

impl<T: Real> fmt::Debug for KernelSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelSpec")
            .field("interval", &self.interval)
            .field("k", &self.k)
            .field("m", &self.m)
            .field("smooth_diagonal", &self.smooth_diagonal)
            .field("analytic_derivative", &self.f1_deriv.is_some())
            .finish()
    }
}

impl<T: Real> KernelSpec<T> {
    /// Samples `F1` to fix its shape and to decide whether `F1(x) J F1*(x)` vanishes,
    /// which selects the smooth Nyström path over the principal-value one.
    pub fn new<F>(interval: Interval<T>, j: SignatureMatrix<T>, f1: F) -> Result<Self>
    where
        F: Fn(T) -> CMatrix<T> + Send + Sync + 'static,
    {
        Self::with_tolerances(interval, j, f1, Tolerances::default())
    }

    pub fn with_tolerances<F>(interval: Interval<T>, j: SignatureMatrix<T>, f1: F, tol: Tolerances) -> Result<Self>
    where
        F: Fn(T) -> CMatrix<T> + Send + Sync + 'static,
    {
        let m = j.dim();
        let probe = f1(interval.a());
        let k = probe.nrows();
        if probe.ncols() != m {
            return Err(Error::ShapeMismatch {
                expected: format!("k x {m}"),
                found: format!("{}x{}", probe.nrows(), probe.ncols()),
            });
        }
        let mut spec = Self {
            interval,
            j,
            f1: Arc::new(f1),
            f1_deriv: None,
            smooth_diagonal: true,
            k,
            m,
            tol,
        };
        let mut smooth = true;
        for x in interval.linspace(DIAGONAL_SAMPLES) {
            let v = spec.f1(x);
            if v.shape() != (k, m) {
                return Err(Error::ShapeMismatch {
                    expected: format!("{k}x{m}"),
                    found: format!("{}x{}", v.nrows(), v.ncols()),
                });
            }
            let scale = T::one() + max_norm(&v) * max_norm(&v);
            if max_norm(&spec.numerator(x, x)) > T::lit(tol.diagonal) * scale {
                smooth = false;
            }
        }
        spec.smooth_diagonal = smooth;
        Ok(spec)
    }

    /// Supplies `F1'` analytically; otherwise central differences are used.
    pub fn with_derivative<F>(mut self, d: F) -> Self
    where
        F: Fn(T) -> CMatrix<T> + Send + Sync + 'static,
    {
        self.f1_deriv = Some(Arc::new(d));
        self
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn set_tolerances(&mut self, tol: Tolerances) {
        self.tol = tol;
    }

    pub fn interval(&self) -> Interval<T> {
        self.interval
    }

    pub fn signature(&self) -> &SignatureMatrix<T> {
        &self.j
    }

    /// Rows of `F1`.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Columns of `F1`, the size of `J`.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn is_smooth_diagonal(&self) -> bool {
        self.smooth_diagonal
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.f1_deriv.is_some()
    }

    pub fn f1(&self, x: T) -> CMatrix<T> {
        (self.f1)(x)
    }

    pub fn f1_deriv(&self, x: T) -> CMatrix<T> {
        match &self.f1_deriv {
            Some(d) => d(x),
            None => {
                let h = T::lit(self.tol.fd_step) * self.interval.length();
                (self.f1(x + h) - self.f1(x - h)) * creal(T::one() / (h + h))
            }
        }
    }

    /// `F1(x) J F1*(t)`.
    pub fn numerator(&self, x: T, t: T) -> CMatrix<T> {
        self.f1(x) * self.j.matrix() * self.f1(t).adjoint()
    }

    /// `∂_t [F1(x) J F1*(t)]` at `t = x`.
    pub fn numerator_t_derivative(&self, x: T) -> CMatrix<T> {
        self.f1(x) * self.j.matrix() * self.f1_deriv(x).adjoint()
    }

    /// The same kernel with `F1` multiplied by a C-infinity cutoff that vanishes
    /// on `[alpha, beta]` and equals one outside `[alpha - width, beta + width]`.
    pub fn windowed(&self, alpha: T, beta: T, width: T) -> Result<Self> {
        if !(alpha < beta) || !(width > T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "window needs alpha < beta and width > 0, got [{alpha}, {beta}], width {width}"
            )));
        }
        let base = self.clone();
        let f1 = {
            let base = base.clone();
            move |x: T| base.f1(x) * creal(window(x, alpha, beta, width).0)
        };
        let deriv = move |x: T| {
            let (w, dw) = window(x, alpha, beta, width);
            base.f1_deriv(x) * creal(w) + base.f1(x) * creal(dw)
        };
        let spec = Self::with_tolerances(self.interval, self.j.clone(), f1, self.tol)?;
        Ok(spec.with_derivative(deriv))
    }
}

/// Smooth cutoff and its derivative.
fn window<T: Real>(x: T, alpha: T, beta: T, width: T) -> (T, T) {
    // s = 0 inside [alpha, beta], 1 beyond distance `width`
    let (d, sign) = if x < alpha {
        (alpha - x, -T::one())
    } else if x > beta {
        (x - beta, T::one())
    } else {
        return (T::zero(), T::zero());
    };
    if d >= width {
        return (T::one(), T::zero());
    }
    let s = d / width;
    let (g0, dg0) = bump_edge(s);
    let (g1, dg1) = bump_edge(T::one() - s);
    let denom = g0 + g1;
    let value = g0 / denom;
    let ds = (dg0 * denom - g0 * (dg0 - dg1)) / (denom * denom);
    (value, ds * sign / width)
}

/// `e^{-1/s}` for `s > 0` and its derivative.
fn bump_edge<T: Real>(s: T) -> (T, T) {
    if s <= T::zero() {
        return (T::zero(), T::zero());
    }
    let v = (-T::one() / s).exp();
    (v, v / (s * s))
}

/// `(i/2π)`.
pub(crate) fn i_over_two_pi<T: Real>() -> C<T> {
    cplx(T::zero(), T::one() / T::two_pi())
}

/// `[I + ¼ N²]^{1/2}` for the diagonal numerator `N = F1(x) J F1*(x)`.
pub fn weight_from_diagonal_numerator<T: Real>(n: &CMatrix<T>, x: T, tol: &Tolerances) -> Result<CMatrix<T>> {
    let k = n.nrows();
    let radicand = identity::<T>(k) + n * n * creal(T::lit(0.25));
    let scale = T::one() + max_norm(&radicand);
    if hermitian_defect(&radicand) > T::lit(tol.hermitian) * scale {
        return Err(Error::InvalidArgument(format!(
            "radicand I + N^2/4 at x = {x} is not Hermitian (defect {:e})",
            hermitian_defect(&radicand)
        )));
    }
    let lo = hermitian_eigen(&radicand).0.first().copied().unwrap_or_else(T::one);
    if lo < T::lit(tol.psd) {
        return Err(Error::DegenerateWeight {
            x: x.as_f64(),
            min_eigenvalue: lo.as_f64(),
        });
    }
    principal_sqrt_psd(&radicand, T::lit(tol.psd) * scale)
}

/// `L(x)`; exactly the identity on the smooth-diagonal class.
pub fn scalar_weight<T: Real>(spec: &KernelSpec<T>, x: T) -> Result<CMatrix<T>> {
    if spec.is_smooth_diagonal() {
        return Ok(identity(spec.k()));
    }
    weight_from_diagonal_numerator(&spec.numerator(x, x), x, spec.tolerances())
}

/// Points closer than this (relative to the interval) use the diagonal limit.
pub(crate) fn coincidence_threshold<T: Real>(interval: &Interval<T>) -> T {
    T::lit(1e-8) * interval.length()
}

/// `(i/2π) F1(x) J F1*(t) / (x - t)`, or its removable limit
/// `-(i/2π) F1(x) J F1*'(x)` at `x = t` on the smooth-diagonal class.
pub fn kernel_value<T: Real>(spec: &KernelSpec<T>, x: T, t: T) -> Result<CMatrix<T>> {
    if (x - t).abs() <= coincidence_threshold(&spec.interval()) {
        if !spec.is_smooth_diagonal() {
            return Err(Error::PvDiagonal { x: x.as_f64() });
        }
        return Ok(diagonal_kernel(spec, x));
    }
    Ok(spec.numerator(x, t) * (i_over_two_pi::<T>() / creal(x - t)))
}

pub(crate) fn diagonal_kernel<T: Real>(spec: &KernelSpec<T>, x: T) -> CMatrix<T> {
    spec.numerator_t_derivative(x) * (-i_over_two_pi::<T>())
}
