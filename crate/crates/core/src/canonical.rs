//! Canonical system recovery: `B(ξ) = (1/2π) ∫_a^ξ Φ*(ξ,x) F1(x) dx`, its
//! derivative `H = B'`, the first moment `M1 = iJB(b)`, and the monodromy of
//! `dW/dx = iJH(x) W / (z - x)`, `W(a) = I`.

use nalgebra::ComplexField;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::intop::{scalar_weight, KernelSpec, Resolvent};
use crate::linalg::{hermitian_defect, hermitian_eigen, hermitian_part, identity, max_norm, SignatureMatrix};
use crate::quadrature::Interval;
use crate::rh::RhSolution;
use crate::scalar::{cis, cplx, creal, CMatrix, Real, C};
use crate::tolerance::Tolerances;

/// Points per finite-difference stencil (sixth order for the first derivative).
const STENCIL: usize = 7;
/// RK4 steps per ξ-interval before any halving.
const ODE_STEPS_PER_INTERVAL: usize = 4;

/// Recovered canonical-system data on a ξ-grid.
#[derive(Debug, Clone)]
pub struct CanonicalData<T: Real> {
    interval: Interval<T>,
    j: SignatureMatrix<T>,
    xi: Vec<T>,
    b: Vec<CMatrix<T>>,
    h: Vec<CMatrix<T>>,
    m1: CMatrix<T>,
    diagnostics: Diagnostics<T>,
    tol: Tolerances,
}

/// Numbers recorded while building [`CanonicalData`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics<T> {
    /// Largest `|B - B*|` before Hermitianizing.
    pub b_asymmetry: T,
    /// Smallest eigenvalue over all `H(ξ_i)`.
    pub h_min_eigenvalue: T,
    /// `max_i |∫_a^{ξ_i} H - B(ξ_i)|`.
    pub fd_consistency: T,
}

impl<T: Real> CanonicalData<T> {
    /// Runs the recovery on `xi_points` uniform points of `[a, b]` (the first is
    /// `a`, where `B = 0`) with `n` Nyström nodes per solve.
    pub fn recover(spec: &KernelSpec<T>, xi_points: usize, n: usize) -> Result<Self> {
        if xi_points < 4 {
            return Err(Error::InvalidArgument(format!(
                "need at least 4 xi points, got {xi_points}"
            )));
        }
        let iv = spec.interval();
        let xi = iv.linspace(xi_points);
        let tol = *spec.tolerances();
        let (b, asym) = accumulate_b_with_drift(spec, &xi, n)?;
        let h = hamiltonian(&b, &xi, &tol)?;
        let h_min = h
            .iter()
            .map(|m| hermitian_eigen(m).0.first().copied().unwrap_or_else(T::zero))
            .fold(T::max_value().unwrap_or_else(T::one), |a, v| if v < a { v } else { a });
        let fd = fd_consistency(&b, &h, &xi);
        let m1 = first_moment(b.last().expect("xi grid is non-empty"), spec.signature());
        Ok(Self {
            interval: iv,
            j: spec.signature().clone(),
            xi,
            b,
            h,
            m1,
            diagnostics: Diagnostics {
                b_asymmetry: asym,
                h_min_eigenvalue: h_min,
                fd_consistency: fd,
            },
            tol,
        })
    }

    pub fn interval(&self) -> Interval<T> {
        self.interval
    }

    pub fn signature(&self) -> &SignatureMatrix<T> {
        &self.j
    }

    pub fn xi_grid(&self) -> &[T] {
        &self.xi
    }

    pub fn b(&self) -> &[CMatrix<T>] {
        &self.b
    }

    pub fn h(&self) -> &[CMatrix<T>] {
        &self.h
    }

    pub fn m1(&self) -> &CMatrix<T> {
        &self.m1
    }

    pub fn diagnostics(&self) -> Diagnostics<T> {
        self.diagnostics
    }

    /// `H` at `x` by linear interpolation between samples.
    pub fn h_at(&self, x: T) -> CMatrix<T> {
        let n = self.xi.len();
        let idx = self.xi.partition_point(|&t| t <= x).clamp(1, n - 1);
        let (x0, x1) = (self.xi[idx - 1], self.xi[idx]);
        let s = ((x - x0) / (x1 - x0)).max(T::zero()).min(T::one());
        &self.h[idx - 1] * creal(T::one() - s) + &self.h[idx] * creal(s)
    }

    /// Smallest eigenvalue of `B(ξ_{i+1}) - B(ξ_i)` over consecutive points.
    pub fn monotonicity(&self) -> T {
        self.b
            .windows(2)
            .map(|p| {
                hermitian_eigen(&(&p[1] - &p[0]))
                    .0
                    .first()
                    .copied()
                    .unwrap_or_else(T::zero)
            })
            .fold(T::max_value().unwrap_or_else(T::one), |a, v| if v < a { v } else { a })
    }

    /// `max_x |(JH(x))²| / (1 + |H(x)|²)`.
    pub fn nilpotency_residual(&self) -> T {
        let j = self.j.matrix();
        self.h
            .iter()
            .map(|h| {
                let jh = j * h;
                let nh = max_norm(h);
                max_norm(&(&jh * &jh)) / (T::one() + nh * nh)
            })
            .fold(T::zero(), |a, v| if v > a { v } else { a })
    }

    /// Deviation from `H = a [[1, e^{iα}], [e^{-iα}, 1]]`, `a >= 0`, for 2x2 `H`:
    /// the largest of `|H11 - H22|`, `||H12| - H11|`, `|H21 - conj H12|`, `max(0, -H11)`
    /// and `|Im H11|`.
    pub fn structure_residual(&self) -> Option<T> {
        if self.j.dim() != 2 {
            return None;
        }
        let mut worst = T::zero();
        for h in &self.h {
            let (h11, h12, h21, h22) = (h[(0, 0)], h[(0, 1)], h[(1, 0)], h[(1, 1)]);
            let terms = [
                (h11 - h22).modulus(),
                (h12.modulus() - h11.re).abs(),
                (h21 - h12.conj()).modulus(),
                (-h11.re).max(T::zero()),
                h11.im.abs(),
            ];
            for t in terms {
                if t > worst {
                    worst = t;
                }
            }
        }
        Some(worst)
    }

    /// `W(b, z)` of the canonical system by RK4, halving the step until two
    /// successive answers agree within the ODE tolerance.
    pub fn integrate_system(&self, z: C<T>) -> Result<CMatrix<T>> {
        let iv = self.interval;
        let x0 = iv.clamp(z.re);
        let margin = T::lit(self.tol.ode_margin) * iv.length();
        if (z - creal(x0)).modulus() < margin {
            return Err(Error::OnCut {
                re: z.re.as_f64(),
                im: z.im.as_f64(),
            });
        }
        let mut per_interval = ODE_STEPS_PER_INTERVAL;
        let mut prev = self.rk4(z, per_interval);
        let mut change = T::max_value().unwrap_or_else(T::one);
        for _ in 0..self.tol.max_halvings {
            per_interval *= 2;
            let next = self.rk4(z, per_interval);
            change = max_norm(&(&next - &prev));
            prev = next;
            if change < T::lit(self.tol.ode) {
                return Ok(prev);
            }
        }
        Err(Error::OdeDivergence {
            halvings: self.tol.max_halvings,
            change: change.as_f64(),
        })
    }

    fn rk4(&self, z: C<T>, per_interval: usize) -> CMatrix<T> {
        let m = self.j.dim();
        let ij = self.j.matrix() * cplx(T::zero(), T::one());
        let rhs = |x: T, w: &CMatrix<T>| -> CMatrix<T> { &ij * self.h_at(x) * w / (z - creal(x)) };
        let mut w = identity::<T>(m);
        let half = T::lit(0.5);
        for seg in self.xi.windows(2) {
            let h = (seg[1] - seg[0]) / T::count(per_interval);
            for s in 0..per_interval {
                let x = seg[0] + h * T::count(s);
                let hc = creal(h);
                let k1 = rhs(x, &w);
                let k2 = rhs(x + h * half, &(&w + &k1 * (hc * creal(half))));
                let k3 = rhs(x + h * half, &(&w + &k2 * (hc * creal(half))));
                let k4 = rhs(x + h, &(&w + &k3 * hc));
                w += (k1 + (k2 + k3) * creal(T::lit(2.0)) + k4) * (hc / creal(T::lit(6.0)));
            }
        }
        w
    }
}

/// `B(ξ)` for every `ξ` in `xi_grid` (ascending, within `[a, b]`); `B(a) = 0`.
pub fn accumulate_b<T: Real>(spec: &KernelSpec<T>, xi_grid: &[T], n: usize) -> Result<Vec<CMatrix<T>>> {
    Ok(accumulate_b_with_drift(spec, xi_grid, n)?.0)
}

fn accumulate_b_with_drift<T: Real>(spec: &KernelSpec<T>, xi_grid: &[T], n: usize) -> Result<(Vec<CMatrix<T>>, T)> {
    let iv = spec.interval();
    if xi_grid.windows(2).any(|p| !(p[0] < p[1])) {
        return Err(Error::InvalidArgument("xi grid must be strictly increasing".into()));
    }
    if let Some(&bad) = xi_grid.iter().find(|&&x| x < iv.a() || x > iv.b()) {
        return Err(Error::OutOfRange {
            x: bad.as_f64(),
            lo: iv.a().as_f64(),
            hi: iv.b().as_f64(),
        });
    }
    let m = spec.m();
    let drift_tol = T::lit(spec.tolerances().hermitian_drift);
    let results: Vec<Result<(CMatrix<T>, T)>> = xi_grid
        .par_iter()
        .map(|&xi| {
            if xi == iv.a() {
                return Ok((CMatrix::zeros(m, m), T::zero()));
            }
            let res = Resolvent::solve(spec, xi, n)?;
            let mut acc = CMatrix::zeros(m, m);
            for ((x, phi), &w) in res.phi().iter().zip(res.phi().grid().weights()) {
                acc += phi.adjoint() * spec.f1(x) * creal(w);
            }
            acc /= creal(T::pi() + T::pi());
            let drift = hermitian_defect(&acc);
            if drift > drift_tol * (T::one() + max_norm(&acc)) {
                return Err(Error::InconsistentHamiltonian(format!(
                    "B({xi}) is not Hermitian: drift {drift:e}"
                )));
            }
            Ok((hermitian_part(&acc), drift))
        })
        .collect();
    let mut out = Vec::with_capacity(results.len());
    let mut worst = T::zero();
    for r in results {
        let (b, d) = r?;
        if d > worst {
            worst = d;
        }
        out.push(b);
    }
    Ok((out, worst))
}

/// First-derivative weights at `x0` for the points `xs` (Fornberg's recursion).
pub fn fd_weights<T: Real>(x0: T, xs: &[T]) -> Vec<T> {
    let n = xs.len();
    // c[j][k]: weight of xs[j] for the k-th derivative, k = 0, 1
    let mut c = vec![[T::zero(); 2]; n];
    c[0][0] = T::one();
    let mut c1 = T::one();
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(1);
        let mut c2 = T::one();
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (T::count(k) * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - T::count(k) * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|w| w[1]).collect()
}

/// Window of `width` consecutive indices centred on `i` where possible.
fn stencil_window(i: usize, len: usize, width: usize) -> std::ops::Range<usize> {
    let width = width.min(len);
    let start = i.saturating_sub(width / 2).min(len - width);
    start..start + width
}

/// `H = dB/dξ` by 7-point (sixth-order) differences, one-sided near the ends,
/// Hermitianized. Eigenvalues below `-psd_fail (1 + |H|)` are an error.
pub fn hamiltonian<T: Real>(b: &[CMatrix<T>], xi_grid: &[T], tol: &Tolerances) -> Result<Vec<CMatrix<T>>> {
    if b.len() != xi_grid.len() || xi_grid.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "hamiltonian needs >= 3 matching xi points, got {} values on {} points",
            b.len(),
            xi_grid.len()
        )));
    }
    let n = xi_grid.len();
    let mut h = Vec::with_capacity(n);
    for i in 0..n {
        let win = stencil_window(i, n, STENCIL);
        let w = fd_weights(xi_grid[i], &xi_grid[win.clone()]);
        let mut d = CMatrix::zeros(b[i].nrows(), b[i].ncols());
        for (k, idx) in win.enumerate() {
            d += &b[idx] * creal(w[k]);
        }
        let d = hermitian_part(&d);
        let lo = hermitian_eigen(&d).0.first().copied().unwrap_or_else(T::zero);
        if lo < -T::lit(tol.psd_fail) * (T::one() + max_norm(&d)) {
            return Err(Error::InconsistentHamiltonian(format!(
                "H({}) has eigenvalue {lo:e}",
                xi_grid[i]
            )));
        }
        h.push(d);
    }
    Ok(h)
}

/// `max_i |∫_a^{ξ_i} H - (B(ξ_i) - B(ξ_0))|` with the trapezoid rule plus its
/// Euler–Maclaurin end correction `-(h²/12)(H'(ξ_i) - H'(ξ_0))` on a uniform grid.
pub fn fd_consistency<T: Real>(b: &[CMatrix<T>], h: &[CMatrix<T>], xi_grid: &[T]) -> T {
    let n = xi_grid.len();
    if n < 2 {
        return T::zero();
    }
    let dh: Vec<CMatrix<T>> = (0..n)
        .map(|i| {
            let win = stencil_window(i, n, STENCIL);
            let w = fd_weights(xi_grid[i], &xi_grid[win.clone()]);
            let mut d = CMatrix::zeros(h[i].nrows(), h[i].ncols());
            for (k, idx) in win.enumerate() {
                d += &h[idx] * creal(w[k]);
            }
            d
        })
        .collect();
    let step = xi_grid[1] - xi_grid[0];
    let mut acc = CMatrix::zeros(h[0].nrows(), h[0].ncols());
    let mut worst = T::zero();
    for i in 1..n {
        let hx = xi_grid[i] - xi_grid[i - 1];
        acc += (&h[i] + &h[i - 1]) * creal(hx * T::lit(0.5));
        let corr = (&dh[i] - &dh[0]) * creal(step * step / T::lit(12.0));
        let r = max_norm(&(&acc - corr - (&b[i] - &b[0])));
        if r > worst {
            worst = r;
        }
    }
    worst
}

/// `M1 = iJB(b)`.
pub fn first_moment<T: Real>(b_at_end: &CMatrix<T>, j: &SignatureMatrix<T>) -> CMatrix<T> {
    j.matrix() * b_at_end * cplx(T::zero(), T::one())
}

/// `dB/dξ` in closed form: `(1/2π) Φ*(ξ,ξ) L(ξ) Φ(ξ,ξ)`.
///
/// Follows from differentiating `B(ξ)` under the integral with the resolvent
/// identity for `∂_ξ Φ`. Used to cross-check the finite-difference `H`.
pub fn endpoint_hamiltonian<T: Real>(spec: &KernelSpec<T>, xi: T, n: usize) -> Result<CMatrix<T>> {
    if !spec.is_smooth_diagonal() {
        return Err(Error::PvDiagonal { x: xi.as_f64() });
    }
    let res = Resolvent::solve(spec, xi, n)?;
    let phi = res.phi_at(xi)?;
    let l = scalar_weight(spec, xi)?;
    Ok(hermitian_part(&(phi.adjoint() * l * phi)) / creal(T::pi() + T::pi()))
}

/// Largest `|integrate_system(z) - cauchy_eval(z)|` over `zs`.
pub fn monodromy_residual<T: Real>(canon: &CanonicalData<T>, sol: &RhSolution<T>, zs: &[C<T>]) -> Result<T> {
    let per: Vec<Result<T>> = zs
        .par_iter()
        .map(|&z| Ok(max_norm(&(canon.integrate_system(z)? - sol.cauchy_eval(z)?))))
        .collect();
    let mut worst = T::zero();
    for r in per {
        let r = r?;
        if r > worst {
            worst = r;
        }
    }
    Ok(worst)
}

/// `M_1..M_orders` at infinity: fitted from `W` at large `|z|` and from the
/// moment formula `-(1/2πi) ∫ x^{j-1} F`.
#[derive(Debug, Clone)]
pub struct AsymptoticCoefficients<T: Real> {
    pub fitted: Vec<CMatrix<T>>,
    pub exact: Vec<CMatrix<T>>,
}

impl<T: Real> AsymptoticCoefficients<T> {
    pub fn max_disagreement(&self) -> T {
        self.fitted
            .iter()
            .zip(&self.exact)
            .map(|(a, b)| max_norm(&(a - b)))
            .fold(T::zero(), |a, v| if v > a { v } else { a })
    }
}

/// Radii used for the fit.
const FIT_RADII: [f64; 4] = [1e3, 1e4, 1e5, 1e6];
/// Equally spaced angles per radius.
const FIT_ANGLES: usize = 8;

/// On `|z| = R` the coefficients come out of a discrete Fourier transform in the
/// angle, `M_j R^{-j} = mean_k (W(z_k) - I) z_k^j / R^j`, with aliasing only from
/// `M_{j+8}`. Rounding in `W - I` is amplified by `R^j`, so radii are combined
/// with inverse-variance weights `R^{-2j}`.
pub fn asymptotic_coefficients<T: Real>(sol: &RhSolution<T>, orders: usize) -> Result<AsymptoticCoefficients<T>> {
    if orders == 0 || orders > 3 {
        return Err(Error::InvalidArgument(format!("orders must be 1..=3, got {orders}")));
    }
    let m = sol.m();
    let mut samples = Vec::with_capacity(FIT_RADII.len() * FIT_ANGLES);
    for r in FIT_RADII {
        for k in 0..FIT_ANGLES {
            // offset by half a step so no sample sits on the real axis
            let theta = (T::pi() + T::pi()) * (T::count(k) + T::lit(0.5)) / T::count(FIT_ANGLES);
            samples.push((T::lit(r), cis(theta)));
        }
    }
    let values: Vec<Result<CMatrix<T>>> = samples
        .par_iter()
        .map(|&(r, u)| Ok(sol.cauchy_eval(u * creal(r))? - identity::<T>(m)))
        .collect();
    let values = values.into_iter().collect::<Result<Vec<_>>>()?;
    let mut fitted = Vec::with_capacity(orders);
    for j in 1..=orders {
        let mut num = CMatrix::zeros(m, m);
        let mut den = T::zero();
        for (ri, r) in FIT_RADII.into_iter().enumerate() {
            let r = T::lit(r);
            let rj = r.powi(j as i32);
            let mut est = CMatrix::zeros(m, m);
            for k in 0..FIT_ANGLES {
                let idx = ri * FIT_ANGLES + k;
                let zj = (samples[idx].1 * creal(r)).powi(j as i32);
                est += &values[idx] * zj;
            }
            est /= creal(T::count(FIT_ANGLES));
            let weight = T::one() / (rj * rj);
            num += est * creal(weight);
            den += weight;
        }
        fitted.push(num / creal(den));
    }
    let exact = (1..=orders).map(|j| sol.moment(j)).collect();
    Ok(AsymptoticCoefficients { fitted, exact })
}

/// Whether `H` and `F2` vanish (below `1e-6`) at every sample strictly inside
/// `(alpha, beta)`: the ξ-grid points of `canon` and `probes` evenly spaced
/// points for `F2`.
pub fn vanishing_support_check<T: Real>(
    canon: &CanonicalData<T>,
    sol: &RhSolution<T>,
    alpha: T,
    beta: T,
    probes: usize,
) -> Result<bool> {
    let iv = canon.interval();
    if !(iv.a() < alpha && alpha < beta && beta < iv.b()) {
        return Err(Error::InvalidArgument(format!(
            "need a < alpha < beta < b, got alpha = {alpha}, beta = {beta}"
        )));
    }
    let limit = T::lit(1e-6);
    for (x, h) in canon.xi_grid().iter().zip(canon.h()) {
        if *x > alpha && *x < beta && max_norm(h) > limit {
            return Ok(false);
        }
    }
    let inner = Interval::new(alpha, beta)?.linspace(probes + 2);
    for &x in &inner[1..inner.len() - 1] {
        if max_norm(&sol.resolvent().f2_at(x)?) > limit {
            return Ok(false);
        }
    }
    Ok(true)
}
