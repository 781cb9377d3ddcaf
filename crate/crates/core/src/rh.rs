//! Riemann–Hilbert data: the density `F = F2* F1`, the Cauchy integral
//! `W(z) = I + (1/2πi) ∫ F(x) / (x - z) dx` and its boundary values on the cut.

use nalgebra::ComplexField;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::intop::{KernelSpec, Resolvent};
use crate::linalg::{hermitian_eigen, identity, max_norm, SignatureMatrix};
use crate::quadrature::{gauss_legendre_grid, Interval};
use crate::sampled::SampledMatrixFunction;
use crate::scalar::{cplx, creal, CMatrix, Real, C};

/// Nodes per panel of the graded near-cut rule.
const PANEL_NODES: usize = 16;
/// The stored rule is trusted while its Bernstein-ellipse error bound stays below this.
const ELLIPSE_BOUND: f64 = 1e-15;

/// Pointwise `F2* F1` on a shared grid.
pub fn density<T: Real>(
    f1: &SampledMatrixFunction<T>,
    f2: &SampledMatrixFunction<T>,
) -> Result<SampledMatrixFunction<T>> {
    if f1.shape() != f2.shape() || f1.len() != f2.len() || f1.grid() != f2.grid() {
        return Err(Error::ShapeMismatch {
            expected: format!("F2 {:?} on the F1 grid of {} nodes", f1.shape(), f1.len()),
            found: format!("{:?} on {} nodes", f2.shape(), f2.len()),
        });
    }
    let values = f1
        .values()
        .iter()
        .zip(f2.values())
        .map(|(a, b)| b.adjoint() * a)
        .collect();
    SampledMatrixFunction::new(f1.grid().clone(), values)
}

/// `1 / (2πi)`.
fn inv_two_pi_i<T: Real>() -> C<T> {
    cplx(T::zero(), -T::one() / T::two_pi())
}

/// Solved RH problem on `[a, b]`.
#[derive(Debug, Clone)]
pub struct RhSolution<T: Real> {
    resolvent: Resolvent<T>,
    f1: SampledMatrixFunction<T>,
    f2: SampledMatrixFunction<T>,
    f: SampledMatrixFunction<T>,
}

impl<T: Real> RhSolution<T> {
    /// Solves `S_b F2 = F1 J` on `n` nodes and forms `F = F2* F1`.
    pub fn solve(spec: &KernelSpec<T>, n: usize) -> Result<Self> {
        Self::from_resolvent(Resolvent::solve(spec, spec.interval().b(), n)?)
    }

    pub fn from_resolvent(resolvent: Resolvent<T>) -> Result<Self> {
        let spec = resolvent.spec();
        let grid = resolvent.operator().grid().clone();
        let f1 = SampledMatrixFunction::from_fn(grid, |x| spec.f1(x))?;
        let f2 = resolvent.f2();
        let f = density(&f1, &f2)?;
        let bound = f.sup_norm();
        if !bound.is_finite() {
            return Err(Error::InvalidArgument("density F is not finite".into()));
        }
        Ok(Self { resolvent, f1, f2, f })
    }

    pub fn interval(&self) -> Interval<T> {
        self.f.grid().interval()
    }

    pub fn signature(&self) -> &SignatureMatrix<T> {
        self.resolvent.spec().signature()
    }

    pub fn m(&self) -> usize {
        self.resolvent.spec().m()
    }

    pub fn resolvent(&self) -> &Resolvent<T> {
        &self.resolvent
    }

    pub fn density(&self) -> &SampledMatrixFunction<T> {
        &self.f
    }

    pub fn f1(&self) -> &SampledMatrixFunction<T> {
        &self.f1
    }

    pub fn f2(&self) -> &SampledMatrixFunction<T> {
        &self.f2
    }

    /// `F(x)` off the grid via Nyström interpolation of `F2`.
    pub fn f_at(&self, x: T) -> Result<CMatrix<T>> {
        let f2 = self.resolvent.f2_at(x)?;
        Ok(f2.adjoint() * self.resolvent.spec().f1(x))
    }

    /// Distance from the ends inside which boundary values are refused.
    pub fn pv_margin(&self) -> T {
        let iv = self.interval();
        let first = self.f.grid().nodes()[0];
        (first - iv.a()) * T::lit(2.0)
    }

    /// `-(1/2πi) ∫ x^{j-1} F(x) dx`, the `1/z^j` coefficient of `W` at infinity.
    pub fn moment(&self, j: usize) -> CMatrix<T> {
        let p = j.saturating_sub(1) as i32;
        let mut acc = CMatrix::zeros(self.m(), self.m());
        for ((x, v), &w) in self.f.iter().zip(self.f.grid().weights()) {
            acc += v * creal(w * x.powi(p));
        }
        acc * (-inv_two_pi_i::<T>())
    }

    fn check_off_cut(&self, z: C<T>) -> Result<()> {
        let iv = self.interval();
        let x0 = iv.clamp(z.re);
        let dist = (z - creal(x0)).modulus();
        if dist <= T::lit(self.resolvent.spec().tolerances().off_cut_margin) * iv.length() {
            return Err(Error::OnCut {
                re: z.re.as_f64(),
                im: z.im.as_f64(),
            });
        }
        Ok(())
    }

    /// True when the stored Gauss rule cannot resolve `1/(x - z)` to double precision.
    fn near_cut(&self, z: C<T>) -> bool {
        let iv = self.interval();
        let half = iv.length() * T::lit(0.5);
        let s = (z - creal((iv.a() + iv.b()) * T::lit(0.5))) / creal(half);
        let root = (s * s - creal(T::one())).sqrt();
        let mut w = s + root;
        if w.modulus() < T::one() {
            w = s - root;
        }
        let rho = w.modulus();
        let n = T::count(self.f.len());
        -(n + n) * rho.ln() > T::lit(ELLIPSE_BOUND).ln()
    }

    /// `W(z)` for `z` off the cut.
    pub fn cauchy_eval(&self, z: C<T>) -> Result<CMatrix<T>> {
        self.check_off_cut(z)?;
        let m = self.m();
        if self.near_cut(z) {
            return self.cauchy_near_cut(z);
        }
        let mut acc = CMatrix::zeros(m, m);
        for ((x, v), &w) in self.f.iter().zip(self.f.grid().weights()) {
            acc += v * (creal(w) / (creal(x) - z));
        }
        Ok(identity::<T>(m) + acc * inv_two_pi_i::<T>())
    }

    /// Subtracts `F(x0)` at the nearest cut point, integrates that part exactly,
    /// and the remainder on panels graded geometrically towards `x0`.
    fn cauchy_near_cut(&self, z: C<T>) -> Result<CMatrix<T>> {
        let iv = self.interval();
        let m = self.m();
        let x0 = iv.clamp(z.re);
        let d = (z - creal(x0)).modulus();
        let f0 = self.f_at(x0)?;

        let mut breaks = vec![x0];
        let mut step = d;
        while x0 - step > iv.a() {
            breaks.push(x0 - step);
            step += step;
        }
        breaks.push(iv.a());
        step = d;
        while x0 + step < iv.b() {
            breaks.push(x0 + step);
            step += step;
        }
        breaks.push(iv.b());
        breaks.sort_by(|p, q| p.partial_cmp(q).unwrap_or(std::cmp::Ordering::Equal));
        breaks.dedup();

        let reference = gauss_legendre_grid(Interval::new(-T::one(), T::one())?, PANEL_NODES)?;
        let mut points = Vec::new();
        for p in breaks.windows(2) {
            let (lo, hi) = (p[0], p[1]);
            if !(hi > lo) {
                continue;
            }
            let half = (hi - lo) * T::lit(0.5);
            let mid = (hi + lo) * T::lit(0.5);
            for (&s, &w) in reference.nodes().iter().zip(reference.weights()) {
                points.push((mid + half * s, half * w));
            }
        }
        let terms: Vec<Result<CMatrix<T>>> = points
            .par_iter()
            .map(|&(x, w)| Ok((self.f_at(x)? - &f0) * (creal(w) / (creal(x) - z))))
            .collect();
        let mut acc = CMatrix::zeros(m, m);
        for t in terms {
            acc += t?;
        }
        let log = (creal(iv.b()) - z).ln() - (creal(iv.a()) - z).ln();
        acc += &f0 * log;
        Ok(identity::<T>(m) + acc * inv_two_pi_i::<T>())
    }

    /// `(W+(x), W-(x))` by the Plemelj split `I + (1/2πi) PV∫ F(t)/(t - x) dt ± F(x)/2`.
    pub fn boundary_values(&self, x: T) -> Result<(CMatrix<T>, CMatrix<T>)> {
        let iv = self.interval();
        let margin = self.pv_margin();
        if !(x - iv.a() >= margin && iv.b() - x >= margin) {
            return Err(Error::EndpointSingularity {
                x: x.as_f64(),
                margin: margin.as_f64(),
            });
        }
        let m = self.m();
        let fx = self.f_at(x)?;
        let nodes = self.f.grid().nodes();
        let w = self.f.grid().weights();
        let eps = T::lit(1e-8) * iv.length();
        let mut pv = CMatrix::zeros(m, m);
        for (j, v) in self.f.values().iter().enumerate() {
            let d = nodes[j] - x;
            if d.abs() <= eps {
                // removable: (F(t) - F(x)) / (t - x) -> F'(x)
                let h = T::lit(self.resolvent.spec().tolerances().fd_step) * iv.length();
                let deriv = (self.f_at(x + h)? - self.f_at(x - h)?) * creal(T::one() / (h + h));
                pv += deriv * creal(w[j]);
            } else {
                pv += (v - &fx) * creal(w[j] / d);
            }
        }
        pv += &fx * creal(((iv.b() - x) / (x - iv.a())).ln());
        let base = identity::<T>(m) + pv * inv_two_pi_i::<T>();
        let half = &fx * creal(T::lit(0.5));
        Ok((&base + &half, base - half))
    }

    /// `max ‖W+(x) - W-(x) R²(x)‖` over `xs`.
    pub fn jump_residual<F>(&self, r2: F, xs: &[T]) -> Result<T>
    where
        F: Fn(T) -> CMatrix<T>,
    {
        let mut worst = T::zero();
        for &x in xs {
            let (wp, wm) = self.boundary_values(x)?;
            let r = max_norm(&(wp - wm * r2(x)));
            if r > worst {
                worst = r;
            }
        }
        Ok(worst)
    }

    /// `(‖W*(z) J W(z̄) - J‖, max(0, -λ_min(i (W*(z) J W(z) - J) / (z - z̄))))`.
    pub fn j_property_residuals(&self, z: C<T>) -> Result<(T, T)> {
        if z.im == T::zero() {
            return Err(Error::InvalidArgument("j-property check needs Im z != 0".into()));
        }
        let w = self.cauchy_eval(z)?;
        let wbar = self.cauchy_eval(z.conj())?;
        Ok(j_residuals(&w, &wbar, self.signature().matrix(), z))
    }
}

/// The two J-property residuals for a pair `W(z)`, `W(z̄)`.
pub fn j_residuals<T: Real>(w: &CMatrix<T>, wbar: &CMatrix<T>, j: &CMatrix<T>, z: C<T>) -> (T, T) {
    let sym = max_norm(&(w.adjoint() * j * wbar - j));
    let form = (w.adjoint() * j * w - j) * (cplx(T::zero(), T::one()) / (z - z.conj()));
    let lo = hermitian_eigen(&form).0.first().copied().unwrap_or_else(T::zero);
    (sym, if lo < T::zero() { -lo } else { T::zero() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::from_rows;
    use crate::scalar::cis;
    use std::f64::consts::PI;

    fn rank_one() -> KernelSpec<f64> {
        let iv = Interval::new(0.0, 1.0).unwrap();
        KernelSpec::new(iv, SignatureMatrix::split(1), |x: f64| {
            from_rows(1, 2, &[cplx(x, 1.0), cplx(x, -1.0)])
        })
        .unwrap()
        .with_derivative(|_| from_rows(1, 2, &[creal(1.0), creal(1.0)]))
    }

    fn q(x: f64) -> C<f64> {
        cplx(x + 0.5 / (PI - 1.0), PI / (PI - 1.0))
    }

    #[test]
    fn rank_one_density_closed_form() {
        let sol = RhSolution::solve(&rank_one(), 32).unwrap();
        for (x, v) in sol.density().iter() {
            let (a, b) = (cplx(x, 1.0), cplx(x, -1.0));
            let want = from_rows(2, 2, &[-q(x).conj() * a, -q(x).conj() * b, q(x) * a, q(x) * b]);
            assert!(max_norm(&(v - want)) < 1e-12);
        }
    }

    #[test]
    fn zero_density_gives_identity() {
        let iv = Interval::new(0.0, 1.0).unwrap();
        let spec = KernelSpec::new(iv, SignatureMatrix::split(1), |_x: f64| CMatrix::zeros(1, 2)).unwrap();
        let sol = RhSolution::solve(&spec, 16).unwrap();
        let id = identity::<f64>(2);
        for z in [cplx(0.5, 1e-4), cplx(3.0, 0.0), cplx(-1.0, 2.0)] {
            assert_eq!(sol.cauchy_eval(z).unwrap(), id);
        }
        let (p, m) = sol.boundary_values(0.5).unwrap();
        assert_eq!((p, m), (id.clone(), id));
        assert_eq!(sol.j_property_residuals(cplx(0.0, 2.0)).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn on_cut_is_rejected() {
        let sol = RhSolution::solve(&rank_one(), 16).unwrap();
        assert!(matches!(sol.cauchy_eval(cplx(0.5, 0.0)), Err(Error::OnCut { .. })));
        assert!(matches!(sol.cauchy_eval(cplx(0.5, 1e-12)), Err(Error::OnCut { .. })));
        assert!(matches!(
            sol.boundary_values(1e-4),
            Err(Error::EndpointSingularity { .. })
        ));
    }

    #[test]
    fn plemelj_jump_is_density() {
        let sol = RhSolution::solve(&rank_one(), 64).unwrap();
        for x in [0.25, 0.5, 0.6] {
            let (p, m) = sol.boundary_values(x).unwrap();
            assert!(max_norm(&(p - m - sol.f_at(x).unwrap())) < 1e-14);
        }
    }

    #[test]
    fn boundary_values_are_limits() {
        let sol = RhSolution::solve(&rank_one(), 64).unwrap();
        let x = 0.4;
        let (p, m) = sol.boundary_values(x).unwrap();
        // W(x ± iy) - W±(x) = O(y log y)
        let up = sol.cauchy_eval(cplx(x, 1e-7)).unwrap();
        let down = sol.cauchy_eval(cplx(x, -1e-7)).unwrap();
        assert!(max_norm(&(up - p)) < 1e-5);
        assert!(max_norm(&(down - m)) < 1e-5);
    }

    #[test]
    fn near_cut_matches_plain_rule_in_overlap() {
        let sol = RhSolution::solve(&rank_one(), 64).unwrap();
        let z = cplx(0.3, 0.5);
        assert!(!sol.near_cut(z));
        let plain = sol.cauchy_eval(z).unwrap();
        let refined = sol.cauchy_near_cut(z).unwrap();
        assert!(max_norm(&(plain - refined)) < 1e-13);
    }

    #[test]
    fn rank_one_near_origin_matches_reference() {
        // high-precision quadrature of the closed-form density at z = 10^-3 i
        let sol = RhSolution::solve(&rank_one(), 128).unwrap();
        let y = 1e-3;
        let w = sol.cauchy_eval(cplx(0.0, y)).unwrap();
        let log = cplx(y.ln(), PI / 2.0);
        let want = [
            cplx(-0.00970179526192378, -0.244197963332227),
            cplx(-0.18459844602914102, 0.16576671474533305),
            cplx(0.009839385556203319, -0.22317993214047044),
            cplx(-0.2189764976170419, 0.2089372320509403),
        ];
        for (idx, &r) in want.iter().enumerate() {
            let got = w[(idx / 2, idx % 2)] / log;
            assert!((got - r).norm() < 1e-10, "{idx}: {got} vs {r}");
        }
    }

    #[test]
    fn normalization_and_first_moment() {
        let sol = RhSolution::solve(&rank_one(), 64).unwrap();
        let m1 = sol.moment(1);
        for theta in [PI / 4.0, 3.0 * PI / 4.0] {
            let z = cis(theta) * 1e6;
            let w = sol.cauchy_eval(z).unwrap();
            assert!(max_norm(&(&w - identity::<f64>(2))) < 1e-5);
            assert!(max_norm(&((w - identity::<f64>(2)) * z - &m1)) < 1e-5);
        }
    }

    #[test]
    fn j_properties() {
        let sol = RhSolution::solve(&rank_one(), 128).unwrap();
        let (a, b) = sol.j_property_residuals(cplx(0.0, 2.0)).unwrap();
        assert!(a < 1e-6 && b < 1e-6, "{a:e} {b:e}");
    }
}
