//! Built-in examples: kernel data, jump matrices and the identities each one
//! is expected to satisfy.

pub mod special;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::ComplexField;

use crate::error::{Error, Result};
use crate::intop::{build_nystrom, KernelSpec, MatrixFn, Resolvent};
use crate::jmodule::{unipotent_root, JModuleField};
use crate::linalg::{hermitian_eigen, identity, max_norm, SignatureMatrix};
use crate::quadrature::{gauss_legendre_grid, Interval};
use crate::scalar::{cis, cplx, creal, CMatrix, Real, C};
use crate::tolerance::Tolerances;

/// Scalar complex function of one real variable.
pub type ScalarFn<T> = Arc<dyn Fn(T) -> C<T> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExampleId {
    /// `F1 = [x + i, x - i]` on `[0, 1]`; constant kernel `-1/π`.
    RankOne,
    /// `F1 = [I_m, -φ(x)]` with unitary `φ`.
    UnitaryPhi,
    /// `φ = e^{2iux}`, the sine kernel.
    Sine,
    /// `F1 = [ψ, ψ̄]` with `ψ = i√γ e^{-iux}`.
    PsiForm,
    /// The same `ψ`, reached through the jump matrix `R²`.
    SineGamma,
    /// `ψ = √π (Ai + i Ai')`.
    Airy,
    /// `ψ = √(π/2) (J_α(√x) + i √x J_α'(√x))`.
    Bessel,
}

impl ExampleId {
    pub const ALL: [ExampleId; 7] = [
        ExampleId::RankOne,
        ExampleId::UnitaryPhi,
        ExampleId::Sine,
        ExampleId::PsiForm,
        ExampleId::SineGamma,
        ExampleId::Airy,
        ExampleId::Bessel,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            ExampleId::RankOne => "rank-one",
            ExampleId::UnitaryPhi => "unitary-phi",
            ExampleId::Sine => "sine",
            ExampleId::PsiForm => "psi-form",
            ExampleId::SineGamma => "sine-gamma",
            ExampleId::Airy => "airy",
            ExampleId::Bessel => "bessel",
        }
    }

    /// Where the example appears in the source text, for listings.
    pub fn anchor(self) -> &'static str {
        match self {
            ExampleId::RankOne => "Eq. 46–49",
            ExampleId::UnitaryPhi => "Eq. 67–89",
            ExampleId::Sine => "Eq. 90–94",
            ExampleId::PsiForm => "Eq. 95–107",
            ExampleId::SineGamma => "Eq. 109–110",
            ExampleId::Airy => "Eq. 114",
            ExampleId::Bessel => "Eq. 115",
        }
    }

    /// Parameters the example reads.
    pub fn parameters(self) -> &'static [&'static str] {
        match self {
            ExampleId::RankOne => &[],
            ExampleId::UnitaryPhi => &["u", "m", "r"],
            ExampleId::Sine => &["u", "r"],
            ExampleId::PsiForm | ExampleId::SineGamma => &["gamma", "u", "r"],
            ExampleId::Airy => &["r"],
            ExampleId::Bessel => &["alpha", "r"],
        }
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ExampleId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExampleId::ALL
            .into_iter()
            .find(|id| id.tag() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown example '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExampleParams {
    pub u: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub m: usize,
    pub r: f64,
}

impl Default for ExampleParams {
    fn default() -> Self {
        Self {
            u: 1.0,
            gamma: 0.5,
            alpha: 0.0,
            m: 1,
            r: 1.0,
        }
    }
}

#[derive(Clone)]
enum Symbol<T: Real> {
    None,
    Phi(MatrixFn<T>),
    Psi(ScalarFn<T>),
}

/// A built-in example: its kernel spec plus the functions it was built from.
#[derive(Clone)]
pub struct Example<T: Real> {
    id: ExampleId,
    params: ExampleParams,
    spec: KernelSpec<T>,
    symbol: Symbol<T>,
}

impl<T: Real> fmt::Debug for Example<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Example")
            .field("id", &self.id)
            .field("params", &self.params)
            .field("spec", &self.spec)
            .finish()
    }
}

impl<T: Real> Example<T> {
    pub fn build(id: ExampleId, params: ExampleParams) -> Result<Self> {
        let p = params;
        match id {
            ExampleId::RankOne => Ok(Self {
                id,
                params: ExampleParams { r: 1.0, ..p },
                spec: rank_one_spec()?,
                symbol: Symbol::None,
            }),
            ExampleId::UnitaryPhi => {
                let (phi, dphi) = default_phi::<T>(p.u, p.m)?;
                let spec = unitary_phi_spec_arc(phi.clone(), dphi, p.m, T::lit(p.r))?;
                Ok(Self {
                    id,
                    params: p,
                    spec,
                    symbol: Symbol::Phi(phi),
                })
            }
            ExampleId::Sine => {
                let u = T::lit(p.u);
                let phi: MatrixFn<T> = Arc::new(move |x: T| CMatrix::from_element(1, 1, cis(u * x * T::lit(2.0))));
                Ok(Self {
                    id,
                    params: ExampleParams { m: 1, ..p },
                    spec: sine_spec(u, T::lit(p.r))?,
                    symbol: Symbol::Phi(phi),
                })
            }
            ExampleId::PsiForm | ExampleId::SineGamma => {
                check_gamma(p.gamma)?;
                let (psi, dpsi) = gamma_psi::<T>(p.gamma, p.u);
                Ok(Self {
                    id,
                    params: ExampleParams { m: 1, ..p },
                    spec: psi_spec_arc(psi.clone(), dpsi, T::lit(p.r))?,
                    symbol: Symbol::Psi(psi),
                })
            }
            ExampleId::Airy => {
                check_special_range(p.r)?;
                let psi: ScalarFn<T> = Arc::new(|x: T| from_c64(special::airy_psi(x.as_f64())));
                let dpsi: ScalarFn<T> = Arc::new(|x: T| from_c64(special::airy_psi_prime(x.as_f64())));
                Ok(Self {
                    id,
                    params: ExampleParams { m: 1, ..p },
                    spec: psi_spec_arc(psi.clone(), dpsi, T::lit(p.r))?,
                    symbol: Symbol::Psi(psi),
                })
            }
            ExampleId::Bessel => {
                check_special_range(p.r)?;
                if !(p.alpha >= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "Bessel order alpha must be >= 0, got {}",
                        p.alpha
                    )));
                }
                let a = p.alpha;
                let psi: ScalarFn<T> = Arc::new(move |x: T| from_c64(special::bessel_psi(x.as_f64(), a)));
                let dpsi: ScalarFn<T> = Arc::new(move |x: T| from_c64(special::bessel_psi_prime(x.as_f64(), a)));
                Ok(Self {
                    id,
                    params: ExampleParams { m: 1, ..p },
                    spec: psi_spec_arc(psi.clone(), dpsi, T::lit(p.r))?,
                    symbol: Symbol::Psi(psi),
                })
            }
        }
    }

    pub fn with_defaults(id: ExampleId) -> Result<Self> {
        Self::build(id, ExampleParams::default())
    }

    pub fn id(&self) -> ExampleId {
        self.id
    }

    pub fn params(&self) -> ExampleParams {
        self.params
    }

    pub fn spec(&self) -> &KernelSpec<T> {
        &self.spec
    }

    pub fn interval(&self) -> Interval<T> {
        self.spec.interval()
    }

    /// `m = 1` in the `[I_m, -φ]` / `[ψ, ψ̄]` sense: 2x2 jump, rank-one defect.
    pub fn is_scalar_class(&self) -> bool {
        self.id != ExampleId::RankOne && self.spec.m() == 2
    }

    /// `φ(x)` for the unitary-φ family.
    pub fn phi(&self, x: T) -> Option<CMatrix<T>> {
        match &self.symbol {
            Symbol::Phi(f) => Some(f(x)),
            _ => None,
        }
    }

    /// `ψ(x)` for the ψ family.
    pub fn psi(&self, x: T) -> Option<C<T>> {
        match &self.symbol {
            Symbol::Psi(f) => Some(f(x)),
            _ => None,
        }
    }

    /// `R²(x) = I + J F1*(x) F1(x)`, the jump matrix whose J-module has defect `F1* F1`.
    pub fn r_squared(&self, x: T) -> CMatrix<T> {
        let f1 = self.spec.f1(x);
        identity::<T>(self.spec.m()) + self.spec.signature().matrix() * f1.adjoint() * f1
    }

    /// The jump matrix as written out for the family, when there is a closed form.
    pub fn explicit_r_squared(&self, x: T) -> Option<CMatrix<T>> {
        match &self.symbol {
            Symbol::None => None,
            Symbol::Phi(f) => {
                let phi = f(x);
                let m = phi.nrows();
                let mut r2 = CMatrix::zeros(2 * m, 2 * m);
                r2.view_mut((0, m), (m, m)).copy_from(&phi);
                r2.view_mut((m, 0), (m, m)).copy_from(&(-phi.adjoint()));
                r2.view_mut((m, m), (m, m))
                    .copy_from(&(identity::<T>(m) * creal(T::lit(2.0))));
                Some(r2)
            }
            Symbol::Psi(f) => {
                let psi = f(x);
                let a2 = psi.modulus_squared();
                let one = T::one();
                Some(CMatrix::from_row_slice(
                    2,
                    2,
                    &[creal(one - a2), -(psi.conj() * psi.conj()), psi * psi, creal(one + a2)],
                ))
            }
        }
    }

    /// `R(x) = (R²(x) + I) / 2`.
    pub fn j_module(&self, x: T) -> CMatrix<T> {
        unipotent_root(&self.r_squared(x))
    }

    /// The J-module sampled on an `n`-node grid and validated.
    pub fn jmodule_field(&self, n: usize) -> Result<JModuleField<T>> {
        let grid = gauss_legendre_grid(self.interval(), n)?;
        JModuleField::from_fn(
            self.spec.signature().clone(),
            grid,
            |x| self.j_module(x),
            self.spec.tolerances(),
        )
    }

    /// Closed-form `F2` where one is known (rank-one only).
    pub fn exact_f2(&self, x: T) -> Option<CMatrix<T>> {
        if self.id != ExampleId::RankOne {
            return None;
        }
        let q = rank_one_q(x);
        Some(CMatrix::from_row_slice(1, 2, &[-q, q.conj()]))
    }

    /// Closed-form constant kernel value (rank-one only).
    pub fn kernel_constant(&self) -> Option<T> {
        (self.id == ExampleId::RankOne).then(|| -T::one() / T::pi())
    }
}

/// `q(x) = x + 1/(2(π - 1)) + iπ/(π - 1)`.
pub fn rank_one_q<T: Real>(x: T) -> C<T> {
    let d = T::pi() - T::one();
    cplx(x + T::lit(0.5) / d, T::pi() / d)
}

fn from_c64<T: Real>(z: Result<nalgebra::Complex<f64>>) -> C<T> {
    match z {
        Ok(z) => cplx(T::lit(z.re), T::lit(z.im)),
        Err(_) => cplx(T::lit(f64::NAN), T::lit(f64::NAN)),
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidArgument(format!("gamma must lie in (0, 1], got {gamma}")));
    }
    Ok(())
}

fn check_special_range(r: f64) -> Result<()> {
    if !(r > 0.0 && r <= 10.0) {
        return Err(Error::OutOfRange {
            x: r,
            lo: 0.0,
            hi: 10.0,
        });
    }
    Ok(())
}

fn check_r<T: Real>(r: T) -> Result<Interval<T>> {
    if !(r > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "interval length r must be > 0, got {r}"
        )));
    }
    Interval::new(T::zero(), r)
}

/// `F1 = [x + i, x - i]` on `[0, 1]`, `J = diag(-1, 1)`.
pub fn rank_one_spec<T: Real>() -> Result<KernelSpec<T>> {
    let iv = Interval::new(T::zero(), T::one())?;
    Ok(KernelSpec::new(iv, SignatureMatrix::split(1), |x: T| {
        CMatrix::from_row_slice(1, 2, &[cplx(x, T::one()), cplx(x, -T::one())])
    })?
    .with_derivative(|_| CMatrix::from_element(1, 2, creal(T::one()))))
}

/// `F1 = [I_m, -φ(x)]` on `[0, r]` with `J = diag(-I_m, I_m)`; `φ` must be unitary.
pub fn unitary_phi_spec<T, F, D>(phi: F, dphi: D, m: usize, r: T) -> Result<KernelSpec<T>>
where
    T: Real,
    F: Fn(T) -> CMatrix<T> + Send + Sync + 'static,
    D: Fn(T) -> CMatrix<T> + Send + Sync + 'static,
{
    unitary_phi_spec_arc(Arc::new(phi), Arc::new(dphi), m, r)
}

fn unitary_phi_spec_arc<T: Real>(phi: MatrixFn<T>, dphi: MatrixFn<T>, m: usize, r: T) -> Result<KernelSpec<T>> {
    if m == 0 {
        return Err(Error::InvalidArgument("block size m must be >= 1".into()));
    }
    let iv = check_r(r)?;
    for x in iv.linspace(101) {
        let v = phi(x);
        if v.shape() != (m, m) {
            return Err(Error::ShapeMismatch {
                expected: format!("{m}x{m}"),
                found: format!("{}x{}", v.nrows(), v.ncols()),
            });
        }
        let defect = max_norm(&(&v * v.adjoint() - identity::<T>(m)));
        if !(defect <= T::lit(1e-10)) {
            return Err(Error::InvalidArgument(format!(
                "phi({x}) is not unitary (defect {defect:e})"
            )));
        }
    }
    let block = move |lead: CMatrix<T>, tail: CMatrix<T>| {
        let mut f = CMatrix::zeros(m, 2 * m);
        f.view_mut((0, 0), (m, m)).copy_from(&lead);
        f.view_mut((0, m), (m, m)).copy_from(&(-tail));
        f
    };
    let f1 = {
        let phi = phi.clone();
        move |x: T| block(identity::<T>(m), phi(x))
    };
    let d = move |x: T| block(CMatrix::zeros(m, m), dphi(x));
    Ok(KernelSpec::new(iv, SignatureMatrix::split(m), f1)?.with_derivative(d))
}

/// `φ(x) = e^{2iux}`, `m = 1`.
pub fn sine_spec<T: Real>(u: T, r: T) -> Result<KernelSpec<T>> {
    let two_u = u * T::lit(2.0);
    unitary_phi_spec(
        move |x: T| CMatrix::from_element(1, 1, cis(two_u * x)),
        move |x: T| CMatrix::from_element(1, 1, cplx(T::zero(), two_u) * cis(two_u * x)),
        1,
        r,
    )
}

/// `F1 = [ψ(x), ψ̄(x)]` on `[0, r]` with `J = diag(-1, 1)`.
pub fn psi_spec<T, F, D>(psi: F, dpsi: D, r: T) -> Result<KernelSpec<T>>
where
    T: Real,
    F: Fn(T) -> C<T> + Send + Sync + 'static,
    D: Fn(T) -> C<T> + Send + Sync + 'static,
{
    psi_spec_arc(Arc::new(psi), Arc::new(dpsi), r)
}

fn psi_spec_arc<T: Real>(psi: ScalarFn<T>, dpsi: ScalarFn<T>, r: T) -> Result<KernelSpec<T>> {
    let iv = check_r(r)?;
    let f1 = move |x: T| {
        let p = psi(x);
        CMatrix::from_row_slice(1, 2, &[p, p.conj()])
    };
    let d = move |x: T| {
        let p = dpsi(x);
        CMatrix::from_row_slice(1, 2, &[p, p.conj()])
    };
    Ok(KernelSpec::new(iv, SignatureMatrix::split(1), f1)?.with_derivative(d))
}

/// `ψ = i√γ e^{-iux}` and its derivative.
fn gamma_psi<T: Real>(gamma: f64, u: f64) -> (ScalarFn<T>, ScalarFn<T>) {
    let g = T::lit(gamma.sqrt());
    let u = T::lit(u);
    let psi: ScalarFn<T> = Arc::new(move |x: T| cplx(T::zero(), g) * cis(-u * x));
    let dpsi: ScalarFn<T> = Arc::new(move |x: T| cplx(g * u, T::zero()) * cis(-u * x));
    (psi, dpsi)
}

/// `φ(x) = exp(i(2ux I + sin(x) S))` with a fixed Hermitian tridiagonal `S`.
fn default_phi<T: Real>(u: f64, m: usize) -> Result<(MatrixFn<T>, MatrixFn<T>)> {
    if m == 0 {
        return Err(Error::InvalidArgument("block size m must be >= 1".into()));
    }
    let s = CMatrix::<T>::from_fn(m, m, |i, j| {
        if i == j {
            creal(T::count(i + 1) / T::count(m))
        } else if i.abs_diff(j) == 1 {
            creal(T::lit(0.5))
        } else {
            creal(T::zero())
        }
    });
    let (lambda, v) = hermitian_eigen(&s);
    let u = T::lit(u);
    let lambda = Arc::new(lambda);
    let v = Arc::new(v);
    let phase = {
        let (lambda, v) = (lambda.clone(), v.clone());
        move |x: T| -> CMatrix<T> {
            let d = CMatrix::from_fn(m, m, |i, j| {
                if i == j {
                    cis(u * x * T::lit(2.0) + x.sin() * lambda[i])
                } else {
                    creal(T::zero())
                }
            });
            &*v * d * v.adjoint()
        }
    };
    let phi: MatrixFn<T> = Arc::new(phase.clone());
    let dphi: MatrixFn<T> = Arc::new(move |x: T| {
        let gen = (identity::<T>(m) * creal(u * T::lit(2.0)) + &s * creal(x.cos())) * cplx(T::zero(), T::one());
        gen * phase(x)
    });
    Ok((phi, dphi))
}

/// Residuals of the structural resolvent identities at truncation `ξ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolventRelations<T> {
    /// `max |Φ1 Φ1* - Φ2 Φ2*|` over the nodes.
    pub block_balance: T,
    /// `max |Φ2 + φ conj(Φ1)|` (unitary-φ, m = 1) or `max |Φ1 - conj(Φ2)|` (ψ family).
    pub conjugation: Option<T>,
}

/// Checks the resolvent identities of the `[I, -φ]` and `[ψ, ψ̄]` families.
pub fn resolvent_relations<T: Real>(ex: &Example<T>, xi: T, n: usize) -> Result<ResolventRelations<T>> {
    let res = Resolvent::solve(ex.spec(), xi, n)?;
    let m = ex.spec().m() / 2;
    let mut balance = T::zero();
    let mut conj = T::zero();
    for (x, v) in res.phi().iter() {
        let p1 = v.view((0, 0), (v.nrows(), m)).into_owned();
        let p2 = v.view((0, m), (v.nrows(), m)).into_owned();
        balance = balance.max(max_norm(&(&p1 * p1.adjoint() - &p2 * p2.adjoint())));
        let c = match &ex.symbol {
            Symbol::Phi(f) if m == 1 => max_norm(&(&p2 + f(x) * p1.map(|z| z.conj()))),
            Symbol::Psi(_) => max_norm(&(&p1 - p2.map(|z| z.conj()))),
            _ => T::zero(),
        };
        conj = conj.max(c);
    }
    let has_conj = matches!(ex.symbol, Symbol::Psi(_)) || (matches!(ex.symbol, Symbol::Phi(_)) && m == 1);
    Ok(ResolventRelations {
        block_balance: balance,
        conjugation: has_conj.then_some(conj),
    })
}

/// With `|ψ| = 1`, `[ψ, ψ̄] = ψ·[1, -φ]` for `φ = -ψ̄²`, so the two Nyström
/// matrices are diagonally similar: `S_ψ = U S_φ U*` with `U = diag(ψ(x_i))`.
/// Returns `max |S_ψ - U S_φ U*|` at truncation `ξ`.
pub fn gauge_equivalence_gap<T, F, D>(psi: F, dpsi: D, r: T, xi: T, n: usize) -> Result<T>
where
    T: Real,
    F: Fn(T) -> C<T> + Send + Sync + Clone + 'static,
    D: Fn(T) -> C<T> + Send + Sync + Clone + 'static,
{
    let iv = check_r(r)?;
    for x in iv.linspace(101) {
        if (psi(x).modulus() - T::one()).abs() > T::lit(1e-10) {
            return Err(Error::InvalidArgument(format!(
                "|psi({x})| != 1; the gauge equivalence needs a unimodular psi"
            )));
        }
    }
    let spec_psi = psi_spec(psi.clone(), dpsi.clone(), r)?;
    let (p1, p2, d1) = (psi.clone(), psi.clone(), dpsi);
    let spec_phi = unitary_phi_spec(
        move |x: T| {
            let c = p1(x).conj();
            CMatrix::from_element(1, 1, -(c * c))
        },
        move |x: T| {
            let c = p2(x).conj();
            CMatrix::from_element(1, 1, -(creal(T::lit(2.0)) * c * d1(x).conj()))
        },
        1,
        r,
    )?;
    let a = build_nystrom(&spec_psi, xi, n)?;
    let b = build_nystrom(&spec_phi, xi, n)?;
    let u: Vec<C<T>> = a.grid().nodes().iter().map(|&x| psi(x)).collect();
    let conj = CMatrix::from_fn(n, n, |i, j| u[i] * b.matrix()[(i, j)] * u[j].conj());
    Ok(max_norm(&(a.matrix() - conj)))
}

impl<T: Real> Example<T> {
    /// Overrides the tolerances carried by the kernel spec.
    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.spec.set_tolerances(tol);
        self
    }

    /// Gauge-equivalence gap for the ψ family, taken at its unimodular member
    /// `ψ = i e^{-iux}` (γ = 1, same `u` and `r`). `None` for other examples.
    pub fn unimodular_gauge_gap(&self, xi: T, n: usize) -> Option<Result<T>> {
        if !matches!(self.id, ExampleId::PsiForm | ExampleId::SineGamma) {
            return None;
        }
        let (psi, dpsi) = gamma_psi::<T>(1.0, self.params.u);
        Some(gauge_equivalence_gap(
            move |x: T| psi(x),
            move |x: T| dpsi(x),
            T::lit(self.params.r),
            xi,
            n,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intop::kernel_value;
    use crate::jmodule::{check_unipotent_class, defect_matrix, factor_defect};
    use crate::sampled::SampledMatrixFunction;
    use std::f64::consts::PI;

    fn all_defaults() -> Vec<Example<f64>> {
        ExampleId::ALL
            .iter()
            .map(|&id| Example::with_defaults(id).unwrap())
            .collect()
    }

    #[test]
    fn tags_round_trip() {
        for id in ExampleId::ALL {
            assert_eq!(id.tag().parse::<ExampleId>().unwrap(), id);
        }
        assert!("nope".parse::<ExampleId>().is_err());
    }

    #[test]
    fn every_example_is_smooth() {
        for ex in all_defaults() {
            assert!(ex.spec().is_smooth_diagonal(), "{}", ex.id());
        }
        let wide = Example::<f64>::build(
            ExampleId::UnitaryPhi,
            ExampleParams {
                m: 3,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(wide.spec().is_smooth_diagonal());
        assert_eq!((wide.spec().k(), wide.spec().m()), (3, 6));
    }

    #[test]
    fn rank_one_data() {
        let ex = Example::<f64>::with_defaults(ExampleId::RankOne).unwrap();
        let f = ex.spec().f1(0.0);
        assert_eq!((f[(0, 0)], f[(0, 1)]), (cplx(0.0, 1.0), cplx(0.0, -1.0)));
        assert!((kernel_value(ex.spec(), 0.2, 0.7).unwrap()[(0, 0)].re + 1.0 / PI).abs() < 1e-15);
        let q0 = rank_one_q(0.0f64);
        assert!((q0 - cplx(0.5 / (PI - 1.0), PI / (PI - 1.0))).norm() < 1e-15);
    }

    #[test]
    fn jump_matrices_match_closed_forms() {
        for ex in all_defaults() {
            for x in [0.1, 0.5, 0.9] {
                if let Some(want) = ex.explicit_r_squared(x) {
                    assert!(max_norm(&(ex.r_squared(x) - want)) < 1e-13, "{} x = {x}", ex.id());
                }
            }
        }
        // ψ = i√γ e^{-iux}: diagonal is (1 - γ, 1 + γ)
        let ex = Example::<f64>::build(
            ExampleId::SineGamma,
            ExampleParams {
                gamma: 0.5,
                u: 1.0,
                ..Default::default()
            },
        )
        .unwrap();
        let x = 0.3;
        let r2 = ex.r_squared(x);
        let want = CMatrix::from_row_slice(
            2,
            2,
            &[creal(0.5), cis(2.0 * x) * 0.5, -cis(-2.0 * x) * 0.5, creal(1.5)],
        );
        assert!(max_norm(&(r2 - want)) < 1e-15);
    }

    #[test]
    fn jmodule_round_trip_recovers_defect() {
        for ex in all_defaults() {
            let field = ex.jmodule_field(12).unwrap();
            assert!(check_unipotent_class(&field.r_squared(), 1e-12));
            let tol = Tolerances::default();
            let d = defect_matrix(&field, &tol).unwrap();
            let fac = factor_defect(&d, tol.rank, &tol).unwrap();
            // F1 is fixed only up to a unitary on the left; compare F1* F1
            let rebuilt = SampledMatrixFunction::from_fn(d.grid().clone(), |x| {
                let f = ex.spec().f1(x);
                f.adjoint() * f
            })
            .unwrap();
            assert!(d.max_distance(&rebuilt).unwrap() < 1e-10, "{}", ex.id());
            assert_eq!(fac.k, ex.spec().k());
        }
    }

    #[test]
    fn invalid_parameters() {
        let bad = |id, p| Example::<f64>::build(id, p).is_err();
        assert!(bad(
            ExampleId::PsiForm,
            ExampleParams {
                gamma: 0.0,
                ..Default::default()
            }
        ));
        assert!(bad(
            ExampleId::PsiForm,
            ExampleParams {
                gamma: 1.5,
                ..Default::default()
            }
        ));
        assert!(bad(
            ExampleId::Airy,
            ExampleParams {
                r: 11.0,
                ..Default::default()
            }
        ));
        assert!(bad(
            ExampleId::Bessel,
            ExampleParams {
                alpha: -1.0,
                ..Default::default()
            }
        ));
        assert!(bad(
            ExampleId::Sine,
            ExampleParams {
                r: 0.0,
                ..Default::default()
            }
        ));
        assert!(unitary_phi_spec(
            |_x: f64| CMatrix::from_element(1, 1, creal(2.0)),
            |_| CMatrix::zeros(1, 1),
            1,
            1.0
        )
        .is_err());
    }

    #[test]
    fn constant_phi_is_trivial() {
        let spec = unitary_phi_spec(|_x: f64| identity(2), |_| CMatrix::zeros(2, 2), 2, 1.0).unwrap();
        let op = build_nystrom(&spec, 1.0, 8).unwrap();
        assert!(max_norm(&(op.matrix() - identity::<f64>(16))) < 1e-15);
    }

    #[test]
    fn psi_kernel_real_form() {
        // kernel = -(1/π)(A(x)B(t) - B(x)A(t))/(x - t), ψ = A + iB
        let ex = Example::<f64>::with_defaults(ExampleId::Airy).unwrap();
        let (x, t) = (0.3, 0.8);
        let (px, pt) = (ex.psi(x).unwrap(), ex.psi(t).unwrap());
        let want = -(px.re * pt.im - px.im * pt.re) / (PI * (x - t));
        let k = kernel_value(ex.spec(), x, t).unwrap()[(0, 0)];
        assert!((k - creal(want)).norm() < 1e-14);
        // diagonal: (1/π)(A B' - B A')
        let d = ex.spec().f1_deriv(x)[(0, 0)];
        let want = (px.re * d.im - px.im * d.re) / PI;
        assert!((kernel_value(ex.spec(), x, x).unwrap()[(0, 0)] - creal(want)).norm() < 1e-14);
        // real ψ gives the zero kernel
        let spec = psi_spec(|x: f64| creal(1.0 + x), |_| creal(1.0), 1.0).unwrap();
        assert!(kernel_value(&spec, 0.2, 0.6).unwrap()[(0, 0)].norm() < 1e-16);
    }

    #[test]
    fn gamma_psi_kernel() {
        let ex = Example::<f64>::build(
            ExampleId::PsiForm,
            ExampleParams {
                gamma: 0.5,
                u: 1.0,
                ..Default::default()
            },
        )
        .unwrap();
        let (x, t) = (0.9, 0.2);
        let want = -0.5 * (x - t).sin() / (PI * (x - t));
        assert!((kernel_value(ex.spec(), x, t).unwrap()[(0, 0)] - creal(want)).norm() < 1e-15);
    }

    #[test]
    fn resolvent_identities() {
        for ex in all_defaults().into_iter().filter(|e| e.id() != ExampleId::RankOne) {
            for xi in [0.5, 1.0] {
                let rel = resolvent_relations(&ex, xi, 48).unwrap();
                assert!(rel.block_balance < 1e-8, "{} {xi}: {:e}", ex.id(), rel.block_balance);
                assert!(rel.conjugation.unwrap() < 1e-8, "{}", ex.id());
            }
        }
    }

    #[test]
    fn unimodular_psi_is_gauge_equivalent_to_phi() {
        let gap = gauge_equivalence_gap(|x: f64| cplx(0.0, 1.0) * cis(-x), |x: f64| cis(-x), 1.0, 1.0, 32).unwrap();
        assert!(gap < 1e-12, "{gap:e}");
        assert!(gauge_equivalence_gap(|_x: f64| creal(0.5), |_x: f64| creal(0.0), 1.0, 1.0, 8).is_err());
    }

    #[test]
    fn sine_psi_equation() {
        // Φ1 = e^{iux} Ψ with Ψ - (1/π)∫ sin(u(x-t))/(x-t) Ψ = e^{-iux}
        let u = 1.0;
        let ex = Example::<f64>::with_defaults(ExampleId::Sine).unwrap();
        let res = Resolvent::solve(ex.spec(), 1.0, 40).unwrap();
        let g = res.operator().grid();
        let (x, w) = (g.nodes(), g.weights());
        let n = x.len();
        let psi: Vec<C<f64>> = res.phi().iter().map(|(t, v)| cis(-u * t) * v[(0, 0)]).collect();
        for i in 0..n {
            let mut acc = psi[i];
            for j in 0..n {
                let k = if i == j {
                    u
                } else {
                    (u * (x[i] - x[j])).sin() / (x[i] - x[j])
                };
                acc -= psi[j] * (k * w[j] / PI);
            }
            assert!((acc - cis(-u * x[i])).norm() < 1e-8);
        }
        // Φ2 = -φ conj(Φ1) = -e^{iux} conj(Ψ)
        for (i, (t, v)) in res.phi().iter().enumerate() {
            assert!((v[(0, 1)] + cis(u * t) * psi[i].conj()).norm() < 1e-8);
        }
    }
}
