use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rhcan::canonical::{asymptotic_coefficients, monodromy_residual, vanishing_support_check, CanonicalData};
use rhcan::examples::{rank_one_q, sine_spec, Example, ExampleId};
use rhcan::linalg::{max_norm, SignatureMatrix};
use rhcan::quadrature::{gauss_legendre_grid, Interval};
use rhcan::rh::{j_residuals, RhSolution};
use rhcan::scalar::{cis, cplx, creal, CMatrix};
use rhcan::{Complex64, KernelSpec};

fn z_set() -> [Complex64; 3] {
    [cplx(0.0, 2.0), cplx(-3.0, 1.0), cplx(5.0, 0.0)]
}

/// Scalar solve of `Ψ - (1/π) ∫_0^ξ sin u(x-t)/(x-t) Ψ(t) dt = e^{-iux}` on its own
/// Gauss grid, returning nodes, weights and Ψ.
fn psi_sine(u: f64, xi: f64, n: usize) -> (Vec<f64>, Vec<f64>, Vec<Complex64>) {
    let g = gauss_legendre_grid(Interval::new(0.0, xi).unwrap(), n).unwrap();
    let (x, w) = (g.nodes().to_vec(), g.weights().to_vec());
    let k = |s: f64| {
        if s.abs() < 1e-12 {
            u / PI
        } else {
            (u * s).sin() / (PI * s)
        }
    };
    let a = DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { 1.0 } else { 0.0 };
        creal(d - k(x[i] - x[j]) * w[j])
    });
    let rhs = DVector::from_iterator(n, x.iter().map(|&t| cis(-u * t)));
    let psi = a.lu().solve(&rhs).unwrap();
    (x, w, psi.iter().copied().collect())
}

#[test]
fn sine_b_matches_scalar_assembly() {
    // With F1 = [1, -e^{2iux}], Φ(x, ξ) = [e^{iux} Ψ, -e^{iux} Ψ̄], so
    // B(ξ) = (1/2π) ∫ [[e^{-iux} Ψ̄, -e^{iux} Ψ̄], [-e^{-iux} Ψ, e^{iux} Ψ]] dx
    let u = 1.0;
    let spec = sine_spec(u, 1.0).unwrap();
    let canon = CanonicalData::recover(&spec, 17, 96).unwrap();
    for (&xi, b) in canon.xi_grid().iter().zip(canon.b()).skip(1) {
        let (x, w, psi) = psi_sine(u, xi, 48);
        let mut want = CMatrix::zeros(2, 2);
        for i in 0..x.len() {
            let (em, ep) = (cis(-u * x[i]), cis(u * x[i]));
            let p = psi[i];
            let entry = CMatrix::from_row_slice(2, 2, &[em * p.conj(), -ep * p.conj(), -em * p, ep * p]);
            want += entry * creal(w[i] / (2.0 * PI));
        }
        assert!(max_norm(&(b - want)) < 1e-6, "xi = {xi}");
    }
}

#[test]
fn sine_u0_b_is_quadratic_form_of_f1() {
    let spec = sine_spec(0.0, 1.0).unwrap();
    let canon = CanonicalData::recover(&spec, 16, 32).unwrap();
    let last = canon.b().last().unwrap();
    let want =
        CMatrix::from_row_slice(2, 2, &[creal(1.0), creal(-1.0), creal(-1.0), creal(1.0)]) * creal(1.0 / (2.0 * PI));
    assert!(max_norm(&(last - &want)) < 1e-14);
    assert!(canon.h().iter().all(|h| max_norm(&(h - &want)) < 1e-12));
}

#[test]
fn rank_one_first_moment_closed_form() {
    // -(1/2πi) ∫_0^1 F2* F1 with F2 = [-q, q̄], F1 = [x + i, x - i]; degree-2 integrand
    let ex = Example::<f64>::with_defaults(ExampleId::RankOne).unwrap();
    let canon = CanonicalData::recover(ex.spec(), 64, 256).unwrap();
    let g = gauss_legendre_grid(Interval::new(0.0, 1.0).unwrap(), 6).unwrap();
    let inv_two_pi_i = cplx(0.0, -1.0 / (2.0 * PI));
    let (mut m1, mut m2) = (CMatrix::zeros(2, 2), CMatrix::zeros(2, 2));
    for (&x, &w) in g.nodes().iter().zip(g.weights()) {
        let q = rank_one_q(x);
        let f2 = CMatrix::from_row_slice(1, 2, &[-q, q.conj()]);
        let f1 = CMatrix::from_row_slice(1, 2, &[cplx(x, 1.0), cplx(x, -1.0)]);
        let f = f2.adjoint() * f1;
        m1 -= &f * (inv_two_pi_i * w);
        m2 -= &f * (inv_two_pi_i * (w * x));
    }
    assert!(max_norm(&(canon.m1() - &m1)) < 1e-6);

    let sol = RhSolution::solve(ex.spec(), 256).unwrap();
    let asy = asymptotic_coefficients(&sol, 3).unwrap();
    assert!(max_norm(&(&asy.exact[1] - &m2)) < 1e-6);
    assert!(max_norm(&(&asy.fitted[0] - canon.m1())) < 1e-5);
    assert!(asy.max_disagreement() < 1e-5);
}

#[test]
fn monodromy_rank_one_and_sine() {
    for id in [ExampleId::RankOne, ExampleId::Sine] {
        let ex = Example::<f64>::with_defaults(id).unwrap();
        let canon = CanonicalData::recover(ex.spec(), 64, 256).unwrap();
        let sol = RhSolution::solve(ex.spec(), 256).unwrap();
        let res = monodromy_residual(&canon, &sol, &z_set()).unwrap();
        assert!(res < 1e-4, "{id}: monodromy residual {res:e}");
        for z in z_set().into_iter().chain([cplx(0.5, 0.3)]) {
            let w = canon.integrate_system(z).unwrap();
            let wbar = canon.integrate_system(z.conj()).unwrap();
            let (sym, _) = j_residuals(&w, &wbar, canon.signature().matrix(), z);
            assert!(sym < 1e-5, "{id} at {z}: {sym:e}");
        }
    }
}

#[test]
fn canonical_invariants_for_every_example() {
    for id in ExampleId::ALL {
        let ex = Example::<f64>::with_defaults(id).unwrap();
        let canon = CanonicalData::recover(ex.spec(), 32, 64).unwrap();
        let d = canon.diagnostics();
        assert!(d.b_asymmetry < 1e-7, "{id}");
        assert!(d.fd_consistency < 1e-6, "{id}: {:e}", d.fd_consistency);
        assert!(canon.monotonicity() > -1e-8, "{id}");
        assert!(canon.nilpotency_residual() < 1e-6, "{id}");
        assert!(canon.structure_residual().unwrap() < 1e-5, "{id}");
        // M1 = iJB(b) against the moment formula
        let sol = RhSolution::solve(ex.spec(), 64).unwrap();
        assert!(max_norm(&(canon.m1() - sol.moment(1))) < 1e-6, "{id}");
    }
}

#[test]
fn trace_of_b_is_stable_under_refinement() {
    let ex = Example::<f64>::with_defaults(ExampleId::PsiForm).unwrap();
    let coarse = CanonicalData::recover(ex.spec(), 16, 64).unwrap();
    let fine = CanonicalData::recover(ex.spec(), 16, 128).unwrap();
    let (a, b) = (coarse.b().last().unwrap().trace(), fine.b().last().unwrap().trace());
    assert!((a - b).norm() < 1e-6);
}

#[test]
fn vanishing_support() {
    let base = sine_spec(1.0, 1.0).unwrap();
    let windowed = base.windowed(0.4, 0.6, 0.25).unwrap();
    let canon = CanonicalData::recover(&windowed, 128, 128).unwrap();
    let sol = RhSolution::solve(&windowed, 128).unwrap();
    assert!(vanishing_support_check(&canon, &sol, 0.4, 0.6, 9).unwrap());
    // the jump is trivial there as well
    let (wp, wm) = sol.boundary_values(0.5).unwrap();
    assert!(max_norm(&(wp - wm)) < 1e-6);

    let canon = CanonicalData::recover(&base, 64, 128).unwrap();
    let sol = RhSolution::solve(&base, 128).unwrap();
    assert!(!vanishing_support_check(&canon, &sol, 0.4, 0.6, 9).unwrap());

    assert!(vanishing_support_check(&canon, &sol, 0.6, 0.4, 9).is_err());
}

#[test]
fn zero_kernel_is_trivially_supported_nowhere() {
    let iv = Interval::new(0.0, 1.0).unwrap();
    let spec = KernelSpec::new(iv, SignatureMatrix::split(1), |_x: f64| CMatrix::zeros(1, 2)).unwrap();
    let canon = CanonicalData::recover(&spec, 16, 16).unwrap();
    let sol = RhSolution::solve(&spec, 16).unwrap();
    assert!(vanishing_support_check(&canon, &sol, 0.2, 0.8, 5).unwrap());
    assert_eq!(monodromy_residual(&canon, &sol, &z_set()).unwrap(), 0.0);
    let asy = asymptotic_coefficients(&sol, 2).unwrap();
    assert!(asy.fitted.iter().chain(&asy.exact).all(|m| max_norm(m) < 1e-15));
}

#[test]
fn recovery_rejects_bad_input() {
    let spec = sine_spec(1.0, 1.0).unwrap();
    assert!(CanonicalData::recover(&spec, 3, 32).is_err());
    assert!(rhcan::canonical::accumulate_b(&spec, &[0.5, 0.25], 32).is_err());
    assert!(rhcan::canonical::accumulate_b(&spec, &[0.5, 1.5], 32).is_err());
    let canon = CanonicalData::recover(&spec, 32, 32).unwrap();
    assert!(canon.integrate_system(cplx(0.5, 1e-5)).is_err());
    let sol = RhSolution::solve(&spec, 32).unwrap();
    assert!(asymptotic_coefficients(&sol, 4).is_err());
}
