//! Airy and Bessel functions on the small real ranges the examples use.

type Complex64 = nalgebra::Complex<f64>;

use crate::error::{Error, Result};

/// `Ai(0)`.
pub const AI0: f64 = 0.355_028_053_887_817_2;
/// `-Ai'(0)`.
pub const AIP0: f64 = 0.258_819_403_792_806_8;

const AIRY_RANGE: (f64, f64) = (-2.0, 10.0);
/// Maclaurin series below, asymptotic expansion above.
const AIRY_SWITCH: f64 = 5.0;
const BESSEL_ARG_MAX: f64 = 12.0;
const BESSEL_PSI_RANGE: (f64, f64) = (0.0, 10.0);

fn check(x: f64, (lo, hi): (f64, f64)) -> Result<()> {
    if !(lo..=hi).contains(&x) {
        return Err(Error::OutOfRange { x, lo, hi });
    }
    Ok(())
}

/// `(Ai(x), Ai'(x))`.
pub fn airy(x: f64) -> Result<(f64, f64)> {
    check(x, AIRY_RANGE)?;
    if x <= AIRY_SWITCH {
        Ok(airy_maclaurin(x))
    } else {
        Ok(airy_asymptotic(x))
    }
}

pub fn special_ai(x: f64) -> Result<f64> {
    Ok(airy(x)?.0)
}

pub fn special_ai_prime(x: f64) -> Result<f64> {
    Ok(airy(x)?.1)
}

fn airy_maclaurin(x: f64) -> (f64, f64) {
    let x3 = x * x * x;
    // f = Σ 3^k (1/3)_k x^{3k} / (3k)!, g = Σ 3^k (2/3)_k x^{3k+1} / (3k+1)!
    let (mut f, mut g) = (1.0, x);
    let (mut tf, mut tg) = (1.0, x);
    let (mut df, mut dg) = (0.0, 1.0);
    let (mut tdf, mut tdg) = (0.0, 1.0);
    for k in 1..200 {
        let kf = k as f64;
        tf *= x3 / ((3.0 * kf - 1.0) * (3.0 * kf));
        tg *= x3 / ((3.0 * kf) * (3.0 * kf + 1.0));
        tdf = if k == 1 {
            x * x / 2.0
        } else {
            tdf * x3 / ((3.0 * kf - 3.0) * (3.0 * kf - 1.0))
        };
        tdg *= x3 / ((3.0 * kf - 2.0) * (3.0 * kf));
        f += tf;
        g += tg;
        df += tdf;
        dg += tdg;
        let scale = f.abs() + g.abs() + df.abs() + dg.abs();
        if tf.abs() + tg.abs() + tdf.abs() + tdg.abs() <= 1e-18 * scale {
            break;
        }
    }
    (AI0 * f - AIP0 * g, AI0 * df - AIP0 * dg)
}

fn airy_asymptotic(x: f64) -> (f64, f64) {
    let zeta = 2.0 / 3.0 * x * x.sqrt();
    let (mut su, mut sv) = (1.0, 1.0);
    let mut u = 1.0;
    let mut last = f64::INFINITY;
    let mut zk = 1.0;
    for k in 1..60 {
        let kf = k as f64;
        u *= (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf);
        let v = -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * u;
        zk *= -zeta;
        let term = u / zk;
        // stop at the smallest term of the divergent series
        if term.abs() >= last {
            break;
        }
        last = term.abs();
        su += term;
        sv += v / zk;
        if term.abs() < 1e-17 {
            break;
        }
    }
    let e = (-zeta).exp() / (2.0 * std::f64::consts::PI.sqrt());
    let q = x.powf(0.25);
    (e / q * su, -e * q * sv)
}

/// `(J_α(s), s J_α'(s))` by the ascending series.
pub fn bessel_j_pair(alpha: f64, s: f64) -> Result<(f64, f64)> {
    if !(alpha >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Bessel order must be >= 0, got {alpha}"
        )));
    }
    check(s, (0.0, BESSEL_ARG_MAX))?;
    let h = s / 2.0;
    let mut t = h.powf(alpha) / libm::tgamma(alpha + 1.0);
    let (mut j, mut sj) = (t, alpha * t);
    let h2 = h * h;
    for k in 1..200 {
        let kf = k as f64;
        t *= -h2 / (kf * (kf + alpha));
        j += t;
        sj += (2.0 * kf + alpha) * t;
        if t.abs() <= 1e-18 * (1.0 + j.abs()) && kf > h {
            break;
        }
    }
    Ok((j, sj))
}

pub fn special_bessel_j(alpha: f64, s: f64) -> Result<f64> {
    Ok(bessel_j_pair(alpha, s)?.0)
}

/// `J_α'(s)`, for `s > 0` (or any `s` when `α = 0` or `α >= 1`).
pub fn special_bessel_j_prime(alpha: f64, s: f64) -> Result<f64> {
    if s == 0.0 {
        return Ok(if alpha == 1.0 {
            0.5
        } else if alpha == 0.0 || alpha > 1.0 {
            0.0
        } else {
            f64::INFINITY
        });
    }
    Ok(bessel_j_pair(alpha, s)?.1 / s)
}

/// `√π [Ai(x) + i Ai'(x)]`.
pub fn airy_psi(x: f64) -> Result<Complex64> {
    let (a, ap) = airy(x)?;
    Ok(Complex64::new(a, ap) * std::f64::consts::PI.sqrt())
}

/// `d/dx airy_psi = √π [Ai'(x) + i x Ai(x)]`.
pub fn airy_psi_prime(x: f64) -> Result<Complex64> {
    let (a, ap) = airy(x)?;
    Ok(Complex64::new(ap, x * a) * std::f64::consts::PI.sqrt())
}

/// `√(π/2) [J_α(√x) + i √x J_α'(√x)]`.
pub fn bessel_psi(x: f64, alpha: f64) -> Result<Complex64> {
    check(x, BESSEL_PSI_RANGE)?;
    let (j, sj) = bessel_j_pair(alpha, x.sqrt())?;
    Ok(Complex64::new(j, sj) * (std::f64::consts::PI / 2.0).sqrt())
}

/// `d/dx bessel_psi`, term by term in powers of `x`.
pub fn bessel_psi_prime(x: f64, alpha: f64) -> Result<Complex64> {
    check(x, BESSEL_PSI_RANGE)?;
    if !(alpha >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "Bessel order must be >= 0, got {alpha}"
        )));
    }
    // J_α(√x) = Σ c_k x^{k + α/2}, c_k = (-1)^k / (2^{2k+α} k! Γ(k+α+1))
    let mut c = 0.5f64.powf(alpha) / libm::tgamma(alpha + 1.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..200 {
        let kf = k as f64;
        if k > 0 {
            c *= -0.25 / (kf * (kf + alpha));
        }
        let p = kf + alpha / 2.0;
        if p == 0.0 {
            continue;
        }
        let term = p * c * x.powf(p - 1.0);
        acc += Complex64::new(term, (2.0 * kf + alpha) * term);
        if term.abs() <= 1e-18 * (1.0 + acc.norm()) && k > 2 && kf > x.sqrt() {
            break;
        }
    }
    Ok(acc * (std::f64::consts::PI / 2.0).sqrt())
}
