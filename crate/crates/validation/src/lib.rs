//! Helpers for the acceptance suite: a line-per-criterion report and the
//! endpoint logarithm probe for `W(z)` near `z = a`.

use std::time::{Duration, Instant};

use rhcan::linalg::max_norm;
use rhcan::{cplx, Complex64, Matrix, Result, RhSolution};

/// One criterion's verdict.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub id: u32,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    pub fn line(&self) -> String {
        format!(
            "criterion {} {:<34} {}  {}",
            self.id,
            self.title,
            if self.pass { "PASS" } else { "FAIL" },
            self.detail
        )
    }
}

#[derive(Debug, Default)]
pub struct Report {
    verdicts: Vec<Verdict>,
}

impl Report {
    pub fn record(&mut self, v: Verdict) {
        println!("{}", v.line());
        self.verdicts.push(v);
    }

    pub fn failed(&self) -> Vec<u32> {
        self.verdicts.iter().filter(|v| !v.pass).map(|v| v.id).collect()
    }
}

pub fn timed<R>(f: impl FnOnce() -> R) -> (R, Duration) {
    let t0 = Instant::now();
    let r = f();
    (r, t0.elapsed())
}

/// `W(iy)` against `log(iy)` at two heights above the left end `a = 0`.
#[derive(Debug, Clone)]
pub struct LogProbe {
    pub ys: [f64; 2],
    /// `W(iy) / log(iy)` at each height.
    pub ratios: [Matrix; 2],
    /// `(W(iy0) - W(iy1)) / (log(iy0) - log(iy1))`, which removes the bounded part.
    pub slope: Matrix,
    /// `-F(a)/(2πi)`.
    pub target: Matrix,
    pub f_left: f64,
    pub f_right: f64,
}

impl LogProbe {
    pub fn measure(sol: &RhSolution, ys: [f64; 2]) -> Result<Self> {
        let iv = sol.interval();
        let log = |y: f64| cplx(y.ln(), std::f64::consts::FRAC_PI_2);
        let w0 = sol.cauchy_eval(cplx(iv.a(), ys[0]))?;
        let w1 = sol.cauchy_eval(cplx(iv.a(), ys[1]))?;
        let f_a = sol.f_at(iv.a())?;
        let f_b = sol.f_at(iv.b())?;
        let two_pi_i = cplx(0.0, 2.0 * std::f64::consts::PI);
        let scale = |m: &Matrix, s: Complex64| m.map(|e| e * s);
        Ok(Self {
            ys,
            ratios: [scale(&w0, log(ys[0]).inv()), scale(&w1, log(ys[1]).inv())],
            slope: scale(&(&w0 - &w1), (log(ys[0]) - log(ys[1])).inv()),
            target: scale(&f_a, -two_pi_i.inv()),
            f_left: max_norm(&f_a),
            f_right: max_norm(&f_b),
        })
    }

    /// `|r0 - r1| / |r1|` for the two ratios.
    pub fn ratio_spread(&self) -> f64 {
        max_norm(&(&self.ratios[0] - &self.ratios[1])) / max_norm(&self.ratios[1])
    }

    /// Distance of each ratio from the target, relative to the target.
    pub fn ratio_errors(&self) -> [f64; 2] {
        let t = max_norm(&self.target);
        [0, 1].map(|k| max_norm(&(&self.ratios[k] - &self.target)) / t)
    }

    pub fn slope_error(&self) -> f64 {
        max_norm(&(&self.slope - &self.target)) / max_norm(&self.target)
    }
}
