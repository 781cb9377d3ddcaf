//! Custom kernel files.
//!
//! ```json
//! {
//!   "J": [[-1, 0], [0, 1]],
//!   "interval": [0, 1],
//!   "F1": [[0.0, [1, 0], [-1, 0]], [0.1, ...], ...]
//! }
//! ```
//!
//! Each table row is `x` followed by the matrix entries in row-major order; an
//! entry is a real number or an `[re, im]` pair. `F1` rows hold `k x m` entries
//! (`m` the size of `J`), `R2` rows hold `m x m`. Exactly one of the two tables
//! must be present and `x` must be strictly increasing and cover the interval.

use std::path::Path;
use std::sync::Arc;

use rhcan::jmodule::{defect_matrix, factor_defect, unipotent_root};
use rhcan::linalg::{identity, max_norm};
use rhcan::quadrature::trapezoid_grid;
use rhcan::{
    cplx, Complex64, Interval, JModuleField, KernelSpec, Matrix, SampledMatrixFunction, SignatureMatrix, Tolerances,
};
use serde_json::Value;

use crate::Failure;

pub type JumpFn = Arc<dyn Fn(f64) -> Matrix + Send + Sync>;

pub struct CustomKernel {
    pub spec: KernelSpec,
    /// `R²(x)` when it is known, for the jump residual.
    pub r_squared: Option<JumpFn>,
    pub source: &'static str,
}

/// Piecewise cubic Lagrange interpolation of a matrix table.
#[derive(Debug, Clone)]
pub struct Table {
    xs: Vec<f64>,
    values: Vec<Matrix>,
}

impl Table {
    pub fn new(xs: Vec<f64>, values: Vec<Matrix>) -> Result<Self, Failure> {
        if xs.len() < 2 || xs.len() != values.len() {
            return Err(Failure::validation("a table needs at least two samples"));
        }
        if let Some(w) = xs
            .windows(2)
            .find(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
        {
            return Err(Failure::validation(format!(
                "table x values must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(Self { xs, values })
    }

    pub fn at(&self, x: f64) -> Matrix {
        let n = self.xs.len();
        let width = n.min(4);
        let i = self.xs.partition_point(|&t| t < x);
        let start = i.saturating_sub(width / 2).min(n - width);
        let pts = start..start + width;
        let mut acc = Matrix::zeros(self.values[0].nrows(), self.values[0].ncols());
        for j in pts.clone() {
            let mut l = 1.0;
            for k in pts.clone() {
                if k != j {
                    l *= (x - self.xs[k]) / (self.xs[j] - self.xs[k]);
                }
            }
            acc += &self.values[j] * cplx(l, 0.0);
        }
        acc
    }
}

fn entry(v: &Value, what: &str) -> Result<Complex64, Failure> {
    match v {
        Value::Number(n) => n
            .as_f64()
            .map(|re| cplx(re, 0.0))
            .ok_or_else(|| Failure::validation(format!("{what}: not a finite number"))),
        Value::Array(p) if p.len() == 2 => match (p[0].as_f64(), p[1].as_f64()) {
            (Some(re), Some(im)) => Ok(cplx(re, im)),
            _ => Err(Failure::validation(format!("{what}: [re, im] must hold two numbers"))),
        },
        _ => Err(Failure::validation(format!("{what}: expected a number or [re, im]"))),
    }
}

fn signature(v: &Value, tol: &Tolerances) -> Result<SignatureMatrix, Failure> {
    let rows = v
        .as_array()
        .filter(|r| !r.is_empty())
        .ok_or_else(|| Failure::validation("J must be a non-empty array of rows"))?;
    let n = rows.len();
    let mut m = Matrix::zeros(n, n);
    for (r, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .filter(|row| row.len() == n)
            .ok_or_else(|| Failure::validation(format!("J row {r} must have {n} entries")))?;
        for (c, e) in row.iter().enumerate() {
            m[(r, c)] = entry(e, &format!("J[{r}][{c}]"))?;
        }
    }
    Ok(SignatureMatrix::new(m, tol.hermitian)?)
}

fn interval(v: &Value) -> Result<Interval, Failure> {
    match v.as_array().map(|a| a.iter().map(Value::as_f64).collect::<Vec<_>>()) {
        Some(ab) if ab.len() == 2 && ab.iter().all(Option::is_some) => {
            Ok(Interval::new(ab[0].unwrap(), ab[1].unwrap())?)
        }
        _ => Err(Failure::validation("interval must be [a, b]")),
    }
}

/// Rows of `x, entries...` split into `rows x cols` matrices, where `cols` is fixed
/// and `rows` is inferred (or checked when given).
fn table(v: &Value, name: &str, cols: usize, rows: Option<usize>) -> Result<Table, Failure> {
    let samples = v
        .as_array()
        .ok_or_else(|| Failure::validation(format!("{name} must be an array of rows")))?;
    let mut xs = Vec::with_capacity(samples.len());
    let mut values = Vec::with_capacity(samples.len());
    let mut shape = rows;
    for (i, s) in samples.iter().enumerate() {
        let s = s
            .as_array()
            .filter(|s| s.len() >= 2)
            .ok_or_else(|| Failure::validation(format!("{name} row {i}: expected [x, entries...]")))?;
        let x = s[0]
            .as_f64()
            .ok_or_else(|| Failure::validation(format!("{name} row {i}: x must be a number")))?;
        let count = s.len() - 1;
        if count % cols != 0 {
            return Err(Failure::validation(format!(
                "{name} row {i}: {count} entries is not a multiple of {cols}"
            )));
        }
        let r = count / cols;
        match shape {
            Some(expected) if expected != r => {
                return Err(Failure::validation(format!(
                    "{name} row {i}: expected {} entries, found {count}",
                    expected * cols
                )))
            }
            _ => shape = Some(r),
        }
        let entries = s[1..]
            .iter()
            .enumerate()
            .map(|(j, e)| entry(e, &format!("{name} row {i} entry {j}")))
            .collect::<Result<Vec<_>, _>>()?;
        xs.push(x);
        values.push(Matrix::from_row_slice(r, cols, &entries));
    }
    Table::new(xs, values)
}

fn check_cover(t: &Table, iv: Interval, name: &str) -> Result<(), Failure> {
    let slack = 1e-12 * iv.length();
    let (lo, hi) = (t.xs[0], *t.xs.last().unwrap());
    if lo > iv.a() + slack || hi < iv.b() - slack {
        return Err(Failure::validation(format!(
            "{name} samples span [{lo}, {hi}] but the interval is [{}, {}]",
            iv.a(),
            iv.b()
        )));
    }
    Ok(())
}

pub fn load(path: &Path, tol: Tolerances) -> Result<CustomKernel, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::validation(format!("cannot read {}: {e}", path.display())))?;
    let doc: Value = serde_json::from_str(&text)
        .map_err(|e| Failure::validation(format!("{} is not valid JSON: {e}", path.display())))?;
    parse(&doc, tol)
}

pub fn parse(doc: &Value, tol: Tolerances) -> Result<CustomKernel, Failure> {
    let field = |k: &str| doc.get(k).filter(|v| !v.is_null());
    let j = signature(field("J").ok_or_else(|| Failure::validation("missing J"))?, &tol)?;
    let iv = interval(field("interval").ok_or_else(|| Failure::validation("missing interval"))?)?;
    let m = j.dim();
    match (field("F1"), field("R2")) {
        (Some(f1), None) => from_f1(table(f1, "F1", m, None)?, j, iv, tol),
        (None, Some(r2)) => from_r2(table(r2, "R2", m, Some(m))?, j, iv, tol),
        _ => Err(Failure::validation("exactly one of F1 and R2 must be given")),
    }
}

fn from_f1(t: Table, j: SignatureMatrix, iv: Interval, tol: Tolerances) -> Result<CustomKernel, Failure> {
    check_cover(&t, iv, "F1")?;
    let jm = j.matrix().clone();
    // R² = I + J F1* F1 is the jump only when F1 J F1* vanishes
    let nilpotent = t.values.iter().all(|f| {
        let s = max_norm(f);
        max_norm(&(f * &jm * f.adjoint())) <= tol.diagonal * (1.0 + s * s)
    });
    let interp = t.clone();
    let spec = KernelSpec::with_tolerances(iv, j, move |x| interp.at(x), tol)?;
    let r_squared: Option<JumpFn> = nilpotent.then(|| {
        let m = jm.nrows();
        Arc::new(move |x: f64| {
            let f = t.at(x);
            identity::<f64>(m) + &jm * f.adjoint() * f
        }) as JumpFn
    });
    Ok(CustomKernel {
        spec,
        r_squared,
        source: "F1",
    })
}

/// Works at the table's own abscissae: `R = (R2 + I)/2` is validated as a
/// J-module there and its defect factored into `F1`, which is then interpolated.
/// Interpolating `R2` itself would break the unipotent structure between rows.
fn from_r2(t: Table, j: SignatureMatrix, iv: Interval, tol: Tolerances) -> Result<CustomKernel, Failure> {
    let m = j.dim();
    for (x, r2) in t.xs.iter().zip(&t.values) {
        let e = r2 - identity::<f64>(m);
        let s = 1.0 + max_norm(r2);
        if max_norm(&(&e * &e)) > tol.jmodule * s * s {
            return Err(Failure::validation(format!(
                "R2 at x = {x} is not unipotent ((R2 - I)^2 != 0); supply F1 for this kernel"
            )));
        }
    }
    let grid = trapezoid_grid(iv, t.xs.clone())
        .map_err(|_| Failure::validation(format!("R2 rows must run from a = {} to b = {}", iv.a(), iv.b())))?;
    let roots = t.values.iter().map(unipotent_root).collect();
    let field = JModuleField::new(j.clone(), SampledMatrixFunction::new(grid, roots)?, &tol)?;
    let d = defect_matrix(&field, &tol)?;
    let factor = factor_defect(&d, tol.rank, &tol)?;
    if factor.k == 0 {
        return Err(Failure::validation("R2 is the identity everywhere; the kernel is zero"));
    }
    let f1 = Table::new(t.xs.clone(), factor.f1.values().to_vec())?;
    let spec = KernelSpec::with_tolerances(iv, j, move |x| f1.at(x), tol)?;
    Ok(CustomKernel {
        spec,
        r_squared: Some(Arc::new(move |x| t.at(x))),
        source: "R2",
    })
}
