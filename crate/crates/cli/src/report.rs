//! JSON and CSV emitters. Floats are written with 17 significant digits so the
//! same run always produces the same bytes.

use rhcan::{Complex64, Matrix};
use serde_json::{Map, Number, Value};

pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let s = format!("{x:.16e}");
    Value::Number(s.parse::<Number>().expect("formatted float is a valid JSON number"))
}

pub fn complex(z: Complex64) -> Value {
    Value::Array(vec![num(z.re), num(z.im)])
}

/// Rows of `[re, im]` pairs.
pub fn matrix(m: &Matrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|r| Value::Array((0..m.ncols()).map(|c| complex(m[(r, c)])).collect()))
            .collect(),
    )
}

/// `[{"x": .., "value": ..}, ...]`.
pub fn table<'a>(key: &str, rows: impl Iterator<Item = (f64, &'a Matrix)>) -> Value {
    Value::Array(
        rows.map(|(x, m)| {
            let mut o = Map::new();
            o.insert(key.into(), num(x));
            o.insert("value".into(), matrix(m));
            Value::Object(o)
        })
        .collect(),
    )
}

/// One pass/fail record.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    /// `true`: pass iff `value <= limit`; `false`: pass iff `value > limit`.
    pub upper: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            upper: true,
        }
    }

    pub fn above(name: &str, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            upper: false,
        }
    }

    pub fn pass(&self) -> bool {
        if self.upper {
            self.value <= self.limit
        } else {
            self.value > self.limit
        }
    }

    pub fn to_json(&self) -> Value {
        let mut o = Map::new();
        o.insert("value".into(), num(self.value));
        o.insert("limit".into(), num(self.limit));
        o.insert(
            "bound".into(),
            Value::String(if self.upper { "max" } else { "min" }.into()),
        );
        o.insert("pass".into(), Value::Bool(self.pass()));
        Value::Object(o)
    }

    pub fn row(&self) -> String {
        let rel = if self.upper { "<=" } else { ">" };
        format!(
            "{:<24} {:>12.3e} {} {:<10.1e} {}",
            self.name,
            self.value,
            rel,
            self.limit,
            if self.pass() { "PASS" } else { "FAIL" }
        )
    }
}

pub fn checks_json(checks: &[Check]) -> Value {
    Value::Object(checks.iter().map(|c| (c.name.clone(), c.to_json())).collect())
}

/// CSV with a leading key column and re/im columns for every matrix entry.
pub fn csv(key: &str, columns: &[(&str, Vec<(f64, &Matrix)>)]) -> String {
    let mut out = String::new();
    let mut header = vec![key.to_string()];
    for (name, rows) in columns {
        if let Some((_, m)) = rows.first() {
            for r in 0..m.nrows() {
                for c in 0..m.ncols() {
                    header.push(format!("{name}_{r}{c}_re"));
                    header.push(format!("{name}_{r}{c}_im"));
                }
            }
        }
    }
    out.push_str(&header.join(","));
    out.push('\n');
    let len = columns.first().map(|(_, rows)| rows.len()).unwrap_or(0);
    for i in 0..len {
        let mut line = vec![format!("{:.16e}", columns[0].1[i].0)];
        for (_, rows) in columns {
            let m = rows[i].1;
            for r in 0..m.nrows() {
                for c in 0..m.ncols() {
                    line.push(format!("{:.16e}", m[(r, c)].re));
                    line.push(format!("{:.16e}", m[(r, c)].im));
                }
            }
        }
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rhcan::cplx;

    #[test]
    fn numbers_keep_seventeen_digits() {
        assert_eq!(num(0.1).to_string(), "1.0000000000000001e-1");
        assert_eq!(num(-2.0).to_string(), "-2.0000000000000000e+0");
        assert_eq!(num(f64::NAN), Value::Null);
        assert_eq!(
            complex(cplx(1.0, -0.5)).to_string(),
            "[1.0000000000000000e+0,-5.0000000000000000e-1]"
        );
    }

    #[test]
    fn check_directions() {
        assert!(Check::at_most("a", 1e-7, 1e-6).pass());
        assert!(!Check::at_most("a", 1e-5, 1e-6).pass());
        assert!(Check::above("b", 0.1, 0.0).pass());
        assert!(!Check::above("b", -0.1, 0.0).pass());
        assert!(!Check::at_most("nan", f64::NAN, 1.0).pass());
    }

    #[test]
    fn csv_layout() {
        let m = Matrix::from_element(1, 2, cplx(1.0, 2.0));
        let s = csv("x", &[("F2", vec![(0.5, &m)])]);
        let mut lines = s.lines();
        assert_eq!(lines.next().unwrap(), "x,F2_00_re,F2_00_im,F2_01_re,F2_01_im");
        assert!(lines
            .next()
            .unwrap()
            .starts_with("5.0000000000000000e-1,1.0000000000000000e0,2.0"));
    }
}
