//! Intervals and Gauss–Legendre grids.

use crate::error::{Error, Result};
use crate::scalar::{CMatrix, Real};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<T: Real> {
    a: T,
    b: T,
}

impl<T: Real> Interval<T> {
    pub fn new(a: T, b: T) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || !(a < b) {
            return Err(Error::InvalidArgument(format!(
                "interval [{a}, {b}] must satisfy a < b, both finite"
            )));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> T {
        self.a
    }

    pub fn b(&self) -> T {
        self.b
    }

    pub fn length(&self) -> T {
        self.b - self.a
    }

    pub fn contains(&self, x: T) -> bool {
        self.a <= x && x <= self.b
    }

    /// Clamp `x` into `[a, b]`.
    pub fn clamp(&self, x: T) -> T {
        if x < self.a {
            self.a
        } else if x > self.b {
            self.b
        } else {
            x
        }
    }

    /// `n` equally spaced points `a + i (b - a) / (n - 1)`.
    pub fn linspace(&self, n: usize) -> Vec<T> {
        if n == 1 {
            return vec![self.a];
        }
        let h = self.length() / T::count(n - 1);
        (0..n).map(|i| self.a + h * T::count(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureRule {
    GaussLegendre,
    /// Composite trapezoid on caller-supplied nodes spanning the interval.
    Trapezoid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid<T: Real> {
    interval: Interval<T>,
    nodes: Vec<T>,
    weights: Vec<T>,
    rule: QuadratureRule,
}

impl<T: Real> QuadratureGrid<T> {
    pub fn interval(&self) -> Interval<T> {
        self.interval
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn rule(&self) -> QuadratureRule {
        self.rule
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(T) -> T>(&self, f: F) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (&x, &w)| acc + w * f(x))
    }

    /// `Σ w_i V_i` over per-node matrix values.
    pub fn integrate_matrices(&self, values: &[CMatrix<T>]) -> CMatrix<T> {
        assert_eq!(values.len(), self.len(), "one value per node");
        let (r, c) = values.first().map(|v| v.shape()).unwrap_or((0, 0));
        let mut acc = CMatrix::zeros(r, c);
        for (v, &w) in values.iter().zip(&self.weights) {
            acc += v * crate::scalar::creal(w);
        }
        acc
    }

    /// Distance from `x` to the nearest node, and that node's index.
    pub fn nearest_node(&self, x: T) -> (usize, T) {
        let idx = self.nodes.partition_point(|&t| t < x);
        let mut best = (0, T::max_value().unwrap_or_else(T::one));
        for i in [idx.saturating_sub(1), idx] {
            if i < self.nodes.len() {
                let d = (self.nodes[i] - x).abs();
                if d < best.1 {
                    best = (i, d);
                }
            }
        }
        best
    }

    /// Spacing between the nodes that bracket `x` (one-sided near the ends).
    pub fn local_spacing(&self, x: T) -> T {
        let n = self.nodes.len();
        if n < 2 {
            return self.interval.length();
        }
        let idx = self.nodes.partition_point(|&t| t < x).clamp(1, n - 1);
        self.nodes[idx] - self.nodes[idx - 1]
    }
}

/// `n`-point Gauss–Legendre rule affinely mapped onto `interval`.
pub fn gauss_legendre_grid<T: Real>(interval: Interval<T>, n: usize) -> Result<QuadratureGrid<T>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "Gauss-Legendre rule needs n >= 2, got {n}"
        )));
    }
    let (ref_nodes, ref_weights) = legendre_reference(n);
    let half = interval.length() * T::lit(0.5);
    let mid = (interval.a() + interval.b()) * T::lit(0.5);
    let nodes = ref_nodes.iter().map(|&s| mid + half * T::lit(s)).collect();
    let weights = ref_weights.iter().map(|&w| half * T::lit(w)).collect();
    Ok(QuadratureGrid {
        interval,
        nodes,
        weights,
        rule: QuadratureRule::GaussLegendre,
    })
}

/// Composite trapezoid rule on sorted `nodes` whose first and last entries are
/// the interval's end points. Used for tabulated data.
pub fn trapezoid_grid<T: Real>(interval: Interval<T>, nodes: Vec<T>) -> Result<QuadratureGrid<T>> {
    if nodes.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "trapezoid rule needs >= 2 nodes, got {}",
            nodes.len()
        )));
    }
    if nodes.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument(
            "trapezoid nodes must be strictly increasing".into(),
        ));
    }
    let slack = T::lit(1e-12) * interval.length();
    let (first, last) = (nodes[0], nodes[nodes.len() - 1]);
    if (first - interval.a()).abs() > slack || (last - interval.b()).abs() > slack {
        return Err(Error::InvalidArgument(format!(
            "trapezoid nodes span [{first}, {last}], not [{}, {}]",
            interval.a(),
            interval.b()
        )));
    }
    let n = nodes.len();
    let half = T::lit(0.5);
    let weights = (0..n)
        .map(|i| {
            let left = if i > 0 { nodes[i] - nodes[i - 1] } else { T::zero() };
            let right = if i + 1 < n { nodes[i + 1] - nodes[i] } else { T::zero() };
            (left + right) * half
        })
        .collect();
    Ok(QuadratureGrid {
        interval,
        nodes,
        weights,
        rule: QuadratureRule::Trapezoid,
    })
}

/// Nodes (ascending) and weights on [-1, 1], computed in f64 by Newton's method.
fn legendre_reference(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
