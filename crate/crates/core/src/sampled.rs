use crate::error::{Error, Result};
use crate::linalg::max_norm;
use crate::quadrature::QuadratureGrid;
use crate::scalar::{CMatrix, Real};

/// Matrix-valued function sampled at the nodes of a quadrature grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledMatrixFunction<T: Real> {
    grid: QuadratureGrid<T>,
    values: Vec<CMatrix<T>>,
    shape: (usize, usize),
}

impl<T: Real> SampledMatrixFunction<T> {
    pub fn new(grid: QuadratureGrid<T>, values: Vec<CMatrix<T>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} node values", grid.len()),
                found: format!("{}", values.len()),
            });
        }
        let shape = values.first().map(|v| v.shape()).unwrap_or((0, 0));
        if let Some(bad) = values.iter().find(|v| v.shape() != shape) {
            return Err(Error::ShapeMismatch {
                expected: format!("{}x{}", shape.0, shape.1),
                found: format!("{}x{}", bad.nrows(), bad.ncols()),
            });
        }
        Ok(Self { grid, values, shape })
    }

    /// Samples `f` at every node.
    pub fn from_fn<F: Fn(T) -> CMatrix<T>>(grid: QuadratureGrid<T>, f: F) -> Result<Self> {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &QuadratureGrid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[CMatrix<T>] {
        &self.values
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, &CMatrix<T>)> {
        self.grid.nodes().iter().copied().zip(self.values.iter())
    }

    pub fn map<F: Fn(T, &CMatrix<T>) -> CMatrix<T>>(&self, f: F) -> Result<Self> {
        let values = self.iter().map(|(x, v)| f(x, v)).collect();
        Self::new(self.grid.clone(), values)
    }

    /// Quadrature of the sampled values over the grid interval.
    pub fn integral(&self) -> CMatrix<T> {
        if self.values.is_empty() {
            return CMatrix::zeros(self.shape.0, self.shape.1);
        }
        self.grid.integrate_matrices(&self.values)
    }

    /// Largest node norm.
    pub fn sup_norm(&self) -> T {
        self.values
            .iter()
            .map(max_norm)
            .fold(T::zero(), |acc, v| if v > acc { v } else { acc })
    }

    /// Largest node-wise distance to `other` on the same grid.
    pub fn max_distance(&self, other: &Self) -> Result<T> {
        if self.shape != other.shape || self.len() != other.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{:?} x {}", self.shape, self.len()),
                found: format!("{:?} x {}", other.shape, other.len()),
            });
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| max_norm(&(a - b)))
            .fold(T::zero(), |acc, v| if v > acc { v } else { acc }))
    }
}
