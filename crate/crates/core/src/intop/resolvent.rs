use super::nystrom::{build_nystrom, DiscretizedOperator, NystromPath};
use super::{coincidence_threshold, i_over_two_pi, kernel_value, scalar_weight, KernelSpec};
use crate::error::{Error, Result};
use crate::linalg::{identity, max_norm};
use crate::sampled::SampledMatrixFunction;
use crate::scalar::{creal, CMatrix, Real};

/// Solution `Φ_ξ = S_ξ^{-1} F1` on the Nyström grid, with the data needed to
/// evaluate it off the grid.
#[derive(Debug, Clone)]
pub struct Resolvent<T: Real> {
    spec: KernelSpec<T>,
    op: DiscretizedOperator<T>,
    phi: SampledMatrixFunction<T>,
    residual: T,
}

impl<T: Real> Resolvent<T> {
    /// Solves `S_ξ Φ = F1` with `n` nodes on `[a, ξ]`.
    pub fn solve(spec: &KernelSpec<T>, xi: T, n: usize) -> Result<Self> {
        let op = build_nystrom(spec, xi, n)?;
        Self::from_operator(spec, op)
    }

    pub fn from_operator(spec: &KernelSpec<T>, op: DiscretizedOperator<T>) -> Result<Self> {
        let tol = spec.tolerances();
        let cond = op.condition_number();
        if !(cond < T::lit(tol.cond_limit)) {
            return Err(Error::IllConditioned {
                condition: cond.as_f64(),
                limit: tol.cond_limit,
            });
        }
        let (k, m) = (spec.k(), spec.m());
        let nodes = op.grid().nodes();
        let n = nodes.len();
        let mut rhs = CMatrix::zeros(n * k, m);
        for (i, &x) in nodes.iter().enumerate() {
            rhs.view_mut((i * k, 0), (k, m)).copy_from(&spec.f1(x));
        }
        let lu = op.matrix().clone().lu();
        let sol = lu.solve(&rhs).ok_or(Error::IllConditioned {
            condition: f64::INFINITY,
            limit: tol.cond_limit,
        })?;
        let residual = max_norm(&(op.matrix() * &sol - &rhs));
        let limit = T::lit(tol.solve) * (T::one() + max_norm(&rhs));
        if !(residual <= limit) {
            return Err(Error::Residual {
                what: "Nystrom solve S phi = F1".into(),
                residual: residual.as_f64(),
                limit: limit.as_f64(),
            });
        }
        let values = (0..n).map(|i| sol.view((i * k, 0), (k, m)).into_owned()).collect();
        let phi = SampledMatrixFunction::new(op.grid().clone(), values)?;
        Ok(Self {
            spec: spec.clone(),
            op,
            phi,
            residual,
        })
    }

    pub fn spec(&self) -> &KernelSpec<T> {
        &self.spec
    }

    pub fn operator(&self) -> &DiscretizedOperator<T> {
        &self.op
    }

    pub fn xi(&self) -> T {
        self.op.xi()
    }

    /// `Φ_ξ` at the nodes.
    pub fn phi(&self) -> &SampledMatrixFunction<T> {
        &self.phi
    }

    /// `max |S Φ - F1|` of the discrete solve.
    pub fn residual(&self) -> T {
        self.residual
    }

    /// `Φ_ξ(x)` by Nyström interpolation, `a <= x <= ξ`.
    pub fn phi_at(&self, x: T) -> Result<CMatrix<T>> {
        let grid = self.op.grid();
        let iv = grid.interval();
        let eps = coincidence_threshold(&iv);
        if x < iv.a() - eps || x > iv.b() + eps {
            return Err(Error::OutOfRange {
                x: x.as_f64(),
                lo: iv.a().as_f64(),
                hi: iv.b().as_f64(),
            });
        }
        let (idx, dist) = grid.nearest_node(x);
        if dist <= eps {
            return Ok(self.phi.values()[idx].clone());
        }
        let nodes = grid.nodes();
        let w = grid.weights();
        let mut rhs = self.spec.f1(x);
        let mut lhs = scalar_weight(&self.spec, x)?;
        match self.op.path() {
            NystromPath::Smooth => {
                for (j, v) in self.phi.values().iter().enumerate() {
                    rhs -= kernel_value(&self.spec, x, nodes[j])? * v * creal(w[j]);
                }
            }
            NystromPath::PrincipalValue => {
                let margin = eps;
                if x - iv.a() <= margin || iv.b() - x <= margin {
                    return Err(Error::EndpointSingularity {
                        x: x.as_f64(),
                        margin: margin.as_f64(),
                    });
                }
                let mut pv_sum = T::zero();
                for (j, v) in self.phi.values().iter().enumerate() {
                    rhs -= kernel_value(&self.spec, x, nodes[j])? * v * creal(w[j]);
                    pv_sum += w[j] / (x - nodes[j]);
                }
                let log = ((x - iv.a()) / (iv.b() - x)).ln();
                lhs += self.spec.numerator(x, x) * (i_over_two_pi::<T>() * creal(log - pv_sum));
            }
        }
        if self.op.path() == NystromPath::Smooth {
            // L(x) = I on this path
            return Ok(rhs);
        }
        lhs.lu().solve(&rhs).ok_or(Error::IllConditioned {
            condition: f64::INFINITY,
            limit: self.spec.tolerances().cond_limit,
        })
    }

    /// `F2 = Φ_ξ J` at the nodes.
    pub fn f2(&self) -> SampledMatrixFunction<T> {
        let j = self.spec.signature().matrix().clone();
        self.phi.map(|_, v| v * &j).expect("same grid")
    }

    pub fn f2_at(&self, x: T) -> Result<CMatrix<T>> {
        Ok(self.phi_at(x)? * self.spec.signature().matrix())
    }

    /// Central-difference derivative of the interpolated `F2`.
    pub fn f2_derivative_at(&self, x: T) -> Result<CMatrix<T>> {
        let iv = self.op.grid().interval();
        let h = T::lit(self.spec.tolerances().fd_step) * iv.length();
        let (lo, hi) = ((x - h).max(iv.a()), (x + h).min(iv.b()));
        Ok((self.f2_at(hi)? - self.f2_at(lo)?) * creal(T::one() / (hi - lo)))
    }
}

/// `Φ_ξ = S_ξ^{-1} F1` on an `n`-node grid over `[a, ξ]`.
pub fn solve_phi<T: Real>(spec: &KernelSpec<T>, xi: T, n: usize) -> Result<SampledMatrixFunction<T>> {
    Ok(Resolvent::solve(spec, xi, n)?.phi)
}

/// `F2 = Φ_b J` on an `n`-node grid over `[a, b]`.
pub fn compute_f2<T: Real>(spec: &KernelSpec<T>, n: usize) -> Result<SampledMatrixFunction<T>> {
    Ok(Resolvent::solve(spec, spec.interval().b(), n)?.f2())
}

/// Nyström matrix of `T = L - (i/2π) ∫ F2(x) J F2*(t) / (x - t) dt`, which
/// inverts `S_b`, on the grid of `res`. Smooth-diagonal class only.
pub fn inverse_operator_matrix<T: Real>(res: &Resolvent<T>) -> Result<CMatrix<T>> {
    if res.operator().path() != NystromPath::Smooth {
        return Err(Error::PvDiagonal {
            x: res.spec().interval().a().as_f64(),
        });
    }
    let grid = res.operator().grid();
    let nodes = grid.nodes();
    let w = grid.weights();
    let k = res.spec().k();
    let n = nodes.len();
    let jm = res.spec().signature().matrix();
    let f2 = res.f2();
    let c = i_over_two_pi::<T>();
    let mut t = identity::<T>(n * k);
    for i in 0..n {
        for j in 0..n {
            let block = if i == j {
                let d = res.f2_derivative_at(nodes[i])?;
                &f2.values()[i] * jm * d.adjoint() * (c * creal(w[i]))
            } else {
                &f2.values()[i] * jm * f2.values()[j].adjoint() * (-c * creal(w[j] / (nodes[i] - nodes[j])))
            };
            let mut view = t.view_mut((i * k, j * k), (k, k));
            view += block;
        }
    }
    Ok(t)
}
