//! Integrable operators built from a J-module, the Riemann–Hilbert problem they
//! solve, and the canonical differential system whose monodromy reproduces it.
//!
//! The pipeline:
//!
//! 1. [`jmodule`] turns a J-module `R(x)` into the defect `D(x) = J[R(x) - R(x)^{-1}]`
//!    and a factor `F1` with `F1* F1 = D`.
//! 2. [`intop`] discretizes `S_ξ f = L(x) f(x) + (i/2π) P.V.∫ F1(x) J F1*(t) / (x - t) f(t) dt`
//!    by Nyström's method and solves for `Φ = S_ξ^{-1} F1` and `F2 = S^{-1} F1 J`.
//! 3. [`rh`] assembles `F = F2* F1` and evaluates the Cauchy integral
//!    `W(z) = I + (1/2πi) ∫ F(x) / (x - z) dx` and its boundary values.
//! 4. [`canonical`] accumulates `B(ξ)`, differentiates to the Hamiltonian `H`,
//!    forms `M1 = iJB(b)` and integrates `dW/dx = iJH(x)W/(z - x)`.
//!
//! Everything numerical is generic over [`Real`]; the aliases below fix `f64`.

// `!(a < b)` is used on purpose so NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod canonical;
pub mod error;
pub mod examples;
pub mod intop;
pub mod jmodule;
pub mod linalg;
pub mod quadrature;
pub mod rh;
pub mod sampled;
pub mod scalar;
pub mod tolerance;

pub use error::{Error, Result};
pub use scalar::{cplx, creal, CMatrix, Real, C};
pub use tolerance::Tolerances;

pub type Complex64 = C<f64>;
pub type Matrix = CMatrix<f64>;
pub type Interval = quadrature::Interval<f64>;
pub type QuadratureGrid = quadrature::QuadratureGrid<f64>;
pub type SampledMatrixFunction = sampled::SampledMatrixFunction<f64>;
pub type SignatureMatrix = linalg::SignatureMatrix<f64>;
pub type JModuleField = jmodule::JModuleField<f64>;
pub type DefectFactor = jmodule::DefectFactor<f64>;
pub type KernelSpec = intop::KernelSpec<f64>;
pub type DiscretizedOperator = intop::DiscretizedOperator<f64>;
pub type RhSolution = rh::RhSolution<f64>;
pub type CanonicalData = canonical::CanonicalData<f64>;
pub type Example = examples::Example<f64>;
