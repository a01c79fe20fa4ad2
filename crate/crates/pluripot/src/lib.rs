//! Numerical pluripotential theory on flat complex tori.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod algebra;
pub mod calculus;
pub mod comparison;
pub mod envelope;
pub mod error;
pub mod linsolve;
pub mod morse;
pub mod obstacles;
pub mod report;
pub mod scalar;
pub mod scenarios;
pub mod suite;
pub mod volume;

pub use error::{Error, Result};
pub use scalar::Real;

pub use algebra::matrix::HermitianMatrix;
pub use calculus::field::{HermitianForm11Field, ScalarField};
pub use calculus::forms::FormField;
pub use scenarios::Scenario;

pub type Matrix64 = HermitianMatrix<f64>;
pub type Matrix32 = HermitianMatrix<f32>;
pub type Potential64 = ScalarField<f64>;
pub type Potential32 = ScalarField<f32>;
pub type Form11Field64 = HermitianForm11Field<f64>;
pub type Form11Field32 = HermitianForm11Field<f32>;
pub type Forms64 = FormField<f64>;
pub type Forms32 = FormField<f32>;
pub type Scenario64 = Scenario<f64>;
pub type Scenario32 = Scenario<f32>;
