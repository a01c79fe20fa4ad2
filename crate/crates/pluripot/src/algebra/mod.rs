//! Pointwise multilinear algebra of Hermitian forms in `C^n`, `n <= 3`.

pub mod directions;
pub mod matrix;
pub mod mixed;
pub mod point_form;

pub use directions::DirectionSet;
pub use matrix::HermitianMatrix;
pub use mixed::{
    default_positivity_tol, is_positive_11, mixed_discriminant, popovici_pointwise,
    relative_trace, wedge_top_density,
};
pub use point_form::{is_weakly_positive_22, PointForm};
