//! Uniform-linear-array signal model, the complex linear algebra it needs,
//! and the classical covariance-based direction-of-arrival estimators
//! (grid MUSIC, Root-MUSIC and the mixed-norm l2,1-SVD).

pub mod array;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod scalar;

pub use error::{DoaError, Result};
pub use scalar::Real;

/// Double-precision complex scalar used throughout the workbench.
pub type C64 = num_complex::Complex<f64>;
/// Double-precision complex matrix.
pub type CMatrix = linalg::ComplexMatrix<f64>;
