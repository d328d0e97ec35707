//! Complex dense linear algebra: Hermitian eigendecomposition, thin SVD and
//! polynomial rooting.

mod eig;
mod matrix;
mod roots;
mod svd;

pub use eig::{hermitian_eig, EigenDecomposition};
pub use matrix::{inner, norm2, ComplexMatrix};
pub use roots::{evaluate, polynomial_roots, RootSet};
pub use svd::{complex_svd, SvdResult};
