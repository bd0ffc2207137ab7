//! Seeded randomness and the small dense linear algebra used by the
//! generator and the learners.

mod matrix;
mod rng;

pub use matrix::{gram, sym_eigen, sym_eigenvalues, Matrix};
pub use rng::{standard_normals, Rng};
