//! Matrix biorthogonal polynomials from moment data.
//!
//! A sesquilinear form on `p × p` matrix polynomials is given by its Gram
//! moments `G_{k,l}`. [`gaussborel::factorize`] performs the block
//! Gauss–Borel factorization `G = S1^{-1} H S2^{-T}` degree by degree and
//! yields the two monic biorthogonal families and their pivots `H_n`.
//! [`cdkernel`] builds the Christoffel–Darboux kernels and [`uvarov`] applies
//! additive perturbations supported on finitely many points through
//! quasi-determinant formulas, checked against refactorization.
//!
//! All arithmetic is generic over [`Scalar`]: exact [`Rational`] or `f64`.

pub mod cdkernel;
pub mod cli;
pub mod config;
pub mod error;
pub mod gaussborel;
pub mod linalg;
pub mod matpoly;
pub mod moments;
pub mod report;
pub mod scalar;
pub mod uvarov;

pub use error::{Error, Result};
pub use gaussborel::{factorize, Factorization, Tolerances};
pub use linalg::{Block, Matrix};
pub use matpoly::{MatKernel, MatPoly, Support};
pub use moments::{MomentSource, UvarovSpec};
pub use scalar::{Rational, Scalar};
