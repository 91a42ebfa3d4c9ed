//! Exact symbolic engine for truncated vertex operator algebras.
//!
//! The crate builds vertex operator algebras and their modules as mode tables
//! restricted to a weight window, checks the Borcherds identity and the
//! intertwining-operator axioms with exact rational arithmetic, computes Zhu
//! algebras and `C_m` quotients, verifies an explicit module-extension
//! construction, and carries a small representation-theory toolkit for
//! finite-dimensional algebras.
//!
//! Linear algebra and the finite-dimensional algebra layer are generic over
//! [`Scalar`]; everything built on vertex-algebra data uses [`Q`].

pub mod cofinite;
pub mod error;
pub mod extension;
pub mod findim;
pub mod graded;
pub mod intertwiner;
pub mod io;
pub mod linalg;
pub mod models;
pub mod modes;
pub mod module;
pub mod pbw;
pub mod report;
pub mod scalar;
pub mod zhu;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// The exact rational scalar used for all vertex-algebra data.
pub type Q = num_rational::BigRational;

/// Sparse vector over [`Q`].
pub type QVec = linalg::SparseVec<Q>;
/// Sparse matrix over [`Q`].
pub type QMatrix = linalg::SparseMatrix<Q>;
