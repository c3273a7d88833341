//! Numerical engine for a family of twisted noncommutative function algebras.
//!
//! Elements live on a truncated component tensor indexed by a winding index
//! `p`, a Fourier index `n`, and a uniform grid over the unit interval. The
//! crate provides the deformed product, involution and trace, three canonical
//! derivations, the isometry group action, a graded differential calculus,
//! curvature functionals for hermitian connections, a GNS-representation
//! oracle for independent validation of the product, and a gradient-based
//! minimizer for the curvature action.

pub mod config;
pub mod connection;
pub mod element;
pub mod error;
pub mod forms;
pub mod grid;
pub mod io;
pub mod matrix;
pub mod opt;
pub mod params;
pub mod random;
pub mod rep;
pub mod star;
pub mod suites;
pub mod symmetry;

pub use element::{AlgebraElement, ZakOutcome, ZakProfile};
pub use error::QhmError;
pub use params::{AlgebraParams, Truncation};
