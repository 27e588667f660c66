//! Exact reference tensors for simplicial Lagrange elements, a redundancy
//! finder over their blocks, and straight-line kernels generated from it.

pub mod assembly;
pub mod bench;
pub mod codegen;
pub mod error;
pub mod geometry;
pub mod mesh;
pub mod optimizer;
pub mod quadrature;
pub mod rational;
pub mod solver;
pub mod sparse;
pub mod tabulation;
pub mod trilinear;

pub use error::{Error, Result};
