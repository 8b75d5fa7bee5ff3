//! Nonlocal p-Lévy complement-value problems on 1D meshes.
//!
//! The crate discretizes the energy forms of a symmetric p-Lévy kernel `nu`,
//! solves the Dirichlet, Neumann and Robin complement-value problems by convex
//! minimization, and reproduces the nonlocal to local limits numerically.

pub mod cli;
pub mod error;
pub mod experiments;
pub mod forms;
pub mod kernels;
pub mod mesh;
pub mod operators;
pub mod quadrature;
pub mod solvers;
pub mod special;

pub use error::{Error, Result};
