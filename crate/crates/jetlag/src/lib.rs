//! Riemann-Lagrange geometry on the 1-jet space for autonomous vector fields.
//!
//! Given a first-order system `dx/dt = X(x)` on `R^n`, the least-squares
//! Lagrangian `L = sum_i (y^i - X^i(x))^2` on the 1-jet space induces a
//! canonical nonlinear connection `N = -(J - J^T)/2` (J the Jacobian of X),
//! whose derivatives are the surviving torsion d-tensors, whose negation is an
//! electromagnetic-like 2-form, and whose squared entries sum to a Yang-Mills
//! energy scalar. This crate computes all of these, generically for any
//! vector field (analytic or parsed from an expression language, with exact
//! Jacobians via dual numbers), with the three-species starfish/coral social
//! interaction model built in as the flagship field. It also integrates both
//! the first-order flow and the second-order Euler-Lagrange "geometric
//! dynamics" extension.

pub mod check;
pub mod config;
pub mod dynamics;
pub mod field;
pub mod geometry;
pub mod model;
pub mod output;
pub mod vfexpr;

pub use field::{FieldError, VectorField};
pub use model::{ModelParams, StarfishCoral, StateVector};
