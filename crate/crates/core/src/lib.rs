//! Rank-2 prolongations of second-order PDEs in two independent variables.
//!
//! The crate classifies PDE points, builds the fiber of integral 2-planes and
//! its topology, prolongs rank-4 distributions, computes derived flags and
//! symbol algebras, and constructs and verifies explicit singular solutions
//! of the wave, heat-type and Laplace model equations.

pub mod expr;
pub mod forms;
pub mod linalg;
pub mod system;
pub mod contact;
pub mod par;
pub mod prolong;
pub mod tanaka;
pub mod solutions;
