//! Low-rank Lie and Strang splitting for matrix-valued differential Riccati
//! equations from periodic P1 Galerkin discretizations, with dense oracles
//! and a convergence-study harness.

pub mod error;
pub mod experiments;
pub mod fem;
pub mod flows;
pub mod linalg;
pub mod lowrank;
pub mod oracle;
pub mod parallel;

pub use error::{Error, Result};
pub use flows::{CoefficientProblem, Scheme, SchemeConfig, Trajectory};
pub use lowrank::LowRankFactor;
