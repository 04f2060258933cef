//! Calmness and Lipschitz moduli of the optimal-solution mapping of linear
//! programs under perturbations of the cost vector and right-hand side.
//!
//! Problems are `min ⟨c,x⟩ s.t. ⟨a_t,x⟩ ≤ b_t, t ∈ T` with a finite index set
//! `T`, either given directly or obtained by sampling a one-dimensional
//! semi-infinite family on a grid. The crate provides
//!
//! * a small dense simplex solver and active-set queries ([`simplex`], [`problem`]),
//! * subdifferentials of max-of-affine functions and dual-norm distances ([`geometry`]),
//! * regularity certificates at the nominal data ([`certify`]),
//! * lower/upper bounds and exact values of the calmness modulus ([`moduli`]),
//! * a brute-force perturbation oracle used to validate all of the above ([`empirical`]).

#![allow(clippy::needless_range_loop)]

pub mod certify;
pub mod empirical;
pub mod error;
pub mod fixtures;
pub mod geometry;
pub mod linalg;
pub mod moduli;
pub mod norm;
pub mod problem;
pub mod semiinf;
pub mod simplex;

pub use error::{CalmnessError, Result};
pub use geometry::{inverse_norm, min_dual_norm_point, Polytope, SupFunction};
pub use linalg::Matrix;
pub use norm::NormSpec;
pub use problem::{ActiveSet, IndexLabel, Origin, Problem, Row, Tolerances};
pub use semiinf::{InputFile, SemiInfSource};
pub use simplex::{solve_lp, LpSolution, LpStatus};
