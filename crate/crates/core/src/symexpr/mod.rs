//! Symbolic bound arithmetic over method parameters.
//!
//! Bounds are maxima of polynomials with exact coefficients. The [`Engine`]
//! adds the degree cap and implements the checked operations used by the
//! verifier: max-plus addition, substitution, closed-form summation and
//! maximization over loop iteration spaces, point counting, and the
//! three-valued entailment check.

mod constraint;
mod entail;
mod expr;
mod poly;
mod scalar;
mod sum;

use thiserror::Error;

pub use constraint::{IterSpace, LinConstraint, Rel};
pub use entail::{GridConfig, GridPoints, Proof, Verdict, Witness};
pub use expr::{dominates, SymExpr};
pub use poly::{Monomial, Poly, Var};
pub use scalar::Coeff;
pub use sum::{power_sum, sum_poly, Caveat, Extremum, Summation};

pub const DEFAULT_MAX_DEGREE: u32 = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymError {
    #[error("degree {degree} exceeds the configured maximum {max}")]
    DegreeOverflow { degree: u32, max: u32 },
    #[error("iteration space has no {side} bound for {index}")]
    UnboundedSpace { index: Var, side: &'static str },
    #[error("unsupported iteration space: {0}")]
    UnsupportedSpace(String),
    #[error("constraint is not linear: {0}")]
    NonLinear(String),
    #[error("grid has {points} points, over the cap of {cap}")]
    GridTooLarge { points: u64, cap: u64 },
}

/// Checked symbolic operations under a degree cap.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Engine {
    pub max_degree: u32,
}

impl Default for Engine {
    fn default() -> Self {
        Self {
            max_degree: DEFAULT_MAX_DEGREE,
        }
    }
}

impl Engine {
    pub fn with_max_degree(max_degree: u32) -> Self {
        Self { max_degree }
    }
}
