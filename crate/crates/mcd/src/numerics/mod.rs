//! Numerical verification and parameter recovery for explicit rational maps:
//! polynomial root finding, projective evaluation, critical portraits,
//! parameter solving by Newton iteration, and basin rendering.

pub mod families;
pub mod maps;
pub mod poly;
pub mod render;
pub mod solve;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("iteration did not converge: {0}")]
    NonConvergence(String),
    #[error("ambiguous tolerance match: {0}")]
    ToleranceCollision(String),
    #[error("inconsistent result: {0}")]
    Inconsistent(String),
    #[error("bad input: {0}")]
    BadInput(String),
}
