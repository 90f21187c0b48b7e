//! Symmetric periodic solutions of the equal-mass planar `2n`-body problem.

pub mod action;
pub mod eom;
pub mod fourier;
pub mod integrate;
pub mod solver;
pub mod trajectory;

use thiserror::Error;

pub use action::{ActionEvaluator, ActionValue};
pub use eom::{eom_residual, eom_residual_loop};
pub use fourier::{admissible_modes, FourierLoop};
pub use integrate::{energy, integrate, IntegrationResult, State};
pub use solver::{solve, ProblemSpec, SolveOutput, SolveReport, SolverConfig};
pub use trajectory::Trajectory;

#[derive(Debug, Error)]
pub enum NbodyError {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(
        "near collision at t = {time} (node {node}): bodies {bodies:?} at distance {distance:.3e}"
    )]
    NearCollision {
        time: f64,
        node: usize,
        bodies: (usize, usize),
        distance: f64,
    },
    #[error("close encounter at t = {time}: bodies {bodies:?} at distance {distance:.3e}")]
    CloseEncounter {
        time: f64,
        bodies: (usize, usize),
        distance: f64,
    },
    #[error("collision barrier hit persistently ({0}); try a larger mode count or another seed")]
    Barrier(String),
    #[error("trajectory: {0}")]
    Trajectory(String),
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
