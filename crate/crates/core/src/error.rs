use thiserror::Error;

use crate::coupling::StepRecord;
use crate::mesh::Plane;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("boundary plane {0:?} has no boundary condition")]
    IncompleteBoundary(Plane),

    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("invalid material: {0}")]
    InvalidMaterial(String),

    #[error("{what} is not positive definite (smallest eigenvalue {eigenvalue:e})")]
    NotPositiveDefinite { what: &'static str, eigenvalue: f64 },

    #[error("flow direction undefined: stress deviator is zero")]
    DegenerateFlowDirection,

    #[error("time step must be positive, got {0}")]
    InvalidTimeStep(f64),

    #[error("{what}: expected length {expected}, found {found}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("assembled {0} matrix is not symmetric positive definite")]
    NotSpd(&'static str),

    #[error("{what} solve did not converge: {iterations} iterations, relative residual {residual:e}")]
    LinearSolver {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("mechanics system is singular: {free_modes} rigid-body mode(s) not restrained")]
    SingularMechanics { free_modes: usize },

    #[error("return mapping did not converge after {iterations} iterations (residual {residual:e}); trial stress {trial:?}")]
    ReturnMapDiverged {
        iterations: usize,
        residual: f64,
        trial: [f64; 6],
    },

    #[error("plastic strain iteration did not stagnate; max-norm change history {history:?}")]
    PlasticIteration { history: Vec<f64> },

    #[error("coupling iterations did not converge at step {step} (t = {time})")]
    NonConvergence {
        step: usize,
        time: f64,
        record: Box<StepRecord>,
    },

    #[error("contraction inequality violated at step {step}, iteration {iteration} (margin {margin:e})")]
    ContractionViolated {
        step: usize,
        iteration: usize,
        margin: f64,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
