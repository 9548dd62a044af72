use alloc::string::String;

use thiserror::Error;

use crate::model::{EventId, StateId};

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("unknown event id {0}")]
    UnknownEvent(EventId),
    #[error("timestep {t} out of range 0..={horizon}")]
    TimestepOutOfRange { t: usize, horizon: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("state {state} has no feasible event at step {t}")]
    NoFeasibleEvent { state: StateId, t: usize },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("solver budget exhausted after {nodes} nodes")]
    BudgetExhausted { nodes: u64 },
    #[error("observations are inconsistent with the model and boundary conditions, even after rolling back every commitment")]
    Inconsistent,
}
