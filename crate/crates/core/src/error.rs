use thiserror::Error;

/// Errors raised by the allocator and the split rules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AllocError {
    #[error("no UEs to allocate")]
    Empty,
    #[error("invalid input `{field}`: {value}")]
    InvalidInput { field: &'static str, value: f64 },
    #[error("UE {ue_id} has neither macro capacity nor small-cell rate")]
    Infeasible { ue_id: u64 },
    #[error("no UE has macro capacity; the resource constraint cannot be met")]
    NoMacroCapacity,
    #[error("both legs have zero rate")]
    BothLegsZero,
    #[error("reference solver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
}

/// Errors raised while building a drop or running a simulation.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("UE {ue_id} has no coverage on either RAT")]
    Infeasible { ue_id: usize },
    #[error("event limit of {limit} reached at t = {time_s:.3} s")]
    EventLimit { limit: u64, time_s: f64 },
    #[error(transparent)]
    Alloc(#[from] AllocError),
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;
