use std::ops::Range;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("{what} index {index} out of range 0..{len}")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("range mismatch: expected {expected:?}, got {got:?}")]
    RangeMismatch {
        expected: Range<usize>,
        got: Range<usize>,
    },

    #[error("infeasible plan: {0}")]
    Infeasible(String),

    #[error("device {device}: allocating {requested} bytes exceeds budget ({allocated} of {budget} in use)")]
    BudgetExceeded {
        device: usize,
        requested: u64,
        allocated: u64,
        budget: u64,
    },

    #[error("plan does not match inputs: {0}")]
    PlanMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("halo depth {halo_depth} is shallower than {inner_iters} inner iterations")]
    HaloTooShallow { halo_depth: usize, inner_iters: usize },

    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("empty projection set")]
    EmptyProjections,

    #[error("format error: {0}")]
    Format(String),

    #[error("worker failure: {0}")]
    Worker(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
