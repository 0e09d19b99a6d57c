use thiserror::Error;

/// Errors produced by the flow scheduling toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed config: {0}")]
    Config(String),

    #[error("commodity list is empty")]
    NoCommodities,

    #[error("commodity {commodity} is degenerate: source equals destination")]
    DegenerateCommodity { commodity: usize },

    #[error("commodity {commodity} ({source_name} -> {dest_name}) is disconnected")]
    Disconnected {
        commodity: usize,
        source_name: String,
        dest_name: String,
    },

    #[error("edge {edge}: {reason}")]
    InvalidCostModel { edge: usize, reason: String },

    #[error("edge {edge} expected cost is non-monotone between loads {load} and {next}")]
    NonMonotone { edge: usize, load: u32, next: u32 },

    #[error("edge {edge} expected cost is non-convex at load {load}")]
    NonConvex { edge: usize, load: u32 },

    #[error("unknown edge id {0}")]
    UnknownEdge(usize),

    #[error("unknown vertex {0}")]
    UnknownVertex(String),

    #[error("unknown commodity id {0}")]
    UnknownCommodity(usize),

    #[error("load {load} outside 0..={max}")]
    LoadOutOfRange { load: i64, max: u32 },

    #[error("commodity {0} is not assigned a path")]
    Unassigned(usize),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("negative weight {weight} on edge {edge}")]
    NegativeWeight { edge: usize, weight: f64 },

    #[error("vertex {0} is unreachable from the source")]
    Unreachable(usize),

    #[error("enumeration of {size} flow distributions exceeds cap {cap}")]
    EnumerationCap { size: u128, cap: u64 },

    #[error("degenerate instance: {0}")]
    Degenerate(String),

    #[error("flow distribution is not a Nash equilibrium")]
    NotEquilibrium,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("checkpoint {checkpoint} beyond trace length {len}")]
    CheckpointOutOfRange { checkpoint: u64, len: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
