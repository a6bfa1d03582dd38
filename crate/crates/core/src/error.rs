use thiserror::Error;

use crate::{ItemId, NodeId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid gossip parameters: {0}")]
    InvalidParams(String),

    #[error("{name} = {value} is not a probability in [0, 1]")]
    InvalidProbability { name: &'static str, value: f64 },

    #[error("duplicate count k = {k} exceeds the exchange buffer size s = {s}")]
    DuplicatesOutOfRange { k: usize, s: usize },

    #[error("degenerate drop probability: p_select * p_inx = 1")]
    DegenerateDrop,

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("node {node} is out of range for a network of {node_count} nodes")]
    NodeOutOfRange { node: NodeId, node_count: usize },

    #[error("item {0} is already present in the network")]
    DuplicateItem(ItemId),

    #[error("exchange size {s} exceeds cache capacity {capacity}")]
    ExchangeTooLarge { s: usize, capacity: usize },

    #[error("no exchanges were observed")]
    NoObservations,

    #[error("P_inx is undefined: no initiator held a tracked item (p10 + p11 = 0)")]
    UndefinedInx,

    #[error("series length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("no successful {engine} runs: the observed item went extinct every time")]
    NoSuccessfulRuns { engine: &'static str },

    /// `line` is 0 for command-line overrides.
    #[error("{}", config_message(*line, message))]
    Config { line: usize, message: String },
}

fn config_message(line: usize, message: &str) -> String {
    if line == 0 {
        format!("config: {message}")
    } else {
        format!("config line {line}: {message}")
    }
}
