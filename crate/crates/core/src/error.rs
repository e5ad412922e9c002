use thiserror::Error;

use crate::diagram::{Defect, NodeId};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch at leg pair {index}: {left} vs {right}")]
    DimensionMismatch {
        index: usize,
        left: usize,
        right: usize,
    },

    #[error("leg signature mismatch: expected {expected}, found {found}")]
    SignatureMismatch { expected: String, found: String },

    #[error("amplitude count {found} does not match leg dimensions (expected {expected})")]
    AmplitudeCount { expected: usize, found: usize },

    #[error("legs must list outputs before inputs")]
    LegOrder,

    #[error("leg dimension must be at least 1")]
    ZeroDimension,

    #[error("dangling leg {leg} of node {node}")]
    DanglingLeg { node: usize, leg: usize },

    #[error("leg {leg} of node {node} used more than once")]
    DoubleUsedLeg { node: usize, leg: usize },

    #[error("leg {leg} of node {node} does not exist")]
    LegOutOfRange { node: usize, leg: usize },

    #[error("invalid dot arity {inputs}->{outputs}")]
    InvalidArity { inputs: usize, outputs: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("color is not unitary (deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("reference tensor is zero")]
    ZeroTensor,

    #[error("invalid diagram: {}", format_defects(.0))]
    InvalidDiagram(Vec<Defect>),

    #[error("boundary mismatch: {0}")]
    BoundaryMismatch(String),

    #[error("match for rule `{rule}` is stale")]
    StaleMatch { rule: String },

    #[error("unknown rule `{0}`")]
    UnknownRule(String),

    #[error("node {0} is not a cap")]
    NotACap(NodeId),

    #[error("network too large to evaluate: {nodes} nodes, boundary dimension {boundary_dim}")]
    TooLarge { nodes: usize, boundary_dim: usize },

    #[error("Kraus set is not complete (residual {residual:e})")]
    Incomplete { residual: f64 },

    #[error("Kraus set is empty")]
    EmptySet,

    #[error("invalid density operator: {0}")]
    InvalidDensity(String),

    #[error("expected a two-leg state of equal dimensions")]
    NonSquare,

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("certification failed: {0}")]
    Certification(String),

    #[error("document error: {0}")]
    Document(String),
}

fn format_defects(defects: &[Defect]) -> String {
    defects
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
