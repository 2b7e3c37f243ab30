use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::graph::NodeId;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("node {node} out of range (graph has {node_count} nodes)")]
    InvalidNode { node: NodeId, node_count: usize },
    #[error("self-loop on node {node}")]
    SelfLoop { node: NodeId },
    #[error("duplicate edge {u}-{v}")]
    DuplicateEdge { u: NodeId, v: NodeId },
    #[error("hop count must be at least 1")]
    ZeroHop,
    #[error("graph has no edges")]
    NoEdges,
    #[error("graph has a single color; rarefaction index undefined")]
    SingleColor,
    #[error("node id {id} does not fit the id space")]
    IdOverflow { id: u64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}: file contains no records")]
    EmptyFile(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Error)]
pub enum BpaError {
    #[error("minority probability r = {0} outside (0, 0.5)")]
    MinorityRatio(f64),
    #[error("cross-color acceptance rho = {0} outside (0, 1]")]
    Rho(f64),
    #[error("need at least 2 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("attachment rejection loop exceeded {limit} draws at step {step}")]
    RejectionLimit { step: usize, limit: u64 },
    #[error("cannot sample from a graph without edges")]
    EmptyGraph,
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Error)]
pub enum ReferralError {
    #[error("attribute vectors cover {got} nodes, graph has {expected}")]
    AttributeLength { expected: usize, got: usize },
    #[error("attribute {name}[{node}] = {value} outside [0, 1]")]
    AttributeRange {
        name: &'static str,
        node: usize,
        value: f64,
    },
    #[error("hop count {0} unsupported (simulation covers hops 1..=2)")]
    Hops(usize),
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
}

#[derive(Debug, Error)]
pub enum TheoryError {
    #[error("minority ratio r = {0} outside (0, 0.5]")]
    MinorityRatio(f64),
    #[error("cross-color acceptance rho = {0} outside (0, 1]")]
    Rho(f64),
    #[error("alpha = {0} outside [0, 1]")]
    Alpha(f64),
    #[error("tolerance must be positive, got {0}")]
    Tolerance(f64),
    #[error("no sign change of the fixed-point residual on [0, 0.5] (f(0) = {lo}, f(0.5) = {hi})")]
    Bracket { lo: f64, hi: f64 },
    #[error("bisection stalled at alpha = {alpha} with residual {residual:e} above tolerance")]
    Stalled { alpha: f64, residual: f64 },
    #[error("non-positive denominator {0} in beta coefficients")]
    Denominator(f64),
    #[error("invalid recursion parameters: {0}")]
    Recursion(String),
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Bpa(#[from] BpaError),
    #[error(transparent)]
    Referral(#[from] ReferralError),
    #[error(transparent)]
    Theory(#[from] TheoryError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
