//! Error type shared by every module in the crate.

use crate::topology::NodeId;

pub type Result<T> = std::result::Result<T, RcwError>;

#[derive(Debug, thiserror::Error)]
pub enum RcwError {
    /// A network failed structural validation (asymmetric adjacency,
    /// self-loop, duplicate edge, disconnected, non-positive weight, ...).
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    /// Ring sizes and per-ring degrees cannot coexist: the edge-count
    /// identity n_k * delta_k = n_{k+1} * gamma_{k+1} fails, or the requested
    /// degrees would force duplicate edges.
    #[error("inconsistent ring degrees between rings {ring} and {}: {detail}", ring + 1)]
    InconsistentDegrees { ring: usize, detail: String },

    /// A geometric deployment left a node without the neighbors a walk needs.
    #[error("node {node} in ring {ring} has no {} neighbors", if *outward { "outward" } else { "inward" })]
    DisconnectedRing {
        node: NodeId,
        ring: usize,
        outward: bool,
    },

    /// A distribution failed validation (normalization, sign, or length).
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// The simulation engine did not reach quiescence within the round limit.
    #[error("simulation still had messages in flight after {limit} rounds")]
    RoundLimitExceeded { limit: u64 },

    /// An operation that must exclude the source was given a single-node
    /// network, leaving nothing to select.
    #[error("network has a single node; nothing to select besides the source")]
    DegenerateNetwork,

    /// The cumulative selection mass reached 1 before the last ring while the
    /// current ring still asks for positive mass.
    #[error("selection mass exhausted before ring {ring} (p_{ring} > 0 but no visit mass remains)")]
    MassExhausted { ring: usize },

    /// `hop_probability` was asked about a pair that is not an outward grid
    /// edge.
    #[error("({},{}) -> ({},{}) is not an outward grid hop", from.0, from.1, to.0, to.1)]
    NotOutwardNeighbor { from: (i32, i32), to: (i32, i32) },

    /// The requested distribution needs a stay probability above 1 at some
    /// ring: the visit probability there is smaller than the selection
    /// probability.
    #[error("infeasible stay probability {stay} at ring {ring} (visit probability fell below p_k)")]
    InfeasibleStay { ring: usize, stay: f64 },

    /// A rings sampler was given a network where some ring has nodes with
    /// differing neighbor counts.
    #[error("ring {ring} violates uniform connectivity at distance {distance}")]
    NotUniformlyConnected { ring: usize, distance: usize },

    /// Attachment-point assignment failed: the listed nodes exhausted their
    /// candidate neighbors with points still unconnected.
    #[error("attachment point assignment failed at {} node(s), first: {:?}", failed.len(), failed.first())]
    AapFailure { failed: Vec<NodeId> },

    /// The hop graph handed to the exact-law propagation contains a cycle.
    #[error("hop graph contains a cycle; walks must strictly move away from the source")]
    CyclicHopGraph,

    /// A network, distribution, policy, or config file could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl RcwError {
    /// Stable process exit code for the CLI: every variant gets its own
    /// nonzero code so scripted callers can tell failures apart.
    pub fn exit_code(&self) -> u8 {
        match self {
            RcwError::InvalidNetwork(_) => 10,
            RcwError::InconsistentDegrees { .. } => 11,
            RcwError::DisconnectedRing { .. } => 12,
            RcwError::InvalidDistribution(_) => 13,
            RcwError::RoundLimitExceeded { .. } => 14,
            RcwError::DegenerateNetwork => 15,
            RcwError::MassExhausted { .. } => 16,
            RcwError::NotOutwardNeighbor { .. } => 17,
            RcwError::InfeasibleStay { .. } => 18,
            RcwError::NotUniformlyConnected { .. } => 19,
            RcwError::AapFailure { .. } => 20,
            RcwError::CyclicHopGraph => 21,
            RcwError::Parse(_) => 22,
            RcwError::Io(_) => 23,
        }
    }
}
