//! Attachment strategies: given the public graph, a joining node, a channel
//! count `k` and a per-channel capacity, pick the `k` peers to open
//! channels with.
//!
//! Every strategy is deterministic for a fixed request. Wherever a score
//! ties, the lexicographically smaller node id wins.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::graph::{GraphError, Msat, NetworkGraph, NodeId, MSAT_PER_SAT};

pub mod betweenness;
mod degree;
mod k_center;
mod k_median;
mod mbi;
mod random;

pub use betweenness::{betweenness, betweenness_strategy, shortest_path_counts, ShortestPathCounts};
pub use degree::highest_degree_strategy;
pub use k_center::k_center_strategy;
pub use k_median::k_median_strategy;
pub use mbi::mbi_strategy;
pub use random::random_strategy;

/// 100 sat, the micro-payment size used for fee graphs inside strategies.
pub const DEFAULT_AMOUNT_HINT_MSAT: Msat = 100 * MSAT_PER_SAT;
/// 1,000,000 sat per channel unless configured otherwise.
pub const DEFAULT_CAP_MSAT: Msat = 1_000_000 * MSAT_PER_SAT;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StrategyError {
    #[error("k must be at least 1")]
    ZeroK,
    #[error("k = {k} exceeds the {limit} nodes available as peers")]
    KTooLarge { k: usize, limit: usize },
    #[error("channel capacity {0} msat must be positive and even")]
    InvalidCapacity(Msat),
    #[error("amount hint must be positive")]
    ZeroAmount,
    #[error("unknown strategy `{0}` (expected random, degree, betweenness, k-center, k-median or mbi)")]
    UnknownStrategy(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyKind {
    Random,
    HighestDegree,
    Betweenness,
    KCenter,
    KMedian,
    Mbi,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 6] = [
        StrategyKind::Random,
        StrategyKind::HighestDegree,
        StrategyKind::Betweenness,
        StrategyKind::KCenter,
        StrategyKind::KMedian,
        StrategyKind::Mbi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Random => "random",
            StrategyKind::HighestDegree => "degree",
            StrategyKind::Betweenness => "betweenness",
            StrategyKind::KCenter => "k-center",
            StrategyKind::KMedian => "k-median",
            StrategyKind::Mbi => "mbi",
        }
    }

    /// Whether the result ignores the seed. Such strategies are also greedy,
    /// so the answer for `k` is the prefix of the answer for any larger `k`.
    pub fn is_deterministic(self) -> bool {
        self != StrategyKind::Random
    }

    pub fn select(self, req: &AttachmentRequest<'_>) -> Result<CandidateSet, StrategyError> {
        match self {
            StrategyKind::Random => random_strategy(req),
            StrategyKind::HighestDegree => highest_degree_strategy(req),
            StrategyKind::Betweenness => betweenness_strategy(req),
            StrategyKind::KCenter => k_center_strategy(req),
            StrategyKind::KMedian => k_median_strategy(req),
            StrategyKind::Mbi => mbi_strategy(req),
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| StrategyError::UnknownStrategy(s.to_string()))
    }
}

/// Input of a strategy. The joining node may or may not already be part of
/// `graph`.
#[derive(Clone, Debug)]
pub struct AttachmentRequest<'a> {
    pub graph: &'a NetworkGraph,
    pub joining: NodeId,
    pub k: usize,
    pub cap_msat: Msat,
    /// Transaction amount used to build fee graphs.
    pub amount_hint_msat: Msat,
    pub rng_seed: u64,
}

impl<'a> AttachmentRequest<'a> {
    pub fn new(graph: &'a NetworkGraph, joining: impl Into<NodeId>, k: usize) -> Self {
        AttachmentRequest {
            graph,
            joining: joining.into(),
            k,
            cap_msat: DEFAULT_CAP_MSAT,
            amount_hint_msat: DEFAULT_AMOUNT_HINT_MSAT,
            rng_seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn with_cap(mut self, cap_msat: Msat) -> Self {
        self.cap_msat = cap_msat;
        self
    }

    pub fn with_amount_hint(mut self, amount_msat: Msat) -> Self {
        self.amount_hint_msat = amount_msat;
        self
    }

    /// Index of the joining node when it is already in the graph.
    pub fn joining_index(&self) -> Option<usize> {
        self.graph.node_index(&self.joining)
    }

    /// Validates the request and returns the eligible peers (every node but
    /// the joiner) in index order.
    pub fn candidate_pool(&self) -> Result<Vec<usize>, StrategyError> {
        if self.k == 0 {
            return Err(StrategyError::ZeroK);
        }
        if self.cap_msat == 0 || self.cap_msat % 2 != 0 {
            return Err(StrategyError::InvalidCapacity(self.cap_msat));
        }
        if self.amount_hint_msat == 0 {
            return Err(StrategyError::ZeroAmount);
        }
        let joiner = self.joining_index();
        let pool: Vec<usize> = (0..self.graph.node_count())
            .filter(|&v| Some(v) != joiner)
            .collect();
        if self.k > pool.len() {
            return Err(StrategyError::KTooLarge {
                k: self.k,
                limit: pool.len(),
            });
        }
        Ok(pool)
    }
}

/// Selected peers in selection order, with the objective value a strategy
/// tracked after each pick (if any).
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateSet {
    pub peers: Vec<NodeId>,
    pub per_step_objective: Option<Vec<f64>>,
}

impl CandidateSet {
    /// The first `k` picks.
    pub fn prefix(&self, k: usize) -> CandidateSet {
        CandidateSet {
            peers: self.peers[..k.min(self.peers.len())].to_vec(),
            per_step_objective: self
                .per_step_objective
                .as_ref()
                .map(|o| o[..k.min(o.len())].to_vec()),
        }
    }
}

/// Top `k` of `pool` by descending score, ties to the smaller id.
pub(crate) fn top_k_by_score(
    g: &NetworkGraph,
    pool: &[usize],
    score: &[f64],
    k: usize,
) -> CandidateSet {
    let mut order = pool.to_vec();
    order.sort_by(|&x, &y| {
        score[y]
            .total_cmp(&score[x])
            .then_with(|| g.node_id(x).cmp(g.node_id(y)))
    });
    order.truncate(k);
    CandidateSet {
        per_step_objective: Some(order.iter().map(|&v| score[v]).collect()),
        peers: order.into_iter().map(|v| g.node_id(v).clone()).collect(),
    }
}

/// Highest fee-graph out-degree in `pool`, ties to the smaller id.
pub(crate) fn highest_degree_node(g: &NetworkGraph, degrees: &[usize], pool: &[usize]) -> usize {
    *pool
        .iter()
        .min_by(|&&x, &&y| {
            degrees[y]
                .cmp(&degrees[x])
                .then_with(|| g.node_id(x).cmp(g.node_id(y)))
        })
        .expect("pool is non-empty")
}
