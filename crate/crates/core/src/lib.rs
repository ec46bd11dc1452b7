//! Payment channel network simulation toolkit.
//!
//! The crate models a payment channel network as a directed multigraph of
//! channels with per-direction fee policies and private balances, routes and
//! settles multihop payments over it, implements six strategies a joining
//! node can use to pick its channel peers, and runs the local (single join)
//! and global (network growth) experiments that compare those strategies.
//!
//! Module map:
//!
//! * [`graph`] and [`fee_graph`]: the network model, the fee function and the
//!   capacity-filtered fee graph.
//! * [`ingest`]: snapshot loading (describegraph-style JSON), balance
//!   assignment, largest connected component.
//! * [`routing`]: route selection and atomic payment settlement.
//! * [`strategies`]: the attachment strategies and weighted betweenness.
//! * [`metrics`]: Gini coefficient, diameter, central point dominance and
//!   payment batch statistics.
//! * [`simulator`]: synthetic graphs, seeded experiments and CSV output.
//! * [`bench`]: strategy wall-clock measurements.

pub mod bench;
pub mod fee_graph;
pub mod graph;
pub mod ingest;
pub mod metrics;
pub mod paths;
pub mod routing;
pub mod simulator;
pub mod strategies;

pub use fee_graph::{build_fee_graph, FeeGraph};
pub use graph::{
    fee, BalanceSplit, Channel, ChannelPolicy, ChannelRef, GraphError, Msat, NetworkGraph, NodeId,
    MSAT_PER_SAT,
};
