//! Directed multigraph model of a payment channel network.
//!
//! Every channel is stored once and carries both directions: the policy and
//! balance share of each endpoint. Nodes are addressed by [`NodeId`] at the
//! API boundary and by dense indices internally.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Amounts are integer millisatoshi throughout.
pub type Msat = u64;

pub const MSAT_PER_SAT: Msat = 1_000;

/// Default base fee: 1 satoshi.
pub const DEFAULT_BASE_FEE_MSAT: Msat = 1_000;
/// Default proportional fee: 1e-6 per unit forwarded.
pub const DEFAULT_PROP_FEE_MILLIONTHS: u64 = 1;
pub const DEFAULT_CLTV_DELTA: u32 = 40;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("node id must not be empty")]
    EmptyNodeId,
    #[error("unknown node: {0}")]
    UnknownNode(String),
    #[error("duplicate node: {0}")]
    DuplicateNode(String),
    #[error("channel endpoints must differ (got {0} twice)")]
    SelfLoop(String),
    #[error("channel capacity must be positive")]
    ZeroCapacity,
    #[error("balances {balance_a_msat} + {balance_b_msat} do not sum to capacity {capacity_msat}")]
    BalanceMismatch {
        capacity_msat: Msat,
        balance_a_msat: Msat,
        balance_b_msat: Msat,
    },
    #[error("capacity {0} msat cannot be split equally")]
    UnevenSplit(Msat),
    #[error("unknown channel reference {0}")]
    UnknownChannel(usize),
    #[error("graph is inconsistent: {0}")]
    Inconsistent(String),
}

/// Opaque node identifier (hex public key for snapshot nodes).
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(Arc<str>);

impl NodeId {
    pub fn new(id: impl AsRef<str>) -> Self {
        NodeId(Arc::from(id.as_ref()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId::new(s)
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(Arc::from(s))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NodeId({})", &self.0)
    }
}

impl Serialize for NodeId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for NodeId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer).map(NodeId::from)
    }
}

/// Forwarding policy one endpoint advertises for its direction of a channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChannelPolicy {
    pub base_fee_msat: Msat,
    /// Proportional fee in millionths of the forwarded amount.
    pub prop_fee_millionths: u64,
    pub cltv_delta: u32,
    pub enabled: bool,
}

impl Default for ChannelPolicy {
    fn default() -> Self {
        ChannelPolicy {
            base_fee_msat: DEFAULT_BASE_FEE_MSAT,
            prop_fee_millionths: DEFAULT_PROP_FEE_MILLIONTHS,
            cltv_delta: DEFAULT_CLTV_DELTA,
            enabled: true,
        }
    }
}

impl ChannelPolicy {
    pub fn new(base_fee_msat: Msat, prop_fee_millionths: u64) -> Self {
        ChannelPolicy {
            base_fee_msat,
            prop_fee_millionths,
            ..ChannelPolicy::default()
        }
    }

    /// Zero-fee disabled policy standing in for a direction nobody announced.
    pub fn disabled() -> Self {
        ChannelPolicy {
            base_fee_msat: 0,
            prop_fee_millionths: 0,
            cltv_delta: 0,
            enabled: false,
        }
    }

    pub fn fee(&self, amount_msat: Msat) -> Msat {
        fee(self, amount_msat)
    }
}

/// Fee a node charges for forwarding `amount_msat` under `policy`:
/// base fee plus the floored proportional part.
pub fn fee(policy: &ChannelPolicy, amount_msat: Msat) -> Msat {
    let proportional = (policy.prop_fee_millionths as u128 * amount_msat as u128) / 1_000_000;
    policy
        .base_fee_msat
        .saturating_add(u64::try_from(proportional).unwrap_or(u64::MAX))
}

/// How a new channel's capacity is divided between its endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BalanceSplit {
    Equal,
    Explicit { balance_a_msat: Msat, balance_b_msat: Msat },
}

/// Index of a channel inside a [`NetworkGraph`]. Removing a channel may move
/// the last channel into the freed slot, which invalidates its old reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChannelRef(pub usize);

/// A bidirectional channel between two nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Channel {
    pub channel_id: String,
    node_a: usize,
    node_b: usize,
    capacity_msat: Msat,
    balance_a_msat: Msat,
    balance_b_msat: Msat,
    /// Governs forwarding a -> b.
    pub policy_a: ChannelPolicy,
    /// Governs forwarding b -> a.
    pub policy_b: ChannelPolicy,
}

impl Channel {
    pub fn node_a(&self) -> usize {
        self.node_a
    }

    pub fn node_b(&self) -> usize {
        self.node_b
    }

    pub fn capacity_msat(&self) -> Msat {
        self.capacity_msat
    }

    pub fn balance_a_msat(&self) -> Msat {
        self.balance_a_msat
    }

    pub fn balance_b_msat(&self) -> Msat {
        self.balance_b_msat
    }

    /// The endpoint opposite to `node`. `node` must be an endpoint.
    pub fn other(&self, node: usize) -> usize {
        if node == self.node_a {
            self.node_b
        } else {
            self.node_a
        }
    }

    pub fn is_endpoint(&self, node: usize) -> bool {
        node == self.node_a || node == self.node_b
    }

    /// Policy that applies when `from` forwards over this channel.
    pub fn policy_from(&self, from: usize) -> &ChannelPolicy {
        if from == self.node_a {
            &self.policy_a
        } else {
            &self.policy_b
        }
    }

    /// Balance share held by `node`.
    pub fn balance_of(&self, node: usize) -> Msat {
        if node == self.node_a {
            self.balance_a_msat
        } else {
            self.balance_b_msat
        }
    }

    /// Whether `from` may forward `amount_msat` over this channel judging by
    /// public information only (enabled policy, capacity).
    pub fn forwards(&self, from: usize, amount_msat: Msat) -> bool {
        self.policy_from(from).enabled && self.capacity_msat >= amount_msat
    }

    pub fn any_direction_enabled(&self) -> bool {
        self.policy_a.enabled || self.policy_b.enabled
    }

    /// Moves `amount_msat` from `from`'s share to the other side.
    fn shift(&mut self, from: usize, amount_msat: Msat) {
        if from == self.node_a {
            self.balance_a_msat -= amount_msat;
            self.balance_b_msat += amount_msat;
        } else {
            self.balance_b_msat -= amount_msat;
            self.balance_a_msat += amount_msat;
        }
    }
}

/// Directed multigraph of nodes and channels.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NetworkGraph {
    nodes: Vec<NodeId>,
    index: HashMap<NodeId, usize>,
    channels: Vec<Channel>,
    adjacency: Vec<Vec<ChannelRef>>,
}

impl NetworkGraph {
    pub fn new() -> Self {
        NetworkGraph::default()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn node_id(&self, idx: usize) -> &NodeId {
        &self.nodes[idx]
    }

    pub fn node_index(&self, id: &NodeId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn contains(&self, id: &NodeId) -> bool {
        self.index.contains_key(id)
    }

    pub fn require_node(&self, id: &NodeId) -> Result<usize, GraphError> {
        self.node_index(id)
            .ok_or_else(|| GraphError::UnknownNode(id.to_string()))
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn channel(&self, c: ChannelRef) -> &Channel {
        &self.channels[c.0]
    }

    /// Channels incident to the node at `idx`, in insertion order.
    pub fn incident(&self, idx: usize) -> &[ChannelRef] {
        &self.adjacency[idx]
    }

    pub fn add_node(&mut self, id: NodeId) -> Result<usize, GraphError> {
        if id.as_str().is_empty() {
            return Err(GraphError::EmptyNodeId);
        }
        if self.index.contains_key(&id) {
            return Err(GraphError::DuplicateNode(id.to_string()));
        }
        let idx = self.nodes.len();
        self.index.insert(id.clone(), idx);
        self.nodes.push(id);
        self.adjacency.push(Vec::new());
        Ok(idx)
    }

    /// Index of `id`, inserting it when absent.
    pub fn ensure_node(&mut self, id: &NodeId) -> Result<usize, GraphError> {
        match self.node_index(id) {
            Some(idx) => Ok(idx),
            None => self.add_node(id.clone()),
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn add_channel(
        &mut self,
        channel_id: impl Into<String>,
        a: &NodeId,
        b: &NodeId,
        capacity_msat: Msat,
        split: BalanceSplit,
        policy_a: ChannelPolicy,
        policy_b: ChannelPolicy,
    ) -> Result<ChannelRef, GraphError> {
        let ia = self.require_node(a)?;
        let ib = self.require_node(b)?;
        self.add_channel_idx(channel_id, ia, ib, capacity_msat, split, policy_a, policy_b)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn add_channel_idx(
        &mut self,
        channel_id: impl Into<String>,
        a: usize,
        b: usize,
        capacity_msat: Msat,
        split: BalanceSplit,
        policy_a: ChannelPolicy,
        policy_b: ChannelPolicy,
    ) -> Result<ChannelRef, GraphError> {
        if a >= self.nodes.len() {
            return Err(GraphError::UnknownNode(format!("#{a}")));
        }
        if b >= self.nodes.len() {
            return Err(GraphError::UnknownNode(format!("#{b}")));
        }
        if a == b {
            return Err(GraphError::SelfLoop(self.nodes[a].to_string()));
        }
        if capacity_msat == 0 {
            return Err(GraphError::ZeroCapacity);
        }
        let (balance_a_msat, balance_b_msat) = match split {
            BalanceSplit::Equal => {
                if capacity_msat % 2 != 0 {
                    return Err(GraphError::UnevenSplit(capacity_msat));
                }
                (capacity_msat / 2, capacity_msat / 2)
            }
            BalanceSplit::Explicit {
                balance_a_msat,
                balance_b_msat,
            } => {
                if balance_a_msat.checked_add(balance_b_msat) != Some(capacity_msat) {
                    return Err(GraphError::BalanceMismatch {
                        capacity_msat,
                        balance_a_msat,
                        balance_b_msat,
                    });
                }
                (balance_a_msat, balance_b_msat)
            }
        };
        let c = ChannelRef(self.channels.len());
        self.channels.push(Channel {
            channel_id: channel_id.into(),
            node_a: a,
            node_b: b,
            capacity_msat,
            balance_a_msat,
            balance_b_msat,
            policy_a,
            policy_b,
        });
        self.adjacency[a].push(c);
        self.adjacency[b].push(c);
        Ok(c)
    }

    /// Removes a channel. Removing the most recently added channel restores
    /// the graph to exactly its state before that addition.
    pub fn remove_channel(&mut self, c: ChannelRef) -> Result<Channel, GraphError> {
        if c.0 >= self.channels.len() {
            return Err(GraphError::UnknownChannel(c.0));
        }
        let last = ChannelRef(self.channels.len() - 1);
        let (a, b) = (self.channels[c.0].node_a, self.channels[c.0].node_b);
        for node in [a, b] {
            let list = &mut self.adjacency[node];
            if let Some(pos) = list.iter().position(|&x| x == c) {
                list.remove(pos);
            }
        }
        let removed = self.channels.swap_remove(c.0);
        if c != last {
            let (ma, mb) = (self.channels[c.0].node_a, self.channels[c.0].node_b);
            for node in [ma, mb] {
                for r in self.adjacency[node].iter_mut() {
                    if *r == last {
                        *r = c;
                    }
                }
            }
        }
        Ok(removed)
    }

    /// Transfers `amount_msat` over channel `c` away from `from`.
    /// Callers must have checked that `from` holds enough.
    pub(crate) fn shift_balance(&mut self, c: ChannelRef, from: usize, amount_msat: Msat) {
        self.channels[c.0].shift(from, amount_msat);
    }

    /// Distinct channel peers of a node, sorted by index.
    pub fn peers(&self, idx: usize) -> Vec<usize> {
        let mut peers: Vec<usize> = self.adjacency[idx]
            .iter()
            .map(|&c| self.channels[c.0].other(idx))
            .collect();
        peers.sort_unstable();
        peers.dedup();
        peers
    }

    pub fn has_channel_between(&self, a: usize, b: usize) -> bool {
        self.adjacency[a]
            .iter()
            .any(|&c| self.channels[c.0].other(a) == b)
    }

    /// Sum of a node's balance shares over all its channels.
    pub fn node_wealth(&self, idx: usize) -> Msat {
        self.adjacency[idx]
            .iter()
            .map(|&c| self.channels[c.0].balance_of(idx))
            .sum()
    }

    pub fn total_wealth(&self) -> u128 {
        (0..self.nodes.len())
            .map(|i| self.node_wealth(i) as u128)
            .sum()
    }

    pub fn total_capacity(&self) -> u128 {
        self.channels.iter().map(|c| c.capacity_msat as u128).sum()
    }

    /// Undirected neighbor lists over channels with at least one enabled
    /// direction; sorted and deduplicated.
    pub fn undirected_projection(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for ch in self.channels.iter().filter(|c| c.any_direction_enabled()) {
            adj[ch.node_a].push(ch.node_b);
            adj[ch.node_b].push(ch.node_a);
        }
        for list in adj.iter_mut() {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }

    /// Full rescan of the structural invariants.
    pub fn check_consistency(&self) -> Result<(), GraphError> {
        if self.index.len() != self.nodes.len() || self.adjacency.len() != self.nodes.len() {
            return Err(GraphError::Inconsistent("node tables differ in size".into()));
        }
        for (i, id) in self.nodes.iter().enumerate() {
            if self.index.get(id) != Some(&i) {
                return Err(GraphError::Inconsistent(format!("index entry for {id}")));
            }
        }
        let mut expected = vec![Vec::new(); self.nodes.len()];
        for (ci, ch) in self.channels.iter().enumerate() {
            if ch.node_a >= self.nodes.len() || ch.node_b >= self.nodes.len() {
                return Err(GraphError::Inconsistent(format!(
                    "channel {} has a dangling endpoint",
                    ch.channel_id
                )));
            }
            if ch.balance_a_msat.checked_add(ch.balance_b_msat) != Some(ch.capacity_msat) {
                return Err(GraphError::BalanceMismatch {
                    capacity_msat: ch.capacity_msat,
                    balance_a_msat: ch.balance_a_msat,
                    balance_b_msat: ch.balance_b_msat,
                });
            }
            expected[ch.node_a].push(ChannelRef(ci));
            expected[ch.node_b].push(ChannelRef(ci));
        }
        for (node, (want, have)) in expected.iter_mut().zip(&self.adjacency).enumerate() {
            let mut have = have.clone();
            want.sort_unstable();
            have.sort_unstable();
            if *want != have {
                return Err(GraphError::Inconsistent(format!(
                    "adjacency of {} does not match channels",
                    self.nodes[node]
                )));
            }
        }
        Ok(())
    }
}
