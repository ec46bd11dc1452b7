//! Capacity-filtered, fee-weighted simple digraph derived from a
//! [`NetworkGraph`] for one transaction amount.

use std::collections::HashMap;

use crate::graph::{fee, GraphError, Msat, NetworkGraph, NodeId};

/// Simple digraph sharing the node indexing of the network it was built
/// from. Edge `(u, v)` exists when at least one enabled channel lets `u`
/// forward the construction amount to `v`; its weight is the cheapest such
/// fee.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeeGraph {
    ids: Vec<NodeId>,
    index: HashMap<NodeId, usize>,
    /// Out-edges `(target, weight)` sorted by target.
    out: Vec<Vec<(usize, Msat)>>,
    amount_msat: Msat,
}

/// Reduces `g` to its fee graph at `amount_msat`.
pub fn build_fee_graph(g: &NetworkGraph, amount_msat: Msat) -> FeeGraph {
    let n = g.node_count();
    let mut out: Vec<Vec<(usize, Msat)>> = vec![Vec::new(); n];
    for ch in g.channels() {
        for (from, to) in [(ch.node_a(), ch.node_b()), (ch.node_b(), ch.node_a())] {
            if ch.forwards(from, amount_msat) {
                out[from].push((to, fee(ch.policy_from(from), amount_msat)));
            }
        }
    }
    for edges in out.iter_mut() {
        // cheapest parallel edge first, then keep one per target
        edges.sort_unstable();
        edges.dedup_by_key(|e| e.0);
    }
    let ids = g.nodes().to_vec();
    let index = ids.iter().cloned().enumerate().map(|(i, id)| (id, i)).collect();
    FeeGraph {
        ids,
        index,
        out,
        amount_msat,
    }
}

impl FeeGraph {
    pub fn amount_msat(&self) -> Msat {
        self.amount_msat
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out.iter().map(Vec::len).sum()
    }

    pub fn ids(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn node_id(&self, idx: usize) -> &NodeId {
        &self.ids[idx]
    }

    pub fn node_index(&self, id: &NodeId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn out_edges(&self, u: usize) -> &[(usize, Msat)] {
        &self.out[u]
    }

    /// Adjacency in out-edge form, indexed by node.
    pub fn adjacency(&self) -> &[Vec<(usize, Msat)>] {
        &self.out
    }

    pub fn weight(&self, u: usize, v: usize) -> Option<Msat> {
        self.out[u]
            .binary_search_by_key(&v, |e| e.0)
            .ok()
            .map(|i| self.out[u][i].1)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, Msat)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(u, es)| es.iter().map(move |&(v, w)| (u, v, w)))
    }

    pub fn out_degree(&self, u: usize) -> usize {
        self.out[u].len()
    }

    /// Number of distinct out-neighbors of `v`.
    pub fn degree(&self, v: &NodeId) -> Result<usize, GraphError> {
        self.node_index(v)
            .map(|i| self.out_degree(i))
            .ok_or_else(|| GraphError::UnknownNode(v.to_string()))
    }

    /// Largest edge weight, 0 for an edgeless graph.
    pub fn max_weight(&self) -> Msat {
        self.edges().map(|e| e.2).max().unwrap_or(0)
    }

    /// Out-degrees of all nodes in index order.
    pub fn degrees(&self) -> Vec<usize> {
        self.out.iter().map(Vec::len).collect()
    }
}
