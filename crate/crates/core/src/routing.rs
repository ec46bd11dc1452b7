//! Route selection over the public graph and payment settlement against the
//! private balances.
//!
//! Pathfinding only sees capacities and policies. Every channel direction
//! that is enabled and whose capacity covers the payment amount is a
//! candidate edge; its weight is the fee the forwarding node charges on the
//! payment amount plus an optional time-lock penalty, except that the
//! sender's own first hop costs nothing. Settlement then recomputes the
//! exact per-hop amounts backward from the destination and checks them
//! against balances, so a found route can still fail.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::graph::{fee, ChannelRef, Msat, NetworkGraph, NodeId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RoutingError {
    #[error("unknown node: {0}")]
    UnknownNode(String),
    #[error("source and destination are the same node: {0}")]
    SameEndpoints(String),
    #[error("payment amount must be positive")]
    ZeroAmount,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoutingConfig {
    /// Extra search weight per block of a forwarder's time-lock delta.
    pub cltv_penalty_msat_per_block: f64,
    /// Re-runs of pathfinding after a balance failure, each excluding the
    /// channel that failed.
    pub retries: u32,
}

impl Default for RoutingConfig {
    fn default() -> Self {
        RoutingConfig {
            cltv_penalty_msat_per_block: 0.0,
            retries: 0,
        }
    }
}

impl RoutingConfig {
    fn penalty(&self, cltv_delta: u32) -> Msat {
        if self.cltv_penalty_msat_per_block <= 0.0 {
            0
        } else {
            (self.cltv_penalty_msat_per_block * f64::from(cltv_delta)).floor() as Msat
        }
    }
}

/// One channel traversal of a route.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hop {
    pub channel: ChannelRef,
    pub channel_id: String,
    /// Node sending over this channel.
    pub from: NodeId,
    pub to: NodeId,
    /// Amount crossing the channel, including all downstream fees.
    pub amount_msat: Msat,
    /// Fee kept by `from` for forwarding (zero for the sender's hop).
    pub fee_msat: Msat,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Route {
    pub hops: Vec<Hop>,
    pub amount_msat: Msat,
    pub total_fee_msat: Msat,
    pub total_sent_msat: Msat,
    /// Search cost: fees on the final amount plus time-lock penalties.
    pub path_cost_msat: Msat,
}

impl Route {
    /// Forwarding intermediaries, in path order.
    pub fn intermediaries(&self) -> impl Iterator<Item = &NodeId> {
        self.hops.iter().skip(1).map(|h| &h.from)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PaymentFailure {
    NoPath,
    InsufficientBalanceAtHop(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PaymentOutcome {
    pub success: bool,
    /// The settled route, or the last attempted one on a balance failure.
    pub route: Option<Route>,
    pub fee_paid_msat: Msat,
    pub failure: Option<PaymentFailure>,
    pub intermediaries: Vec<NodeId>,
}

impl PaymentOutcome {
    fn failed(failure: PaymentFailure, route: Option<Route>) -> Self {
        PaymentOutcome {
            success: false,
            route,
            fee_paid_msat: 0,
            failure: Some(failure),
            intermediaries: Vec::new(),
        }
    }
}

fn endpoints(
    g: &NetworkGraph,
    source: &NodeId,
    dest: &NodeId,
    amount_msat: Msat,
) -> Result<(usize, usize), RoutingError> {
    let s = g
        .node_index(source)
        .ok_or_else(|| RoutingError::UnknownNode(source.to_string()))?;
    let t = g
        .node_index(dest)
        .ok_or_else(|| RoutingError::UnknownNode(dest.to_string()))?;
    if s == t {
        return Err(RoutingError::SameEndpoints(source.to_string()));
    }
    if amount_msat == 0 {
        return Err(RoutingError::ZeroAmount);
    }
    Ok((s, t))
}

/// Cheapest route from `source` to `dest` for `amount_msat`, or `None` when
/// no qualifying path exists. Ties go to fewer hops, then to the
/// lexicographically smallest node sequence.
pub fn find_route(
    g: &NetworkGraph,
    source: &NodeId,
    dest: &NodeId,
    amount_msat: Msat,
    config: &RoutingConfig,
) -> Result<Option<Route>, RoutingError> {
    let (s, t) = endpoints(g, source, dest, amount_msat)?;
    Ok(find_route_idx(g, s, t, amount_msat, config, &[]))
}

/// Index-based [`find_route`] that also skips the `excluded` channels.
/// Callers guarantee `s != t` and a positive amount.
pub fn find_route_idx(
    g: &NetworkGraph,
    s: usize,
    t: usize,
    amount_msat: Msat,
    config: &RoutingConfig,
    excluded: &[ChannelRef],
) -> Option<Route> {
    let usable = |c: ChannelRef, from: usize| -> bool {
        g.channel(c).forwards(from, amount_msat) && !excluded.contains(&c)
    };
    let weight = |c: ChannelRef, from: usize| -> Msat {
        let p = g.channel(c).policy_from(from);
        fee(p, amount_msat).saturating_add(config.penalty(p.cltv_delta))
    };

    // Reverse search: label[v] = (cost, hops) of the best v -> t path with v
    // paying nothing for its own outgoing edge only when v == s, which is
    // handled separately below.
    let n = g.node_count();
    let mut label: Vec<Option<(Msat, u32)>> = vec![None; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    label[t] = Some((0, 0));
    heap.push(Reverse((0 as Msat, 0u32, t)));
    while let Some(Reverse((cost, hops, v))) = heap.pop() {
        if settled[v] {
            continue;
        }
        settled[v] = true;
        for &c in g.incident(v) {
            let u = g.channel(c).other(v);
            if u == s || settled[u] || !usable(c, u) {
                continue;
            }
            let cand = (cost.saturating_add(weight(c, u)), hops + 1);
            if label[u].map_or(true, |l| cand < l) {
                label[u] = Some(cand);
                heap.push(Reverse((cand.0, cand.1, u)));
            }
        }
    }

    // Sender's first hop is free: pick the best successor directly.
    let mut best: Option<((Msat, u32), usize, ChannelRef)> = None;
    for &c in g.incident(s) {
        let x = g.channel(c).other(s);
        if !usable(c, s) {
            continue;
        }
        let Some((cost, hops)) = label[x] else { continue };
        let key = (cost, hops + 1);
        let better = match &best {
            None => true,
            Some((bk, bx, bc)) => {
                key < *bk
                    || (key == *bk
                        && (g.node_id(x) < g.node_id(*bx) || (x == *bx && c < *bc)))
            }
        };
        if better {
            best = Some((key, x, c));
        }
    }
    let ((path_cost, _), first, first_channel) = best?;

    let mut nodes = vec![s, first];
    let mut chans = vec![first_channel];
    let mut v = first;
    while v != t {
        let (cost, hops) = label[v].expect("walk stays on labelled nodes");
        let mut next: Option<(usize, ChannelRef)> = None;
        for &c in g.incident(v) {
            let y = g.channel(c).other(v);
            if y == s || !usable(c, v) {
                continue;
            }
            let Some((yc, yh)) = label[y] else { continue };
            if yh + 1 != hops || yc.saturating_add(weight(c, v)) != cost {
                continue;
            }
            let better = match next {
                None => true,
                Some((ny, nc)) => g.node_id(y) < g.node_id(ny) || (y == ny && c < nc),
            };
            if better {
                next = Some((y, c));
            }
        }
        let (y, c) = next.expect("a tight edge leaves every labelled node");
        nodes.push(y);
        chans.push(c);
        v = y;
    }

    // Exact amounts, backward from the destination: the forwarder of hop i
    // charges its fee on what it forwards over hop i.
    let len = chans.len();
    let mut amounts = vec![0 as Msat; len];
    amounts[len - 1] = amount_msat;
    for i in (1..len).rev() {
        let forwarder_fee = fee(g.channel(chans[i]).policy_from(nodes[i]), amounts[i]);
        amounts[i - 1] = amounts[i].saturating_add(forwarder_fee);
    }
    let hops = (0..len)
        .map(|i| Hop {
            channel: chans[i],
            channel_id: g.channel(chans[i]).channel_id.clone(),
            from: g.node_id(nodes[i]).clone(),
            to: g.node_id(nodes[i + 1]).clone(),
            amount_msat: amounts[i],
            fee_msat: if i == 0 { 0 } else { amounts[i - 1] - amounts[i] },
        })
        .collect();
    Some(Route {
        hops,
        amount_msat,
        total_fee_msat: amounts[0] - amount_msat,
        total_sent_msat: amounts[0],
        path_cost_msat: path_cost,
    })
}

/// Routes and settles a payment. Failed payments leave `g` untouched.
pub fn execute_payment(
    g: &mut NetworkGraph,
    source: &NodeId,
    dest: &NodeId,
    amount_msat: Msat,
    config: &RoutingConfig,
) -> Result<PaymentOutcome, RoutingError> {
    let (s, t) = endpoints(g, source, dest, amount_msat)?;
    Ok(execute_payment_idx(g, s, t, amount_msat, config))
}

pub fn execute_payment_idx(
    g: &mut NetworkGraph,
    s: usize,
    t: usize,
    amount_msat: Msat,
    config: &RoutingConfig,
) -> PaymentOutcome {
    let mut excluded = Vec::new();
    let mut last_failure = PaymentOutcome::failed(PaymentFailure::NoPath, None);
    for _ in 0..=config.retries {
        let Some(route) = find_route_idx(g, s, t, amount_msat, config, &excluded) else {
            // keep reporting the balance failure that triggered the retry
            if excluded.is_empty() {
                last_failure = PaymentOutcome::failed(PaymentFailure::NoPath, None);
            }
            break;
        };
        let shortfall = route.hops.iter().position(|h| {
            let from = g.node_index(&h.from).expect("route nodes exist");
            g.channel(h.channel).balance_of(from) < h.amount_msat
        });
        match shortfall {
            Some(i) => {
                excluded.push(route.hops[i].channel);
                last_failure =
                    PaymentOutcome::failed(PaymentFailure::InsufficientBalanceAtHop(i), Some(route));
            }
            None => {
                for h in &route.hops {
                    let from = g.node_index(&h.from).expect("route nodes exist");
                    g.shift_balance(h.channel, from, h.amount_msat);
                }
                let intermediaries = route.intermediaries().cloned().collect();
                return PaymentOutcome {
                    success: true,
                    fee_paid_msat: route.total_fee_msat,
                    route: Some(route),
                    failure: None,
                    intermediaries,
                };
            }
        }
    }
    last_failure
}

/// Whether `watched` forwarded (neither sent nor received) a successful
/// payment.
pub fn record_intermediaries(outcome: &PaymentOutcome, watched: &NodeId) -> bool {
    outcome.success && outcome.intermediaries.iter().any(|n| n == watched)
}
