use std::collections::VecDeque;

use super::{highest_degree_node, AttachmentRequest, CandidateSet, StrategyError};
use crate::fee_graph::build_fee_graph;

/// Hop distance from the joiner when it holds channels to `chosen` (plus
/// whatever channels it already has in `adj`). `None` means unreachable.
pub(crate) fn joiner_hops(
    adj: &[Vec<usize>],
    joiner: Option<usize>,
    chosen: &[usize],
) -> Vec<Option<u32>> {
    let mut dist = vec![None; adj.len()];
    let mut queue = VecDeque::new();
    if let Some(j) = joiner {
        dist[j] = Some(0);
        queue.push_back(j);
    }
    for &c in chosen {
        if dist[c].is_none() {
            dist[c] = Some(1);
            queue.push_back(c);
        }
    }
    while let Some(v) = queue.pop_front() {
        let d = dist[v].unwrap_or(0);
        for &w in &adj[v] {
            if dist[w].is_none() {
                dist[w] = Some(d + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Joiner eccentricity over all other nodes; infinite if any is unreachable.
pub(crate) fn eccentricity(dist: &[Option<u32>], joiner: Option<usize>) -> f64 {
    let mut ecc = 0.0f64;
    for (v, d) in dist.iter().enumerate() {
        if Some(v) == joiner {
            continue;
        }
        match d {
            Some(d) => ecc = ecc.max(*d as f64),
            None => return f64::INFINITY,
        }
    }
    ecc
}

/// Greedy farthest-point selection on hop distances, seeded with the
/// highest-degree node.
pub fn k_center_strategy(req: &AttachmentRequest<'_>) -> Result<CandidateSet, StrategyError> {
    let pool = req.candidate_pool()?;
    let g = req.graph;
    let degrees = build_fee_graph(g, req.amount_hint_msat).degrees();
    let adj = g.undirected_projection();
    let joiner = req.joining_index();

    let mut chosen = vec![highest_degree_node(g, &degrees, &pool)];
    let mut dist = joiner_hops(&adj, joiner, &chosen);
    let mut objective = vec![eccentricity(&dist, joiner)];
    let mut taken = vec![false; g.node_count()];
    taken[chosen[0]] = true;

    while chosen.len() < req.k {
        // Unreachable sorts above every finite hop count.
        let key = |v: usize| dist[v].map_or(u64::MAX, u64::from);
        let next = pool
            .iter()
            .copied()
            .filter(|&v| !taken[v])
            .min_by(|&x, &y| {
                key(y)
                    .cmp(&key(x))
                    .then_with(|| degrees[y].cmp(&degrees[x]))
                    .then_with(|| g.node_id(x).cmp(g.node_id(y)))
            })
            .expect("k <= pool size");
        taken[next] = true;
        chosen.push(next);
        dist = joiner_hops(&adj, joiner, &chosen);
        objective.push(eccentricity(&dist, joiner));
    }

    Ok(CandidateSet {
        peers: chosen.iter().map(|&v| g.node_id(v).clone()).collect(),
        per_step_objective: Some(objective),
    })
}
