//! Maximum betweenness improvement.
//!
//! Opening a channel only adds edges at the joiner, so shortest paths that
//! avoid the joiner never change. With all-pairs distances `D` and counts
//! `sigma` of the graph minus the joiner, the joiner's betweenness for any
//! channel set is
//!
//! ```text
//! bc(j) = sum over s != t of  sIn(s) * sOut(t) / (sigma[s][t] + sIn(s) * sOut(t))
//! ```
//!
//! restricted to pairs where `dIn(s) + dOut(t) <= D[s][t]` (the quotient is
//! 1 when strictly shorter). `dIn(s)`/`sIn(s)` are the distance and path
//! count from `s` into the joiner, `dOut`/`sOut` the same out of it. Each
//! trial channel therefore costs `O(n^2)` instead of a full Brandes run,
//! and the graph is never mutated.

use rayon::prelude::*;

use super::betweenness::{shortest_path_counts, ShortestPathCounts};
use super::{AttachmentRequest, CandidateSet, StrategyError};
use crate::fee_graph::build_fee_graph;
use crate::graph::{fee, ChannelPolicy, Msat};
use crate::paths::UNREACHABLE;

const TIE_TOLERANCE: f64 = 1e-9;

/// Best (distance, count) pair reaching or leaving the joiner through a set
/// of direct neighbours.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Reach {
    dist: Msat,
    count: f64,
}

impl Reach {
    const NONE: Reach = Reach {
        dist: UNREACHABLE,
        count: 0.0,
    };

    fn offer(&mut self, dist: Msat, count: f64) {
        if dist < self.dist {
            *self = Reach { dist, count };
        } else if dist == self.dist && dist != UNREACHABLE {
            self.count += count;
        }
    }
}

fn via(base: &ShortestPathCounts, d_in: &[Reach], d_out: &[Reach], joiner: usize) -> f64 {
    let n = base.node_count();
    let mut bc = 0.0;
    for s in 0..n {
        if s == joiner || d_in[s].dist == UNREACHABLE {
            continue;
        }
        let ds = &base.dist[s];
        let sg = &base.sigma[s];
        let (di, ci) = (d_in[s].dist, d_in[s].count);
        for t in 0..n {
            if t == s || t == joiner {
                continue;
            }
            let o = d_out[t];
            if o.dist == UNREACHABLE {
                continue;
            }
            let through = di.saturating_add(o.dist);
            match through.cmp(&ds[t]) {
                std::cmp::Ordering::Less => bc += 1.0,
                std::cmp::Ordering::Equal => {
                    let p = ci * o.count;
                    bc += p / (sg[t] + p);
                }
                std::cmp::Ordering::Greater => {}
            }
        }
    }
    bc
}

/// In/out reach of the joiner for a set of in-edges `a -> j` and out-edges
/// `j -> b`, each given as (node, weight).
fn reach_tables(
    base: &ShortestPathCounts,
    ins: &[(usize, Msat)],
    outs: &[(usize, Msat)],
) -> (Vec<Reach>, Vec<Reach>) {
    let n = base.node_count();
    let mut d_in = vec![Reach::NONE; n];
    let mut d_out = vec![Reach::NONE; n];
    for s in 0..n {
        for &(a, w) in ins {
            extend(&mut d_in[s], base.dist[s][a], base.sigma[s][a], w);
        }
        for &(b, w) in outs {
            extend(&mut d_out[s], base.dist[b][s], base.sigma[b][s], w);
        }
    }
    (d_in, d_out)
}

fn extend(r: &mut Reach, d: Msat, count: f64, w: Msat) {
    if d != UNREACHABLE {
        r.offer(d.saturating_add(w), count);
    }
}

/// Greedy MBI: each round adds the default-policy channel that maximises
/// the joiner's own betweenness on the fee graph at the amount hint.
pub fn mbi_strategy(req: &AttachmentRequest<'_>) -> Result<CandidateSet, StrategyError> {
    let pool = req.candidate_pool()?;
    let mut g = req.graph.clone();
    let joiner = g.ensure_node(&req.joining)?;
    let n = g.node_count();
    let fg = build_fee_graph(&g, req.amount_hint_msat);

    let mut ins: Vec<(usize, Msat)> = Vec::new();
    let mut outs: Vec<(usize, Msat)> = fg.out_edges(joiner).to_vec();
    let stripped: Vec<Vec<(usize, Msat)>> = (0..n)
        .map(|u| {
            if u == joiner {
                return Vec::new();
            }
            fg.out_edges(u)
                .iter()
                .copied()
                .filter(|&(v, w)| {
                    if v == joiner {
                        ins.push((u, w));
                        false
                    } else {
                        true
                    }
                })
                .collect()
        })
        .collect();
    let base = shortest_path_counts(&stripped);

    // Both ends of a new channel carry the default policy; the fee graph
    // keeps it only if the capacity covers the hint.
    let new_w = (req.cap_msat >= req.amount_hint_msat)
        .then(|| fee(&ChannelPolicy::default(), req.amount_hint_msat));

    let mut excluded = vec![false; n];
    excluded[joiner] = true;
    for p in g.peers(joiner) {
        excluded[p] = true;
    }
    let candidates: Vec<usize> = pool.iter().copied().filter(|&v| !excluded[v]).collect();
    if candidates.len() < req.k {
        return Err(StrategyError::KTooLarge {
            k: req.k,
            limit: candidates.len(),
        });
    }

    let mut taken = vec![false; n];
    let mut chosen = Vec::with_capacity(req.k);
    let mut objective = Vec::with_capacity(req.k);
    while chosen.len() < req.k {
        let (d_in, d_out) = reach_tables(&base, &ins, &outs);
        let scores: Vec<(usize, f64)> = candidates
            .par_iter()
            .copied()
            .filter(|&u| !taken[u])
            .map(|u| {
                let score = match new_w {
                    None => via(&base, &d_in, &d_out, joiner),
                    Some(w) => {
                        let mut di = d_in.clone();
                        let mut dout = d_out.clone();
                        for s in 0..n {
                            extend(&mut di[s], base.dist[s][u], base.sigma[s][u], w);
                            extend(&mut dout[s], base.dist[u][s], base.sigma[u][s], w);
                        }
                        via(&base, &di, &dout, joiner)
                    }
                };
                (u, score)
            })
            .collect();
        let (pick, score) = scores
            .into_iter()
            .reduce(|best, cand| {
                let tol = TIE_TOLERANCE * best.1.abs().max(cand.1.abs()).max(1.0);
                if cand.1 > best.1 + tol
                    || ((cand.1 - best.1).abs() <= tol && g.node_id(cand.0) < g.node_id(best.0))
                {
                    cand
                } else {
                    best
                }
            })
            .expect("k <= candidate count");
        if let Some(w) = new_w {
            ins.push((pick, w));
            outs.push((pick, w));
        }
        taken[pick] = true;
        chosen.push(pick);
        objective.push(score);
    }

    Ok(CandidateSet {
        peers: chosen.iter().map(|&v| g.node_id(v).clone()).collect(),
        per_step_objective: Some(objective),
    })
}
