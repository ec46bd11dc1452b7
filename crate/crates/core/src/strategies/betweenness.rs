//! Weighted betweenness on the fee graph.
//!
//! Values are unnormalized and taken over ordered pairs `(s, t)` with
//! `s != v != t`, so a 4-node star centre scores 6.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use super::{top_k_by_score, AttachmentRequest, CandidateSet, StrategyError};
use crate::fee_graph::{build_fee_graph, FeeGraph};
use crate::graph::Msat;
use crate::paths::{dijkstra_counts, UNREACHABLE};

/// Brandes' algorithm with Dijkstra as the inner search.
pub fn betweenness(fg: &FeeGraph) -> Vec<f64> {
    betweenness_adj(fg.adjacency())
}

pub(crate) fn betweenness_adj(adj: &[Vec<(usize, Msat)>]) -> Vec<f64> {
    let n = adj.len();
    let mut bc = vec![0.0; n];
    let mut dist = vec![UNREACHABLE; n];
    let mut sigma = vec![0.0f64; n];
    let mut delta = vec![0.0f64; n];
    let mut settled = vec![false; n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut order = Vec::with_capacity(n);
    let mut heap = BinaryHeap::new();

    for s in 0..n {
        dist.fill(UNREACHABLE);
        sigma.fill(0.0);
        delta.fill(0.0);
        settled.fill(false);
        for p in preds.iter_mut() {
            p.clear();
        }
        order.clear();
        heap.clear();

        dist[s] = 0;
        sigma[s] = 1.0;
        heap.push(Reverse((0, s)));
        while let Some(Reverse((d, v))) = heap.pop() {
            if settled[v] || d > dist[v] {
                continue;
            }
            settled[v] = true;
            order.push(v);
            for &(w, wt) in &adj[v] {
                if settled[w] {
                    continue;
                }
                let nd = d.saturating_add(wt);
                if nd < dist[w] {
                    dist[w] = nd;
                    sigma[w] = sigma[v];
                    preds[w].clear();
                    preds[w].push(v);
                    heap.push(Reverse((nd, w)));
                } else if nd == dist[w] {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }

        for &w in order.iter().rev() {
            let coeff = (1.0 + delta[w]) / sigma[w];
            for &v in &preds[w] {
                delta[v] += sigma[v] * coeff;
            }
            if w != s {
                bc[w] += delta[w];
            }
        }
    }
    bc
}

/// All-pairs distances and shortest-path counts.
#[derive(Clone, Debug)]
pub struct ShortestPathCounts {
    /// `dist[s][t]`, [`UNREACHABLE`] when there is no path.
    pub dist: Vec<Vec<Msat>>,
    /// `sigma[s][t]`, the number of shortest `s -> t` paths (`sigma[s][s] = 1`).
    pub sigma: Vec<Vec<f64>>,
}

impl ShortestPathCounts {
    pub fn node_count(&self) -> usize {
        self.dist.len()
    }

    /// Number of shortest `s -> t` paths passing through `v`.
    pub fn sigma_via(&self, s: usize, t: usize, v: usize) -> f64 {
        let (dsv, dvt) = (self.dist[s][v], self.dist[v][t]);
        if dsv == UNREACHABLE || dvt == UNREACHABLE {
            return 0.0;
        }
        if dsv.saturating_add(dvt) == self.dist[s][t] {
            self.sigma[s][v] * self.sigma[v][t]
        } else {
            0.0
        }
    }
}

/// One Dijkstra per source, run in parallel.
pub fn shortest_path_counts(adj: &[Vec<(usize, Msat)>]) -> ShortestPathCounts {
    let n = adj.len();
    let rows: Vec<(Vec<Msat>, Vec<f64>)> = (0..n)
        .into_par_iter()
        .map_init(
            || (Vec::new(), BinaryHeap::new()),
            |(settled, heap), s| {
                let mut dist = vec![UNREACHABLE; n];
                let mut sigma = vec![0.0; n];
                dijkstra_counts(adj, s, &mut dist, &mut sigma, settled, heap);
                (dist, sigma)
            },
        )
        .collect();
    let (dist, sigma) = rows.into_iter().unzip();
    ShortestPathCounts { dist, sigma }
}

pub fn betweenness_strategy(req: &AttachmentRequest<'_>) -> Result<CandidateSet, StrategyError> {
    let pool = req.candidate_pool()?;
    let fg = build_fee_graph(req.graph, req.amount_hint_msat);
    let bc = betweenness(&fg);
    Ok(top_k_by_score(req.graph, &pool, &bc, req.k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::synth::{synth_graph, SynthKind, SynthOptions};
    use proptest::prelude::*;

    /// Enumerates every simple path; with positive weights all shortest
    /// paths are simple.
    fn naive_bc(adj: &[Vec<(usize, Msat)>]) -> Vec<f64> {
        let n = adj.len();
        let mut bc = vec![0.0; n];
        for s in 0..n {
            for t in 0..n {
                if s == t {
                    continue;
                }
                let mut paths: Vec<(Msat, Vec<usize>)> = Vec::new();
                let mut stack = vec![(s, 0u64, vec![s])];
                while let Some((v, c, path)) = stack.pop() {
                    if v == t {
                        paths.push((c, path));
                        continue;
                    }
                    for &(w, wt) in &adj[v] {
                        if !path.contains(&w) {
                            let mut p = path.clone();
                            p.push(w);
                            stack.push((w, c + wt, p));
                        }
                    }
                }
                let Some(best) = paths.iter().map(|p| p.0).min() else {
                    continue;
                };
                let shortest: Vec<_> = paths.iter().filter(|p| p.0 == best).collect();
                for v in 0..n {
                    if v == s || v == t {
                        continue;
                    }
                    let through = shortest.iter().filter(|p| p.1.contains(&v)).count();
                    bc[v] += through as f64 / shortest.len() as f64;
                }
            }
        }
        bc
    }

    #[test]
    fn star_centre_is_six() {
        let g = synth_graph(SynthKind::Star(4), 0, &SynthOptions::default()).unwrap();
        let bc = betweenness(&build_fee_graph(&g, 100_000));
        assert_eq!(bc, vec![6.0, 0.0, 0.0, 0.0]);
        let c = betweenness_strategy(&AttachmentRequest::new(&g, "j", 1)).unwrap();
        assert_eq!(c.peers, vec![g.node_id(0).clone()]);
    }

    #[test]
    fn path_middle() {
        let g = synth_graph(SynthKind::Path(3), 0, &SynthOptions::default()).unwrap();
        let c = betweenness_strategy(&AttachmentRequest::new(&g, "j", 1)).unwrap();
        assert_eq!(c.peers, vec![g.node_id(1).clone()]);
        assert_eq!(c.per_step_objective, Some(vec![2.0]));
    }

    #[test]
    fn split_paths_share_credit() {
        // 0 -> {1,2} -> 3 with equal weights
        let adj = vec![vec![(1, 1), (2, 1)], vec![(3, 1)], vec![(3, 1)], vec![]];
        assert_eq!(betweenness_adj(&adj), vec![0.0, 0.5, 0.5, 0.0]);
        let spc = shortest_path_counts(&adj);
        assert_eq!(spc.sigma[0][3], 2.0);
        assert_eq!(spc.sigma_via(0, 3, 1), 1.0);
        assert_eq!(spc.sigma_via(0, 3, 0), 2.0);
        assert_eq!(spc.sigma_via(1, 2, 0), 0.0);
    }

    fn arb_digraph() -> impl Strategy<Value = Vec<Vec<(usize, Msat)>>> {
        (2usize..=7).prop_flat_map(|n| {
            proptest::collection::vec(proptest::option::weighted(0.4, 1u64..4), n * n).prop_map(
                move |cells| {
                    let mut adj = vec![Vec::new(); n];
                    for (i, c) in cells.into_iter().enumerate() {
                        let (u, v) = (i / n, i % n);
                        if let Some(w) = c.filter(|_| u != v) {
                            adj[u].push((v, w));
                        }
                    }
                    adj
                },
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn brandes_matches_enumeration(adj in arb_digraph()) {
            let got = betweenness_adj(&adj);
            let want = naive_bc(&adj);
            for (a, b) in got.iter().zip(&want) {
                prop_assert!((a - b).abs() <= 1e-9, "{got:?} vs {want:?}");
            }
        }

        #[test]
        fn sigma_via_bounded(adj in arb_digraph()) {
            let spc = shortest_path_counts(&adj);
            let n = adj.len();
            for s in 0..n {
                prop_assert_eq!(spc.sigma[s][s], 1.0);
                for t in 0..n {
                    for v in 0..n {
                        prop_assert!(spc.sigma_via(s, t, v) <= spc.sigma[s][t]);
                    }
                }
            }
        }
    }
}
