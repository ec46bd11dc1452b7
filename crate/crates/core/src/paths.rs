//! Shortest-path primitives shared by strategies and metrics.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use crate::graph::Msat;

/// Marker for "not reachable" in dense distance tables.
pub const UNREACHABLE: Msat = Msat::MAX;

/// Weighted single-source distances over an out-edge adjacency.
pub fn dijkstra(adj: &[Vec<(usize, Msat)>], source: usize) -> Vec<Msat> {
    let mut dist = vec![UNREACHABLE; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0;
    heap.push(Reverse((0, source)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(w, wt) in &adj[v] {
            let nd = d.saturating_add(wt);
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(Reverse((nd, w)));
            }
        }
    }
    dist
}

/// Distances and shortest-path counts from `source`, written into the
/// provided rows. Ties on zero-weight edges into already settled nodes are
/// ignored, so counts follow the settle order.
pub fn dijkstra_counts(
    adj: &[Vec<(usize, Msat)>],
    source: usize,
    dist: &mut [Msat],
    sigma: &mut [f64],
    settled: &mut Vec<bool>,
    heap: &mut BinaryHeap<Reverse<(Msat, usize)>>,
) {
    dist.fill(UNREACHABLE);
    sigma.fill(0.0);
    settled.clear();
    settled.resize(adj.len(), false);
    heap.clear();
    dist[source] = 0;
    sigma[source] = 1.0;
    heap.push(Reverse((0, source)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if settled[v] || d > dist[v] {
            continue;
        }
        settled[v] = true;
        for &(w, wt) in &adj[v] {
            if settled[w] {
                continue;
            }
            let nd = d.saturating_add(wt);
            if nd < dist[w] {
                dist[w] = nd;
                sigma[w] = sigma[v];
                heap.push(Reverse((nd, w)));
            } else if nd == dist[w] {
                sigma[w] += sigma[v];
            }
        }
    }
}

/// Unweighted hop distances from a set of sources (each at distance 0).
pub fn bfs_hops(adj: &[Vec<usize>], sources: &[usize]) -> Vec<Option<u32>> {
    let mut dist = vec![None; adj.len()];
    let mut queue = VecDeque::new();
    for &s in sources {
        if dist[s].is_none() {
            dist[s] = Some(0);
            queue.push_back(s);
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dijkstra_small() {
        // 0 -> 1 (5), 0 -> 2 (1), 2 -> 1 (1), 1 -> 3 (1)
        let adj = vec![vec![(1, 5), (2, 1)], vec![(3, 1)], vec![(1, 1)], vec![]];
        assert_eq!(dijkstra(&adj, 0), vec![0, 2, 1, 3]);
        assert_eq!(dijkstra(&adj, 3), vec![UNREACHABLE, UNREACHABLE, UNREACHABLE, 0]);
    }

    #[test]
    fn counts_on_diamond() {
        let adj = vec![vec![(1, 1), (2, 1)], vec![(3, 1)], vec![(3, 1)], vec![]];
        let mut dist = vec![0; 4];
        let mut sigma = vec![0.0; 4];
        dijkstra_counts(&adj, 0, &mut dist, &mut sigma, &mut Vec::new(), &mut BinaryHeap::new());
        assert_eq!(dist, vec![0, 1, 1, 2]);
        assert_eq!(sigma, vec![1.0, 1.0, 1.0, 2.0]);
    }

    #[test]
    fn bfs_multi_source() {
        let adj = vec![vec![1], vec![0, 2], vec![1, 3], vec![2], vec![]];
        assert_eq!(
            bfs_hops(&adj, &[0, 3]),
            vec![Some(0), Some(1), Some(1), Some(0), None]
        );
    }
}
