//! Independent reference implementations shared by the integration suites.
//! Nothing here calls into the library's own path or centrality code; the
//! oracles read channels straight off the graph.

#![allow(dead_code)]

use std::collections::VecDeque;

use pcnsim_core::{fee, BalanceSplit, ChannelPolicy, Msat, NetworkGraph, NodeId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const INF: u64 = u64::MAX;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub struct RandomGraphOptions {
    pub min_base_fee: u64,
    pub max_base_fee: u64,
    pub max_rate: u64,
    pub capacities: Vec<Msat>,
    /// Chance that a direction is disabled.
    pub p_disabled: f64,
    /// Extra channels on top of the spanning tree, as a multiple of `n`.
    pub density: f64,
    /// Start from a random spanning tree so the graph is connected.
    pub connected: bool,
}

impl Default for RandomGraphOptions {
    fn default() -> Self {
        RandomGraphOptions {
            min_base_fee: 0,
            max_base_fee: 5_000,
            max_rate: 5_000,
            capacities: vec![60_000, 200_000, 1_000_000, 20_000_000],
            p_disabled: 0.1,
            density: 1.0,
            connected: false,
        }
    }
}

/// Node ids are shuffled relative to indices so that index order and
/// lexicographic order disagree.
pub fn random_graph(r: &mut ChaCha8Rng, n: usize, o: &RandomGraphOptions) -> NetworkGraph {
    let mut g = NetworkGraph::new();
    let mut labels: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        labels.swap(i, r.gen_range(0..=i));
    }
    for l in labels {
        g.add_node(NodeId::new(format!("n{l:03}"))).unwrap();
    }
    let policy = |r: &mut ChaCha8Rng| {
        let mut p = ChannelPolicy::new(
            r.gen_range(o.min_base_fee..=o.max_base_fee),
            r.gen_range(0..=o.max_rate),
        );
        p.cltv_delta = r.gen_range(1..=144);
        p.enabled = !r.gen_bool(o.p_disabled);
        p
    };
    let mut pairs = Vec::new();
    if o.connected {
        for v in 1..n {
            pairs.push((r.gen_range(0..v), v));
        }
    }
    let extra = (o.density * n as f64).round() as usize;
    for _ in 0..extra {
        let a = r.gen_range(0..n);
        let b = r.gen_range(0..n);
        if a != b {
            pairs.push((a, b));
        }
    }
    for (i, (a, b)) in pairs.into_iter().enumerate() {
        let cap = o.capacities[r.gen_range(0..o.capacities.len())];
        let (pa, pb) = (policy(r), policy(r));
        g.add_channel_idx(format!("c{i}"), a, b, cap, BalanceSplit::Equal, pa, pb)
            .unwrap();
    }
    g
}

/// Directed weighted edge list `(u, v, w)` of the fee graph, computed from
/// channels directly. Parallel channels keep the cheaper direction.
pub fn oracle_fee_edges(g: &NetworkGraph, amount: Msat) -> Vec<Vec<Option<Msat>>> {
    let n = g.node_count();
    let mut w = vec![vec![None; n]; n];
    for ch in g.channels() {
        for (u, v, p) in [(ch.node_a(), ch.node_b(), &ch.policy_a), (ch.node_b(), ch.node_a(), &ch.policy_b)] {
            if p.enabled && ch.capacity_msat() >= amount {
                let f = fee(p, amount);
                w[u][v] = Some(w[u][v].map_or(f, |x: Msat| x.min(f)));
            }
        }
    }
    w
}

/// Fee-graph out-degree per node.
pub fn oracle_degrees(g: &NetworkGraph, amount: Msat) -> Vec<usize> {
    oracle_fee_edges(g, amount)
        .iter()
        .map(|row| row.iter().filter(|x| x.is_some()).count())
        .collect()
}

/// Plain O(n^2) Dijkstra over a dense matrix.
pub fn oracle_dijkstra(w: &[Vec<Option<Msat>>], s: usize) -> Vec<u64> {
    let n = w.len();
    let mut d = vec![INF; n];
    let mut done = vec![false; n];
    d[s] = 0;
    for _ in 0..n {
        let Some(u) = (0..n).filter(|&v| !done[v] && d[v] != INF).min_by_key(|&v| d[v]) else {
            break;
        };
        done[u] = true;
        for v in 0..n {
            if let Some(x) = w[u][v] {
                d[v] = d[v].min(d[u] + x);
            }
        }
    }
    d
}

/// All-pairs distances and shortest-path counts (positive weights).
pub fn oracle_apsp(w: &[Vec<Option<Msat>>]) -> (Vec<Vec<u64>>, Vec<Vec<f64>>) {
    let n = w.len();
    let mut d = vec![vec![INF; n]; n];
    for (u, row) in w.iter().enumerate() {
        d[u][u] = 0;
        for (v, x) in row.iter().enumerate() {
            if let Some(x) = x {
                d[u][v] = d[u][v].min(*x);
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            if d[i][k] == INF {
                continue;
            }
            for j in 0..n {
                if d[k][j] != INF && d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    let mut sigma = vec![vec![0.0; n]; n];
    for s in 0..n {
        let mut order: Vec<usize> = (0..n).filter(|&v| d[s][v] != INF).collect();
        order.sort_by_key(|&v| d[s][v]);
        sigma[s][s] = 1.0;
        for &v in order.iter().skip(1) {
            let mut c = 0.0;
            for u in 0..n {
                if let Some(x) = w[u][v] {
                    if d[s][u] != INF && u != v && d[s][u] + x == d[s][v] {
                        c += sigma[s][u];
                    }
                }
            }
            sigma[s][v] = c;
        }
    }
    (d, sigma)
}

/// Betweenness of every node from pair dependencies.
pub fn oracle_betweenness(w: &[Vec<Option<Msat>>]) -> Vec<f64> {
    let n = w.len();
    let (d, sigma) = oracle_apsp(w);
    let mut bc = vec![0.0; n];
    for s in 0..n {
        for t in 0..n {
            if s == t || d[s][t] == INF {
                continue;
            }
            for v in 0..n {
                if v == s || v == t || d[s][v] == INF || d[v][t] == INF {
                    continue;
                }
                if d[s][v] + d[v][t] == d[s][t] {
                    bc[v] += sigma[s][v] * sigma[v][t] / sigma[s][t];
                }
            }
        }
    }
    bc
}

/// Betweenness by enumerating every simple path (tiny graphs only).
pub fn enumerated_betweenness(w: &[Vec<Option<Msat>>]) -> Vec<f64> {
    let n = w.len();
    let mut bc = vec![0.0; n];
    for s in 0..n {
        for t in 0..n {
            if s == t {
                continue;
            }
            let mut found: Vec<(u64, Vec<usize>)> = Vec::new();
            let mut stack = vec![(s, 0u64, vec![s])];
            while let Some((v, c, path)) = stack.pop() {
                if v == t {
                    found.push((c, path));
                    continue;
                }
                for (x, wt) in w[v].iter().enumerate() {
                    if let Some(wt) = wt {
                        if !path.contains(&x) {
                            let mut p = path.clone();
                            p.push(x);
                            stack.push((x, c + wt, p));
                        }
                    }
                }
            }
            let Some(best) = found.iter().map(|f| f.0).min() else { continue };
            let shortest: Vec<&Vec<usize>> = found.iter().filter(|f| f.0 == best).map(|f| &f.1).collect();
            for v in 0..n {
                if v != s && v != t {
                    let k = shortest.iter().filter(|p| p.contains(&v)).count();
                    bc[v] += k as f64 / shortest.len() as f64;
                }
            }
        }
    }
    bc
}

/// Undirected hop adjacency over channels with an enabled direction.
pub fn oracle_hop_adjacency(g: &NetworkGraph) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); g.node_count()];
    for ch in g.channels() {
        if ch.policy_a.enabled || ch.policy_b.enabled {
            adj[ch.node_a()].push(ch.node_b());
            adj[ch.node_b()].push(ch.node_a());
        }
    }
    adj
}

pub fn oracle_bfs(adj: &[Vec<usize>], sources: &[usize]) -> Vec<u64> {
    let mut d = vec![INF; adj.len()];
    let mut q = VecDeque::new();
    for &s in sources {
        d[s] = 0;
        q.push_back(s);
    }
    while let Some(v) = q.pop_front() {
        for &w in &adj[v] {
            if d[w] == INF {
                d[w] = d[v] + 1;
                q.push_back(w);
            }
        }
    }
    d
}

/// Every `k`-subset of `0..n`.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Lexicographically smallest index among those maximising `key`.
pub fn argmax_lex<K: PartialOrd + Copy>(g: &NetworkGraph, items: &[usize], key: impl Fn(usize) -> K) -> usize {
    let mut best = items[0];
    for &i in &items[1..] {
        let (a, b) = (key(i), key(best));
        if a > b || (a == b && g.node_id(i) < g.node_id(best)) {
            best = i;
        }
    }
    best
}
