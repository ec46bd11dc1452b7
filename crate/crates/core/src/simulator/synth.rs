//! Deterministic synthetic topologies for tests and desk-scale experiments.

use rand::Rng;

use super::{RngStream, SimError};
use crate::graph::{BalanceSplit, ChannelPolicy, Msat, NetworkGraph, NodeId};
use crate::strategies::DEFAULT_CAP_MSAT;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynthKind {
    /// Barabasi-Albert preferential attachment: a clique of `m0 + 1` nodes,
    /// then each new node opens `m0` channels to degree-weighted peers.
    ScaleFree { n: usize, m0: usize },
    Path(usize),
    /// Node 0 is the hub.
    Star(usize),
    Cycle(usize),
    /// `count` disjoint complete graphs of `size` nodes each, numbered
    /// consecutively.
    Cliques { count: usize, size: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthOptions {
    /// Capacity of every channel, unless `capacity_range` is set.
    pub cap_msat: Msat,
    /// Draw each capacity uniformly from this inclusive range (rounded down
    /// to even).
    pub capacity_range: Option<(Msat, Msat)>,
    /// Draw a random policy per direction instead of the defaults. Base fees
    /// are always positive.
    pub random_fees: bool,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            cap_msat: DEFAULT_CAP_MSAT,
            capacity_range: None,
            random_fees: false,
        }
    }
}

pub fn synth_node_id(i: usize) -> NodeId {
    NodeId::new(format!("node-{i:05}"))
}

fn edges_of(kind: SynthKind, rng: &mut RngStream) -> Result<(usize, Vec<(usize, usize)>), SimError> {
    let bad = |what: &str| Err(SimError::Spec(format!("invalid synthetic graph: {what}")));
    Ok(match kind {
        SynthKind::Path(n) => {
            if n < 2 {
                return bad("path needs n >= 2");
            }
            (n, (1..n).map(|i| (i - 1, i)).collect())
        }
        SynthKind::Star(n) => {
            if n < 2 {
                return bad("star needs n >= 2");
            }
            (n, (1..n).map(|i| (0, i)).collect())
        }
        SynthKind::Cycle(n) => {
            if n < 3 {
                return bad("cycle needs n >= 3");
            }
            (n, (0..n).map(|i| (i, (i + 1) % n)).collect())
        }
        SynthKind::Cliques { count, size } => {
            if count == 0 || size < 2 {
                return bad("cliques need count >= 1 and size >= 2");
            }
            let mut e = Vec::new();
            for c in 0..count {
                let o = c * size;
                for i in 0..size {
                    for j in i + 1..size {
                        e.push((o + i, o + j));
                    }
                }
            }
            (count * size, e)
        }
        SynthKind::ScaleFree { n, m0 } => {
            if m0 == 0 || n < m0 + 1 {
                return bad("scale-free needs m0 >= 1 and n > m0");
            }
            let mut e = Vec::new();
            // every endpoint appears once per incident edge
            let mut ends: Vec<usize> = Vec::new();
            for i in 0..=m0 {
                for j in i + 1..=m0 {
                    e.push((i, j));
                    ends.extend([i, j]);
                }
            }
            for v in m0 + 1..n {
                let mut picked: Vec<usize> = Vec::with_capacity(m0);
                while picked.len() < m0 {
                    let u = ends[rng.index(ends.len())];
                    if !picked.contains(&u) {
                        picked.push(u);
                    }
                }
                for &u in &picked {
                    e.push((u, v));
                    ends.extend([u, v]);
                }
            }
            (n, e)
        }
    })
}

/// Builds the graph. `seed` drives both the topology (scale-free only) and
/// the optional random fees and capacities.
pub fn synth_graph(kind: SynthKind, seed: u64, opts: &SynthOptions) -> Result<NetworkGraph, SimError> {
    let mut topo_rng = RngStream::new(seed, 0);
    let mut attr_rng = RngStream::new(seed, 1);
    let (n, edges) = edges_of(kind, &mut topo_rng)?;
    let mut g = NetworkGraph::new();
    for i in 0..n {
        g.add_node(synth_node_id(i))?;
    }
    let policy = |rng: &mut RngStream| {
        if opts.random_fees {
            ChannelPolicy::new(rng.rng().gen_range(1..=3_000), rng.rng().gen_range(0..=500))
        } else {
            ChannelPolicy::default()
        }
    };
    for (i, &(a, b)) in edges.iter().enumerate() {
        let cap = match opts.capacity_range {
            Some((lo, hi)) => attr_rng.rng().gen_range(lo.max(2)..=hi.max(lo.max(2))) & !1,
            None => opts.cap_msat,
        };
        let pa = policy(&mut attr_rng);
        let pb = policy(&mut attr_rng);
        g.add_channel_idx(format!("synth-chan-{i}"), a, b, cap, BalanceSplit::Equal, pa, pb)?;
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fee_graph::build_fee_graph;
    use crate::ingest::weak_components;

    #[test]
    fn star5() {
        let g = synth_graph(SynthKind::Star(5), 0, &SynthOptions::default()).unwrap();
        assert_eq!(g.channel_count(), 4);
        assert_eq!(build_fee_graph(&g, 100_000).degree(&synth_node_id(0)).unwrap(), 4);
    }

    #[test]
    fn scale_free_reproducible() {
        let a = synth_graph(SynthKind::ScaleFree { n: 200, m0: 3 }, 9, &SynthOptions::default()).unwrap();
        let b = synth_graph(SynthKind::ScaleFree { n: 200, m0: 3 }, 9, &SynthOptions::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.node_count(), 200);
        assert_eq!(a.channel_count(), 6 + 196 * 3);
        assert!(weak_components(&a).iter().all(|&c| c == 0));
        let c = synth_graph(SynthKind::ScaleFree { n: 200, m0: 3 }, 10, &SynthOptions::default()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn cliques_are_separate() {
        let g = synth_graph(SynthKind::Cliques { count: 2, size: 3 }, 0, &SynthOptions::default()).unwrap();
        let comp = weak_components(&g);
        assert_eq!(comp[..3], [comp[0]; 3]);
        assert_eq!(comp[3..], [comp[3]; 3]);
        assert_ne!(comp[0], comp[3]);
    }

    #[test]
    fn invalid_sizes() {
        assert!(synth_graph(SynthKind::Path(1), 0, &SynthOptions::default()).is_err());
        assert!(synth_graph(SynthKind::ScaleFree { n: 3, m0: 3 }, 0, &SynthOptions::default()).is_err());
        let odd = SynthOptions { cap_msat: 3, ..SynthOptions::default() };
        assert!(synth_graph(SynthKind::Path(3), 0, &odd).is_err());
    }

    #[test]
    fn capacity_range_is_even() {
        let opts = SynthOptions { capacity_range: Some((1_000, 50_001)), ..SynthOptions::default() };
        let g = synth_graph(SynthKind::ScaleFree { n: 50, m0: 2 }, 1, &opts).unwrap();
        for c in g.channels() {
            assert_eq!(c.capacity_msat() % 2, 0);
            assert!((1_000..=50_001).contains(&c.capacity_msat()));
        }
    }
}
