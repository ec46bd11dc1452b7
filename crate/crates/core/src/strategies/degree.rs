use super::{top_k_by_score, AttachmentRequest, CandidateSet, StrategyError};
use crate::fee_graph::build_fee_graph;

/// The `k` nodes with the most distinct fee-graph neighbors.
pub fn highest_degree_strategy(req: &AttachmentRequest<'_>) -> Result<CandidateSet, StrategyError> {
    let pool = req.candidate_pool()?;
    let fg = build_fee_graph(req.graph, req.amount_hint_msat);
    let score: Vec<f64> = fg.degrees().into_iter().map(|d| d as f64).collect();
    Ok(top_k_by_score(req.graph, &pool, &score, req.k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{BalanceSplit, ChannelPolicy, NetworkGraph, NodeId};
    use crate::simulator::synth::{synth_graph, SynthKind, SynthOptions};

    #[test]
    fn star_center() {
        let g = synth_graph(SynthKind::Star(5), 0, &SynthOptions::default()).unwrap();
        let c = highest_degree_strategy(&AttachmentRequest::new(&g, "j", 1)).unwrap();
        assert_eq!(c.peers, vec![g.node_id(0).clone()]);
        assert_eq!(c.per_step_objective, Some(vec![4.0]));
    }

    #[test]
    fn ties_are_lexicographic() {
        // a and b both have degree 3, c has degree 1... via a K4 minus edges
        let mut g = NetworkGraph::new();
        for n in ["c", "b", "a", "x", "y"] {
            g.add_node(n.into()).unwrap();
        }
        let p = ChannelPolicy::default();
        let cap = 2_000_000;
        for (u, v) in [("a", "x"), ("a", "y"), ("a", "b"), ("b", "x"), ("b", "y"), ("c", "x")] {
            g.add_channel(format!("{u}{v}"), &u.into(), &v.into(), cap, BalanceSplit::Equal, p, p)
                .unwrap();
        }
        let c = highest_degree_strategy(&AttachmentRequest::new(&g, "j", 1)).unwrap();
        assert_eq!(c.peers, vec![NodeId::from("a")]);
    }

    #[test]
    fn k_equals_all_others() {
        let g = synth_graph(SynthKind::Path(5), 0, &SynthOptions::default()).unwrap();
        let joiner = g.node_id(2).clone();
        let c = highest_degree_strategy(&AttachmentRequest::new(&g, joiner.clone(), 4)).unwrap();
        let mut got = c.peers.clone();
        got.sort();
        let mut want: Vec<NodeId> = g.nodes().iter().filter(|n| **n != joiner).cloned().collect();
        want.sort();
        assert_eq!(got, want);
    }
}
