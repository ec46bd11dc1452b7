use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{AttachmentRequest, CandidateSet, StrategyError};

/// `k` distinct peers drawn uniformly without replacement.
pub fn random_strategy(req: &AttachmentRequest<'_>) -> Result<CandidateSet, StrategyError> {
    let pool = req.candidate_pool()?;
    let mut rng = ChaCha8Rng::seed_from_u64(req.rng_seed);
    let peers = sample(&mut rng, pool.len(), req.k)
        .into_iter()
        .map(|i| req.graph.node_id(pool[i]).clone())
        .collect();
    Ok(CandidateSet {
        peers,
        per_step_objective: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::synth::{synth_graph, SynthKind, SynthOptions};

    #[test]
    fn forced_outcome() {
        let g = synth_graph(SynthKind::Path(2), 0, &SynthOptions::default()).unwrap();
        let joiner = g.node_id(0).clone();
        let c = random_strategy(&AttachmentRequest::new(&g, joiner, 1).with_seed(99)).unwrap();
        assert_eq!(c.peers, vec![g.node_id(1).clone()]);
    }

    #[test]
    fn seeded() {
        let g = synth_graph(SynthKind::Path(20), 0, &SynthOptions::default()).unwrap();
        let req = AttachmentRequest::new(&g, "j", 5).with_seed(42);
        assert_eq!(random_strategy(&req).unwrap(), random_strategy(&req).unwrap());
        let other = random_strategy(&req.clone().with_seed(43)).unwrap();
        assert_ne!(random_strategy(&req).unwrap(), other);
    }

    #[test]
    fn rejects_oversized_k() {
        let g = synth_graph(SynthKind::Path(3), 0, &SynthOptions::default()).unwrap();
        let joiner = g.node_id(2).clone();
        assert_eq!(
            random_strategy(&AttachmentRequest::new(&g, joiner, 3)),
            Err(StrategyError::KTooLarge { k: 3, limit: 2 })
        );
    }
}
