use rayon::prelude::*;

use super::{ExperimentSpec, RngStream, SimError};
use crate::graph::{BalanceSplit, ChannelPolicy, Msat, NetworkGraph, NodeId, MSAT_PER_SAT};
use crate::metrics::{batch_stats, topology, MetricRecord, Topology};
use crate::routing::{execute_payment_idx, PaymentOutcome, RoutingConfig};
use crate::strategies::{AttachmentRequest, CandidateSet, StrategyKind};

/// Id given to the joining node in join evaluations (suffixed if taken).
pub const JOINER_ID: &str = "joiner";

const STREAM_BATCH_A: u64 = 1;
const STREAM_BATCH_B: u64 = 2;
const STREAM_BASELINE: u64 = 3;
const STREAM_GROWTH_STRATEGY: u64 = 4;
/// Growth batches use `STREAM_GROWTH_BATCH + checkpoint index`.
const STREAM_GROWTH_BATCH: u64 = 16;

fn select(
    strategy: StrategyKind,
    req: &AttachmentRequest<'_>,
) -> Result<CandidateSet, SimError> {
    strategy.select(req).map_err(|source| SimError::Strategy {
        strategy,
        k: req.k,
        seed: req.rng_seed,
        source,
    })
}

/// Opens one equal-split default-policy channel from `joiner` to each peer.
fn attach(g: &mut NetworkGraph, joiner: usize, peers: &[NodeId], cap_msat: Msat) -> Result<(), SimError> {
    let p = ChannelPolicy::default();
    for peer in peers {
        let u = g.require_node(peer)?;
        let id = format!("{}|{}", g.node_id(joiner), peer);
        g.add_channel_idx(id, joiner, u, cap_msat, BalanceSplit::Equal, p, p)?;
    }
    Ok(())
}

fn random_pairs(
    g: &mut NetworkGraph,
    rng: &mut RngStream,
    count: usize,
    amount_msat: Msat,
    cfg: &RoutingConfig,
) -> Vec<PaymentOutcome> {
    let n = g.node_count();
    (0..count)
        .map(|_| {
            let s = rng.index(n);
            let t = rng.index_except(n, s);
            execute_payment_idx(g, s, t, amount_msat, cfg)
        })
        .collect()
}

fn from_source(
    g: &mut NetworkGraph,
    source: usize,
    rng: &mut RngStream,
    count: usize,
    amount_msat: Msat,
    cfg: &RoutingConfig,
) -> Vec<PaymentOutcome> {
    let n = g.node_count();
    (0..count)
        .map(|_| {
            let t = rng.index_except(n, source);
            execute_payment_idx(g, source, t, amount_msat, cfg)
        })
        .collect()
}

/// Sorts detail rows by `key` and appends a mean row after each group.
fn with_means<K: Ord + Copy>(mut rows: Vec<(K, MetricRecord)>, mean_label: impl Fn(&MetricRecord) -> String) -> Vec<MetricRecord> {
    rows.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.seed.cmp(&b.1.seed)));
    let mut out = Vec::with_capacity(rows.len() + rows.len() / 2 + 1);
    let mut i = 0;
    while i < rows.len() {
        let j = i + rows[i..].iter().take_while(|r| r.0 == rows[i].0).count();
        let group: Vec<MetricRecord> = rows[i..j].iter().map(|r| r.1.clone()).collect();
        let mean = MetricRecord::mean(mean_label(&group[0]), &group);
        out.extend(group);
        out.push(mean);
        i = j;
    }
    out
}

fn sat_label(msat: Msat) -> String {
    if msat % MSAT_PER_SAT == 0 {
        (msat / MSAT_PER_SAT).to_string()
    } else {
        format!("{}.{:03}", msat / MSAT_PER_SAT, msat % MSAT_PER_SAT)
    }
}

fn fresh_joiner_id(g: &NetworkGraph) -> NodeId {
    let mut id = NodeId::from(JOINER_ID);
    let mut i = 1;
    while g.contains(&id) {
        id = NodeId::new(format!("{JOINER_ID}-{i}"));
        i += 1;
    }
    id
}

/// Attaches a new node with each k in `spec.k_values` and measures, per
/// (k, amount, repetition): the success rate and fees of payments sent by
/// the new node (batch A), and the share of random payments it forwards
/// (batch B). Every cell starts from its own clone of `graph`.
pub fn run_join_eval(spec: &ExperimentSpec, graph: &NetworkGraph) -> Result<Vec<MetricRecord>, SimError> {
    spec.validate()?;
    if graph.is_empty() {
        return Err(SimError::Spec("graph has no nodes".into()));
    }
    let strategy = spec.strategy;
    let joiner = fresh_joiner_id(graph);
    let k_max = *spec.k_values.iter().max().expect("validated");
    let request = |k: usize, seed: u64| {
        AttachmentRequest::new(graph, joiner.clone(), k)
            .with_cap(spec.cap_msat)
            .with_amount_hint(spec.amount_hint_msat)
            .with_seed(seed)
    };
    // Greedy strategies ignore the seed and are prefix-stable, so one run
    // at the largest k serves every k.
    let cached = if strategy.is_deterministic() {
        Some(select(strategy, &request(k_max, spec.base_seed))?)
    } else {
        None
    };

    let per_rep: Vec<Result<Vec<((usize, Msat), MetricRecord)>, SimError>> = (0..spec.repetitions as u64)
        .into_par_iter()
        .map(|r| {
            let seed = spec.base_seed.wrapping_add(r);
            let mut rows = Vec::new();
            for &k in &spec.k_values {
                let peers = match &cached {
                    Some(c) => c.prefix(k),
                    None => select(strategy, &request(k, seed))?,
                };
                let mut attached = graph.clone();
                let j = attached.add_node(joiner.clone())?;
                attach(&mut attached, j, &peers.peers, spec.cap_msat)?;
                for &amount in &spec.amounts_msat {
                    let mut ga = attached.clone();
                    let a = from_source(
                        &mut ga,
                        j,
                        &mut RngStream::new(seed, STREAM_BATCH_A),
                        spec.tx_per_batch,
                        amount,
                        &spec.routing,
                    );
                    let mut gb = attached.clone();
                    let b = random_pairs(
                        &mut gb,
                        &mut RngStream::new(seed, STREAM_BATCH_B),
                        spec.tx_per_batch,
                        amount,
                        &spec.routing,
                    );
                    let sa = batch_stats(&a, amount, None)?;
                    let sb = batch_stats(&b, amount, Some(&joiner))?;
                    let mut rec = MetricRecord::new(
                        format!("join-eval/{strategy}/k={k}/amount={}", sat_label(amount)),
                        1,
                        seed,
                        &sa,
                    );
                    rec.routed_share_pct = sb.routed_share_pct;
                    rows.push(((k, amount), rec));
                }
            }
            Ok(rows)
        })
        .collect();

    let mut rows = Vec::new();
    for r in per_rep {
        rows.extend(r?);
    }
    Ok(with_means(rows, |r| format!("{}/mean", r.label)))
}

/// Random-pair payments on a clone of `graph` at `amount_msat`, plus the
/// topology metrics when the graph is connected.
pub fn run_baseline(spec: &ExperimentSpec, graph: &NetworkGraph, amount_msat: Msat) -> Result<MetricRecord, SimError> {
    spec.validate()?;
    if graph.node_count() < 2 {
        return Err(SimError::Spec("baseline needs at least two nodes".into()));
    }
    let mut g = graph.clone();
    let outcomes = random_pairs(
        &mut g,
        &mut RngStream::new(spec.base_seed, STREAM_BASELINE),
        spec.baseline_tx,
        amount_msat,
        &spec.routing,
    );
    let stats = batch_stats(&outcomes, amount_msat, None)?;
    let rec = MetricRecord::new(
        format!("baseline/amount={}", sat_label(amount_msat)),
        0,
        spec.base_seed,
        &stats,
    );
    Ok(match topology(graph, spec.amount_hint_msat) {
        Ok(t) => rec.with_topology(&t),
        Err(e) => {
            log::warn!("baseline topology metrics skipped: {e}");
            rec
        }
    })
}

/// Number of joins after which metrics are recorded.
fn checkpoints(spec: &ExperimentSpec) -> Vec<usize> {
    let mut c: Vec<usize> = (0..=spec.growth_nodes).step_by(spec.growth_interval).collect();
    if c.last() != Some(&spec.growth_nodes) {
        c.push(spec.growth_nodes);
    }
    c
}

/// Grows `graph` by `spec.growth_nodes` joins, returning a copy at every
/// checkpoint.
fn grow(spec: &ExperimentSpec, graph: &NetworkGraph, seed: u64) -> Result<Vec<(usize, NetworkGraph)>, SimError> {
    let marks = checkpoints(spec);
    let mut g = graph.clone();
    let mut seeds = RngStream::new(seed, STREAM_GROWTH_STRATEGY);
    let mut snaps = vec![(0, g.clone())];
    for i in 1..=spec.growth_nodes {
        let id = NodeId::new(format!("synth-{i:05}"));
        if g.contains(&id) {
            return Err(SimError::Spec(format!("graph already contains {id}")));
        }
        let k = spec.growth_k.min(g.node_count());
        let req = AttachmentRequest::new(&g, id.clone(), k)
            .with_cap(spec.cap_msat)
            .with_amount_hint(spec.amount_hint_msat)
            .with_seed(seeds.next_u64());
        let peers = select(spec.strategy, &req)?.peers;
        let j = g.add_node(id)?;
        attach(&mut g, j, &peers, spec.cap_msat)?;
        if marks.binary_search(&i).is_ok() {
            snaps.push((i, g.clone()));
        }
    }
    Ok(snaps)
}

fn topologies(snaps: &[(usize, NetworkGraph)], amount_msat: Msat) -> Result<Vec<Topology>, SimError> {
    snaps
        .par_iter()
        .map(|(_, g)| topology(g, amount_msat).map_err(SimError::from))
        .collect()
}

/// Sequential network growth under one strategy. Every `growth_interval`
/// joins the topology is measured and a batch of random payments runs on a
/// copy of the current graph.
pub fn run_growth(spec: &ExperimentSpec, graph: &NetworkGraph) -> Result<Vec<MetricRecord>, SimError> {
    spec.validate()?;
    if spec.strategy == StrategyKind::Mbi && !spec.allow_mbi_growth {
        return Err(SimError::Spec(
            "mbi is excluded from growth runs; enable allow_mbi_growth for small graphs".into(),
        ));
    }
    if graph.node_count() < 2 {
        return Err(SimError::Spec("growth needs at least two nodes".into()));
    }
    let total = graph.node_count() + spec.growth_nodes;
    if total > spec.max_nodes {
        return Err(SimError::TooLarge {
            nodes: total,
            limit: spec.max_nodes,
        });
    }
    let label = format!("growth/{}", spec.strategy);

    let shared = if spec.strategy.is_deterministic() {
        let snaps = grow(spec, graph, spec.base_seed)?;
        let topo = topologies(&snaps, spec.amount_hint_msat)?;
        Some((snaps, topo))
    } else {
        None
    };

    let per_rep: Vec<Result<Vec<(usize, MetricRecord)>, SimError>> = (0..spec.repetitions as u64)
        .into_par_iter()
        .map(|r| {
            let seed = spec.base_seed.wrapping_add(r);
            let own;
            let (snaps, topo) = match &shared {
                Some((s, t)) => (s, t),
                None => {
                    let s = grow(spec, graph, seed)?;
                    let t = topologies(&s, spec.amount_hint_msat)?;
                    own = (s, t);
                    (&own.0, &own.1)
                }
            };
            let mut rows = Vec::with_capacity(snaps.len());
            for (ci, ((added, g), t)) in snaps.iter().zip(topo).enumerate() {
                let mut gb = g.clone();
                let outcomes = random_pairs(
                    &mut gb,
                    &mut RngStream::new(seed, STREAM_GROWTH_BATCH + ci as u64),
                    spec.tx_per_batch,
                    spec.growth_amount_msat,
                    &spec.routing,
                );
                let stats = batch_stats(&outcomes, spec.growth_amount_msat, None)?;
                let rec = MetricRecord::new(label.clone(), *added as u64, seed, &stats).with_topology(t);
                rows.push((*added, rec));
            }
            Ok(rows)
        })
        .collect();

    let mut rows = Vec::new();
    for r in per_rep {
        rows.extend(r?);
    }
    Ok(with_means(rows, |r| format!("{}/mean", r.label)))
}
