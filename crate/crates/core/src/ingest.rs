//! Snapshot loading.
//!
//! Snapshots use the field names of LND's `describegraph` JSON. LND encodes
//! 64-bit integers as strings, so numeric fields accept either form. A
//! missing or `null` policy means that direction was never announced and is
//! treated as disabled.

use std::path::Path;
use std::str::FromStr;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::graph::{BalanceSplit, ChannelPolicy, Msat, NetworkGraph, NodeId, MSAT_PER_SAT};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed JSON at byte {offset} (line {line}, column {column}): {message}")]
    Json {
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("missing required field `{field}`")]
    MissingField { field: String },
    #[error("invalid value for `{field}`: {reason}")]
    InvalidField { field: String, reason: String },
    #[error("cannot read snapshot {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SnapshotNode {
    pub pub_key: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SnapshotPolicy {
    pub fee_base_msat: u64,
    pub fee_rate_milli_msat: u64,
    pub time_lock_delta: u32,
    pub disabled: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SnapshotEdge {
    pub channel_id: String,
    pub node1_pub: String,
    pub node2_pub: String,
    /// Satoshi.
    pub capacity: u64,
    pub node1_policy: Option<SnapshotPolicy>,
    pub node2_policy: Option<SnapshotPolicy>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SnapshotDocument {
    pub nodes: Vec<SnapshotNode>,
    pub edges: Vec<SnapshotEdge>,
}

impl SnapshotDocument {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("snapshot documents always serialize")
    }
}

/// How unknown private balances of snapshot channels are initialised.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BalanceMode {
    #[default]
    Equal,
    /// Local share drawn uniformly from `[0, capacity]`.
    UniformRandom(u64),
}

impl FromStr for BalanceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "equal" {
            return Ok(BalanceMode::Equal);
        }
        if let Some(seed) = s.strip_prefix("random:") {
            return seed
                .parse()
                .map(BalanceMode::UniformRandom)
                .map_err(|_| format!("invalid seed in balance mode `{s}`"));
        }
        Err(format!("unknown balance mode `{s}` (expected equal or random:<seed>)"))
    }
}

/// Counts of snapshot records dropped while building the graph.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub duplicate_nodes: usize,
    pub zero_capacity: usize,
    pub unknown_endpoint: usize,
    pub self_loops: usize,
    pub fully_disabled: usize,
}

impl IngestStats {
    pub fn skipped_edges(&self) -> usize {
        self.zero_capacity + self.unknown_endpoint + self.self_loops + self.fully_disabled
    }
}

fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let mut offset = 0;
    for (i, l) in text.split_inclusive('\n').enumerate() {
        if i + 1 == line {
            return (offset + column.saturating_sub(1)).min(text.len());
        }
        offset += l.len();
    }
    text.len()
}

fn field<'a>(obj: &'a Map<String, Value>, name: &str, ctx: &str) -> Result<&'a Value, IngestError> {
    match obj.get(name) {
        Some(Value::Null) | None => Err(IngestError::MissingField {
            field: format!("{ctx}.{name}"),
        }),
        Some(v) => Ok(v),
    }
}

fn as_string(v: &Value, path: &str) -> Result<String, IngestError> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        other => Err(IngestError::InvalidField {
            field: path.to_string(),
            reason: format!("expected a string, found {other}"),
        }),
    }
}

fn as_u64(v: &Value, path: &str) -> Result<u64, IngestError> {
    let parsed = match v {
        Value::Number(n) => n.as_u64(),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    };
    parsed.ok_or_else(|| IngestError::InvalidField {
        field: path.to_string(),
        reason: format!("expected a non-negative integer, found {v}"),
    })
}

fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, IngestError> {
    v.as_object().ok_or_else(|| IngestError::InvalidField {
        field: path.to_string(),
        reason: "expected an object".into(),
    })
}

fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, IngestError> {
    v.as_array().ok_or_else(|| IngestError::InvalidField {
        field: path.to_string(),
        reason: "expected an array".into(),
    })
}

fn parse_policy(v: Option<&Value>, path: &str) -> Result<Option<SnapshotPolicy>, IngestError> {
    let obj = match v {
        None | Some(Value::Null) => return Ok(None),
        Some(v) => as_object(v, path)?,
    };
    let fee_base_msat = as_u64(field(obj, "fee_base_msat", path)?, &format!("{path}.fee_base_msat"))?;
    let fee_rate_milli_msat = as_u64(
        field(obj, "fee_rate_milli_msat", path)?,
        &format!("{path}.fee_rate_milli_msat"),
    )?;
    let time_lock_delta = match obj.get("time_lock_delta") {
        None | Some(Value::Null) => 0,
        Some(v) => {
            let p = format!("{path}.time_lock_delta");
            u32::try_from(as_u64(v, &p)?).map_err(|_| IngestError::InvalidField {
                field: p,
                reason: "out of range".into(),
            })?
        }
    };
    let disabled = match obj.get("disabled") {
        None | Some(Value::Null) => false,
        Some(Value::Bool(b)) => *b,
        Some(other) => {
            return Err(IngestError::InvalidField {
                field: format!("{path}.disabled"),
                reason: format!("expected a boolean, found {other}"),
            })
        }
    };
    Ok(Some(SnapshotPolicy {
        fee_base_msat,
        fee_rate_milli_msat,
        time_lock_delta,
        disabled,
    }))
}

/// Parses a describegraph-style JSON document.
pub fn parse_snapshot(bytes: &[u8]) -> Result<SnapshotDocument, IngestError> {
    let text = std::str::from_utf8(bytes).map_err(|e| IngestError::Json {
        offset: e.valid_up_to(),
        line: 0,
        column: 0,
        message: "input is not valid UTF-8".into(),
    })?;
    let root: Value = serde_json::from_str(text).map_err(|e| IngestError::Json {
        offset: byte_offset(text, e.line(), e.column()),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let root = as_object(&root, "$")?;

    let mut doc = SnapshotDocument::default();
    for (i, n) in as_array(field(root, "nodes", "$")?, "$.nodes")?.iter().enumerate() {
        let ctx = format!("$.nodes[{i}]");
        let obj = as_object(n, &ctx)?;
        doc.nodes.push(SnapshotNode {
            pub_key: as_string(field(obj, "pub_key", &ctx)?, &format!("{ctx}.pub_key"))?,
        });
    }
    for (i, e) in as_array(field(root, "edges", "$")?, "$.edges")?.iter().enumerate() {
        let ctx = format!("$.edges[{i}]");
        let obj = as_object(e, &ctx)?;
        doc.edges.push(SnapshotEdge {
            channel_id: as_string(field(obj, "channel_id", &ctx)?, &format!("{ctx}.channel_id"))?,
            node1_pub: as_string(field(obj, "node1_pub", &ctx)?, &format!("{ctx}.node1_pub"))?,
            node2_pub: as_string(field(obj, "node2_pub", &ctx)?, &format!("{ctx}.node2_pub"))?,
            capacity: as_u64(field(obj, "capacity", &ctx)?, &format!("{ctx}.capacity"))?,
            node1_policy: parse_policy(obj.get("node1_policy"), &format!("{ctx}.node1_policy"))?,
            node2_policy: parse_policy(obj.get("node2_policy"), &format!("{ctx}.node2_policy"))?,
        });
    }
    Ok(doc)
}

pub fn load_snapshot(path: impl AsRef<Path>) -> Result<SnapshotDocument, IngestError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_snapshot(&bytes)
}

fn to_policy(p: &Option<SnapshotPolicy>) -> ChannelPolicy {
    match p {
        None => ChannelPolicy::disabled(),
        Some(p) => ChannelPolicy {
            base_fee_msat: p.fee_base_msat,
            prop_fee_millionths: p.fee_rate_milli_msat,
            cltv_delta: p.time_lock_delta,
            enabled: !p.disabled,
        },
    }
}

pub fn to_network(doc: &SnapshotDocument, mode: BalanceMode) -> NetworkGraph {
    to_network_with_stats(doc, mode).0
}

/// Builds the network, keeping every channel with at least one enabled
/// direction, and reports what was skipped.
pub fn to_network_with_stats(
    doc: &SnapshotDocument,
    mode: BalanceMode,
) -> (NetworkGraph, IngestStats) {
    let mut stats = IngestStats::default();
    let mut g = NetworkGraph::new();
    for n in &doc.nodes {
        if g.add_node(NodeId::from(n.pub_key.as_str())).is_err() {
            stats.duplicate_nodes += 1;
        }
    }
    let mut rng = match mode {
        BalanceMode::UniformRandom(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        BalanceMode::Equal => None,
    };
    for e in &doc.edges {
        if e.capacity == 0 {
            stats.zero_capacity += 1;
            continue;
        }
        let (Some(a), Some(b)) = (
            g.node_index(&NodeId::from(e.node1_pub.as_str())),
            g.node_index(&NodeId::from(e.node2_pub.as_str())),
        ) else {
            stats.unknown_endpoint += 1;
            continue;
        };
        if a == b {
            stats.self_loops += 1;
            continue;
        }
        let (pa, pb) = (to_policy(&e.node1_policy), to_policy(&e.node2_policy));
        if !pa.enabled && !pb.enabled {
            stats.fully_disabled += 1;
            continue;
        }
        let capacity_msat: Msat = e.capacity.saturating_mul(MSAT_PER_SAT);
        let split = match rng.as_mut() {
            None => BalanceSplit::Equal,
            Some(rng) => {
                let local = rng.gen_range(0..=capacity_msat);
                BalanceSplit::Explicit {
                    balance_a_msat: local,
                    balance_b_msat: capacity_msat - local,
                }
            }
        };
        g.add_channel_idx(e.channel_id.clone(), a, b, capacity_msat, split, pa, pb)
            .expect("endpoints and balances validated above");
    }
    if stats.skipped_edges() + stats.duplicate_nodes > 0 {
        warn!(
            "snapshot: skipped {} edges and {} duplicate nodes ({stats:?})",
            stats.skipped_edges(),
            stats.duplicate_nodes
        );
    }
    (g, stats)
}

/// Serialises a graph back to the snapshot format. Balances are not part
/// of the format and are dropped.
pub fn to_snapshot(g: &NetworkGraph) -> SnapshotDocument {
    let policy = |p: &ChannelPolicy| {
        Some(SnapshotPolicy {
            fee_base_msat: p.base_fee_msat,
            fee_rate_milli_msat: p.prop_fee_millionths,
            time_lock_delta: p.cltv_delta,
            disabled: !p.enabled,
        })
    };
    SnapshotDocument {
        nodes: g
            .nodes()
            .iter()
            .map(|n| SnapshotNode {
                pub_key: n.to_string(),
            })
            .collect(),
        edges: g
            .channels()
            .iter()
            .map(|c| SnapshotEdge {
                channel_id: c.channel_id.clone(),
                node1_pub: g.node_id(c.node_a()).to_string(),
                node2_pub: g.node_id(c.node_b()).to_string(),
                capacity: c.capacity_msat() / MSAT_PER_SAT,
                node1_policy: policy(&c.policy_a),
                node2_policy: policy(&c.policy_b),
            })
            .collect(),
    }
}

/// Component label of every node under undirected reachability over all
/// channels.
pub fn weak_components(g: &NetworkGraph) -> Vec<usize> {
    let n = g.node_count();
    let mut comp = vec![usize::MAX; n];
    let mut next = 0;
    let mut stack = Vec::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        comp[start] = next;
        stack.push(start);
        while let Some(v) = stack.pop() {
            for &c in g.incident(v) {
                let w = g.channel(c).other(v);
                if comp[w] == usize::MAX {
                    comp[w] = next;
                    stack.push(w);
                }
            }
        }
        next += 1;
    }
    comp
}

/// Induced subgraph on the largest weakly connected component. Equal sizes
/// go to the component holding the lexicographically smallest node id.
pub fn largest_component(g: &NetworkGraph) -> NetworkGraph {
    if g.is_empty() {
        return NetworkGraph::new();
    }
    let comp = weak_components(g);
    let count = comp.iter().max().map_or(0, |m| m + 1);
    let mut size = vec![0usize; count];
    let mut smallest: Vec<Option<&NodeId>> = vec![None; count];
    for (v, &c) in comp.iter().enumerate() {
        size[c] += 1;
        let id = g.node_id(v);
        if smallest[c].map_or(true, |s| id < s) {
            smallest[c] = Some(id);
        }
    }
    let best = (0..count)
        .min_by(|&x, &y| size[y].cmp(&size[x]).then(smallest[x].cmp(&smallest[y])))
        .expect("non-empty graph has a component");
    if size[best] == g.node_count() {
        return g.clone();
    }

    let mut out = NetworkGraph::new();
    let mut remap = vec![usize::MAX; g.node_count()];
    for v in (0..g.node_count()).filter(|&v| comp[v] == best) {
        remap[v] = out.add_node(g.node_id(v).clone()).expect("ids are unique");
    }
    for ch in g.channels().iter().filter(|c| comp[c.node_a()] == best) {
        out.add_channel_idx(
            ch.channel_id.clone(),
            remap[ch.node_a()],
            remap[ch.node_b()],
            ch.capacity_msat(),
            BalanceSplit::Explicit {
                balance_a_msat: ch.balance_a_msat(),
                balance_b_msat: ch.balance_b_msat(),
            },
            ch.policy_a,
            ch.policy_b,
        )
        .expect("channel copied from a valid graph");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::bfs_hops;
    use proptest::prelude::*;

    const MINIMAL: &str = r#"{
        "nodes": [{"pub_key": "02aa"}, {"pub_key": "03bb"}],
        "edges": [{
            "channel_id": "700000x1x0",
            "node1_pub": "02aa",
            "node2_pub": "03bb",
            "capacity": "10000",
            "node1_policy": {"fee_base_msat": "1000", "fee_rate_milli_msat": "1",
                             "time_lock_delta": 40, "disabled": false},
            "node2_policy": null
        }]
    }"#;

    #[test]
    fn minimal_document() {
        let doc = parse_snapshot(MINIMAL.as_bytes()).unwrap();
        assert_eq!(doc.nodes.len(), 2);
        assert_eq!(doc.edges.len(), 1);
        assert_eq!(doc.edges[0].capacity, 10_000);
        assert!(doc.edges[0].node2_policy.is_none());

        let g = to_network(&doc, BalanceMode::Equal);
        assert_eq!(g.channel_count(), 1);
        let ch = &g.channels()[0];
        assert_eq!(ch.balance_a_msat(), 5_000_000);
        assert_eq!(ch.balance_b_msat(), 5_000_000);
        assert!(ch.forwards(0, 1000));
        assert!(!ch.forwards(1, 1000));
        assert_eq!(ch.policy_b, ChannelPolicy::disabled());
    }

    #[test]
    fn truncated_input_reports_offset() {
        let cut = &MINIMAL[..120];
        match parse_snapshot(cut.as_bytes()) {
            Err(IngestError::Json { offset, .. }) => assert!(offset <= cut.len()),
            other => panic!("expected a JSON error, got {other:?}"),
        }
        match parse_snapshot(b"{\"nodes\": [}") {
            Err(IngestError::Json { offset, line, .. }) => {
                assert_eq!(line, 1);
                assert_eq!(offset, 11);
            }
            other => panic!("expected a JSON error, got {other:?}"),
        }
    }

    #[test]
    fn missing_field_is_named() {
        let text = MINIMAL.replace("\"capacity\": \"10000\",", "");
        match parse_snapshot(text.as_bytes()) {
            Err(IngestError::MissingField { field }) => assert_eq!(field, "$.edges[0].capacity"),
            other => panic!("expected a missing field, got {other:?}"),
        }
        match parse_snapshot(br#"{"edges": []}"#) {
            Err(IngestError::MissingField { field }) => assert_eq!(field, "$.nodes"),
            other => panic!("expected a missing field, got {other:?}"),
        }
    }

    #[test]
    fn skips_invalid_edges() {
        let text = r#"{"nodes": [{"pub_key": "a"}, {"pub_key": "b"}, {"pub_key": "a"}],
            "edges": [
              {"channel_id": 1, "node1_pub": "a", "node2_pub": "b", "capacity": 0},
              {"channel_id": 2, "node1_pub": "a", "node2_pub": "zz", "capacity": 5},
              {"channel_id": 3, "node1_pub": "a", "node2_pub": "a", "capacity": 5},
              {"channel_id": 4, "node1_pub": "a", "node2_pub": "b", "capacity": 5},
              {"channel_id": 5, "node1_pub": "a", "node2_pub": "b", "capacity": 5,
               "node1_policy": {"fee_base_msat": 0, "fee_rate_milli_msat": 0}}
            ]}"#;
        let doc = parse_snapshot(text.as_bytes()).unwrap();
        let (g, stats) = to_network_with_stats(&doc, BalanceMode::Equal);
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.channel_count(), 1);
        assert_eq!(g.channels()[0].channel_id, "5");
        assert_eq!(
            stats,
            IngestStats {
                duplicate_nodes: 1,
                zero_capacity: 1,
                unknown_endpoint: 1,
                self_loops: 1,
                fully_disabled: 1,
            }
        );
    }

    #[test]
    fn random_balances_are_seeded() {
        let doc = parse_snapshot(MINIMAL.as_bytes()).unwrap();
        let a = to_network(&doc, BalanceMode::UniformRandom(7));
        let b = to_network(&doc, BalanceMode::UniformRandom(7));
        assert_eq!(a, b);
        a.check_consistency().unwrap();
        assert_eq!("random:7".parse::<BalanceMode>(), Ok(BalanceMode::UniformRandom(7)));
        assert!("random:x".parse::<BalanceMode>().is_err());
    }

    fn components(sizes: &[(&str, usize)]) -> NetworkGraph {
        let mut g = NetworkGraph::new();
        let p = ChannelPolicy::default();
        for (prefix, n) in sizes {
            for i in 0..*n {
                g.add_node(format!("{prefix}{i}").into()).unwrap();
            }
            for i in 1..*n {
                g.add_channel(
                    format!("{prefix}-{i}"),
                    &format!("{prefix}{}", i - 1).into(),
                    &format!("{prefix}{i}").into(),
                    2000,
                    BalanceSplit::Equal,
                    p,
                    p,
                )
                .unwrap();
            }
        }
        g
    }

    #[test]
    fn largest_component_cases() {
        let connected = components(&[("a", 4)]);
        assert_eq!(largest_component(&connected), connected);

        let g = components(&[("x", 3), ("y", 5)]);
        let lcc = largest_component(&g);
        assert_eq!(lcc.node_count(), 5);
        assert!(lcc.nodes().iter().all(|n| n.as_str().starts_with('y')));
        lcc.check_consistency().unwrap();

        let tie = components(&[("q", 4), ("b", 4)]);
        let lcc = largest_component(&tie);
        assert!(lcc.nodes().iter().all(|n| n.as_str().starts_with('b')));

        assert!(largest_component(&NetworkGraph::new()).is_empty());
    }

    fn arb_doc() -> impl Strategy<Value = SnapshotDocument> {
        let policy = prop::option::of((0u64..5000, 0u64..5000, 0u32..200, any::<bool>()).prop_map(
            |(b, r, t, d)| SnapshotPolicy {
                fee_base_msat: b,
                fee_rate_milli_msat: r,
                time_lock_delta: t,
                disabled: d,
            },
        ));
        (
            2usize..10,
            prop::collection::vec((0usize..10, 0usize..10, 1u64..1_000_000, policy.clone(), policy), 0..25),
        )
            .prop_map(|(n, edges)| SnapshotDocument {
                nodes: (0..n).map(|i| SnapshotNode { pub_key: format!("k{i}") }).collect(),
                edges: edges
                    .into_iter()
                    .enumerate()
                    .map(|(i, (a, b, cap, p1, p2))| SnapshotEdge {
                        channel_id: i.to_string(),
                        node1_pub: format!("k{}", a % n),
                        node2_pub: format!("k{}", b % n),
                        capacity: cap,
                        node1_policy: p1,
                        node2_policy: p2,
                    })
                    .collect(),
            })
    }

    proptest! {
        #[test]
        fn snapshot_round_trip(doc in arb_doc()) {
            let g = to_network(&doc, BalanceMode::Equal);
            let json = to_snapshot(&g).to_json();
            let again = to_network(&parse_snapshot(json.as_bytes()).unwrap(), BalanceMode::Equal);
            prop_assert_eq!(again, g);
        }

        #[test]
        fn lcc_is_connected(doc in arb_doc()) {
            let lcc = largest_component(&to_network(&doc, BalanceMode::Equal));
            if !lcc.is_empty() {
                let adj: Vec<Vec<usize>> = (0..lcc.node_count()).map(|v| lcc.peers(v)).collect();
                prop_assert!(bfs_hops(&adj, &[0]).iter().all(Option::is_some));
            }
        }
    }
}
