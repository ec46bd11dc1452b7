//! Topology and payment metrics, and the CSV record they are written as.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fee_graph::build_fee_graph;
use crate::graph::{Msat, NetworkGraph, NodeId};
use crate::paths::bfs_hops;
use crate::routing::{record_intermediaries, PaymentOutcome};
use crate::strategies::betweenness;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("gini of an empty list is undefined")]
    EmptyValues,
    #[error("gini needs non-negative finite values, got {0}")]
    InvalidValue(f64),
    #[error("graph is not connected; compute the diameter on its largest component")]
    Disconnected,
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("central point dominance needs at least 3 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("no payment outcomes to summarise")]
    EmptyBatch,
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Gini coefficient, `sum_i sum_j |x_i - x_j| / (2 n^2 mean)`, evaluated in
/// `O(n log n)` via the sorted form.
pub fn gini(values: &[f64]) -> Result<f64, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyValues);
    }
    if let Some(&bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(MetricsError::InvalidValue(bad));
    }
    let mut x = values.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let total: f64 = x.iter().sum();
    if total == 0.0 {
        return Ok(0.0);
    }
    // sum_{i<j} (x_j - x_i) = sum_j x_j (2j - n + 1), j zero-based
    let weighted: f64 = x
        .iter()
        .enumerate()
        .map(|(j, v)| v * (2.0 * j as f64 - n + 1.0))
        .sum();
    Ok((weighted / (n * total)).clamp(0.0, 1.0))
}

/// Longest shortest path in hops over the undirected channel projection.
pub fn diameter(g: &NetworkGraph) -> Result<u32, MetricsError> {
    if g.is_empty() {
        return Err(MetricsError::EmptyGraph);
    }
    let adj = g.undirected_projection();
    let mut best = 0;
    for s in 0..adj.len() {
        for d in bfs_hops(&adj, &[s]) {
            best = best.max(d.ok_or(MetricsError::Disconnected)?);
        }
    }
    Ok(best)
}

/// Scales raw directed betweenness into `[0, 1]` by `(n-1)(n-2)`.
pub fn normalize_betweenness(bc: &[f64]) -> Vec<f64> {
    let n = bc.len() as f64;
    let denom = (n - 1.0) * (n - 2.0);
    if denom <= 0.0 {
        return vec![0.0; bc.len()];
    }
    bc.iter().map(|b| b / denom).collect()
}

/// Freeman's central point dominance over normalized betweenness values.
pub fn central_point_dominance(normalized_bc: &[f64]) -> Result<f64, MetricsError> {
    let n = normalized_bc.len();
    if n < 3 {
        return Err(MetricsError::TooFewNodes(n));
    }
    let max = normalized_bc.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let spread: f64 = normalized_bc.iter().map(|b| max - b).sum();
    Ok((spread / (n - 1) as f64).clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BatchStats {
    pub total: usize,
    pub successes: usize,
    pub success_rate_pct: f64,
    /// Mean over successful payments of fee / amount, in percent. Zero when
    /// nothing succeeded; `fee_defined` tells the two cases apart.
    pub mean_fee_pct: f64,
    pub fee_defined: bool,
    /// Share of all payments that succeeded with the watched node as an
    /// intermediary, in percent.
    pub routed_share_pct: Option<f64>,
}

pub fn batch_stats(
    outcomes: &[PaymentOutcome],
    amount_msat: Msat,
    watched: Option<&NodeId>,
) -> Result<BatchStats, MetricsError> {
    if outcomes.is_empty() {
        return Err(MetricsError::EmptyBatch);
    }
    let total = outcomes.len();
    let ok: Vec<&PaymentOutcome> = outcomes.iter().filter(|o| o.success).collect();
    let fee_sum: f64 = ok
        .iter()
        .map(|o| o.fee_paid_msat as f64 / amount_msat as f64)
        .sum();
    let routed = watched.map(|w| {
        let hits = outcomes.iter().filter(|o| record_intermediaries(o, w)).count();
        100.0 * hits as f64 / total as f64
    });
    Ok(BatchStats {
        total,
        successes: ok.len(),
        success_rate_pct: 100.0 * ok.len() as f64 / total as f64,
        mean_fee_pct: if ok.is_empty() {
            0.0
        } else {
            100.0 * fee_sum / ok.len() as f64
        },
        fee_defined: !ok.is_empty(),
        routed_share_pct: routed,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Topology {
    pub degree_gini: f64,
    pub betweenness_gini: f64,
    pub diameter_hops: u32,
    pub central_point_dominance: f64,
}

/// Topology metrics of a connected graph. Degrees and betweenness are taken
/// on the fee graph at `amount_msat`.
pub fn topology(g: &NetworkGraph, amount_msat: Msat) -> Result<Topology, MetricsError> {
    let fg = build_fee_graph(g, amount_msat);
    let degrees: Vec<f64> = fg.degrees().into_iter().map(|d| d as f64).collect();
    let bc = betweenness(&fg);
    let norm = normalize_betweenness(&bc);
    Ok(Topology {
        degree_gini: gini(&degrees)?,
        betweenness_gini: gini(&bc)?,
        diameter_hops: diameter(g)?,
        central_point_dominance: central_point_dominance(&norm)?,
    })
}

/// One CSV row. Fields an experiment does not measure are left empty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub label: String,
    pub nodes_added: u64,
    pub degree_gini: Option<f64>,
    pub betweenness_gini: Option<f64>,
    pub diameter_hops: Option<f64>,
    pub central_point_dominance: Option<f64>,
    pub success_rate_pct: f64,
    pub mean_fee_pct: f64,
    pub routed_share_pct: Option<f64>,
    pub seed: u64,
}

impl MetricRecord {
    pub fn new(label: impl Into<String>, nodes_added: u64, seed: u64, stats: &BatchStats) -> Self {
        MetricRecord {
            label: label.into(),
            nodes_added,
            degree_gini: None,
            betweenness_gini: None,
            diameter_hops: None,
            central_point_dominance: None,
            success_rate_pct: stats.success_rate_pct,
            mean_fee_pct: stats.mean_fee_pct,
            routed_share_pct: stats.routed_share_pct,
            seed,
        }
    }

    pub fn with_topology(mut self, t: &Topology) -> Self {
        self.degree_gini = Some(t.degree_gini);
        self.betweenness_gini = Some(t.betweenness_gini);
        self.diameter_hops = Some(f64::from(t.diameter_hops));
        self.central_point_dominance = Some(t.central_point_dominance);
        self
    }

    /// Field-wise mean of `rows`, labelled `label`. Optional fields are
    /// averaged only when every row has them. The seed column holds the
    /// smallest seed of the group.
    pub fn mean(label: impl Into<String>, rows: &[MetricRecord]) -> MetricRecord {
        assert!(!rows.is_empty(), "mean of no rows");
        let n = rows.len() as f64;
        let avg = |f: fn(&MetricRecord) -> f64| rows.iter().map(f).sum::<f64>() / n;
        let avg_opt = |f: fn(&MetricRecord) -> Option<f64>| -> Option<f64> {
            rows.iter()
                .map(f)
                .collect::<Option<Vec<f64>>>()
                .map(|v| v.iter().sum::<f64>() / n)
        };
        MetricRecord {
            label: label.into(),
            nodes_added: rows[0].nodes_added,
            degree_gini: avg_opt(|r| r.degree_gini),
            betweenness_gini: avg_opt(|r| r.betweenness_gini),
            diameter_hops: avg_opt(|r| r.diameter_hops),
            central_point_dominance: avg_opt(|r| r.central_point_dominance),
            success_rate_pct: avg(|r| r.success_rate_pct),
            mean_fee_pct: avg(|r| r.mean_fee_pct),
            routed_share_pct: avg_opt(|r| r.routed_share_pct),
            seed: rows.iter().map(|r| r.seed).min().unwrap_or(0),
        }
    }
}

/// Writes `records` as CSV with a single header row.
pub fn write_csv<W: Write>(out: W, records: &[MetricRecord]) -> Result<(), MetricsError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record([
        "label",
        "nodes_added",
        "degree_gini",
        "betweenness_gini",
        "diameter_hops",
        "central_point_dominance",
        "success_rate_pct",
        "mean_fee_pct",
        "routed_share_pct",
        "seed",
    ])?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<MetricRecord>, MetricsError> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}
