//! Seeded experiments: single-node join evaluation, network baseline and
//! sequential growth.
//!
//! Repetition `r` runs with seed `base_seed + r`. Each seed feeds several
//! independent ChaCha8 streams (strategy draws, batch A, batch B, ...), so
//! adding draws to one stream never shifts another.

use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{GraphError, Msat, MSAT_PER_SAT};
use crate::metrics::MetricsError;
use crate::routing::RoutingConfig;
use crate::strategies::{StrategyError, StrategyKind, DEFAULT_AMOUNT_HINT_MSAT, DEFAULT_CAP_MSAT};

mod experiment;
pub mod synth;

pub use experiment::{run_baseline, run_growth, run_join_eval, JOINER_ID};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid experiment spec: {0}")]
    Spec(String),
    #[error("strategy {strategy} failed for k = {k}, seed = {seed}: {source}")]
    Strategy {
        strategy: StrategyKind,
        k: usize,
        seed: u64,
        #[source]
        source: StrategyError,
    },
    #[error("graph of {nodes} nodes exceeds the configured limit of {limit}")]
    TooLarge { nodes: usize, limit: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A ChaCha8 generator keyed by `(seed, stream)`.
#[derive(Clone, Debug)]
pub struct RngStream(ChaCha8Rng);

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        RngStream(rng)
    }

    /// Uniform index in `0..n`. Drawn as a `u64` so the sequence does not
    /// depend on the platform's pointer width.
    pub fn index(&mut self, n: usize) -> usize {
        self.0.gen_range(0..n as u64) as usize
    }

    /// Uniform index in `0..n` other than `skip`.
    pub fn index_except(&mut self, n: usize, skip: usize) -> usize {
        let i = self.index(n - 1);
        if i >= skip {
            i + 1
        } else {
            i
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.gen()
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    JoinEval,
    Growth,
    Baseline,
}

impl FromStr for ExperimentKind {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "join_eval" | "join-eval" => Ok(ExperimentKind::JoinEval),
            "growth" => Ok(ExperimentKind::Growth),
            "baseline" => Ok(ExperimentKind::Baseline),
            _ => Err(SimError::Spec(format!("unknown experiment kind `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub strategy: StrategyKind,
    pub k_values: Vec<usize>,
    pub amounts_msat: Vec<Msat>,
    pub tx_per_batch: usize,
    pub repetitions: usize,
    pub base_seed: u64,
    pub cap_msat: Msat,
    /// Transaction size used for fee graphs inside strategies and for
    /// topology metrics.
    pub amount_hint_msat: Msat,
    pub growth_nodes: usize,
    pub growth_interval: usize,
    pub growth_k: usize,
    /// Payment size of the growth batches.
    pub growth_amount_msat: Msat,
    pub baseline_tx: usize,
    pub routing: RoutingConfig,
    /// Permit mbi in growth runs.
    pub allow_mbi_growth: bool,
    /// Refuse growth runs that would exceed this many nodes.
    pub max_nodes: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            kind: ExperimentKind::JoinEval,
            strategy: StrategyKind::Random,
            k_values: (1..=15).collect(),
            amounts_msat: vec![
                100 * MSAT_PER_SAT,
                10_000 * MSAT_PER_SAT,
                1_000_000 * MSAT_PER_SAT,
            ],
            tx_per_batch: 1000,
            repetitions: 30,
            base_seed: 0,
            cap_msat: DEFAULT_CAP_MSAT,
            amount_hint_msat: DEFAULT_AMOUNT_HINT_MSAT,
            growth_nodes: 5000,
            growth_interval: 500,
            growth_k: 10,
            growth_amount_msat: 100 * MSAT_PER_SAT,
            baseline_tx: 10_000,
            routing: RoutingConfig::default(),
            allow_mbi_growth: false,
            max_nodes: 50_000,
        }
    }
}

/// Parses `1..15`, `1-15`, `3` or `1,2,5` (parts may mix).
pub fn parse_k_values(s: &str) -> Result<Vec<usize>, SimError> {
    let bad = || SimError::Spec(format!("invalid k list `{s}`"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let range = part.split_once("..=").or_else(|| part.split_once("..")).or_else(|| part.split_once('-'));
        match range {
            Some((a, b)) => {
                let a: usize = a.trim().parse().map_err(|_| bad())?;
                let b: usize = b.trim().parse().map_err(|_| bad())?;
                if a > b {
                    return Err(bad());
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

/// Parses a satoshi amount (fractions down to the msat allowed) into msat.
pub fn parse_sat(s: &str) -> Result<Msat, SimError> {
    let bad = || SimError::Spec(format!("invalid satoshi amount `{s}`"));
    let s = s.trim();
    let (whole, frac) = s.split_once('.').unwrap_or((s, ""));
    if frac.len() > 3 || whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    let whole: Msat = if whole.is_empty() { 0 } else { whole.parse().map_err(|_| bad())? };
    let frac_msat: Msat = if frac.is_empty() {
        0
    } else {
        format!("{frac:0<3}").parse().map_err(|_| bad())?
    };
    whole
        .checked_mul(MSAT_PER_SAT)
        .and_then(|m| m.checked_add(frac_msat))
        .ok_or_else(bad)
}

impl ExperimentSpec {
    /// Applies one `key=value` setting. Amount keys take satoshi.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), SimError> {
        let v = value.trim();
        let num = |v: &str| -> Result<u64, SimError> {
            v.parse()
                .map_err(|_| SimError::Spec(format!("`{key}` expects an integer, got `{v}`")))
        };
        match key.trim() {
            "kind" => self.kind = v.parse()?,
            "strategy" => {
                self.strategy = v.parse().map_err(|e: StrategyError| SimError::Spec(e.to_string()))?
            }
            "k" | "k_values" => self.k_values = parse_k_values(v)?,
            "amount" | "amounts" | "amounts_sat" => {
                self.amounts_msat = v
                    .split(',')
                    .map(parse_sat)
                    .collect::<Result<_, _>>()?
            }
            "tx_per_batch" => self.tx_per_batch = num(v)? as usize,
            "repetitions" | "reps" => self.repetitions = num(v)? as usize,
            "base_seed" | "seed" => self.base_seed = num(v)?,
            "cap" | "cap_sat" => self.cap_msat = parse_sat(v)?,
            "amount_hint" | "amount_hint_sat" => self.amount_hint_msat = parse_sat(v)?,
            "growth_nodes" => self.growth_nodes = num(v)? as usize,
            "growth_interval" => self.growth_interval = num(v)? as usize,
            "growth_k" => self.growth_k = num(v)? as usize,
            "growth_amount" | "growth_amount_sat" => self.growth_amount_msat = parse_sat(v)?,
            "baseline_tx" => self.baseline_tx = num(v)? as usize,
            "retries" => self.routing.retries = num(v)? as u32,
            "cltv_penalty" => {
                self.routing.cltv_penalty_msat_per_block = v
                    .parse()
                    .map_err(|_| SimError::Spec(format!("`{key}` expects a number, got `{v}`")))?
            }
            "allow_mbi_growth" => {
                self.allow_mbi_growth = v
                    .parse()
                    .map_err(|_| SimError::Spec(format!("`{key}` expects true or false")))?
            }
            "max_nodes" => self.max_nodes = num(v)? as usize,
            other => return Err(SimError::Spec(format!("unknown setting `{other}`"))),
        }
        Ok(())
    }

    /// Applies a flat `key = value` file; `#` starts a comment.
    pub fn apply_config(&mut self, text: &str) -> Result<(), SimError> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| SimError::Spec(format!("line {}: expected key = value", no + 1)))?;
            self.set(k, v)
                .map_err(|e| SimError::Spec(format!("line {}: {e}", no + 1)))?;
        }
        Ok(())
    }

    pub fn load_config(&mut self, path: &Path) -> Result<(), SimError> {
        let text = std::fs::read_to_string(path).map_err(|source| SimError::Io {
            path: path.display().to_string(),
            source,
        })?;
        self.apply_config(&text)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let fail = |m: &str| Err(SimError::Spec(m.to_string()));
        if self.k_values.is_empty() || self.k_values.contains(&0) {
            return fail("k values must be at least 1");
        }
        if self.amounts_msat.is_empty() || self.amounts_msat.contains(&0) {
            return fail("amounts must be positive");
        }
        if self.tx_per_batch == 0 || self.repetitions == 0 || self.baseline_tx == 0 {
            return fail("batch sizes and repetitions must be at least 1");
        }
        if self.cap_msat == 0 || self.cap_msat % 2 != 0 {
            return fail("channel capacity must be positive and an even number of msat");
        }
        if self.amount_hint_msat == 0 || self.growth_amount_msat == 0 {
            return fail("amounts must be positive");
        }
        if self.growth_interval == 0 || self.growth_k == 0 {
            return fail("growth interval and k must be at least 1");
        }
        Ok(())
    }
}
