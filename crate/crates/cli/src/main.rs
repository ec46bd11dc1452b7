//! `pcnsim`: inspect snapshots, suggest channel peers and run experiments.
//!
//! Amounts and capacities on the command line are in satoshi. Exit codes:
//! 0 success, 2 usage or spec error, 3 input data error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pcnsim_core::bench::{bench, linear_fit_r2, write_bench_csv};
use pcnsim_core::ingest::{largest_component, load_snapshot, to_network_with_stats, BalanceMode, IngestError};
use pcnsim_core::metrics::{topology, write_csv, MetricRecord};
use pcnsim_core::routing::{find_route, RoutingConfig};
use pcnsim_core::simulator::synth::{synth_graph, SynthKind, SynthOptions};
use pcnsim_core::simulator::{
    parse_k_values, parse_sat, run_baseline, run_growth, run_join_eval, ExperimentSpec, SimError,
};
use pcnsim_core::strategies::{AttachmentRequest, StrategyError, StrategyKind};
use pcnsim_core::{Msat, NetworkGraph, NodeId, MSAT_PER_SAT};

enum CliError {
    Usage(String),
    Data(String),
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<StrategyError> for CliError {
    fn from(e: StrategyError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "pcnsim", version, about = "Payment channel network simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a snapshot and report what was kept and skipped.
    IngestCheck(GraphArgs),
    /// Print the peers a strategy would open channels to.
    Suggest {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        strategy: String,
        #[arg(long, default_value = "1")]
        k: String,
        /// Per-channel capacity in sat.
        #[arg(long, default_value = "1000000")]
        cap: String,
        /// Transaction size in sat used to build fee graphs.
        #[arg(long, default_value = "100")]
        amount: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Id of the joining node.
        #[arg(long, default_value = "joiner")]
        joiner: String,
    },
    /// Find the cheapest route for a payment (no balances are touched).
    Route {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long)]
        source: String,
        #[arg(long)]
        dest: String,
        #[arg(long)]
        amount: String,
        #[arg(long, default_value_t = 0.0)]
        cltv_penalty: f64,
    },
    /// Success rate and fees of random payments on the unmodified network.
    Baseline {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Attach one node per strategy and measure its payments.
    JoinEval {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        exp: ExperimentArgs,
    },
    /// Grow the network node by node under one strategy.
    Growth {
        #[command(flatten)]
        graph: GraphArgs,
        #[command(flatten)]
        exp: ExperimentArgs,
        #[arg(long)]
        growth_nodes: Option<usize>,
        #[arg(long)]
        interval: Option<usize>,
        #[arg(long)]
        growth_k: Option<usize>,
        /// Allow mbi despite its cost.
        #[arg(long)]
        allow_mbi: bool,
    },
    /// Topology metrics of the largest component.
    Metrics {
        #[command(flatten)]
        graph: GraphArgs,
        /// Transaction size in sat for the fee graph.
        #[arg(long, default_value = "100")]
        amount: String,
    },
    /// Time strategies (median of three runs per cell).
    Bench {
        #[command(flatten)]
        graph: GraphArgs,
        /// Comma-separated strategy names.
        #[arg(long)]
        strategy: String,
        #[arg(long, default_value = "1")]
        k: String,
        #[arg(long, default_value = "1000000")]
        cap: String,
        #[arg(long, default_value = "100")]
        amount: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct GraphArgs {
    /// Snapshot in describegraph JSON.
    #[arg(long, conflicts_with = "synthetic")]
    snapshot: Option<PathBuf>,
    /// Synthetic graph instead of a snapshot: scale-free:N:M0[:SEED],
    /// path:N, star:N, cycle:N or cliques:COUNT:SIZE.
    #[arg(long)]
    synthetic: Option<String>,
    /// Initial balances of snapshot channels: equal or random:<seed>.
    #[arg(long, default_value = "equal")]
    balance_mode: String,
    /// Keep all components instead of only the largest one.
    #[arg(long)]
    keep_all_components: bool,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Flat key = value file; flags given on the command line win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    k: Option<String>,
    /// Comma-separated payment amounts in sat.
    #[arg(long)]
    amount: Option<String>,
    /// Per-channel capacity in sat.
    #[arg(long)]
    cap: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    /// Payments per batch.
    #[arg(long)]
    tx: Option<usize>,
    #[arg(long)]
    retries: Option<u32>,
    #[arg(long)]
    cltv_penalty: Option<f64>,
    /// CSV destination; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ExperimentArgs {
    fn spec(&self) -> Result<ExperimentSpec> {
        let mut spec = ExperimentSpec::default();
        if let Some(p) = &self.config {
            spec.load_config(p)?;
        }
        let pairs = [
            ("strategy", self.strategy.clone()),
            ("k", self.k.clone()),
            ("amounts_sat", self.amount.clone()),
            ("cap_sat", self.cap.clone()),
            ("seed", self.seed.map(|v| v.to_string())),
            ("reps", self.reps.map(|v| v.to_string())),
            ("tx_per_batch", self.tx.map(|v| v.to_string())),
            ("retries", self.retries.map(|v| v.to_string())),
            ("cltv_penalty", self.cltv_penalty.map(|v| v.to_string())),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                spec.set(k, &v)?;
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn parse_synthetic(s: &str) -> Result<(SynthKind, u64)> {
    let bad = || CliError::Usage(format!("invalid synthetic graph `{s}`"));
    let parts: Vec<&str> = s.split(':').collect();
    let num = |i: usize| -> Result<usize> { parts.get(i).ok_or_else(bad)?.parse().map_err(|_| bad()) };
    let seed = |i: usize| -> Result<u64> {
        parts.get(i).map_or(Ok(0), |p| p.parse().map_err(|_| bad()))
    };
    let (kind, max_parts) = match parts[0] {
        "scale-free" => (SynthKind::ScaleFree { n: num(1)?, m0: num(2)? }, 4),
        "path" => (SynthKind::Path(num(1)?), 2),
        "star" => (SynthKind::Star(num(1)?), 2),
        "cycle" => (SynthKind::Cycle(num(1)?), 2),
        "cliques" => (SynthKind::Cliques { count: num(1)?, size: num(2)? }, 3),
        _ => return Err(bad()),
    };
    if parts.len() > max_parts {
        return Err(bad());
    }
    Ok((kind, if max_parts == 4 { seed(3)? } else { 0 }))
}

impl GraphArgs {
    fn load(&self) -> Result<NetworkGraph> {
        let mode: BalanceMode = self.balance_mode.parse().map_err(CliError::Usage)?;
        let g = match (&self.snapshot, &self.synthetic) {
            (Some(path), None) => {
                let doc = load_snapshot(path)?;
                to_network_with_stats(&doc, mode).0
            }
            (None, Some(s)) => {
                let (kind, seed) = parse_synthetic(s)?;
                synth_graph(kind, seed, &SynthOptions::default())?
            }
            _ => return Err(CliError::Usage("give exactly one of --snapshot or --synthetic".into())),
        };
        if g.is_empty() {
            return Err(CliError::Data("graph has no nodes".into()));
        }
        Ok(if self.keep_all_components { g } else { largest_component(&g) })
    }
}

fn sat(msat: Msat) -> String {
    format!("{}.{:03}", msat / MSAT_PER_SAT, msat % MSAT_PER_SAT)
}

fn fmt_f(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        format!("{v:.6}")
    }
}

fn output(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit_csv(out: &Option<PathBuf>, rows: &[MetricRecord]) -> Result<()> {
    let mut w = output(out)?;
    write_csv(&mut w, rows).map_err(|e| CliError::Data(e.to_string()))?;
    w.flush()?;
    Ok(())
}

fn parse_strategy(s: &str) -> Result<StrategyKind> {
    Ok(s.trim().parse()?)
}

fn single_k(s: &str) -> Result<usize> {
    let ks = parse_k_values(s)?;
    match ks.as_slice() {
        [k] => Ok(*k),
        _ => Err(CliError::Usage(format!("expected a single k, got `{s}`"))),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::IngestCheck(graph) => {
            let mode: BalanceMode = graph.balance_mode.parse().map_err(CliError::Usage)?;
            let Some(path) = &graph.snapshot else {
                return Err(CliError::Usage("ingest-check needs --snapshot".into()));
            };
            let doc = load_snapshot(path)?;
            let (g, stats) = to_network_with_stats(&doc, mode);
            let lcc = largest_component(&g);
            println!("nodes\t{}", g.node_count());
            println!("channels\t{}", g.channel_count());
            println!("duplicate_nodes\t{}", stats.duplicate_nodes);
            println!("skipped_zero_capacity\t{}", stats.zero_capacity);
            println!("skipped_unknown_endpoint\t{}", stats.unknown_endpoint);
            println!("skipped_self_loop\t{}", stats.self_loops);
            println!("skipped_fully_disabled\t{}", stats.fully_disabled);
            println!("largest_component_nodes\t{}", lcc.node_count());
            println!("largest_component_channels\t{}", lcc.channel_count());
            println!("total_capacity_sat\t{}", g.total_capacity() / MSAT_PER_SAT as u128);
        }
        Command::Suggest { graph, strategy, k, cap, amount, seed, joiner } => {
            let kind = parse_strategy(&strategy)?;
            let k = single_k(&k)?;
            let cap = parse_sat(&cap)?;
            let amount = parse_sat(&amount)?;
            let g = graph.load()?;
            let req = AttachmentRequest::new(&g, joiner, k)
                .with_cap(cap)
                .with_amount_hint(amount)
                .with_seed(seed);
            let c = kind.select(&req)?;
            let mut out = io::stdout().lock();
            for (i, p) in c.peers.iter().enumerate() {
                let obj = c
                    .per_step_objective
                    .as_ref()
                    .map_or_else(|| "-".to_string(), |o| fmt_f(o[i]));
                writeln!(out, "{}\t{}\t{}", i + 1, p, obj)?;
            }
        }
        Command::Route { graph, source, dest, amount, cltv_penalty } => {
            let amount = parse_sat(&amount)?;
            let g = graph.load()?;
            let cfg = RoutingConfig {
                cltv_penalty_msat_per_block: cltv_penalty,
                ..RoutingConfig::default()
            };
            let route = find_route(&g, &NodeId::from(source), &NodeId::from(dest), amount, &cfg)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let mut out = io::stdout().lock();
            match route {
                None => writeln!(out, "NoPath")?,
                Some(r) => {
                    writeln!(out, "hop\tfrom\tto\tchannel\tamount_sat\tfee_sat")?;
                    for (i, h) in r.hops.iter().enumerate() {
                        writeln!(
                            out,
                            "{}\t{}\t{}\t{}\t{}\t{}",
                            i + 1,
                            h.from,
                            h.to,
                            h.channel_id,
                            sat(h.amount_msat),
                            sat(h.fee_msat)
                        )?;
                    }
                    writeln!(
                        out,
                        "total\thops={}\tamount_sat={}\tfee_sat={}\tsent_sat={}",
                        r.hops.len(),
                        sat(r.amount_msat),
                        sat(r.total_fee_msat),
                        sat(r.total_sent_msat)
                    )?;
                }
            }
        }
        Command::Baseline { graph, exp } => {
            let mut spec = exp.spec()?;
            if let Some(t) = exp.tx {
                spec.baseline_tx = t;
            }
            let g = graph.load()?;
            let rows = spec
                .amounts_msat
                .iter()
                .map(|&a| run_baseline(&spec, &g, a))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            emit_csv(&exp.out, &rows)?;
        }
        Command::JoinEval { graph, exp } => {
            if exp.strategy.is_none() && exp.config.is_none() {
                return Err(CliError::Usage("join-eval needs --strategy".into()));
            }
            let spec = exp.spec()?;
            let g = graph.load()?;
            emit_csv(&exp.out, &run_join_eval(&spec, &g)?)?;
        }
        Command::Growth { graph, exp, growth_nodes, interval, growth_k, allow_mbi } => {
            if exp.strategy.is_none() && exp.config.is_none() {
                return Err(CliError::Usage("growth needs --strategy".into()));
            }
            let mut spec = exp.spec()?;
            if let Some(v) = growth_nodes {
                spec.growth_nodes = v;
            }
            if let Some(v) = interval {
                spec.growth_interval = v;
            }
            if let Some(v) = growth_k {
                spec.growth_k = v;
            }
            spec.allow_mbi_growth |= allow_mbi;
            let g = graph.load()?;
            emit_csv(&exp.out, &run_growth(&spec, &g)?)?;
        }
        Command::Metrics { graph, amount } => {
            let amount = parse_sat(&amount)?;
            let g = graph.load()?;
            let t = topology(&g, amount).map_err(|e| CliError::Data(e.to_string()))?;
            println!("nodes\t{}", g.node_count());
            println!("channels\t{}", g.channel_count());
            println!("degree_gini\t{:.6}", t.degree_gini);
            println!("betweenness_gini\t{:.6}", t.betweenness_gini);
            println!("diameter_hops\t{}", t.diameter_hops);
            println!("central_point_dominance\t{:.6}", t.central_point_dominance);
        }
        Command::Bench { graph, strategy, k, cap, amount, out } => {
            let kinds = strategy
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(parse_strategy)
                .collect::<Result<Vec<_>>>()?;
            if kinds.is_empty() {
                return Err(CliError::Usage("no strategies to benchmark".into()));
            }
            let ks = parse_k_values(&k)?;
            let cap = parse_sat(&cap)?;
            let amount = parse_sat(&amount)?;
            let g = graph.load()?;
            let rows = bench(&g, &kinds, &ks, cap, amount)?;
            if kinds.contains(&StrategyKind::Mbi) && ks.len() >= 3 {
                let (x, y): (Vec<f64>, Vec<f64>) = rows
                    .iter()
                    .filter(|r| r.strategy == StrategyKind::Mbi)
                    .map(|r| (r.k as f64, r.median_s))
                    .unzip();
                log::info!("mbi runtime linear fit R^2 = {:.4}", linear_fit_r2(&x, &y));
            }
            let mut w = output(&out)?;
            write_bench_csv(&mut w, &rows).map_err(|e| CliError::Data(e.to_string()))?;
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Data(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
