//! Wall-clock timing of strategies.

use std::io::Write;
use std::time::Instant;

use crate::graph::{Msat, NetworkGraph};
use crate::strategies::{AttachmentRequest, StrategyError, StrategyKind};

/// Expected order from fastest to slowest.
pub const EXPECTED_ORDER: [StrategyKind; 5] = [
    StrategyKind::HighestDegree,
    StrategyKind::KCenter,
    StrategyKind::KMedian,
    StrategyKind::Betweenness,
    StrategyKind::Mbi,
];

pub const RUNS: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub strategy: StrategyKind,
    pub k: usize,
    pub runs_s: [f64; RUNS],
    pub median_s: f64,
    /// Whether, for this `k`, the medians of all timed strategies follow
    /// [`EXPECTED_ORDER`].
    pub ordering_ok: bool,
}

fn median(mut v: [f64; RUNS]) -> f64 {
    v.sort_by(f64::total_cmp);
    v[RUNS / 2]
}

/// Times each (strategy, k) cell `RUNS` times.
pub fn bench(
    graph: &NetworkGraph,
    strategies: &[StrategyKind],
    k_values: &[usize],
    cap_msat: Msat,
    amount_hint_msat: Msat,
) -> Result<Vec<BenchRow>, StrategyError> {
    let mut rows = Vec::new();
    for &k in k_values {
        for &s in strategies {
            let req = AttachmentRequest::new(graph, "bench-joiner", k)
                .with_cap(cap_msat)
                .with_amount_hint(amount_hint_msat);
            let mut runs = [0.0; RUNS];
            for r in runs.iter_mut() {
                let start = Instant::now();
                s.select(&req)?;
                *r = start.elapsed().as_secs_f64();
            }
            rows.push(BenchRow {
                strategy: s,
                k,
                runs_s: runs,
                median_s: median(runs),
                ordering_ok: false,
            });
        }
    }
    for &k in k_values {
        let ok = ordering_holds(rows.iter().filter(|r| r.k == k));
        for r in rows.iter_mut().filter(|r| r.k == k) {
            r.ordering_ok = ok;
        }
    }
    Ok(rows)
}

/// Strict ordering of medians along [`EXPECTED_ORDER`], skipping strategies
/// that were not timed.
pub fn ordering_holds<'a>(rows: impl Iterator<Item = &'a BenchRow>) -> bool {
    let rows: Vec<&BenchRow> = rows.collect();
    let medians: Vec<f64> = EXPECTED_ORDER
        .iter()
        .filter_map(|s| rows.iter().find(|r| r.strategy == *s).map(|r| r.median_s))
        .collect();
    medians.windows(2).all(|w| w[0] < w[1])
}

pub fn write_bench_csv<W: Write>(out: W, rows: &[BenchRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["strategy".to_string(), "k".to_string()];
    header.extend((1..=RUNS).map(|i| format!("run{i}_s")));
    header.extend(["median_s".to_string(), "ordering_ok".to_string()]);
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.strategy.to_string(), r.k.to_string()];
        rec.extend(r.runs_s.iter().map(|t| format!("{t:.6}")));
        rec.push(format!("{:.6}", r.median_s));
        rec.push(r.ordering_ok.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Coefficient of determination of the least-squares line through the
/// points. Returns 1 for fewer than three points or constant `y`.
pub fn linear_fit_r2(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len());
    if n < 3 {
        return 1.0;
    }
    let (x, y) = (&x[..n], &y[..n]);
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if syy == 0.0 {
        return 1.0;
    }
    if sxx == 0.0 {
        return 0.0;
    }
    sxy * sxy / (sxx * syy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::synth::{synth_graph, SynthKind, SynthOptions};

    #[test]
    fn r2() {
        assert!((linear_fit_r2(&[1.0, 2.0, 3.0, 4.0], &[2.0, 4.0, 6.0, 8.0]) - 1.0).abs() < 1e-12);
        assert!(linear_fit_r2(&[1.0, 2.0, 3.0, 4.0], &[1.0, -1.0, 1.0, -1.0]) < 0.5);
    }

    #[test]
    fn ordering_check() {
        let row = |s, m| BenchRow { strategy: s, k: 1, runs_s: [m; RUNS], median_s: m, ordering_ok: false };
        let good = [row(StrategyKind::HighestDegree, 0.1), row(StrategyKind::Betweenness, 0.5)];
        assert!(ordering_holds(good.iter()));
        let bad = [row(StrategyKind::KMedian, 0.9), row(StrategyKind::Betweenness, 0.5)];
        assert!(!ordering_holds(bad.iter()));
    }

    #[test]
    fn csv_shape() {
        let g = synth_graph(SynthKind::Star(5), 0, &SynthOptions::default()).unwrap();
        let rows = bench(&g, &[StrategyKind::HighestDegree], &[1, 2], 2_000_000, 100_000).unwrap();
        assert_eq!(rows.len(), 2);
        let mut buf = Vec::new();
        write_bench_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("strategy,k,run1_s,run2_s,run3_s,median_s,ordering_ok\n"));
        assert_eq!(text.lines().count(), 3);
    }
}
