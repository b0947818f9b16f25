//! Throughput statistics over completed flows and the CSV files they are
//! exported to.

use std::collections::BTreeMap;
use std::io::{self, Write};

use crate::baselines::Policy;
use crate::simulator::FlowRecord;

/// Throughput of one completed, measured flow.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowThroughput {
    pub flow_id: u64,
    pub ue_id: usize,
    pub arrival_s: f64,
    pub completion_s: f64,
    pub size_bits: f64,
    pub throughput_bps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub per_flow: Vec<FlowThroughput>,
    /// Measured flows still unfinished when the run stopped.
    pub incomplete_flows: usize,
    /// 5th percentile of per-flow throughput.
    pub edge_rate_bps: f64,
    /// 50th percentile of per-flow throughput.
    pub median_rate_bps: f64,
    /// Mean flow throughput of each UE with at least one measured flow.
    pub per_ue_mean_bps: Vec<(usize, f64)>,
    pub ue_edge_rate_bps: f64,
    pub ue_median_rate_bps: f64,
    /// `Σ_UE log(mean per-UE throughput)`.
    pub sum_log_utility: f64,
    /// Macro busy-time fraction, averaged over sectors.
    pub utilization: f64,
    /// Small-cell busy-time fraction, averaged over APs.
    pub smallcell_utilization: f64,
}

/// Linear-interpolation percentile, `q` in `[0, 100]`. `None` on no samples.
pub fn percentile(samples: &[f64], q: f64) -> Option<f64> {
    if samples.is_empty() {
        return None;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(percentile_sorted(&sorted, q))
}

fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let q = q.clamp(0.0, 100.0);
    let pos = (sorted.len() - 1) as f64 * q / 100.0;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Empirical CDF points `(x, F(x))` over the sorted samples.
pub fn cdf(samples: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, x)| (x, (i + 1) as f64 / n))
        .collect()
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

impl MetricsReport {
    /// Aggregates the measured flows. Rates are 0 when nothing completed.
    pub fn from_flows(flows: &[FlowRecord], macro_utilization: &[f64], smallcell_utilization: &[f64]) -> Self {
        let mut per_flow = Vec::new();
        let mut incomplete_flows = 0;
        for f in flows.iter().filter(|f| f.measured) {
            match f.completion_s {
                Some(completion_s) => per_flow.push(FlowThroughput {
                    flow_id: f.flow_id,
                    ue_id: f.ue_id,
                    arrival_s: f.arrival_s,
                    completion_s,
                    size_bits: f.size_bits,
                    throughput_bps: f.size_bits / (completion_s - f.arrival_s),
                }),
                None => incomplete_flows += 1,
            }
        }

        let mut by_ue: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for f in &per_flow {
            by_ue.entry(f.ue_id).or_default().push(f.throughput_bps);
        }
        let per_ue_mean_bps: Vec<(usize, f64)> = by_ue.iter().map(|(&ue, v)| (ue, mean(v))).collect();
        let sum_log_utility = per_ue_mean_bps.iter().map(|(_, m)| m.ln()).sum();

        let tputs: Vec<f64> = per_flow.iter().map(|f| f.throughput_bps).collect();
        let ue_means: Vec<f64> = per_ue_mean_bps.iter().map(|(_, m)| *m).collect();
        let pct = |v: &[f64], q| percentile(v, q).unwrap_or(0.0);

        Self {
            edge_rate_bps: pct(&tputs, 5.0),
            median_rate_bps: pct(&tputs, 50.0),
            ue_edge_rate_bps: pct(&ue_means, 5.0),
            ue_median_rate_bps: pct(&ue_means, 50.0),
            per_flow,
            incomplete_flows,
            per_ue_mean_bps,
            sum_log_utility,
            utilization: mean(macro_utilization),
            smallcell_utilization: mean(smallcell_utilization),
        }
    }

    pub fn flow_throughputs(&self) -> Vec<f64> {
        self.per_flow.iter().map(|f| f.throughput_bps).collect()
    }

    pub fn ue_throughputs(&self) -> Vec<f64> {
        self.per_ue_mean_bps.iter().map(|(_, m)| *m).collect()
    }
}

/// Edge and median rate of one policy at one sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicySummary {
    pub edge_bps: f64,
    pub median_bps: f64,
}

impl From<&MetricsReport> for PolicySummary {
    fn from(r: &MetricsReport) -> Self {
        Self {
            edge_bps: r.edge_rate_bps,
            median_bps: r.median_rate_bps,
        }
    }
}

/// Gain of the proportional-fair policy over one baseline, in percent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainRow {
    pub baseline: Policy,
    pub edge_gain_pct: f64,
    pub median_gain_pct: f64,
}

pub type ComparisonTable = Vec<GainRow>;

fn gain_pct(ours: f64, theirs: f64) -> f64 {
    if ours == theirs {
        0.0
    } else {
        (ours / theirs - 1.0) * 100.0
    }
}

/// Gains of `Proposed` over every other policy in `summaries`; empty when
/// `Proposed` is absent.
pub fn compare(summaries: &BTreeMap<Policy, PolicySummary>) -> ComparisonTable {
    let Some(ours) = summaries.get(&Policy::Proposed) else {
        return Vec::new();
    };
    summaries
        .iter()
        .filter(|(p, _)| **p != Policy::Proposed)
        .map(|(&baseline, theirs)| GainRow {
            baseline,
            edge_gain_pct: gain_pct(ours.edge_bps, theirs.edge_bps),
            median_gain_pct: gain_pct(ours.median_bps, theirs.median_bps),
        })
        .collect()
}

pub const FLOWS_HEADER: &str = "flow_id,ue_id,policy,seed,arrival_s,completion_s,size_bits,throughput_bps";
pub const SUMMARY_HEADER: &str =
    "policy,seed,ue_per_sector,backhaul_delay_ms,edge_bps,median_bps,sum_log,utilization";
pub const CDF_HEADER: &str = "policy,throughput_bps,cdf";

pub fn write_flow_rows<W: Write>(w: &mut W, policy: Policy, seed: u64, report: &MetricsReport) -> io::Result<()> {
    for f in &report.per_flow {
        writeln!(
            w,
            "{},{},{policy},{seed},{},{},{},{}",
            f.flow_id, f.ue_id, f.arrival_s, f.completion_s, f.size_bits, f.throughput_bps
        )?;
    }
    Ok(())
}

pub fn write_summary_row<W: Write>(
    w: &mut W,
    policy: Policy,
    seed: u64,
    ue_per_sector: usize,
    delay_ms: f64,
    report: &MetricsReport,
) -> io::Result<()> {
    writeln!(
        w,
        "{policy},{seed},{ue_per_sector},{delay_ms},{},{},{},{}",
        report.edge_rate_bps, report.median_rate_bps, report.sum_log_utility, report.utilization
    )
}

pub fn write_cdf_rows<W: Write>(w: &mut W, policy: Policy, samples: &[f64]) -> io::Result<()> {
    for (x, p) in cdf(samples) {
        writeln!(w, "{policy},{x},{p}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn percentile_examples() {
        assert_eq!(percentile(&[10.0], 37.0), Some(10.0));
        let v: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(percentile(&v, 50.0), Some(50.5));
        assert_eq!(percentile(&v, 0.0), Some(1.0));
        assert_eq!(percentile(&v, 100.0), Some(100.0));
        assert_eq!(percentile(&[], 5.0), None);
    }

    fn flow(id: u64, ue: usize, arrival: f64, completion: Option<f64>, measured: bool) -> FlowRecord {
        FlowRecord {
            flow_id: id,
            ue_id: ue,
            arrival_s: arrival,
            size_bits: 4e6,
            macro_bits: 4e6,
            smallcell_bits: 0.0,
            smallcell_available_s: None,
            completion_s: completion,
            measured,
        }
    }

    #[test]
    fn report_from_flows() {
        let flows = vec![
            flow(0, 0, 0.0, Some(1.0), false),
            flow(1, 0, 1.0, Some(2.0), true),
            flow(2, 0, 2.0, Some(4.0), true),
            flow(3, 1, 2.0, Some(3.0), true),
            flow(4, 1, 3.0, None, true),
        ];
        let r = MetricsReport::from_flows(&flows, &[0.5, 0.25], &[]);
        assert_eq!(r.per_flow.len(), 3);
        assert_eq!(r.incomplete_flows, 1);
        assert_eq!(r.median_rate_bps, 4e6);
        assert!(r.edge_rate_bps <= r.median_rate_bps);
        assert_eq!(r.per_ue_mean_bps, vec![(0, 3e6), (1, 4e6)]);
        assert!((r.sum_log_utility - (3e6f64.ln() + 4e6f64.ln())).abs() < 1e-12);
        assert_eq!(r.utilization, 0.375);
    }

    #[test]
    fn identical_summaries_give_zero_gain() {
        let s = PolicySummary {
            edge_bps: 1e6,
            median_bps: 5e6,
        };
        let map: BTreeMap<_, _> = Policy::ALL.iter().map(|&p| (p, s)).collect();
        let table = compare(&map);
        assert_eq!(table.len(), 3);
        assert!(table.iter().all(|g| g.edge_gain_pct == 0.0 && g.median_gain_pct == 0.0));
    }

    #[test]
    fn gains_are_relative_to_the_baseline() {
        let mut map = BTreeMap::new();
        map.insert(Policy::Proposed, PolicySummary { edge_bps: 1.5e6, median_bps: 6e6 });
        map.insert(Policy::Rel12, PolicySummary { edge_bps: 1e6, median_bps: 5e6 });
        let table = compare(&map);
        assert_eq!(table[0].baseline, Policy::Rel12);
        assert!((table[0].edge_gain_pct - 50.0).abs() < 1e-9);
        assert!((table[0].median_gain_pct - 20.0).abs() < 1e-9);
    }

    #[test]
    fn cdf_rows_match_flow_count() {
        let flows: Vec<_> = (0..7).map(|i| flow(i, 0, i as f64, Some(i as f64 + 0.5), true)).collect();
        let r = MetricsReport::from_flows(&flows, &[], &[]);
        let mut out = Vec::new();
        write_cdf_rows(&mut out, Policy::De, &r.flow_throughputs()).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 7);
    }

    proptest! {
        #[test]
        fn cdf_is_monotone_and_ends_at_one(v in prop::collection::vec(0.0..1e9f64, 1..200)) {
            let points = cdf(&v);
            prop_assert!(points.windows(2).all(|w| w[0].0 <= w[1].0 && w[0].1 < w[1].1));
            prop_assert_eq!(points.last().unwrap().1, 1.0);
        }

        #[test]
        fn percentiles_are_ordered(v in prop::collection::vec(-1e6..1e6f64, 1..100), a in 0.0..100.0f64, b in 0.0..100.0f64) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(percentile(&v, lo).unwrap() <= percentile(&v, hi).unwrap());
        }
    }
}
