use pfsplit::allocator::{de_split, split_completion_time};
use pfsplit::baselines::{Policy, PolicyConfig};
use pfsplit::config::ScenarioConfig;
use pfsplit::radio::UeLink;
use pfsplit::simulator::{self, Arrival, Engine, EngineParams, FlowRecord, Scenario};
use proptest::prelude::*;

fn params(policy: Policy, delay: f64) -> EngineParams {
    EngineParams {
        policy: PolicyConfig::new(policy),
        backhaul_delay_s: delay,
        file_size_bits: 4e6,
        warmup_s: 0.0,
        measured_s: 5.0,
        drain_s: 200.0,
        reallocation_period_s: None,
        feedback_lag: false,
        max_events: 1_000_000,
        trace: false,
    }
}

fn small_scenario(policy: Policy, delay_ms: f64) -> Scenario {
    let mut cfg = ScenarioConfig::default();
    cfg.simulation.warmup_s = 2.0;
    cfg.simulation.measured_s = 8.0;
    cfg.simulation.drain_s = 30.0;
    Scenario::from_config(&cfg, policy, 3, delay_ms)
}

fn policy() -> impl Strategy<Value = Policy> {
    prop::sample::select(Policy::ALL.to_vec())
}

/// Links for `n` UEs spread over two sectors and three APs.
fn links() -> impl Strategy<Value = Vec<UeLink>> {
    prop::collection::vec((0usize..2, 1e6..5e7f64, prop::option::of(0usize..3), 1e6..7e7f64, -5.0..20.0f64), 1..8)
        .prop_map(|v| {
            v.into_iter()
                .map(|(sector, p, ap, r, sinr)| UeLink {
                    serving_sector: sector,
                    macro_sinr_db: sinr,
                    macro_peak_bps: p,
                    covering_ap: ap,
                    ap_snr_db: ap.map(|_| 15.0),
                    ap_solo_rate_bps: if ap.is_some() { r } else { 0.0 },
                })
                .collect()
        })
}

fn arrivals(n: usize) -> impl Strategy<Value = Vec<Arrival>> {
    prop::collection::vec((0.0..5.0f64, 0..n), 1..20).prop_map(|mut v| {
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        v.into_iter().map(|(time_s, ue)| Arrival { time_s, ue }).collect()
    })
}

fn check_flow(f: &FlowRecord, link: &UeLink, delay: f64) -> Result<(), TestCaseError> {
    let done = f.completion_s.expect("every flow finishes within the drain");
    prop_assert!((f.macro_bits + f.smallcell_bits - f.size_bits).abs() <= 1e-3, "bits not conserved: {f:?}");
    prop_assert!(f.macro_bits >= -1e-9 && f.smallcell_bits >= -1e-9);
    // No flow can beat having both links to itself.
    let best = link.macro_peak_bps + link.ap_solo_rate_bps;
    prop_assert!(done - f.arrival_s >= f.size_bits / best * (1.0 - 1e-9));
    if f.smallcell_bits > 1e-3 {
        let gate = f.smallcell_available_s.expect("small-cell bits need a gate");
        prop_assert!(gate >= f.arrival_s + delay - 1e-12);
        prop_assert!(done >= gate);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn engine_conserves_bits_and_respects_causality(
        links in links(),
        seed_arrivals in arrivals(8),
        policy in policy(),
        delay in prop_oneof![Just(0.0), 0.0..0.05f64],
    ) {
        let n = links.len();
        let arrivals: Vec<Arrival> = seed_arrivals
            .into_iter()
            .map(|a| Arrival { ue: a.ue % n, ..a })
            .collect();
        let out = Engine::new(links.clone(), 2, 3, params(policy, delay)).unwrap().run(&arrivals).unwrap();
        prop_assert_eq!(out.flows.len(), arrivals.len());
        for f in &out.flows {
            check_flow(f, &links[f.ue_id], delay)?;
        }
        // FIFO per UE: a later file never finishes before an earlier one.
        for a in &out.flows {
            for b in &out.flows {
                if a.ue_id == b.ue_id && a.flow_id < b.flow_id {
                    prop_assert!(a.completion_s <= b.completion_s);
                }
            }
        }
        for &u in &out.macro_utilization {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&u));
        }
    }
}

#[test]
fn runs_are_deterministic() {
    for policy in Policy::ALL {
        let s = small_scenario(policy, 20.0);
        let a = simulator::run(&s, 42).unwrap();
        let b = simulator::run(&s, 42).unwrap();
        assert_eq!(a.flows, b.flows);
        assert_eq!(a.events, b.events);
    }
    let s = small_scenario(Policy::Proposed, 0.0);
    assert_ne!(simulator::run(&s, 1).unwrap().flows, simulator::run(&s, 2).unwrap().flows);
}

#[test]
fn rel12_extreme_thresholds_reduce_to_wp_and_macro_only() {
    let mut rel12 = small_scenario(Policy::Rel12, 10.0);
    let mut wp = small_scenario(Policy::Wp, 10.0);

    rel12.policy.rel12_sinr_threshold_db = f64::INFINITY;
    assert_eq!(simulator::run(&rel12, 5).unwrap().flows, simulator::run(&wp, 5).unwrap().flows);

    rel12.policy.rel12_sinr_threshold_db = f64::NEG_INFINITY;
    wp.policy.wp_snr_threshold_db = f64::INFINITY;
    let out = simulator::run(&rel12, 5).unwrap();
    assert!(out.flows.iter().all(|f| f.smallcell_bits == 0.0));
    assert_eq!(out.flows, simulator::run(&wp, 5).unwrap().flows);
}

#[test]
fn without_small_cells_every_policy_is_equal_share_macro() {
    let runs: Vec<Vec<FlowRecord>> = Policy::ALL
        .iter()
        .map(|&p| {
            let mut s = small_scenario(p, 0.0);
            s.topology.small_cells_per_sector = 0;
            simulator::run(&s, 9).unwrap().flows
        })
        .collect();
    for flows in &runs[1..] {
        assert_eq!(flows.len(), runs[0].len());
        for (a, b) in flows.iter().zip(&runs[0]).filter(|(a, _)| a.measured) {
            let (x, y) = (a.completion_s.unwrap(), b.completion_s.unwrap());
            assert!((x - y).abs() <= 1e-9 * x, "{x} vs {y}");
        }
    }
}

#[test]
fn de_single_flow_finishes_both_legs_together() {
    let (p, r, l, f) = (2e7, 3e7, 0.02, 4e6);
    let link = UeLink {
        serving_sector: 0,
        macro_sinr_db: 5.0,
        macro_peak_bps: p,
        covering_ap: Some(0),
        ap_snr_db: Some(20.0),
        ap_solo_rate_bps: r,
    };
    let out = Engine::new(vec![link], 1, 1, params(Policy::De, l))
        .unwrap()
        .run(&[Arrival { time_s: 1.0, ue: 0 }])
        .unwrap();
    let rec = &out.flows[0];
    let x = de_split(1.0, p, r, l, f).unwrap();
    let expected = split_completion_time(x, p, r, l, f);
    let took = rec.completion_s.unwrap() - 1.0;
    assert!((took - expected).abs() <= 1e-9 * expected);
    // Interior split: the macro leg alone takes exactly as long.
    assert!((rec.macro_bits / p - took).abs() <= 1e-9 * took);
}

#[test]
fn snapshot_audit_is_clean_on_a_small_run() {
    let s = small_scenario(Policy::Proposed, 50.0);
    let out = simulator::run(&s, 3).unwrap();
    assert!(out.audit.snapshots > 0);
    assert_eq!(out.audit.violations_vs_equal_share, 0);
    assert_eq!(out.audit.violations_vs_de, 0);
}
