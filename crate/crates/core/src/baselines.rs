//! The comparison policies: WLAN-preferred association (WP), threshold-gated
//! LTE/WLAN interworking (Rel12) and the delay-equalizing split (DE), next to
//! the proportional-fair allocator itself.
//!
//! WP and Rel12 put every file on exactly one RAT. DE and the proportional-fair
//! policy split files; their split rules live in [`crate::allocator`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::simulator::{self, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Policy {
    #[serde(rename = "proposed", alias = "Proposed")]
    Proposed,
    #[serde(rename = "wp", alias = "WP")]
    Wp,
    #[serde(rename = "rel12", alias = "Rel12")]
    Rel12,
    #[serde(rename = "de", alias = "DE")]
    De,
}

impl Policy {
    pub const ALL: [Policy; 4] = [Policy::Proposed, Policy::Wp, Policy::Rel12, Policy::De];

    pub fn name(self) -> &'static str {
        match self {
            Policy::Proposed => "Proposed",
            Policy::Wp => "WP",
            Policy::Rel12 => "Rel12",
            Policy::De => "DE",
        }
    }

    /// Whether files may be split across both RATs.
    pub fn splits(self) -> bool {
        matches!(self, Policy::Proposed | Policy::De)
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "proposed" => Ok(Policy::Proposed),
            "wp" => Ok(Policy::Wp),
            "rel12" => Ok(Policy::Rel12),
            "de" => Ok(Policy::De),
            _ => Err(format!("unknown policy `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub policy: Policy,
    pub wp_snr_threshold_db: f64,
    pub rel12_sinr_threshold_db: f64,
}

impl PolicyConfig {
    pub fn new(policy: Policy) -> Self {
        Self {
            policy,
            wp_snr_threshold_db: 2.0,
            rel12_sinr_threshold_db: 12.0,
        }
    }
}

/// Which RAT carries a whole file under the association baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Route {
    MacroOnly,
    SmallCellOnly,
}

/// WP: join the best AP whenever its SNR reaches the threshold (inclusive).
pub fn wp_decide(_macro_snr_db: f64, best_ap_snr_db: Option<f64>, cfg: &PolicyConfig) -> Route {
    match best_ap_snr_db {
        Some(snr) if snr >= cfg.wp_snr_threshold_db => Route::SmallCellOnly,
        _ => Route::MacroOnly,
    }
}

/// Rel12: fall back to WP only when the macro SINR is below the threshold.
pub fn rel12_decide(macro_sinr_db: f64, best_ap_snr_db: Option<f64>, cfg: &PolicyConfig) -> Route {
    if macro_sinr_db < cfg.rel12_sinr_threshold_db {
        wp_decide(macro_sinr_db, best_ap_snr_db, cfg)
    } else {
        Route::MacroOnly
    }
}

/// Routing decision for the single-RAT policies; `None` for splitting ones.
pub fn route_for(
    cfg: &PolicyConfig,
    macro_sinr_db: f64,
    best_ap_snr_db: Option<f64>,
) -> Option<Route> {
    match cfg.policy {
        Policy::Wp => Some(wp_decide(macro_sinr_db, best_ap_snr_db, cfg)),
        Policy::Rel12 => Some(rel12_decide(macro_sinr_db, best_ap_snr_db, cfg)),
        Policy::Proposed | Policy::De => None,
    }
}

/// Runs `scenario` under Rel12 once per candidate threshold and returns the
/// one with the best 5th-percentile flow throughput, together with that rate.
/// Ties go to the smaller threshold.
pub fn tune_rel12_threshold(scenario: &Scenario, grid: &[f64], seed: u64) -> Result<(f64, f64)> {
    use rayon::prelude::*;

    if grid.is_empty() {
        return Err(crate::error::SimError::InvalidScenario(
            "empty Rel12 threshold grid".to_string(),
        ));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);

    let edges = sorted
        .par_iter()
        .map(|&threshold| {
            let mut s = scenario.clone();
            s.policy.policy = Policy::Rel12;
            s.policy.rel12_sinr_threshold_db = threshold;
            simulator::run(&s, seed).map(|out| out.report.edge_rate_bps)
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut best = (sorted[0], edges[0]);
    for (&threshold, &edge) in sorted.iter().zip(&edges).skip(1) {
        if edge > best.1 {
            best = (threshold, edge);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(policy: Policy) -> PolicyConfig {
        PolicyConfig {
            policy,
            wp_snr_threshold_db: 2.0,
            rel12_sinr_threshold_db: 5.0,
        }
    }

    #[test]
    fn wp_examples() {
        let c = cfg(Policy::Wp);
        assert_eq!(wp_decide(20.0, None, &c), Route::MacroOnly);
        assert_eq!(wp_decide(20.0, Some(2.0), &c), Route::SmallCellOnly);
        assert_eq!(wp_decide(5.0, Some(1.0), &c), Route::MacroOnly);
    }

    #[test]
    fn rel12_examples() {
        let c = cfg(Policy::Rel12);
        assert_eq!(rel12_decide(12.0, Some(30.0), &c), Route::MacroOnly);
        assert_eq!(rel12_decide(4.0, Some(3.0), &c), Route::SmallCellOnly);
        assert_eq!(rel12_decide(-3.0, None, &c), Route::MacroOnly);
        // Threshold is exclusive on the macro side: equal SINR keeps macro.
        assert_eq!(rel12_decide(5.0, Some(30.0), &c), Route::MacroOnly);
    }

    #[test]
    fn policy_names_round_trip() {
        for p in Policy::ALL {
            assert_eq!(p.name().parse::<Policy>().unwrap(), p);
        }
        assert!("lte".parse::<Policy>().is_err());
    }
}
