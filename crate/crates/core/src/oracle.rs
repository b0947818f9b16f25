//! Reference solver for the allocator: bisection on the water level.
//!
//! For a level `A`, each UE would take `max(0, A - r_eff/p)` of the macro
//! resources. The total is nondecreasing in `A`, so the level that uses
//! exactly all resources can be bracketed and bisected without sorting or
//! elimination. Only meant for tests and benchmarks.

use crate::allocator::{Allocation, UeLinkState};
use crate::error::AllocError;

const MAX_ITERATIONS: usize = 2_000;

fn demand(ratios: &[f64], level: f64) -> f64 {
    ratios.iter().map(|&q| (level - q).max(0.0)).sum()
}

/// Solves the same program as [`crate::allocator::opt_alloc`] to within `tol`
/// on the water level (which bounds the per-UE fraction error by `tol`).
pub fn oracle_alloc(states: &[UeLinkState], tol: f64) -> Result<Allocation, AllocError> {
    if states.is_empty() {
        return Err(AllocError::Empty);
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(AllocError::InvalidInput {
            field: "tol",
            value: tol,
        });
    }
    let mut ratios = Vec::with_capacity(states.len());
    for s in states {
        if !(s.macro_peak_bps.is_finite() && s.macro_peak_bps >= 0.0) {
            return Err(AllocError::InvalidInput {
                field: "macro_peak_bps",
                value: s.macro_peak_bps,
            });
        }
        if s.macro_peak_bps == 0.0 && s.smallcell_rate_bps == 0.0 {
            return Err(AllocError::Infeasible { ue_id: s.ue_id.0 });
        }
        let r_eff = s.effective_rate()?;
        ratios.push(if s.macro_peak_bps > 0.0 {
            r_eff / s.macro_peak_bps
        } else {
            f64::INFINITY
        });
    }

    let lowest = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    if !lowest.is_finite() {
        return Err(AllocError::NoMacroCapacity);
    }
    // demand(lowest) = 0 and demand(lowest + 1) >= 1.
    let (mut lo, mut hi) = (lowest, lowest + 1.0);
    let mut iterations = 0;
    while hi - lo > tol * 1e-3 {
        if iterations == MAX_ITERATIONS {
            return Err(AllocError::NoConvergence { iterations });
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if demand(&ratios, mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    let level = 0.5 * (lo + hi);

    let raw: Vec<f64> = ratios.iter().map(|&q| (level - q).max(0.0)).collect();
    let total: f64 = raw.iter().sum();
    let fractions: Vec<f64> = raw.iter().map(|a| a / total).collect();
    let mut active: Vec<(f64, _)> = ratios
        .iter()
        .zip(states)
        .zip(&fractions)
        .filter(|(_, &a)| a > 0.0)
        .map(|((&q, s), _)| (q, s.ue_id))
        .collect();
    active.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    Ok(Allocation {
        ue_ids: states.iter().map(|s| s.ue_id).collect(),
        fractions,
        water_level: level,
        active_set: active.into_iter().map(|(_, id)| id).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocator::UeId;

    fn ue(id: u64, p: f64, r: f64) -> UeLinkState {
        UeLinkState {
            ue_id: UeId(id),
            macro_peak_bps: p,
            smallcell_rate_bps: r,
            backhaul_delay_s: 0.0,
            file_size_bits: 4e6,
        }
    }

    #[test]
    fn single_ue() {
        let a = oracle_alloc(&[ue(0, 1e7, 3e6)], 1e-12).unwrap();
        assert_eq!(a.fractions, vec![1.0]);
    }

    #[test]
    fn two_ue_bisection() {
        let a = oracle_alloc(&[ue(0, 1e7, 2e6), ue(1, 1e7, 4e6)], 1e-12).unwrap();
        assert!((a.water_level - 0.8).abs() < 1e-12);
        assert!((a.fractions[0] - 0.6).abs() < 1e-12);
        assert!((a.fractions[1] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(oracle_alloc(&[ue(0, 1e7, 0.0)], 0.0).is_err());
    }
}
