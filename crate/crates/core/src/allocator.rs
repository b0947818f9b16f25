//! Proportional-fair split of macro resources between UEs that can also be
//! served by a small cell behind a delayed backhaul.
//!
//! Each UE `k` sees a macro peak capacity `p_k` (the rate it would get with
//! all macro resources) and an effective small-cell rate `r_eff,k` that
//! already accounts for the backhaul delay. The allocator picks macro resource
//! fractions `α_k` maximizing `Σ log(r_eff,k + α_k p_k)` subject to `Σ α_k = 1`.
//!
//! The optimum is a water-filling: every UE that receives macro resources ends
//! up at the same level `r_eff,k / p_k + α_k = A`, and UEs whose "cup"
//! `r_eff,k / p_k` already reaches above `A` get nothing. [`opt_alloc`] finds
//! `A` with one sort and a shrinking prefix average.

use std::fmt;

use crate::error::AllocError;

/// Opaque UE identifier. Also used to break ties in the allocator sort.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct UeId(pub u64);

impl fmt::Display for UeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Radio snapshot of one UE at allocation time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UeLinkState {
    pub ue_id: UeId,
    /// Rate with 100% of macro resources, `W · c_k`, in bit/s.
    pub macro_peak_bps: f64,
    /// Small-cell transmission rate in bit/s; 0 outside small-cell coverage.
    pub smallcell_rate_bps: f64,
    /// Backhaul delay still to be paid on the small-cell leg, in seconds.
    pub backhaul_delay_s: f64,
    /// Size of the data being split, in bits.
    pub file_size_bits: f64,
}

impl UeLinkState {
    pub fn effective_rate(&self) -> Result<f64, AllocError> {
        effective_rate(
            self.smallcell_rate_bps,
            self.backhaul_delay_s,
            self.file_size_bits,
        )
    }

    fn validate(&self) -> Result<(), AllocError> {
        check_nonneg("macro_peak_bps", self.macro_peak_bps)?;
        check_nonneg("smallcell_rate_bps", self.smallcell_rate_bps)?;
        check_nonneg("backhaul_delay_s", self.backhaul_delay_s)?;
        check_positive("file_size_bits", self.file_size_bits)?;
        if self.macro_peak_bps == 0.0 && self.smallcell_rate_bps == 0.0 {
            return Err(AllocError::Infeasible {
                ue_id: self.ue_id.0,
            });
        }
        Ok(())
    }
}

/// Result of [`opt_alloc`].
///
/// `fractions[i]` belongs to `ue_ids[i]`, in the order the states were given.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub ue_ids: Vec<UeId>,
    pub fractions: Vec<f64>,
    /// The common level `r_eff,k / p_k + α_k` of every UE with `α_k > 0`.
    pub water_level: f64,
    /// UEs with `α_k > 0`, in ascending `r_eff / p` order.
    pub active_set: Vec<UeId>,
}

impl Allocation {
    pub fn fraction(&self, ue_id: UeId) -> Option<f64> {
        self.ue_ids
            .iter()
            .position(|&id| id == ue_id)
            .map(|i| self.fractions[i])
    }

    pub fn len(&self) -> usize {
        self.fractions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fractions.is_empty()
    }
}

fn check_finite(field: &'static str, value: f64) -> Result<(), AllocError> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(AllocError::InvalidInput { field, value })
    }
}

fn check_nonneg(field: &'static str, value: f64) -> Result<(), AllocError> {
    check_finite(field, value)?;
    if value < 0.0 {
        return Err(AllocError::InvalidInput { field, value });
    }
    Ok(())
}

fn check_positive(field: &'static str, value: f64) -> Result<(), AllocError> {
    check_finite(field, value)?;
    if value <= 0.0 {
        return Err(AllocError::InvalidInput { field, value });
    }
    Ok(())
}

/// Small-cell rate seen by a file of `file_bits` that first has to cross a
/// backhaul of `delay_s`: `f / (l + f / r) = (1/r + l/f)^-1`.
pub fn effective_rate(r_bps: f64, delay_s: f64, file_bits: f64) -> Result<f64, AllocError> {
    check_nonneg("r_bps", r_bps)?;
    check_nonneg("delay_s", delay_s)?;
    check_positive("file_bits", file_bits)?;
    if r_bps == 0.0 {
        return Ok(0.0);
    }
    if delay_s == 0.0 {
        return Ok(r_bps);
    }
    Ok(1.0 / (1.0 / r_bps + delay_s / file_bits))
}

/// `r_eff / p` per UE; `+∞` when the UE has no macro capacity so that it is
/// eliminated like any UE whose cup is above the water level.
fn rate_ratios(states: &[UeLinkState]) -> Result<Vec<f64>, AllocError> {
    states
        .iter()
        .map(|s| {
            s.validate()?;
            let r_eff = s.effective_rate()?;
            Ok(if s.macro_peak_bps > 0.0 {
                r_eff / s.macro_peak_bps
            } else {
                f64::INFINITY
            })
        })
        .collect()
}

/// Proportional-fair macro resource fractions for `states`.
///
/// Sorts UEs by `r_eff / p`, starts from the average level over all of them
/// and drops the highest-ratio UE while its fraction would be non-positive.
/// Ties in the sort are broken by ascending `ue_id`.
pub fn opt_alloc(states: &[UeLinkState]) -> Result<Allocation, AllocError> {
    if states.is_empty() {
        return Err(AllocError::Empty);
    }
    let ratios = rate_ratios(states)?;

    let mut order: Vec<(f64, UeId, u32)> = ratios
        .iter()
        .zip(states)
        .enumerate()
        .map(|(i, (&ratio, s))| (ratio, s.ue_id, i as u32))
        .collect();
    order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    // Prefix sums of the sorted ratios; UEs without macro capacity sit at the
    // tail with an infinite ratio and are never candidates.
    let finite = order.partition_point(|o| o.0.is_finite());
    if finite == 0 {
        return Err(AllocError::NoMacroCapacity);
    }
    let mut prefix = Vec::with_capacity(finite + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for o in &order[..finite] {
        acc += o.0;
        prefix.push(acc);
    }

    let level = |n: usize| (prefix[n] + 1.0) / n as f64;
    let mut n = finite;
    let mut water_level = level(n);
    while water_level - order[n - 1].0 <= 0.0 {
        n -= 1;
        // The lowest ratio always stays: level(1) = ratio_1 + 1.
        assert!(n >= 1, "water-filling eliminated every UE");
        water_level = level(n);
    }

    let mut fractions = vec![0.0; states.len()];
    for o in &order[..n] {
        fractions[o.2 as usize] = water_level - o.0;
    }

    Ok(Allocation {
        ue_ids: states.iter().map(|s| s.ue_id).collect(),
        fractions,
        water_level,
        active_set: order[..n].iter().map(|o| o.1).collect(),
    })
}

/// `Σ log(r_eff,k + α_k p_k)`, the quantity [`opt_alloc`] maximizes.
pub fn objective(states: &[UeLinkState], fractions: &[f64]) -> Result<f64, AllocError> {
    assert_eq!(states.len(), fractions.len());
    let mut total = 0.0;
    for (s, &alpha) in states.iter().zip(fractions) {
        total += (s.effective_rate()? + alpha * s.macro_peak_bps).ln();
    }
    Ok(total)
}

/// Fraction of a file's bits sent over the macro leg when splitting in
/// proportion to the two rates, `α p / (α p + r_eff)`.
pub fn split_ratio(alpha: f64, macro_peak_bps: f64, r_eff_bps: f64) -> Result<f64, AllocError> {
    check_nonneg("alpha", alpha)?;
    check_nonneg("macro_peak_bps", macro_peak_bps)?;
    check_nonneg("r_eff_bps", r_eff_bps)?;
    let macro_rate = alpha * macro_peak_bps;
    if macro_rate == 0.0 && r_eff_bps == 0.0 {
        return Err(AllocError::BothLegsZero);
    }
    Ok(macro_rate / (macro_rate + r_eff_bps))
}

/// Macro-leg bit fraction `x` minimizing the later of the two leg completion
/// times, `max(x f / (α p), l + (1 - x) f / r)`.
///
/// The interior optimum equalizes both legs. When even `x = 1` leaves the
/// macro leg finishing before the backhaul delay has elapsed, everything goes
/// over the macro.
pub fn de_split(
    alpha: f64,
    macro_peak_bps: f64,
    r_bps: f64,
    delay_s: f64,
    file_bits: f64,
) -> Result<f64, AllocError> {
    check_nonneg("alpha", alpha)?;
    check_nonneg("macro_peak_bps", macro_peak_bps)?;
    check_nonneg("r_bps", r_bps)?;
    check_nonneg("delay_s", delay_s)?;
    check_positive("file_bits", file_bits)?;
    let macro_rate = alpha * macro_peak_bps;
    match (macro_rate > 0.0, r_bps > 0.0) {
        (false, false) => Err(AllocError::BothLegsZero),
        (true, false) => Ok(1.0),
        (false, true) => Ok(0.0),
        (true, true) => {
            let macro_time = file_bits / macro_rate;
            let sc_time = file_bits / r_bps;
            Ok(((delay_s + sc_time) / (macro_time + sc_time)).min(1.0))
        }
    }
}

/// Completion time of the later leg for a given macro fraction `x`.
pub fn split_completion_time(
    x: f64,
    macro_rate_bps: f64,
    r_bps: f64,
    delay_s: f64,
    file_bits: f64,
) -> f64 {
    let macro_leg = if x > 0.0 {
        x * file_bits / macro_rate_bps
    } else {
        0.0
    };
    let sc_leg = if x < 1.0 {
        delay_s + (1.0 - x) * file_bits / r_bps
    } else {
        0.0
    };
    macro_leg.max(sc_leg)
}
