//! Network layout and link abstraction.
//!
//! Seven three-sector macro sites on a hexagonal grid with wraparound, small
//! cells dropped uniformly in each sector, and clustered UEs. Links use
//! log-distance path loss with per-link lognormal shadowing and map SINR to
//! rate with a truncated Shannon curve.

use std::f64::consts::PI;
use std::io::{self, Write};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::{PathLossConfig, RadioConfig, RateMapConfig, TopologyConfig};
use crate::error::{Result, SimError};

/// Substream of the drop seed reserved for topology and shadowing draws.
const TOPOLOGY_STREAM: u64 = u64::MAX;

const SECTOR_BORESIGHTS_DEG: [f64; 3] = [30.0, 150.0, 270.0];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

/// Site grid plus the translations that tile it (7-cell wraparound).
#[derive(Debug, Clone)]
pub struct Layout {
    pub inter_site_distance_m: f64,
    pub sites: Vec<Point>,
    shifts: Vec<Point>,
}

impl Layout {
    pub fn new(sites: usize, inter_site_distance_m: f64) -> Self {
        let d = inter_site_distance_m;
        let mut positions = vec![Point::default()];
        let mut shifts = vec![Point::default()];
        if sites == 7 {
            for k in 0..6 {
                let a = k as f64 * PI / 3.0;
                positions.push(Point::new(d * a.cos(), d * a.sin()));
            }
            // Cluster lattice vectors of length sqrt(7)·d.
            let base = Point::new(2.5 * d, 3f64.sqrt() / 2.0 * d);
            for k in 0..6 {
                let (s, c) = (k as f64 * PI / 3.0).sin_cos();
                shifts.push(Point::new(base.x * c - base.y * s, base.x * s + base.y * c));
            }
        }
        Self {
            inter_site_distance_m: d,
            sites: positions,
            shifts,
        }
    }

    /// Shortest vector from `from` to any wrapped image of `to`.
    pub fn wrapped_offset(&self, from: Point, to: Point) -> Point {
        let direct = to - from;
        self.shifts
            .iter()
            .map(|&s| direct + s)
            .min_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap_or(direct)
    }

    pub fn wrapped_distance(&self, a: Point, b: Point) -> f64 {
        self.wrapped_offset(a, b).norm()
    }

    fn cell_radius(&self) -> f64 {
        self.inter_site_distance_m / 3f64.sqrt()
    }

    /// Whether `offset` (relative to its site) lies in the site's hexagon.
    fn in_hexagon(&self, offset: Point) -> bool {
        let half = self.inter_site_distance_m / 2.0 + 1e-9;
        (0..6).all(|k| {
            let (s, c) = (k as f64 * PI / 3.0).sin_cos();
            offset.x * c + offset.y * s <= half
        })
    }
}

pub fn sector_boresight_deg(sector_in_site: usize) -> f64 {
    SECTOR_BORESIGHTS_DEG[sector_in_site % 3]
}

fn angle_diff_deg(a: f64, b: f64) -> f64 {
    (a - b + 540.0).rem_euclid(360.0) - 180.0
}

/// Parabolic horizontal pattern: `G - min(12 (φ/φ3dB)², A_m)` dBi.
pub fn antenna_gain_db(cfg: &RadioConfig, off_boresight_deg: f64) -> f64 {
    let ratio = off_boresight_deg / cfg.beamwidth_deg;
    cfg.macro_antenna_gain_dbi - (12.0 * ratio * ratio).min(cfg.front_to_back_db)
}

pub fn path_loss_db(pl: &PathLossConfig, distance_m: f64) -> f64 {
    let d_km = distance_m.max(pl.min_distance_m) / 1000.0;
    pl.intercept_db + pl.slope_db * d_km.log10()
}

pub fn noise_dbm(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    -174.0 + 10.0 * bandwidth_hz.log10() + noise_figure_db
}

fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

fn lin_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// `min(η log2(1 + sinr), cap)` bit/s/Hz, zero below the floor.
pub fn truncated_shannon(map: &RateMapConfig, sinr_db: f64) -> f64 {
    if sinr_db.is_nan() || sinr_db < map.floor_db {
        return 0.0;
    }
    if sinr_db == f64::INFINITY {
        return map.cap_bps_per_hz;
    }
    (map.efficiency * (1.0 + db_to_lin(sinr_db)).log2()).min(map.cap_bps_per_hz)
}

/// Macro spectral efficiency `c_k` with the default rate map.
pub fn macro_spectral_efficiency(sinr_db: f64) -> f64 {
    truncated_shannon(&RadioConfig::default().macro_rate_map, sinr_db)
}

/// Small-cell rate of one of `sharing_count` round-robin users of an AP.
pub fn smallcell_rate_with(cfg: &RadioConfig, snr_db: f64, sharing_count: usize) -> f64 {
    cfg.smallcell_bandwidth_hz
        * truncated_shannon(&cfg.smallcell_rate_map, snr_db)
        * cfg.smallcell_mac_efficiency
        / sharing_count.max(1) as f64
}

/// [`smallcell_rate_with`] under the default radio parameters.
pub fn smallcell_rate(snr_db: f64, sharing_count: usize) -> f64 {
    smallcell_rate_with(&RadioConfig::default(), snr_db, sharing_count)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Site {
    pub position: Point,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmallCell {
    pub position: Point,
    /// Global sector index the AP was dropped in.
    pub sector: usize,
    pub channel_index: usize,
    pub tx_power_dbm: f64,
}

/// Link-level view of one UE, fixed for the whole drop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UeLink {
    /// Global index `site * 3 + sector` of the strongest macro sector.
    pub serving_sector: usize,
    pub macro_sinr_db: f64,
    /// Macro rate with all resources of the serving sector, `W · c_k`.
    pub macro_peak_bps: f64,
    /// Strongest AP, if its link is above the rate-map floor.
    pub covering_ap: Option<usize>,
    pub ap_snr_db: Option<f64>,
    /// AP rate when this UE is its only active user.
    pub ap_solo_rate_bps: f64,
}

impl UeLink {
    pub fn has_coverage(&self) -> bool {
        self.macro_peak_bps > 0.0 || self.ap_solo_rate_bps > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ue {
    pub ue_id: usize,
    pub position: Point,
    /// Sector the UE was dropped in (may differ from the serving one).
    pub dropped_sector: usize,
    pub link: UeLink,
}

#[derive(Debug, Clone)]
pub struct Topology {
    pub layout: Layout,
    pub macro_sites: Vec<Site>,
    pub small_cells: Vec<SmallCell>,
    pub ues: Vec<Ue>,
}

impl Topology {
    pub fn num_sectors(&self) -> usize {
        self.macro_sites.len() * 3
    }

    pub fn links(&self) -> Vec<UeLink> {
        self.ues.iter().map(|u| u.link).collect()
    }

    /// One row per site, AP and UE.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(
            w,
            "kind,id,x_m,y_m,sector,serving_sector,ap,channel,macro_sinr_db,macro_peak_bps,ap_snr_db,ap_rate_bps"
        )?;
        for (i, s) in self.macro_sites.iter().enumerate() {
            writeln!(w, "site,{i},{:.3},{:.3},,,,,,,,", s.position.x, s.position.y)?;
        }
        for (i, ap) in self.small_cells.iter().enumerate() {
            writeln!(
                w,
                "ap,{i},{:.3},{:.3},{},,,{},,,,",
                ap.position.x, ap.position.y, ap.sector, ap.channel_index
            )?;
        }
        for ue in &self.ues {
            let l = &ue.link;
            writeln!(
                w,
                "ue,{},{:.3},{:.3},{},{},{},,{:.4},{:.1},{},{:.1}",
                ue.ue_id,
                ue.position.x,
                ue.position.y,
                ue.dropped_sector,
                l.serving_sector,
                l.covering_ap.map(|a| a.to_string()).unwrap_or_default(),
                l.macro_sinr_db,
                l.macro_peak_bps,
                l.ap_snr_db.map(|s| format!("{s:.4}")).unwrap_or_default(),
                l.ap_solo_rate_bps
            )?;
        }
        Ok(())
    }
}

/// Uniform point in sector `sector_in_site` of the site at the origin.
fn sample_in_sector(
    rng: &mut ChaCha8Rng,
    layout: &Layout,
    sector_in_site: usize,
    min_site_distance: f64,
) -> Point {
    let radius = layout.cell_radius();
    let boresight = sector_boresight_deg(sector_in_site);
    loop {
        let r = radius * rng.gen::<f64>().sqrt();
        let theta = rng.gen::<f64>() * 2.0 * PI;
        let p = Point::new(r * theta.cos(), r * theta.sin());
        if r < min_site_distance || !layout.in_hexagon(p) {
            continue;
        }
        if angle_diff_deg(theta.to_degrees(), boresight).abs() <= 60.0 {
            return p;
        }
    }
}

fn sample_in_disk(rng: &mut ChaCha8Rng, center: Point, radius: f64) -> Point {
    let r = radius * rng.gen::<f64>().sqrt();
    let theta = rng.gen::<f64>() * 2.0 * PI;
    center + Point::new(r * theta.cos(), r * theta.sin())
}

struct LinkModel<'a> {
    radio: &'a RadioConfig,
    layout: &'a Layout,
    aps: &'a [SmallCell],
    macro_noise_mw: f64,
    sc_noise_dbm: f64,
}

impl LinkModel<'_> {
    fn evaluate(&self, pos: Point, site_shadow: &[f64], ap_shadow: &[f64]) -> UeLink {
        let radio = self.radio;
        let mut rx_mw = Vec::with_capacity(self.layout.sites.len() * 3);
        for (site_idx, &site) in self.layout.sites.iter().enumerate() {
            let off = self.layout.wrapped_offset(site, pos);
            let pl = path_loss_db(&radio.macro_path_loss, off.norm());
            let azimuth = off.y.atan2(off.x).to_degrees();
            for sector in 0..3 {
                let gain = antenna_gain_db(
                    radio,
                    angle_diff_deg(azimuth, sector_boresight_deg(sector)),
                );
                let dbm = radio.macro_tx_power_dbm + gain - pl - site_shadow[site_idx];
                rx_mw.push(db_to_lin(dbm));
            }
        }
        let serving = (0..rx_mw.len())
            .max_by(|&a, &b| rx_mw[a].total_cmp(&rx_mw[b]))
            .expect("at least one sector");
        let interference: f64 = rx_mw
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != serving)
            .map(|(_, p)| p)
            .sum::<f64>()
            * radio.macro_interference_load;
        let macro_sinr_db = lin_to_db(rx_mw[serving] / (interference + self.macro_noise_mw));
        let macro_peak_bps =
            radio.macro_bandwidth_hz * truncated_shannon(&radio.macro_rate_map, macro_sinr_db);

        let ap_rx: Vec<f64> = self
            .aps
            .iter()
            .zip(ap_shadow)
            .map(|(ap, shadow)| {
                let d = self.layout.wrapped_distance(ap.position, pos);
                ap.tx_power_dbm - path_loss_db(&radio.smallcell_path_loss, d) - shadow
            })
            .collect();
        let best = (0..ap_rx.len()).max_by(|&a, &b| ap_rx[a].total_cmp(&ap_rx[b]));
        let (covering_ap, ap_snr_db, ap_solo_rate_bps) = match best {
            None => (None, None, 0.0),
            Some(b) => {
                let noise_mw = db_to_lin(self.sc_noise_dbm);
                let interference: f64 = if radio.smallcell_interference {
                    self.aps
                        .iter()
                        .enumerate()
                        .filter(|&(j, ap)| j != b && ap.channel_index == self.aps[b].channel_index)
                        .map(|(j, _)| db_to_lin(ap_rx[j]))
                        .sum()
                } else {
                    0.0
                };
                let snr = lin_to_db(db_to_lin(ap_rx[b]) / (interference + noise_mw));
                let rate = smallcell_rate_with(radio, snr, 1);
                if rate > 0.0 {
                    (Some(b), Some(snr), rate)
                } else {
                    (None, None, 0.0)
                }
            }
        };

        UeLink {
            serving_sector: serving,
            macro_sinr_db,
            macro_peak_bps,
            covering_ap,
            ap_snr_db,
            ap_solo_rate_bps,
        }
    }
}

/// Drops sites, small cells and `ue_per_sector` UEs per sector.
///
/// Deterministic in its arguments. A UE that lands without coverage on either
/// RAT is redrawn (with fresh shadowing) up to `max_redraws` times.
pub fn generate_topology(
    topo: &TopologyConfig,
    radio: &RadioConfig,
    ue_per_sector: usize,
    seed: u64,
) -> Result<Topology> {
    if topo.sites == 0 || topo.sectors_per_site != 3 || ue_per_sector == 0 {
        return Err(SimError::InvalidScenario(format!(
            "invalid counts: {} sites, {} sectors per site, {} UEs per sector",
            topo.sites, topo.sectors_per_site, ue_per_sector
        )));
    }
    if topo.sites != 1 && topo.sites != 7 {
        return Err(SimError::InvalidScenario(format!(
            "wraparound layout supports 1 or 7 sites, got {}",
            topo.sites
        )));
    }
    if topo.hotspot_radius_m > topo.cell_radius_m() {
        return Err(SimError::InvalidScenario(format!(
            "hotspot radius {} m exceeds the sector radius {:.1} m",
            topo.hotspot_radius_m,
            topo.cell_radius_m()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(TOPOLOGY_STREAM);
    let layout = Layout::new(topo.sites, topo.inter_site_distance_m);
    let num_sectors = layout.sites.len() * 3;

    let mut aps: Vec<SmallCell> = Vec::with_capacity(num_sectors * topo.small_cells_per_sector);
    for sector in 0..num_sectors {
        let site = layout.sites[sector / 3];
        for _ in 0..topo.small_cells_per_sector {
            let mut attempts = 0;
            let position = loop {
                let p = site + sample_in_sector(&mut rng, &layout, sector % 3, topo.min_ap_site_distance_m);
                let clear = aps
                    .iter()
                    .all(|a| layout.wrapped_distance(a.position, p) >= topo.min_ap_ap_distance_m);
                if clear {
                    break p;
                }
                attempts += 1;
                if attempts > 10_000 {
                    return Err(SimError::InvalidScenario(format!(
                        "cannot place {} small cells in sector {sector} with {} m separation",
                        topo.small_cells_per_sector, topo.min_ap_ap_distance_m
                    )));
                }
            };
            // Least-power channel selection against the APs placed so far.
            let mut power = vec![0.0; radio.smallcell_channels];
            for a in &aps {
                let d = layout.wrapped_distance(a.position, position);
                power[a.channel_index] +=
                    db_to_lin(a.tx_power_dbm - path_loss_db(&radio.smallcell_path_loss, d));
            }
            let channel_index = (0..power.len())
                .min_by(|&a, &b| power[a].total_cmp(&power[b]))
                .unwrap_or(0);
            aps.push(SmallCell {
                position,
                sector,
                channel_index,
                tx_power_dbm: radio.smallcell_tx_power_dbm,
            });
        }
    }

    let model = LinkModel {
        radio,
        layout: &layout,
        aps: &aps,
        macro_noise_mw: db_to_lin(noise_dbm(radio.macro_bandwidth_hz, radio.noise_figure_db)),
        sc_noise_dbm: noise_dbm(radio.smallcell_bandwidth_hz, radio.noise_figure_db),
    };
    let macro_shadow = Normal::new(0.0, radio.macro_shadowing_db)
        .map_err(|e| SimError::InvalidScenario(e.to_string()))?;
    let sc_shadow = Normal::new(0.0, radio.smallcell_shadowing_db)
        .map_err(|e| SimError::InvalidScenario(e.to_string()))?;

    let clustered = (topo.cluster_fraction * ue_per_sector as f64).round() as usize;
    let mut ues = Vec::with_capacity(num_sectors * ue_per_sector);
    for sector in 0..num_sectors {
        let site = layout.sites[sector / 3];
        let sector_aps: Vec<usize> = (0..aps.len()).filter(|&a| aps[a].sector == sector).collect();
        for i in 0..ue_per_sector {
            let mut redraws = 0;
            let (position, link) = loop {
                let position = if i < clustered && !sector_aps.is_empty() {
                    let ap = sector_aps[rng.gen_range(0..sector_aps.len())];
                    loop {
                        let p = sample_in_disk(&mut rng, aps[ap].position, topo.hotspot_radius_m);
                        if layout.wrapped_distance(site, p) >= topo.min_ue_site_distance_m {
                            break p;
                        }
                    }
                } else {
                    site + sample_in_sector(&mut rng, &layout, sector % 3, topo.min_ue_site_distance_m)
                };
                let site_shadow: Vec<f64> =
                    (0..layout.sites.len()).map(|_| macro_shadow.sample(&mut rng)).collect();
                let ap_shadow: Vec<f64> = (0..aps.len()).map(|_| sc_shadow.sample(&mut rng)).collect();
                let link = model.evaluate(position, &site_shadow, &ap_shadow);
                if link.has_coverage() {
                    break (position, link);
                }
                redraws += 1;
                if redraws > topo.max_redraws {
                    return Err(SimError::Infeasible { ue_id: ues.len() });
                }
            };
            ues.push(Ue {
                ue_id: ues.len(),
                position,
                dropped_sector: sector,
                link,
            });
        }
    }

    Ok(Topology {
        macro_sites: layout.sites.iter().map(|&p| Site { position: p }).collect(),
        layout,
        small_cells: aps,
        ues,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spectral_efficiency_examples() {
        assert_eq!(macro_spectral_efficiency(-10.0), 0.0);
        assert_eq!(macro_spectral_efficiency(f64::INFINITY), 4.8);
        assert_eq!(macro_spectral_efficiency(80.0), 4.8);
        let c = macro_spectral_efficiency(10.0);
        assert!((c - 0.75 * 11f64.log2()).abs() < 1e-12);
        assert!((c - 2.5946).abs() < 1e-4);
    }

    #[test]
    fn smallcell_rate_examples() {
        assert_eq!(smallcell_rate(-20.0, 1), 0.0);
        assert_eq!(smallcell_rate(15.0, 2), smallcell_rate(15.0, 1) / 2.0);
        assert_eq!(smallcell_rate(15.0, 0), smallcell_rate(15.0, 1));
        let r = smallcell_rate(20.0, 1);
        let expected = 20e6 * 0.6 * (0.75 * 101f64.log2()).min(6.0);
        assert!((r - expected).abs() < 1e-6);
        assert!((r - 5.99e7).abs() < 1e5);
    }

    #[test]
    fn round_robin_conserves_ap_throughput() {
        for n in 1..10 {
            let total: f64 = (0..n).map(|_| smallcell_rate(12.0, n)).sum();
            assert!((total - smallcell_rate(12.0, 1)).abs() < 1e-3);
        }
    }

    #[test]
    fn antenna_pattern() {
        let cfg = RadioConfig::default();
        assert_eq!(antenna_gain_db(&cfg, 0.0), 14.0);
        assert!((antenna_gain_db(&cfg, 35.0) - 11.0).abs() < 1e-12);
        assert_eq!(antenna_gain_db(&cfg, 180.0), -6.0);
    }

    #[test]
    fn wrap_vectors_have_cluster_length() {
        let layout = Layout::new(7, 500.0);
        for s in &layout.shifts[1..] {
            assert!((s.norm() - 7f64.sqrt() * 500.0).abs() < 1e-9);
        }
        // On the 7-cell torus every pair of sites are neighbours.
        for a in 0..7 {
            for b in 0..7 {
                if a != b {
                    let d = layout.wrapped_distance(layout.sites[a], layout.sites[b]);
                    assert!((d - 500.0).abs() < 1e-6, "{a}-{b}: {d}");
                }
            }
        }
    }

    #[test]
    fn same_seed_same_topology() {
        let (t, r) = (TopologyConfig::default(), RadioConfig::default());
        let a = generate_topology(&t, &r, 10, 42).unwrap();
        let b = generate_topology(&t, &r, 10, 42).unwrap();
        assert_eq!(a.ues, b.ues);
        assert_eq!(a.small_cells, b.small_cells);
        let c = generate_topology(&t, &r, 10, 43).unwrap();
        assert_ne!(a.ues, c.ues);
    }

    #[test]
    fn counts_follow_config() {
        let (t, r) = (TopologyConfig::default(), RadioConfig::default());
        let topo = generate_topology(&t, &r, 30, 1).unwrap();
        assert_eq!(topo.ues.len(), 630);
        assert_eq!(topo.small_cells.len(), 21 * 5);
        for s in 0..21 {
            assert_eq!(topo.small_cells.iter().filter(|a| a.sector == s).count(), 5);
        }
        assert!(topo.ues.iter().all(|u| u.link.serving_sector < 21));
        assert!(topo.small_cells.iter().all(|a| a.channel_index < 3));
    }

    #[test]
    fn no_small_cells_means_no_coverage() {
        let t = TopologyConfig {
            small_cells_per_sector: 0,
            ..Default::default()
        };
        let topo = generate_topology(&t, &RadioConfig::default(), 5, 9).unwrap();
        assert!(topo.ues.iter().all(|u| u.link.covering_ap.is_none()));
        assert!(topo.ues.iter().all(|u| u.link.ap_solo_rate_bps == 0.0));
        assert!(topo.ues.iter().all(|u| u.link.macro_peak_bps > 0.0));
    }

    #[test]
    fn rejects_invalid_counts() {
        let r = RadioConfig::default();
        assert!(generate_topology(&TopologyConfig::default(), &r, 0, 1).is_err());
        let t = TopologyConfig {
            hotspot_radius_m: 1000.0,
            ..Default::default()
        };
        assert!(generate_topology(&t, &r, 5, 1).is_err());
    }

    #[test]
    fn csv_dump_has_one_row_per_element() {
        let topo = generate_topology(&TopologyConfig::default(), &RadioConfig::default(), 2, 5).unwrap();
        let mut out = Vec::new();
        topo.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 1 + 7 + 105 + 42);
    }

    proptest! {
        #[test]
        fn wraparound_distance_is_symmetric_and_short(
            ax in -900.0..900.0f64, ay in -900.0..900.0f64,
            bx in -900.0..900.0f64, by in -900.0..900.0f64,
        ) {
            let layout = Layout::new(7, 500.0);
            let (a, b) = (Point::new(ax, ay), Point::new(bx, by));
            let ab = layout.wrapped_distance(a, b);
            let ba = layout.wrapped_distance(b, a);
            prop_assert!((ab - ba).abs() < 1e-9);
            prop_assert!(ab <= (b - a).norm() + 1e-9);
        }

        #[test]
        fn path_loss_increases_with_distance(d in 1.0..5000.0f64, step in 0.1..100.0f64) {
            for pl in [RadioConfig::default().macro_path_loss, RadioConfig::default().smallcell_path_loss] {
                let d = d.max(pl.min_distance_m);
                prop_assert!(path_loss_db(&pl, d + step) > path_loss_db(&pl, d));
            }
        }

        #[test]
        fn rate_maps_are_monotone(a in -30.0..60.0f64, b in -30.0..60.0f64) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(macro_spectral_efficiency(lo) <= macro_spectral_efficiency(hi));
            prop_assert!(smallcell_rate(lo, 1) <= smallcell_rate(hi, 1));
        }
    }
}
