//! Scenario configuration file (TOML) and its validation.
//!
//! Every field has a default, so an empty file describes the default
//! experiment: 20 UEs per sector, backhaul delays of 0/10/20/50 ms, all four
//! policies and five replicate seeds.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::Policy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyConfig {
    pub sites: usize,
    pub sectors_per_site: usize,
    pub inter_site_distance_m: f64,
    pub small_cells_per_sector: usize,
    /// Share of each sector's UEs dropped around a small cell.
    pub cluster_fraction: f64,
    pub hotspot_radius_m: f64,
    pub min_ue_site_distance_m: f64,
    pub min_ap_site_distance_m: f64,
    pub min_ap_ap_distance_m: f64,
    /// Redraws allowed for a UE that lands without coverage on either RAT.
    pub max_redraws: usize,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        Self {
            sites: 7,
            sectors_per_site: 3,
            inter_site_distance_m: 500.0,
            small_cells_per_sector: 5,
            cluster_fraction: 2.0 / 3.0,
            hotspot_radius_m: 40.0,
            min_ue_site_distance_m: 35.0,
            min_ap_site_distance_m: 75.0,
            min_ap_ap_distance_m: 40.0,
            max_redraws: 1_000,
        }
    }
}

impl TopologyConfig {
    /// Circumradius of a site's hexagon.
    pub fn cell_radius_m(&self) -> f64 {
        self.inter_site_distance_m / 3f64.sqrt()
    }
}

/// Log-distance path loss `intercept + slope · log10(d / 1 km)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathLossConfig {
    pub intercept_db: f64,
    pub slope_db: f64,
    pub min_distance_m: f64,
}

/// Truncated-Shannon link-quality to spectral-efficiency map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateMapConfig {
    pub efficiency: f64,
    pub cap_bps_per_hz: f64,
    pub floor_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    pub macro_tx_power_dbm: f64,
    pub macro_antenna_gain_dbi: f64,
    pub beamwidth_deg: f64,
    pub front_to_back_db: f64,
    pub macro_bandwidth_hz: f64,
    pub macro_path_loss: PathLossConfig,
    pub macro_shadowing_db: f64,
    pub macro_rate_map: RateMapConfig,
    /// Activity factor applied to the other sectors' received power.
    pub macro_interference_load: f64,
    pub smallcell_tx_power_dbm: f64,
    pub smallcell_bandwidth_hz: f64,
    pub smallcell_path_loss: PathLossConfig,
    pub smallcell_shadowing_db: f64,
    pub smallcell_rate_map: RateMapConfig,
    /// MAC overhead factor on top of the small-cell spectral efficiency.
    pub smallcell_mac_efficiency: f64,
    pub smallcell_channels: usize,
    /// Count co-channel APs as interference on the small-cell link.
    pub smallcell_interference: bool,
    pub noise_figure_db: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            macro_tx_power_dbm: 46.0,
            macro_antenna_gain_dbi: 14.0,
            beamwidth_deg: 70.0,
            front_to_back_db: 20.0,
            macro_bandwidth_hz: 20e6,
            macro_path_loss: PathLossConfig {
                intercept_db: 128.1,
                slope_db: 37.6,
                min_distance_m: 35.0,
            },
            macro_shadowing_db: 8.0,
            macro_rate_map: RateMapConfig {
                efficiency: 0.75,
                cap_bps_per_hz: 4.8,
                floor_db: -6.5,
            },
            macro_interference_load: 1.0,
            smallcell_tx_power_dbm: 20.0,
            smallcell_bandwidth_hz: 20e6,
            smallcell_path_loss: PathLossConfig {
                intercept_db: 140.7,
                slope_db: 36.7,
                min_distance_m: 10.0,
            },
            smallcell_shadowing_db: 10.0,
            smallcell_rate_map: RateMapConfig {
                efficiency: 0.75,
                cap_bps_per_hz: 6.0,
                floor_db: -6.5,
            },
            smallcell_mac_efficiency: 0.6,
            smallcell_channels: 3,
            smallcell_interference: false,
            noise_figure_db: 9.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrafficConfig {
    pub ue_per_sector: Vec<usize>,
    pub mean_interarrival_s: f64,
    pub file_size_bits: f64,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self {
            ue_per_sector: vec![20],
            mean_interarrival_s: 1.0,
            file_size_bits: 4e6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyBlock {
    pub policies: Vec<Policy>,
    pub wp_snr_threshold_db: f64,
    pub rel12_sinr_threshold_db: f64,
    /// When non-empty, Rel12's threshold is tuned over this grid per
    /// (load, delay) point before the sweep runs.
    pub rel12_tune_grid: Vec<f64>,
}

impl Default for PolicyBlock {
    fn default() -> Self {
        Self {
            policies: Policy::ALL.to_vec(),
            wp_snr_threshold_db: 2.0,
            // Best edge rate on the default drop in a grid search with `tune-rel12`.
            rel12_sinr_threshold_db: 12.0,
            rel12_tune_grid: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub warmup_s: f64,
    pub measured_s: f64,
    /// Extra time after the measured window for its flows to finish.
    pub drain_s: f64,
    /// Optional periodic re-allocation on top of the event-driven one.
    pub reallocation_period_ms: Option<f64>,
    /// Allocate with small-cell rates as they were one backhaul delay ago.
    pub feedback_lag: bool,
    pub max_events: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            warmup_s: 100.0,
            measured_s: 400.0,
            drain_s: 100.0,
            reallocation_period_ms: None,
            feedback_lag: false,
            max_events: 100_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub backhaul_delay_ms: Vec<f64>,
    pub seeds: Vec<u64>,
    pub master_seed: u64,
    pub topology: TopologyConfig,
    pub radio: RadioConfig,
    pub traffic: TrafficConfig,
    pub policy: PolicyBlock,
    pub simulation: SimulationConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            backhaul_delay_ms: vec![0.0, 10.0, 20.0, 50.0],
            seeds: vec![1, 2, 3, 4, 5],
            master_seed: 0,
            topology: TopologyConfig::default(),
            radio: RadioConfig::default(),
            traffic: TrafficConfig::default(),
            policy: PolicyBlock::default(),
            simulation: SimulationConfig::default(),
        }
    }
}

/// One problem found in a configuration file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    /// Dotted path of the offending field, empty for syntax errors.
    pub field: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.field.is_empty()) {
            (Some(line), false) => write!(f, "line {line}: `{}`: {}", self.field, self.message),
            (Some(line), true) => write!(f, "line {line}: {}", self.message),
            (None, false) => write!(f, "`{}`: {}", self.field, self.message),
            (None, true) => write!(f, "{}", self.message),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{}", format_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),
}

fn format_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("\n")
}

/// Line number (1-based) where `key` is assigned inside `[table]`.
fn locate(text: &str, table: Option<&str>, key: &str) -> Option<usize> {
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = Some(name.trim().to_string());
            if table == Some(name.trim()) && key.is_empty() {
                return Some(i + 1);
            }
            continue;
        }
        let in_table = match (table, current.as_deref()) {
            (None, None) => true,
            (Some(t), Some(c)) => t == c,
            _ => false,
        };
        if in_table {
            if let Some((lhs, _)) = line.split_once('=') {
                if lhs.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

struct Collector<'a> {
    text: &'a str,
    diags: Vec<Diagnostic>,
}

impl Collector<'_> {
    fn push(&mut self, table: Option<&str>, key: &str, message: impl Into<String>) {
        let field = match table {
            Some(t) => format!("{t}.{key}"),
            None => key.to_string(),
        };
        // Inline sub-tables such as `macro_path_loss = { ... }` are located by
        // their top-level key.
        let head = key.split(['.', '[']).next().unwrap_or(key);
        let line = locate(self.text, table, head);
        self.diags.push(Diagnostic {
            field,
            line,
            message: message.into(),
        });
    }

    fn positive(&mut self, table: Option<&str>, key: &str, value: f64) {
        if !(value.is_finite() && value > 0.0) {
            self.push(table, key, format!("must be a positive number, got {value}"));
        }
    }

    fn nonneg(&mut self, table: Option<&str>, key: &str, value: f64) {
        if !(value.is_finite() && value >= 0.0) {
            self.push(table, key, format!("must be non-negative, got {value}"));
        }
    }

    fn finite(&mut self, table: Option<&str>, key: &str, value: f64) {
        if !value.is_finite() {
            self.push(table, key, format!("must be finite, got {value}"));
        }
    }

    fn unit(&mut self, table: Option<&str>, key: &str, value: f64) {
        if !(0.0..=1.0).contains(&value) {
            self.push(table, key, format!("must lie in [0, 1], got {value}"));
        }
    }

    fn count(&mut self, table: Option<&str>, key: &str, value: usize) {
        if value == 0 {
            self.push(table, key, "must be at least 1");
        }
    }
}

fn parse_block<T: for<'de> Deserialize<'de> + Default>(
    doc: &toml::Table,
    name: &str,
    text: &str,
    diags: &mut Vec<Diagnostic>,
) -> T {
    match doc.get(name) {
        None => T::default(),
        Some(value) => match value.clone().try_into::<T>() {
            Ok(block) => block,
            Err(e) => {
                diags.push(Diagnostic {
                    field: name.to_string(),
                    line: locate(text, Some(name), ""),
                    message: e.message().trim().to_string(),
                });
                T::default()
            }
        },
    }
}

impl ScenarioConfig {
    /// Parses and validates configuration text, reporting every problem found.
    pub fn from_toml_str(text: &str) -> Result<Self, Vec<Diagnostic>> {
        let doc: toml::Table = toml::from_str(text).map_err(|e| {
            vec![Diagnostic {
                field: String::new(),
                line: e.span().map(|s| line_of_offset(text, s.start)),
                message: e.message().trim().to_string(),
            }]
        })?;

        let mut diags = Vec::new();
        let mut cfg = ScenarioConfig {
            topology: parse_block(&doc, "topology", text, &mut diags),
            radio: parse_block(&doc, "radio", text, &mut diags),
            traffic: parse_block(&doc, "traffic", text, &mut diags),
            policy: parse_block(&doc, "policy", text, &mut diags),
            simulation: parse_block(&doc, "simulation", text, &mut diags),
            ..Default::default()
        };

        for (key, value) in &doc {
            match key.as_str() {
                "topology" | "radio" | "traffic" | "policy" | "simulation" => {}
                "backhaul_delay_ms" => match value.clone().try_into::<Vec<f64>>() {
                    Ok(v) => cfg.backhaul_delay_ms = v,
                    Err(e) => diags.push(Diagnostic {
                        field: key.clone(),
                        line: locate(text, None, key),
                        message: e.message().trim().to_string(),
                    }),
                },
                "seeds" => match value.clone().try_into::<Vec<u64>>() {
                    Ok(v) => cfg.seeds = v,
                    Err(e) => diags.push(Diagnostic {
                        field: key.clone(),
                        line: locate(text, None, key),
                        message: e.message().trim().to_string(),
                    }),
                },
                "master_seed" => match value.clone().try_into::<u64>() {
                    Ok(v) => cfg.master_seed = v,
                    Err(e) => diags.push(Diagnostic {
                        field: key.clone(),
                        line: locate(text, None, key),
                        message: e.message().trim().to_string(),
                    }),
                },
                other => diags.push(Diagnostic {
                    field: other.to_string(),
                    line: locate(text, None, other)
                        .or_else(|| locate(text, Some(other), "")),
                    message: "unknown field".to_string(),
                }),
            }
        }

        // An empty file means "all defaults"; anything else has to say which
        // policies to run.
        if !doc.is_empty() && !doc.contains_key("policy") {
            diags.push(Diagnostic {
                field: "policy".to_string(),
                line: None,
                message: "missing [policy] block".to_string(),
            });
        }

        diags.extend(cfg.check_values(text));
        if diags.is_empty() {
            Ok(cfg)
        } else {
            Err(diags)
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text).map_err(ConfigError::Invalid)
    }

    /// Range checks on an already-typed configuration.
    pub fn validate(&self) -> Vec<Diagnostic> {
        self.check_values("")
    }

    fn check_values(&self, text: &str) -> Vec<Diagnostic> {
        let mut c = Collector {
            text,
            diags: Vec::new(),
        };

        if self.backhaul_delay_ms.is_empty() {
            c.push(None, "backhaul_delay_ms", "sweep list must not be empty");
        }
        for (i, &d) in self.backhaul_delay_ms.iter().enumerate() {
            c.nonneg(None, &format!("backhaul_delay_ms[{i}]"), d);
        }
        if self.seeds.is_empty() {
            c.push(None, "seeds", "must list at least one seed");
        }

        let t = Some("topology");
        let topo = &self.topology;
        c.count(t, "sites", topo.sites);
        if topo.sites != 1 && topo.sites != 7 {
            c.push(t, "sites", format!("wraparound layout supports 1 or 7 sites, got {}", topo.sites));
        }
        if topo.sectors_per_site != 3 {
            c.push(t, "sectors_per_site", "only 3-sector sites are supported");
        }
        c.positive(t, "inter_site_distance_m", topo.inter_site_distance_m);
        c.unit(t, "cluster_fraction", topo.cluster_fraction);
        c.positive(t, "hotspot_radius_m", topo.hotspot_radius_m);
        if topo.hotspot_radius_m > topo.cell_radius_m() {
            c.push(t, "hotspot_radius_m", format!(
                "hotspot radius {} m exceeds the sector radius {:.1} m",
                topo.hotspot_radius_m,
                topo.cell_radius_m()
            ));
        }
        c.nonneg(t, "min_ue_site_distance_m", topo.min_ue_site_distance_m);
        c.nonneg(t, "min_ap_site_distance_m", topo.min_ap_site_distance_m);
        c.nonneg(t, "min_ap_ap_distance_m", topo.min_ap_ap_distance_m);
        if topo.min_ue_site_distance_m >= topo.cell_radius_m()
            || topo.min_ap_site_distance_m >= topo.cell_radius_m()
        {
            c.push(t, "inter_site_distance_m", "sector too small for the minimum distances");
        }

        let r = Some("radio");
        let radio = &self.radio;
        c.finite(r, "macro_tx_power_dbm", radio.macro_tx_power_dbm);
        c.finite(r, "macro_antenna_gain_dbi", radio.macro_antenna_gain_dbi);
        c.positive(r, "beamwidth_deg", radio.beamwidth_deg);
        c.nonneg(r, "front_to_back_db", radio.front_to_back_db);
        c.positive(r, "macro_bandwidth_hz", radio.macro_bandwidth_hz);
        c.nonneg(r, "macro_shadowing_db", radio.macro_shadowing_db);
        c.unit(r, "macro_interference_load", radio.macro_interference_load);
        c.finite(r, "smallcell_tx_power_dbm", radio.smallcell_tx_power_dbm);
        c.positive(r, "smallcell_bandwidth_hz", radio.smallcell_bandwidth_hz);
        c.nonneg(r, "smallcell_shadowing_db", radio.smallcell_shadowing_db);
        c.positive(r, "smallcell_mac_efficiency", radio.smallcell_mac_efficiency);
        c.count(r, "smallcell_channels", radio.smallcell_channels);
        c.finite(r, "noise_figure_db", radio.noise_figure_db);
        for (name, pl) in [
            ("macro_path_loss", &radio.macro_path_loss),
            ("smallcell_path_loss", &radio.smallcell_path_loss),
        ] {
            c.finite(r, &format!("{name}.intercept_db"), pl.intercept_db);
            c.positive(r, &format!("{name}.slope_db"), pl.slope_db);
            c.positive(r, &format!("{name}.min_distance_m"), pl.min_distance_m);
        }
        for (name, map) in [
            ("macro_rate_map", &radio.macro_rate_map),
            ("smallcell_rate_map", &radio.smallcell_rate_map),
        ] {
            c.positive(r, &format!("{name}.efficiency"), map.efficiency);
            c.positive(r, &format!("{name}.cap_bps_per_hz"), map.cap_bps_per_hz);
            c.finite(r, &format!("{name}.floor_db"), map.floor_db);
        }

        let tr = Some("traffic");
        if self.traffic.ue_per_sector.is_empty() {
            c.push(tr, "ue_per_sector", "sweep list must not be empty");
        }
        for (i, &n) in self.traffic.ue_per_sector.iter().enumerate() {
            c.count(tr, &format!("ue_per_sector[{i}]"), n);
        }
        c.positive(tr, "mean_interarrival_s", self.traffic.mean_interarrival_s);
        c.positive(tr, "file_size_bits", self.traffic.file_size_bits);

        let p = Some("policy");
        if self.policy.policies.is_empty() {
            c.push(p, "policies", "must list at least one policy");
        }
        c.finite(p, "wp_snr_threshold_db", self.policy.wp_snr_threshold_db);
        if self.policy.rel12_sinr_threshold_db.is_nan() {
            c.push(p, "rel12_sinr_threshold_db", "must be a number");
        }
        for (i, &g) in self.policy.rel12_tune_grid.iter().enumerate() {
            if g.is_nan() {
                c.push(p, &format!("rel12_tune_grid[{i}]"), "must be a number");
            }
        }

        let s = Some("simulation");
        let sim = &self.simulation;
        c.nonneg(s, "warmup_s", sim.warmup_s);
        c.positive(s, "measured_s", sim.measured_s);
        c.nonneg(s, "drain_s", sim.drain_s);
        if let Some(period) = sim.reallocation_period_ms {
            c.positive(s, "reallocation_period_ms", period);
        }
        if sim.max_events == 0 {
            c.push(s, "max_events", "must be at least 1");
        }

        c.diags
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_the_default_scenario() {
        assert_eq!(ScenarioConfig::from_toml_str("").unwrap(), ScenarioConfig::default());
        assert!(ScenarioConfig::default().validate().is_empty());
    }

    #[test]
    fn negative_delay_names_the_field() {
        let text = "backhaul_delay_ms = [0, -5]\n[policy]\n";
        let diags = ScenarioConfig::from_toml_str(text).unwrap_err();
        assert_eq!(diags.len(), 1, "{diags:?}");
        assert_eq!(diags[0].field, "backhaul_delay_ms[1]");
        assert_eq!(diags[0].line, Some(1));
    }

    #[test]
    fn missing_policy_block() {
        let text = "seeds = [3]\n[traffic]\nue_per_sector = [10]\n";
        let diags = ScenarioConfig::from_toml_str(text).unwrap_err();
        assert_eq!(diags.len(), 1, "{diags:?}");
        assert_eq!(diags[0].field, "policy");
    }

    #[test]
    fn reports_every_error() {
        let text = "\
seeds = []
[policy]
policies = []
[traffic]
file_size_bits = -1.0
[simulation]
measured_s = 0.0
";
        let diags = ScenarioConfig::from_toml_str(text).unwrap_err();
        let fields: Vec<_> = diags.iter().map(|d| d.field.as_str()).collect();
        assert_eq!(
            fields,
            ["seeds", "traffic.file_size_bits", "policy.policies", "simulation.measured_s"]
        );
        assert_eq!(diags[1].line, Some(5));
        assert_eq!(diags[3].line, Some(7));
    }

    #[test]
    fn syntax_and_type_errors_carry_lines() {
        let diags = ScenarioConfig::from_toml_str("[policy]\npolicies = [\n").unwrap_err();
        assert!(diags[0].line.is_some());

        let text = "[policy]\nwp_snr_threshold_db = \"high\"\n[traffic]\nbogus = 1\n";
        let diags = ScenarioConfig::from_toml_str(text).unwrap_err();
        let fields: Vec<_> = diags.iter().map(|d| d.field.as_str()).collect();
        assert_eq!(fields, ["traffic", "policy"]);
    }

    #[test]
    fn hotspot_larger_than_sector() {
        let text = "[policy]\n[topology]\nhotspot_radius_m = 400.0\n";
        let diags = ScenarioConfig::from_toml_str(text).unwrap_err();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].field, "topology.hotspot_radius_m");
        assert_eq!(diags[0].line, Some(3));
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = ScenarioConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(ScenarioConfig::from_toml_str(&text).unwrap(), cfg);
    }
}
