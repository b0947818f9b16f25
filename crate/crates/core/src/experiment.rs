//! Sweep orchestration: expands a configuration into runs, executes them on a
//! worker pool and writes the CSV outputs plus a run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::baselines::{tune_rel12_threshold, Policy};
use crate::config::{ConfigError, Diagnostic, ScenarioConfig};
use crate::error::SimError;
use crate::metrics::{self, compare, MetricsReport, PolicySummary};
use crate::simulator::{self, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("simulation failed for {run}: {source}")]
    Simulation { run: String, source: SimError },
    #[error("output error: {0}")]
    Io(#[from] io::Error),
    #[error("worker pool: {0}")]
    Pool(String),
}

impl ExperimentError {
    /// Process exit code: 1 for configuration problems, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::Config(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; 0 picks the number of CPUs.
    pub jobs: usize,
    pub master_seed: Option<u64>,
    /// Also write one event trace per run under `traces/`.
    pub trace: bool,
}

/// Seed of the topology and arrivals for one replicate at one load.
///
/// Policy and backhaul delay are deliberately left out so that every policy
/// and delay sees the same drop and the same arrivals.
pub fn derive_seed(master_seed: u64, ue_per_sector: usize, replicate_seed: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(b"pfsplit/drop");
    h.update(master_seed.to_le_bytes());
    h.update((ue_per_sector as u64).to_le_bytes());
    h.update(replicate_seed.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

pub fn config_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// One element of the (load × delay × seed × policy) cross product.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSpec {
    pub policy: Policy,
    pub ue_per_sector: usize,
    pub backhaul_delay_ms: f64,
    pub seed: u64,
    pub run_seed: u64,
}

impl RunSpec {
    fn label(&self) -> String {
        format!(
            "{} ue={} delay={}ms seed={}",
            self.policy, self.ue_per_sector, self.backhaul_delay_ms, self.seed
        )
    }
}

/// Runs in output order: load, delay, seed, then policy.
pub fn expand_runs(cfg: &ScenarioConfig, master_seed: u64) -> Vec<RunSpec> {
    let mut runs = Vec::new();
    for &ue_per_sector in &cfg.traffic.ue_per_sector {
        for &backhaul_delay_ms in &cfg.backhaul_delay_ms {
            for &seed in &cfg.seeds {
                for &policy in &cfg.policy.policies {
                    runs.push(RunSpec {
                        policy,
                        ue_per_sector,
                        backhaul_delay_ms,
                        seed,
                        run_seed: derive_seed(master_seed, ue_per_sector, seed),
                    });
                }
            }
        }
    }
    runs
}

#[derive(Debug, Clone, Serialize)]
struct ManifestRun {
    #[serde(flatten)]
    spec: RunSpec,
    rel12_sinr_threshold_db: Option<f64>,
    events: u64,
    completed_flows: usize,
    incomplete_flows: usize,
    snapshots: u64,
    snapshot_violations: u64,
}

#[derive(Debug, Clone, Serialize)]
struct Manifest {
    config_hash: String,
    code_version: &'static str,
    master_seed: u64,
    runs: Vec<ManifestRun>,
}

/// Outcome of one run, stripped down to what the outputs need.
pub struct RunResult {
    pub spec: RunSpec,
    pub report: MetricsReport,
    pub rel12_sinr_threshold_db: Option<f64>,
    pub events: u64,
    pub snapshots: u64,
    pub snapshot_violations: u64,
    pub trace: Vec<String>,
}

#[derive(Debug)]
pub struct ExperimentSummary {
    pub runs: usize,
    pub out_dir: PathBuf,
    /// Mean edge/median rate per (load, delay ms, policy) over seeds.
    pub means: BTreeMap<(usize, u64, Policy), PolicySummary>,
}

/// Per-flow and per-UE throughputs pooled over seeds.
type CdfSamples = (Vec<f64>, Vec<f64>);

fn delay_key(ms: f64) -> u64 {
    // Delays are keyed in microseconds so they can be map keys.
    (ms * 1000.0).round() as u64
}

/// Runs one sweep point, resolving a tuned Rel12 threshold if given.
pub fn execute_run(cfg: &ScenarioConfig, spec: &RunSpec, rel12_threshold: Option<f64>, trace: bool) -> Result<RunResult, SimError> {
    let mut scenario = Scenario::from_config(cfg, spec.policy, spec.ue_per_sector, spec.backhaul_delay_ms);
    if let Some(t) = rel12_threshold {
        scenario.policy.rel12_sinr_threshold_db = t;
    }
    let out = simulator::run_with(&scenario, spec.run_seed, trace)?;
    Ok(RunResult {
        spec: spec.clone(),
        report: out.report,
        rel12_sinr_threshold_db: (spec.policy == Policy::Rel12).then_some(scenario.policy.rel12_sinr_threshold_db),
        events: out.events,
        snapshots: out.audit.snapshots,
        snapshot_violations: out.audit.violations_vs_equal_share + out.audit.violations_vs_de,
        trace: out.trace,
    })
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool, ExperimentError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| ExperimentError::Pool(e.to_string()))
}

/// Tuned Rel12 thresholds per (load, delay), using the first replicate.
fn tune_thresholds(
    cfg: &ScenarioConfig,
    master_seed: u64,
    pool: &rayon::ThreadPool,
) -> Result<BTreeMap<(usize, u64), f64>, ExperimentError> {
    let mut out = BTreeMap::new();
    if cfg.policy.rel12_tune_grid.is_empty() || !cfg.policy.policies.contains(&Policy::Rel12) {
        return Ok(out);
    }
    for &load in &cfg.traffic.ue_per_sector {
        for &delay in &cfg.backhaul_delay_ms {
            let scenario = Scenario::from_config(cfg, Policy::Rel12, load, delay);
            let seed = derive_seed(master_seed, load, cfg.seeds[0]);
            let (threshold, _) = pool
                .install(|| tune_rel12_threshold(&scenario, &cfg.policy.rel12_tune_grid, seed))
                .map_err(|source| ExperimentError::Simulation {
                    run: format!("Rel12 tuning ue={load} delay={delay}ms"),
                    source,
                })?;
            out.insert((load, delay_key(delay)), threshold);
        }
    }
    Ok(out)
}

/// Parses a configuration file and lists every problem in it.
pub fn validate_config(config_path: &Path) -> Vec<Diagnostic> {
    match ScenarioConfig::load(config_path) {
        Ok(_) => Vec::new(),
        Err(ConfigError::Invalid(diags)) => diags,
        Err(e) => vec![Diagnostic {
            field: String::new(),
            line: None,
            message: e.to_string(),
        }],
    }
}

/// Runs the full sweep described by `config_path` and writes `flows.csv`,
/// `summary.csv`, `comparison.csv`, per-point CDFs and `manifest.json` into
/// `out_dir`. Nothing is left behind in `out_dir` if a run fails.
pub fn run_experiment(config_path: &Path, out_dir: &Path, opts: &RunOptions) -> Result<ExperimentSummary, ExperimentError> {
    let bytes = fs::read(config_path).map_err(|source| ConfigError::Io {
        path: config_path.display().to_string(),
        source,
    })?;
    let text = String::from_utf8_lossy(&bytes);
    let cfg = ScenarioConfig::from_toml_str(&text).map_err(ConfigError::Invalid)?;
    let master_seed = opts.master_seed.unwrap_or(cfg.master_seed);

    fs::create_dir_all(out_dir)?;
    let staging = tempfile::Builder::new().prefix(".pfsplit-staging-").tempdir_in(out_dir)?;
    let pool = pool(opts.jobs)?;
    let thresholds = tune_thresholds(&cfg, master_seed, &pool)?;
    let runs = expand_runs(&cfg, master_seed);

    let mut flows_csv = BufWriter::new(fs::File::create(staging.path().join("flows.csv"))?);
    let mut summary_csv = BufWriter::new(fs::File::create(staging.path().join("summary.csv"))?);
    writeln!(flows_csv, "{}", metrics::FLOWS_HEADER)?;
    writeln!(summary_csv, "{}", metrics::SUMMARY_HEADER)?;

    let mut manifest_runs = Vec::with_capacity(runs.len());
    let mut sums: BTreeMap<(usize, u64, Policy), (f64, f64, usize)> = BTreeMap::new();
    // Pooled CDF samples per (load, delay, policy): per-flow and per-UE.
    let mut cdf_samples: BTreeMap<(usize, u64), BTreeMap<Policy, CdfSamples>> = BTreeMap::new();

    // Chunks keep memory bounded while the output order stays fixed.
    let chunk = pool.current_num_threads().max(1) * 2;
    for batch in runs.chunks(chunk) {
        let results: Vec<Result<RunResult, ExperimentError>> = pool.install(|| {
            use rayon::prelude::*;
            batch
                .par_iter()
                .map(|spec| {
                    let threshold = thresholds
                        .get(&(spec.ue_per_sector, delay_key(spec.backhaul_delay_ms)))
                        .copied();
                    execute_run(&cfg, spec, threshold, opts.trace).map_err(|source| ExperimentError::Simulation {
                        run: spec.label(),
                        source,
                    })
                })
                .collect()
        });
        for result in results {
            let r = result?;
            let s = &r.spec;
            metrics::write_flow_rows(&mut flows_csv, s.policy, s.seed, &r.report)?;
            metrics::write_summary_row(&mut summary_csv, s.policy, s.seed, s.ue_per_sector, s.backhaul_delay_ms, &r.report)?;
            let key = (s.ue_per_sector, delay_key(s.backhaul_delay_ms), s.policy);
            let e = sums.entry(key).or_insert((0.0, 0.0, 0));
            e.0 += r.report.edge_rate_bps;
            e.1 += r.report.median_rate_bps;
            e.2 += 1;
            let pooled = cdf_samples
                .entry((s.ue_per_sector, delay_key(s.backhaul_delay_ms)))
                .or_default()
                .entry(s.policy)
                .or_default();
            pooled.0.extend(r.report.flow_throughputs());
            pooled.1.extend(r.report.ue_throughputs());
            if opts.trace {
                let dir = staging.path().join("traces");
                fs::create_dir_all(&dir)?;
                let name = format!(
                    "{}_ue{}_delay{}ms_seed{}.csv",
                    s.policy, s.ue_per_sector, s.backhaul_delay_ms, s.seed
                );
                let mut w = BufWriter::new(fs::File::create(dir.join(name))?);
                writeln!(w, "time,kind,flow_id,ue_id,detail")?;
                for line in &r.trace {
                    writeln!(w, "{line}")?;
                }
                w.flush()?;
            }
            manifest_runs.push(ManifestRun {
                spec: r.spec.clone(),
                rel12_sinr_threshold_db: r.rel12_sinr_threshold_db,
                events: r.events,
                completed_flows: r.report.per_flow.len(),
                incomplete_flows: r.report.incomplete_flows,
                snapshots: r.snapshots,
                snapshot_violations: r.snapshot_violations,
            });
        }
    }
    flows_csv.flush()?;
    summary_csv.flush()?;
    drop(flows_csv);
    drop(summary_csv);

    let means: BTreeMap<(usize, u64, Policy), PolicySummary> = sums
        .into_iter()
        .map(|(k, (edge, median, n))| {
            (
                k,
                PolicySummary {
                    edge_bps: edge / n as f64,
                    median_bps: median / n as f64,
                },
            )
        })
        .collect();

    let mut comparison = BufWriter::new(fs::File::create(staging.path().join("comparison.csv"))?);
    writeln!(comparison, "ue_per_sector,backhaul_delay_ms,baseline,edge_gain_pct,median_gain_pct")?;
    for &load in &cfg.traffic.ue_per_sector {
        for &delay in &cfg.backhaul_delay_ms {
            let point: BTreeMap<Policy, PolicySummary> = means
                .iter()
                .filter(|((l, d, _), _)| *l == load && *d == delay_key(delay))
                .map(|((_, _, p), s)| (*p, *s))
                .collect();
            for g in compare(&point) {
                writeln!(
                    comparison,
                    "{load},{delay},{},{},{}",
                    g.baseline, g.edge_gain_pct, g.median_gain_pct
                )?;
            }
        }
    }
    comparison.flush()?;
    drop(comparison);

    for ((load, delay_us), by_policy) in &cdf_samples {
        let dir = staging.path().join("cdf").join(format!("ue{load}_delay{}ms", *delay_us as f64 / 1000.0));
        fs::create_dir_all(&dir)?;
        for (file, per_ue) in [("cdf.csv", false), ("cdf_ue.csv", true)] {
            let mut w = BufWriter::new(fs::File::create(dir.join(file))?);
            writeln!(w, "{}", metrics::CDF_HEADER)?;
            for (policy, (flows, ues)) in by_policy {
                metrics::write_cdf_rows(&mut w, *policy, if per_ue { ues } else { flows })?;
            }
            w.flush()?;
        }
    }

    let manifest = Manifest {
        config_hash: config_hash(&bytes),
        code_version: env!("CARGO_PKG_VERSION"),
        master_seed,
        runs: manifest_runs,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(io::Error::other)?;
    fs::write(staging.path().join("manifest.json"), json + "\n")?;

    publish(staging.path(), out_dir)?;
    Ok(ExperimentSummary {
        runs: runs.len(),
        out_dir: out_dir.to_path_buf(),
        means,
    })
}

/// Moves everything from the staging directory into `out_dir`.
fn publish(staging: &Path, out_dir: &Path) -> io::Result<()> {
    for entry in fs::read_dir(staging)? {
        let entry = entry?;
        let target = out_dir.join(entry.file_name());
        if target.is_dir() {
            fs::remove_dir_all(&target)?;
        } else if target.exists() {
            fs::remove_file(&target)?;
        }
        fs::rename(entry.path(), target)?;
    }
    Ok(())
}

/// Tunes Rel12's threshold for the first load and delay of `cfg`.
pub fn tune_rel12(cfg: &ScenarioConfig, grid: &[f64], master_seed: u64, jobs: usize) -> Result<(f64, f64), ExperimentError> {
    let load = cfg.traffic.ue_per_sector[0];
    let delay = cfg.backhaul_delay_ms[0];
    let scenario = Scenario::from_config(cfg, Policy::Rel12, load, delay);
    let seed = derive_seed(master_seed, load, cfg.seeds[0]);
    pool(jobs)?
        .install(|| tune_rel12_threshold(&scenario, grid, seed))
        .map_err(|source| ExperimentError::Simulation {
            run: format!("Rel12 tuning ue={load} delay={delay}ms"),
            source,
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_product_size() {
        let mut cfg = ScenarioConfig::default();
        cfg.traffic.ue_per_sector = vec![10, 20, 30];
        let runs = expand_runs(&cfg, 0);
        assert_eq!(runs.len(), 4 * 3 * 4 * 5);
    }

    #[test]
    fn seeds_are_shared_across_policies_and_delays() {
        let cfg = ScenarioConfig::default();
        let runs = expand_runs(&cfg, 11);
        for r in &runs {
            assert_eq!(r.run_seed, derive_seed(11, r.ue_per_sector, r.seed));
        }
        assert_ne!(derive_seed(11, 20, 1), derive_seed(11, 20, 2));
        assert_ne!(derive_seed(11, 20, 1), derive_seed(12, 20, 1));
        assert_ne!(derive_seed(11, 20, 1), derive_seed(11, 10, 1));
    }

    #[test]
    fn hash_tracks_content() {
        assert_eq!(config_hash(b"a = 1"), config_hash(b"a = 1"));
        assert_ne!(config_hash(b"a = 1"), config_hash(b"a = 2"));
    }
}
