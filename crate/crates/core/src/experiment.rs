//! Experiment configuration and sweep orchestration.
//!
//! A config describes one topology, a set of policies, cache sizes and
//! popularity parameters. [`expand_and_run`] executes the Cartesian product
//! of those with `replications` seeds each. Replication `i` uses seed
//! `base_seed + i` for the request stream and producer placement, and every
//! policy sees exactly the same requests for a given replication.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{
    SimulationConfig, SimulationInstance, DEFAULT_MAX_PENDING_EVENTS, DEFAULT_PIT_LIFETIME,
};
use crate::metrics::{summarize, CellKey, CellSummary, MetricsReport};
use crate::ndn::ProducerPlacement;
use crate::policy::{PolicyKind, UcWeights};
use crate::time::SimDuration;
use crate::topology::{compute_routing, generate_ws, load_topology, Graph, NodeId, RoutingTables};
use crate::workload::{ArrivalProcess, MZipf, MZipfParams};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config validation error: {0}")]
    Validation(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("topology {label}: {source}")]
    Topology {
        label: String,
        source: crate::topology::TopologyError,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum TopologySpec {
    Ws { n: usize, k: usize, p: f64 },
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MZipfSet {
    pub q: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlacementSpec {
    /// Each content gets a producer router drawn uniformly at random.
    #[default]
    Random,
    /// All content is produced at one router.
    Single(NodeId),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub topology: TopologySpec,
    #[serde(default = "default_policies")]
    pub policies: Vec<PolicyKind>,
    #[serde(default)]
    pub uc_weights: UcWeights,
    #[serde(default = "default_catalog_size")]
    pub catalog_size: u32,
    #[serde(default = "default_cache_pct_sweep")]
    pub cache_pct_sweep: Vec<f64>,
    #[serde(default = "default_mzipf_sets")]
    pub mzipf_sets: Vec<MZipfSet>,
    #[serde(default = "default_rate")]
    pub aggregate_rate: f64,
    #[serde(default)]
    pub arrival: ArrivalProcess,
    /// Simulated seconds.
    #[serde(default = "default_duration")]
    pub duration: f64,
    /// Simulated seconds excluded from metrics; 10% of `duration` when absent.
    #[serde(default)]
    pub warmup: Option<f64>,
    #[serde(default = "default_replications")]
    pub replications: u32,
    #[serde(default = "default_base_seed")]
    pub base_seed: u64,
    #[serde(default = "default_pit_lifetime")]
    pub pit_lifetime: f64,
    #[serde(default = "default_link_delay")]
    pub link_delay: f64,
    #[serde(default)]
    pub placement: PlacementSpec,
    /// Multi-realization mode: regenerate the WS topology this many times.
    #[serde(default)]
    pub topology_realizations: Option<u32>,
}

fn default_policies() -> Vec<PolicyKind> {
    PolicyKind::ALL.to_vec()
}
fn default_catalog_size() -> u32 {
    1000
}
fn default_cache_pct_sweep() -> Vec<f64> {
    vec![1.0, 2.0, 5.0, 10.0, 20.0, 40.0, 60.0, 80.0, 100.0]
}
fn default_mzipf_sets() -> Vec<MZipfSet> {
    vec![
        MZipfSet { q: 0.7, alpha: 0.7 },
        MZipfSet {
            q: 5.0,
            alpha: 0.65,
        },
        MZipfSet {
            q: 55.0,
            alpha: 0.6,
        },
    ]
}
fn default_rate() -> f64 {
    1000.0
}
fn default_duration() -> f64 {
    200.0
}
fn default_replications() -> u32 {
    10
}
fn default_base_seed() -> u64 {
    1
}
fn default_pit_lifetime() -> f64 {
    DEFAULT_PIT_LIFETIME.as_secs_f64()
}
fn default_link_delay() -> f64 {
    0.010
}

impl ExperimentConfig {
    /// A config with every default and the given topology.
    pub fn with_topology(topology: TopologySpec) -> Self {
        ExperimentConfig {
            topology,
            policies: default_policies(),
            uc_weights: UcWeights::default(),
            catalog_size: default_catalog_size(),
            cache_pct_sweep: default_cache_pct_sweep(),
            mzipf_sets: default_mzipf_sets(),
            aggregate_rate: default_rate(),
            arrival: ArrivalProcess::default(),
            duration: default_duration(),
            warmup: None,
            replications: default_replications(),
            base_seed: default_base_seed(),
            pit_lifetime: default_pit_lifetime(),
            link_delay: default_link_delay(),
            placement: PlacementSpec::default(),
            topology_realizations: None,
        }
    }

    pub fn warmup_secs(&self) -> f64 {
        self.warmup.unwrap_or(self.duration * 0.1)
    }

    /// Catalog entries each router can cache at `pct` percent.
    pub fn cache_capacity(&self, pct: f64) -> usize {
        ((pct / 100.0 * self.catalog_size as f64).round() as usize).max(1)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: String| Err(ConfigError::Validation(msg));
        match &self.topology {
            TopologySpec::Ws { n, k, p } => {
                if *n < 3 || *k == 0 || *k >= *n || !(0.0..=1.0).contains(p) {
                    return fail(format!("topology.ws: need n >= 3, 1 <= k < n, 0 <= p <= 1 (got n={n}, k={k}, p={p})"));
                }
            }
            TopologySpec::File(_) => {
                if self.topology_realizations.is_some() {
                    return fail("topology_realizations requires a ws topology".into());
                }
            }
        }
        if self.policies.is_empty() {
            return fail("policies: at least one policy is required".into());
        }
        let unique: BTreeSet<_> = self.policies.iter().collect();
        if unique.len() != self.policies.len() {
            return fail("policies: duplicate entries".into());
        }
        self.uc_weights
            .validate()
            .map_err(|e| ConfigError::Validation(format!("uc_weights: {e}")))?;
        if self.catalog_size == 0 {
            return fail("catalog_size must be at least 1".into());
        }
        if self.cache_pct_sweep.is_empty() {
            return fail("cache_pct_sweep must not be empty".into());
        }
        for &pct in &self.cache_pct_sweep {
            if !(pct > 0.0 && pct <= 100.0) {
                return fail(format!("cache_pct_sweep: {pct} is outside (0, 100]"));
            }
        }
        if self.mzipf_sets.is_empty() {
            return fail("mzipf_sets must not be empty".into());
        }
        for set in &self.mzipf_sets {
            MZipfParams::new(set.alpha, set.q, self.catalog_size)
                .map_err(|e| ConfigError::Validation(format!("mzipf_sets: {e}")))?;
        }
        if !(self.aggregate_rate.is_finite() && self.aggregate_rate > 0.0) {
            return fail(format!(
                "aggregate_rate must be positive, got {}",
                self.aggregate_rate
            ));
        }
        let warmup = self.warmup_secs();
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return fail(format!("duration must be positive, got {}", self.duration));
        }
        if !(warmup >= 0.0 && warmup < self.duration) {
            return fail(format!(
                "warmup must satisfy 0 <= warmup < duration, got {warmup}"
            ));
        }
        if self.replications == 0 {
            return fail("replications must be at least 1".into());
        }
        if !(self.pit_lifetime.is_finite() && self.pit_lifetime > 0.0) {
            return fail(format!(
                "pit_lifetime must be positive, got {}",
                self.pit_lifetime
            ));
        }
        if !(self.link_delay.is_finite() && self.link_delay >= 0.0) {
            return fail(format!("link_delay must be >= 0, got {}", self.link_delay));
        }
        if self.topology_realizations == Some(0) {
            return fail("topology_realizations must be at least 1".into());
        }
        Ok(())
    }

    /// Makes a relative topology file path relative to `base` instead of the
    /// working directory.
    pub fn resolve_paths(&mut self, base: &Path) {
        if let TopologySpec::File(path) = &mut self.topology {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }
}

/// Parses and validates a TOML experiment description; unknown keys are errors.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let cfg: ExperimentConfig =
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads a config file; relative topology paths resolve against its directory.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut cfg = parse_config(&text)?;
    if let Some(dir) = path.parent() {
        cfg.resolve_paths(dir);
    }
    Ok(cfg)
}

const STREAM_TOPOLOGY: u64 = 0x746f_706f;
const STREAM_PLACEMENT: u64 = 0x706c_6163;

/// SplitMix64 finalizer over `(seed, stream, index)`.
pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One topology instance used by a set of cells.
#[derive(Debug, Clone)]
pub struct Realization {
    pub label: String,
    pub graph: Arc<Graph>,
    pub routing: Arc<RoutingTables>,
}

/// Builds the topology realizations the config asks for.
pub fn build_realizations(cfg: &ExperimentConfig) -> Result<Vec<Realization>, ConfigError> {
    let delay = SimDuration::from_secs_f64(cfg.link_delay);
    let graphs: Vec<(String, Graph)> = match &cfg.topology {
        TopologySpec::Ws { n, k, p } => match cfg.topology_realizations {
            None => {
                let label = format!("ws(n={n};k={k};p={p})");
                let g = generate_ws(*n, *k, *p, cfg.base_seed).map_err(|source| {
                    ConfigError::Topology {
                        label: label.clone(),
                        source,
                    }
                })?;
                vec![(label, g)]
            }
            Some(count) => (1..=u64::from(count))
                .map(|j| {
                    let label = format!("ws-topo-{j}");
                    let seed = derive_seed(cfg.base_seed, STREAM_TOPOLOGY, j);
                    generate_ws(*n, *k, *p, seed)
                        .map(|g| (label.clone(), g))
                        .map_err(|source| ConfigError::Topology { label, source })
                })
                .collect::<Result<_, _>>()?,
        },
        TopologySpec::File(path) => {
            let label = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string());
            let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
                path: path.clone(),
                source,
            })?;
            let g = load_topology(&text).map_err(|source| ConfigError::Topology {
                label: label.clone(),
                source,
            })?;
            vec![(label, g)]
        }
    };

    graphs
        .into_iter()
        .map(|(label, graph)| {
            if let PlacementSpec::Single(node) = cfg.placement {
                if node >= graph.node_count() {
                    return Err(ConfigError::Validation(format!(
                        "placement: router {node} not in {label} ({} routers)",
                        graph.node_count()
                    )));
                }
            }
            let graph = graph.with_link_delay(delay);
            let all: BTreeSet<NodeId> = (0..graph.node_count()).collect();
            let routing =
                compute_routing(&graph, &all).map_err(|source| ConfigError::Topology {
                    label: label.clone(),
                    source,
                })?;
            Ok(Realization {
                label,
                graph: Arc::new(graph),
                routing: Arc::new(routing),
            })
        })
        .collect()
}

/// A cell that could not be completed.
#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub cell: String,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOutcome {
    pub reports: Vec<MetricsReport>,
    pub failures: Vec<CellFailure>,
}

impl SweepOutcome {
    pub fn summaries(&self) -> Vec<CellSummary> {
        summarize(&self.reports)
    }

    pub fn is_complete(&self) -> bool {
        self.failures.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker thread cap; `None` uses all cores.
    pub parallel: Option<usize>,
}

struct Job {
    realization: usize,
    catalog: usize,
    replication: u32,
    policy: PolicyKind,
    cache_pct: f64,
}

/// Runs every (topology realization × MZipf set × replication × policy ×
/// cache size) combination and returns one report per run. Output order
/// is independent of scheduling.
pub fn expand_and_run(
    cfg: &ExperimentConfig,
    options: RunOptions,
) -> Result<SweepOutcome, ConfigError> {
    cfg.validate()?;
    let realizations = build_realizations(cfg)?;
    let catalogs: Vec<Arc<MZipf>> = cfg
        .mzipf_sets
        .iter()
        .map(|s| {
            MZipfParams::new(s.alpha, s.q, cfg.catalog_size)
                .and_then(MZipf::new)
                .map(Arc::new)
                .map_err(|e| ConfigError::Validation(e.to_string()))
        })
        .collect::<Result<_, _>>()?;

    // Placement depends on the replication seed only, so it is shared by
    // all policies and cache sizes of that replication.
    let placements: Vec<Vec<Arc<ProducerPlacement>>> = realizations
        .iter()
        .map(|r| {
            (0..cfg.replications)
                .map(|i| {
                    let seed = cfg.base_seed.wrapping_add(u64::from(i));
                    Arc::new(match cfg.placement {
                        PlacementSpec::Single(node) => {
                            ProducerPlacement::single(cfg.catalog_size, node)
                        }
                        PlacementSpec::Random => {
                            let routers: Vec<NodeId> = (0..r.graph.node_count()).collect();
                            let mut rng =
                                ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_PLACEMENT, 0));
                            ProducerPlacement::random(cfg.catalog_size, &routers, &mut rng)
                        }
                    })
                })
                .collect()
        })
        .collect();

    let mut jobs = Vec::new();
    for realization in 0..realizations.len() {
        for catalog in 0..catalogs.len() {
            for replication in 0..cfg.replications {
                for &policy in &cfg.policies {
                    for &cache_pct in &cfg.cache_pct_sweep {
                        jobs.push(Job {
                            realization,
                            catalog,
                            replication,
                            policy,
                            cache_pct,
                        });
                    }
                }
            }
        }
    }

    let run_job = |job: &Job| -> Result<MetricsReport, CellFailure> {
        let r = &realizations[job.realization];
        let set = cfg.mzipf_sets[job.catalog];
        let seed = cfg.base_seed.wrapping_add(u64::from(job.replication));
        let key = CellKey {
            topology: r.label.clone(),
            policy: job.policy,
            cache_pct: job.cache_pct,
            alpha: set.alpha,
            q: set.q,
            catalog_size: cfg.catalog_size,
        };
        let fail = |error: String| CellFailure {
            cell: format!(
                "{} {} cache={}% q={} alpha={}",
                key.topology, key.policy, key.cache_pct, key.q, key.alpha
            ),
            seed,
            error,
        };
        let sim_config = SimulationConfig {
            graph: Arc::clone(&r.graph),
            routing: Arc::clone(&r.routing),
            placement: Arc::clone(&placements[job.realization][job.replication as usize]),
            catalog: Arc::clone(&catalogs[job.catalog]),
            policy: job.policy,
            uc_weights: cfg.uc_weights,
            cs_capacity: cfg.cache_capacity(job.cache_pct),
            aggregate_rate: cfg.aggregate_rate,
            arrival: cfg.arrival,
            pit_lifetime: SimDuration::from_secs_f64(cfg.pit_lifetime),
            seed,
            max_pending_events: DEFAULT_MAX_PENDING_EVENTS,
        };
        let counters = SimulationInstance::new(sim_config)
            .and_then(|mut sim| {
                sim.run(
                    SimDuration::from_secs_f64(cfg.duration),
                    SimDuration::from_secs_f64(cfg.warmup_secs()),
                )
            })
            .map_err(|e| fail(e.to_string()))?;
        MetricsReport::from_counters(key.clone(), seed, counters).map_err(|e| fail(e.to_string()))
    };

    let results: Vec<Result<MetricsReport, CellFailure>> = match options.parallel {
        Some(1) => jobs.iter().map(run_job).collect(),
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| ConfigError::Validation(format!("thread pool: {e}")))?
            .install(|| jobs.par_iter().map(run_job).collect()),
        None => jobs.par_iter().map(run_job).collect(),
    };

    let mut outcome = SweepOutcome::default();
    for result in results {
        match result {
            Ok(report) => outcome.reports.push(report),
            Err(failure) => outcome.failures.push(failure),
        }
    }
    Ok(outcome)
}
