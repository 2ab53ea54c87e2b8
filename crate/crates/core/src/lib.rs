//! Discrete-event simulator for NDN-style information-centric networks.
//!
//! The crate is organized bottom-up:
//!
//! - [`topology`]: Watts-Strogatz generation, topology files, shortest-path FIBs.
//! - [`policy`]: Content Store and the FIFO / LRU / Universal Caching policies.
//! - [`ndn`]: one router's CS / PIT / FIB pipeline.
//! - [`workload`]: Mandelbrot-Zipf popularity and request arrivals.
//! - [`engine`]: the event queue and a single simulation run.
//! - [`metrics`]: hit ratio, hop count, confidence intervals, CSV output.
//! - [`experiment`]: configuration parsing and parameter sweeps.

pub mod engine;
pub mod experiment;
pub mod metrics;
pub mod ndn;
pub mod policy;
pub mod time;
pub mod topology;
pub mod workload;

pub use engine::{EngineError, ProducerPlacement, SimulationConfig, SimulationInstance};
pub use experiment::{expand_and_run, parse_config, ExperimentConfig, SweepOutcome};
pub use metrics::{MetricsReport, RunCounters};
pub use ndn::{Data, Face, Interest, Name, NodeState};
pub use policy::{ContentStore, PolicyKind, UcWeights};
pub use time::{SimDuration, SimTime};
pub use topology::{Graph, NodeId, RoutingTables};
pub use workload::{MZipf, MZipfParams};
