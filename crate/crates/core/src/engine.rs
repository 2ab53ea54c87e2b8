//! Deterministic discrete-event engine for one simulation run.
//!
//! Events are ordered by `(fire_time, sequence)`, where `sequence` is a
//! global counter assigned at scheduling time. All randomness comes from one
//! seeded generator and is only drawn when generating requests, so runs with
//! the same inputs and seed are bit-identical.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustc_hash::{FxHashMap, FxHashSet};
use thiserror::Error;

use crate::metrics::{NodeCounters, RunCounters};
pub use crate::ndn::ProducerPlacement;
use crate::ndn::{
    Data, Face, Fib, ForwardingAction, Interest, InterestDisposition, NdnError, NodeState,
};
use crate::policy::{NodeProfile, PolicyKind, UcWeights};
use crate::time::{SimDuration, SimTime};
use crate::topology::{Graph, NodeId, RoutingTables};
use crate::workload::{ArrivalProcess, MZipf, Request, RequestStream, WorkloadError};

/// Default PIT entry lifetime.
pub const DEFAULT_PIT_LIFETIME: SimDuration = SimDuration::from_secs(2);
/// Interval between batch PIT expiry sweeps.
pub const PIT_SWEEP_INTERVAL: SimDuration = SimDuration::from_secs(1);
/// Guard against runaway event growth.
pub const DEFAULT_MAX_PENDING_EVENTS: usize = 1 << 24;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("event queue exceeded {limit} pending events at t={at}")]
    QueueOverflow { limit: usize, at: SimTime },
    #[error("no link between {from} and {to}")]
    NoSuchLink { from: NodeId, to: NodeId },
    #[error("invalid run window: duration {duration}, warmup {warmup}")]
    InvalidWindow {
        duration: SimDuration,
        warmup: SimDuration,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Forwarding(#[from] NdnError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
}

/// Everything needed to build a [`SimulationInstance`]. Shared inputs are
/// behind `Arc` so replications can run concurrently without copying them.
#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub graph: Arc<Graph>,
    pub routing: Arc<RoutingTables>,
    pub placement: Arc<ProducerPlacement>,
    pub catalog: Arc<MZipf>,
    pub policy: PolicyKind,
    pub uc_weights: UcWeights,
    pub cs_capacity: usize,
    pub aggregate_rate: f64,
    pub arrival: ArrivalProcess,
    pub pit_lifetime: SimDuration,
    pub seed: u64,
    pub max_pending_events: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Packet {
    Interest(Interest),
    Data(Data),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum EventKind {
    RequestGeneration(Request),
    InterestArrival {
        node: NodeId,
        interest: Interest,
        ingress: Face,
    },
    DataArrival {
        node: NodeId,
        data: Data,
        ingress: Face,
    },
    PitSweep,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Event {
    fire_time: SimTime,
    sequence: u64,
    kind: EventKind,
}

impl Ord for Event {
    // Reversed so the max-heap pops the earliest (time, sequence).
    fn cmp(&self, other: &Self) -> Ordering {
        (other.fire_time, other.sequence).cmp(&(self.fire_time, self.sequence))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy)]
struct PendingRequest {
    counted: bool,
}

/// One simulation: topology, router states, request stream, clock, queue.
#[derive(Debug)]
pub struct SimulationInstance {
    config: SimulationConfig,
    nodes: Vec<NodeState>,
    stream: RequestStream,
    rng: ChaCha8Rng,
    clock: SimTime,
    next_sequence: u64,
    queue: BinaryHeap<Event>,
    next_nonce: u64,
    pending: FxHashMap<u64, PendingRequest>,
    warmup_end: SimTime,
    counters: RunCounters,
    unique_names: Vec<FxHashSet<u32>>,
    completion_log: Option<Vec<Completion>>,
}

/// A finished request, recorded when completion logging is enabled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Completion {
    pub nonce: u64,
    pub consumer: NodeId,
    pub name: crate::ndn::Name,
    pub hops: u32,
    pub issue_time: SimTime,
    pub completed_at: SimTime,
}

impl SimulationInstance {
    pub fn new(config: SimulationConfig) -> Result<Self, EngineError> {
        let graph = &config.graph;
        if config.placement.catalog_size() != config.catalog.catalog_size() as usize {
            return Err(EngineError::InvalidConfig(format!(
                "placement covers {} names but the catalog has {}",
                config.placement.catalog_size(),
                config.catalog.catalog_size()
            )));
        }
        if let Some(&bad) = config
            .placement
            .producers()
            .iter()
            .find(|&&p| p >= graph.node_count())
        {
            return Err(EngineError::InvalidConfig(format!(
                "producer router {bad} is not in the graph"
            )));
        }
        config
            .uc_weights
            .validate()
            .map_err(|e| EngineError::InvalidConfig(e.to_string()))?;

        let max_degree = graph.max_degree();
        let diameter = config.routing.diameter();
        let nodes = (0..graph.node_count())
            .map(|v| {
                NodeState::new(
                    v,
                    config.cs_capacity,
                    config.policy,
                    config.uc_weights,
                    NodeProfile::new(graph.degree(v), max_degree, diameter),
                    config.pit_lifetime,
                )
            })
            .collect();
        let stream = RequestStream::new(
            config.aggregate_rate,
            config.arrival,
            (0..graph.node_count()).collect(),
        )?;
        let counters = RunCounters {
            nodes: vec![NodeCounters::default(); graph.node_count()],
            ..RunCounters::default()
        };
        Ok(SimulationInstance {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            unique_names: vec![FxHashSet::default(); graph.node_count()],
            config,
            nodes,
            stream,
            clock: SimTime::ZERO,
            next_sequence: 0,
            queue: BinaryHeap::new(),
            next_nonce: 0,
            pending: FxHashMap::default(),
            warmup_end: SimTime::ZERO,
            counters,
            completion_log: None,
        })
    }

    /// Keeps a per-request completion log (for tests and debugging).
    pub fn record_completions(&mut self) {
        self.completion_log = Some(Vec::new());
    }

    pub fn completions(&self) -> &[Completion] {
        self.completion_log.as_deref().unwrap_or(&[])
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn clock(&self) -> SimTime {
        self.clock
    }

    /// Runs until the clock passes `duration`. Only requests issued at or
    /// after `warmup` are counted; requests still outstanding at the cutoff
    /// are reported as in flight and excluded from hit and hop statistics.
    pub fn run(
        &mut self,
        duration: SimDuration,
        warmup: SimDuration,
    ) -> Result<RunCounters, EngineError> {
        if duration == SimDuration::ZERO || warmup >= duration {
            return Err(EngineError::InvalidWindow { duration, warmup });
        }
        let end = SimTime::ZERO + duration;
        self.warmup_end = SimTime::ZERO + warmup;

        let first = self
            .stream
            .next_request(&self.config.catalog, &mut self.rng, self.clock);
        self.schedule(first.time, EventKind::RequestGeneration(first))?;
        self.schedule(self.clock + PIT_SWEEP_INTERVAL, EventKind::PitSweep)?;

        while let Some(event) = self.queue.pop() {
            if event.fire_time > end {
                break;
            }
            debug_assert!(event.fire_time >= self.clock);
            self.clock = event.fire_time;
            match event.kind {
                EventKind::RequestGeneration(req) => self.issue_request(req, end)?,
                EventKind::InterestArrival {
                    node,
                    interest,
                    ingress,
                } => self.handle_interest(node, interest, ingress)?,
                EventKind::DataArrival {
                    node,
                    data,
                    ingress,
                } => self.handle_data(node, data, ingress)?,
                EventKind::PitSweep => self.sweep_pits()?,
            }
        }

        self.counters.in_flight = self.pending.values().filter(|p| p.counted).count() as u64;
        self.counters.unsolicited_data =
            self.nodes.iter().map(|n| n.stats().unsolicited_data).sum();
        for (slot, names) in self.counters.nodes.iter_mut().zip(&self.unique_names) {
            slot.unique_names_requested = names.len() as u64;
        }
        Ok(self.counters.clone())
    }

    fn schedule(&mut self, fire_time: SimTime, kind: EventKind) -> Result<(), EngineError> {
        if self.queue.len() >= self.config.max_pending_events {
            return Err(EngineError::QueueOverflow {
                limit: self.config.max_pending_events,
                at: self.clock,
            });
        }
        let sequence = self.next_sequence;
        self.next_sequence += 1;
        self.queue.push(Event {
            fire_time,
            sequence,
            kind,
        });
        Ok(())
    }

    /// Sends `packet` over the link `from -> to`; arrival after the link delay.
    /// Hop counters grow by one per link traversal.
    pub fn transmit(
        &mut self,
        from: NodeId,
        to: NodeId,
        packet: Packet,
    ) -> Result<(), EngineError> {
        if !self.config.graph.has_edge(from, to) {
            return Err(EngineError::NoSuchLink { from, to });
        }
        let at = self.clock + self.config.graph.link_delay();
        let ingress = Face::Neighbor(from);
        let kind = match packet {
            Packet::Interest(mut interest) => {
                interest.hops_traveled += 1;
                EventKind::InterestArrival {
                    node: to,
                    interest,
                    ingress,
                }
            }
            Packet::Data(mut data) => {
                data.hops_from_source += 1;
                EventKind::DataArrival {
                    node: to,
                    data,
                    ingress,
                }
            }
        };
        self.schedule(at, kind)
    }

    fn issue_request(&mut self, req: Request, end: SimTime) -> Result<(), EngineError> {
        let counted = req.time >= self.warmup_end;
        let nonce = self.next_nonce;
        self.next_nonce += 1;
        if counted {
            self.counters.requests_issued += 1;
        }
        self.pending.insert(nonce, PendingRequest { counted });
        let interest = Interest {
            name: req.name,
            nonce,
            hops_traveled: 0,
            origin_consumer: req.consumer,
            issue_time: req.time,
        };
        // Local consumer face: same instant, later sequence number.
        self.schedule(
            self.clock,
            EventKind::InterestArrival {
                node: req.consumer,
                interest,
                ingress: Face::Consumer(nonce),
            },
        )?;

        let next = self
            .stream
            .next_request(&self.config.catalog, &mut self.rng, self.clock);
        if next.time <= end {
            self.schedule(next.time, EventKind::RequestGeneration(next))?;
        }
        Ok(())
    }

    fn handle_interest(
        &mut self,
        node: NodeId,
        interest: Interest,
        ingress: Face,
    ) -> Result<(), EngineError> {
        let fib = Fib {
            routing: &self.config.routing,
            placement: &self.config.placement,
        };
        let outcome = self.nodes[node].on_interest(interest, ingress, &fib, self.clock)?;

        if interest.issue_time >= self.warmup_end {
            let slot = &mut self.counters.nodes[node];
            slot.interests_received += 1;
            self.unique_names[node].insert(interest.name.0);
            match outcome.disposition {
                InterestDisposition::CacheHit => slot.cache_hits += 1,
                InterestDisposition::ProducerServe => self.counters.producer_serves += 1,
                InterestDisposition::Aggregated | InterestDisposition::Forwarded => {}
            }
        }
        self.apply(node, outcome.actions, Some(interest))
    }

    fn handle_data(&mut self, node: NodeId, data: Data, ingress: Face) -> Result<(), EngineError> {
        let outcome = self.nodes[node].on_data(data, ingress);
        self.apply(node, outcome.actions, None)
    }

    fn apply(
        &mut self,
        node: NodeId,
        actions: Vec<ForwardingAction>,
        trigger: Option<Interest>,
    ) -> Result<(), EngineError> {
        for action in actions {
            match action {
                ForwardingAction::SendInterest { to, interest } => {
                    self.transmit(node, to, Packet::Interest(interest))?
                }
                ForwardingAction::SendData {
                    to: Face::Neighbor(to),
                    data,
                } => self.transmit(node, to, Packet::Data(data))?,
                ForwardingAction::SendData {
                    to: Face::Consumer(nonce),
                    data,
                } => self.complete(node, nonce, data, trigger),
                ForwardingAction::SendData {
                    to: Face::Producer, ..
                } => {}
            }
        }
        Ok(())
    }

    fn complete(&mut self, consumer: NodeId, nonce: u64, data: Data, trigger: Option<Interest>) {
        let Some(req) = self.pending.remove(&nonce) else {
            return;
        };
        if req.counted {
            self.counters.completions += 1;
            self.counters.sum_hop_counts += u64::from(data.hops_from_source);
        }
        if let Some(log) = self.completion_log.as_mut() {
            log.push(Completion {
                nonce,
                consumer,
                name: data.name,
                hops: data.hops_from_source,
                issue_time: trigger.map_or(SimTime::ZERO, |i| i.issue_time),
                completed_at: self.clock,
            });
        }
    }

    fn sweep_pits(&mut self) -> Result<(), EngineError> {
        let now = self.clock;
        for v in 0..self.nodes.len() {
            for entry in self.nodes[v].expire_pit(now) {
                for face in entry.ingress {
                    if let Face::Consumer(nonce) = face {
                        if let Some(req) = self.pending.remove(&nonce) {
                            if req.counted {
                                self.counters.timeouts += 1;
                            }
                        }
                    }
                }
            }
        }
        self.schedule(now + PIT_SWEEP_INTERVAL, EventKind::PitSweep)
    }
}
