//! Per-router NDN forwarding: Content Store lookup, PIT aggregation and
//! satisfaction, and FIB forwarding toward the content's producer.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::IndexedRandom;
use rand::Rng;
use thiserror::Error;

use crate::policy::{
    Admission, ContentStore, NodeProfile, PolicyKind, ReplacementPolicy, UcWeights,
};
use crate::time::{SimDuration, SimTime};
use crate::topology::{NodeId, RoutingTables};

/// Size of every Data chunk in bytes.
pub const CHUNK_SIZE: u32 = 1024;

/// Flat content name: the popularity rank `1..=N` in the catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Name(pub u32);

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "/content/{}", self.0)
    }
}

/// A router interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Face {
    /// Link to an adjacent router.
    Neighbor(NodeId),
    /// Local consumer application; one face per outstanding request (nonce).
    Consumer(u64),
    /// Local producer application.
    Producer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interest {
    pub name: Name,
    pub nonce: u64,
    pub hops_traveled: u32,
    pub origin_consumer: NodeId,
    pub issue_time: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Data {
    pub name: Name,
    pub chunk_size: u32,
    /// Links traversed since the node that served this Data.
    pub hops_from_source: u32,
}

impl Data {
    pub fn served(name: Name) -> Self {
        Data {
            name,
            chunk_size: CHUNK_SIZE,
            hops_from_source: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PitEntry {
    pub name: Name,
    /// Downstream faces in arrival order, without duplicates.
    pub ingress: Vec<Face>,
    pub created_at: SimTime,
    pub expires_at: SimTime,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NdnError {
    #[error("node {node} has no route toward the producer of {name}")]
    NoRoute { node: NodeId, name: Name },
    #[error("{name} is outside the catalog")]
    UnknownName { name: Name },
}

/// Maps each content name to the router hosting its producer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProducerPlacement {
    producer_of: Vec<NodeId>,
}

impl ProducerPlacement {
    /// Every content is produced at `node`.
    pub fn single(catalog_size: u32, node: NodeId) -> Self {
        ProducerPlacement {
            producer_of: vec![node; catalog_size as usize],
        }
    }

    /// Each content gets a producer router drawn uniformly from `routers`.
    pub fn random<R: Rng + ?Sized>(catalog_size: u32, routers: &[NodeId], rng: &mut R) -> Self {
        let producer_of = (0..catalog_size)
            .map(|_| *routers.choose(rng).expect("at least one router"))
            .collect();
        ProducerPlacement { producer_of }
    }

    pub fn from_vec(producer_of: Vec<NodeId>) -> Self {
        ProducerPlacement { producer_of }
    }

    pub fn producer_of(&self, name: Name) -> Option<NodeId> {
        let idx = (name.0 as usize).checked_sub(1)?;
        self.producer_of.get(idx).copied()
    }

    pub fn producers(&self) -> std::collections::BTreeSet<NodeId> {
        self.producer_of.iter().copied().collect()
    }

    pub fn catalog_size(&self) -> usize {
        self.producer_of.len()
    }
}

/// The FIB view shared by all routers of one simulation.
#[derive(Debug, Clone, Copy)]
pub struct Fib<'a> {
    pub routing: &'a RoutingTables,
    pub placement: &'a ProducerPlacement,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    /// This router hosts the producer.
    Local,
    NextHop(NodeId),
}

impl Fib<'_> {
    pub fn lookup(&self, node: NodeId, name: Name) -> Result<Route, NdnError> {
        let producer = self
            .placement
            .producer_of(name)
            .ok_or(NdnError::UnknownName { name })?;
        if producer == node {
            return Ok(Route::Local);
        }
        self.routing
            .next_hop(node, producer)
            .map(Route::NextHop)
            .ok_or(NdnError::NoRoute { node, name })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForwardingAction {
    SendInterest { to: NodeId, interest: Interest },
    SendData { to: Face, data: Data },
}

/// What happened to an incoming Interest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterestDisposition {
    CacheHit,
    ProducerServe,
    Aggregated,
    Forwarded,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterestOutcome {
    pub disposition: InterestDisposition,
    pub actions: Vec<ForwardingAction>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataOutcome {
    pub actions: Vec<ForwardingAction>,
    /// `None` for unsolicited Data or content already cached.
    pub admission: Option<Admission>,
    pub unsolicited: bool,
}

/// Raw per-router counters over the whole run (no warmup filtering).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NodeStats {
    pub interests: u64,
    pub cache_hits: u64,
    pub producer_serves: u64,
    pub aggregated: u64,
    pub forwarded: u64,
    pub unsolicited_data: u64,
    pub pit_expired: u64,
}

/// One router: Content Store with its replacement policy, PIT, and FIB access.
#[derive(Debug)]
pub struct NodeState {
    node_id: NodeId,
    store: ContentStore,
    policy: Box<dyn ReplacementPolicy>,
    pit: BTreeMap<Name, PitEntry>,
    profile: NodeProfile,
    pit_lifetime: SimDuration,
    stats: NodeStats,
}

impl NodeState {
    pub fn new(
        node_id: NodeId,
        cs_capacity: usize,
        policy: PolicyKind,
        weights: UcWeights,
        profile: NodeProfile,
        pit_lifetime: SimDuration,
    ) -> Self {
        NodeState {
            node_id,
            store: ContentStore::new(cs_capacity),
            policy: policy.build(cs_capacity, weights),
            pit: BTreeMap::new(),
            profile,
            pit_lifetime,
            stats: NodeStats::default(),
        }
    }

    pub fn node_id(&self) -> NodeId {
        self.node_id
    }

    pub fn store(&self) -> &ContentStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ContentStore {
        &mut self.store
    }

    pub fn policy(&self) -> &dyn ReplacementPolicy {
        self.policy.as_ref()
    }

    pub fn pit(&self) -> &BTreeMap<Name, PitEntry> {
        &self.pit
    }

    pub fn degree(&self) -> u32 {
        self.profile.degree
    }

    pub fn stats(&self) -> &NodeStats {
        &self.stats
    }

    /// Inserts content directly, as if Data had just been admitted.
    pub fn preload(&mut self, name: Name, hops_from_source: u32) -> Option<Admission> {
        self.store
            .offer(self.policy.as_ref(), name, hops_from_source, &self.profile)
    }

    /// Processes an Interest arriving on `ingress`.
    pub fn on_interest(
        &mut self,
        pkt: Interest,
        ingress: Face,
        fib: &Fib<'_>,
        now: SimTime,
    ) -> Result<InterestOutcome, NdnError> {
        self.stats.interests += 1;
        self.policy.on_access(&mut self.store, pkt.name);

        if self.store.contains(pkt.name) {
            self.stats.cache_hits += 1;
            return Ok(InterestOutcome {
                disposition: InterestDisposition::CacheHit,
                actions: vec![ForwardingAction::SendData {
                    to: ingress,
                    data: Data::served(pkt.name),
                }],
            });
        }

        let route = fib.lookup(self.node_id, pkt.name)?;
        if route == Route::Local {
            self.stats.producer_serves += 1;
            return Ok(InterestOutcome {
                disposition: InterestDisposition::ProducerServe,
                actions: vec![ForwardingAction::SendData {
                    to: ingress,
                    data: Data::served(pkt.name),
                }],
            });
        }

        if let Some(entry) = self.pit.get_mut(&pkt.name) {
            if !entry.ingress.contains(&ingress) {
                entry.ingress.push(ingress);
            }
            self.stats.aggregated += 1;
            return Ok(InterestOutcome {
                disposition: InterestDisposition::Aggregated,
                actions: Vec::new(),
            });
        }

        let Route::NextHop(next) = route else {
            unreachable!("local route handled above")
        };
        self.pit.insert(
            pkt.name,
            PitEntry {
                name: pkt.name,
                ingress: vec![ingress],
                created_at: now,
                expires_at: now + self.pit_lifetime,
            },
        );
        self.stats.forwarded += 1;
        Ok(InterestOutcome {
            disposition: InterestDisposition::Forwarded,
            actions: vec![ForwardingAction::SendInterest {
                to: next,
                interest: pkt,
            }],
        })
    }

    /// Processes Data arriving from upstream: satisfies the PIT entry along
    /// every recorded face, then offers the content to the Content Store.
    pub fn on_data(&mut self, pkt: Data, _ingress: Face) -> DataOutcome {
        let Some(entry) = self.pit.remove(&pkt.name) else {
            self.stats.unsolicited_data += 1;
            return DataOutcome {
                actions: Vec::new(),
                admission: None,
                unsolicited: true,
            };
        };
        let actions = entry
            .ingress
            .iter()
            .map(|&to| ForwardingAction::SendData { to, data: pkt })
            .collect();
        let admission = self.store.offer(
            self.policy.as_ref(),
            pkt.name,
            pkt.hops_from_source,
            &self.profile,
        );
        DataOutcome {
            actions,
            admission,
            unsolicited: false,
        }
    }

    /// Removes PIT entries with `expires_at <= now` and returns them.
    pub fn expire_pit(&mut self, now: SimTime) -> Vec<PitEntry> {
        let expired: Vec<Name> = self
            .pit
            .values()
            .filter(|e| e.expires_at <= now)
            .map(|e| e.name)
            .collect();
        self.stats.pit_expired += expired.len() as u64;
        expired
            .into_iter()
            .filter_map(|name| self.pit.remove(&name))
            .collect()
    }
}
