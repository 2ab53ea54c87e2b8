//! Content Store and cache replacement policies.
//!
//! The [`ContentStore`] keeps entries plus two ordered indexes (insertion
//! stamp and last-use stamp). Policies observe accesses through
//! [`ReplacementPolicy::on_access`] and decide admission and victims through
//! [`ReplacementPolicy::admit`]; the store applies the decision.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ndn::Name;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PolicyKind {
    #[serde(rename = "FIFO")]
    Fifo,
    #[serde(rename = "LRU")]
    Lru,
    #[serde(rename = "UC")]
    Uc,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::Fifo, PolicyKind::Lru, PolicyKind::Uc];

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::Fifo => "FIFO",
            PolicyKind::Lru => "LRU",
            PolicyKind::Uc => "UC",
        }
    }

    /// Instantiates a fresh policy for a store of `capacity` entries.
    pub fn build(self, capacity: usize, weights: UcWeights) -> Box<dyn ReplacementPolicy> {
        match self {
            PolicyKind::Fifo => Box::new(Fifo),
            PolicyKind::Lru => Box::new(Lru),
            PolicyKind::Uc => Box::new(UniversalCaching::new(capacity, weights)),
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "FIFO" => Ok(PolicyKind::Fifo),
            "LRU" => Ok(PolicyKind::Lru),
            "UC" => Ok(PolicyKind::Uc),
            other => Err(PolicyError::InvalidParameter(format!(
                "unknown policy `{other}`"
            ))),
        }
    }
}

/// A cached content item and its replacement metadata.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CacheEntry {
    pub name: Name,
    pub inserted_at: u64,
    pub last_used_at: u64,
    /// Hops between the serving node and this router when the Data was cached.
    pub hops_from_source: u32,
}

/// Outcome of offering new content to a full or non-full store.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admission {
    Admit { victim: Option<Name> },
    Reject,
}

/// Static, per-router inputs to the Universal Caching metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeProfile {
    pub degree: u32,
    pub max_degree: u32,
    pub diameter: u32,
}

impl NodeProfile {
    /// Denominators are clamped to 1 so single-router graphs stay well defined.
    pub fn new(degree: usize, max_degree: usize, diameter: u32) -> Self {
        NodeProfile {
            degree: degree as u32,
            max_degree: (max_degree as u32).max(1),
            diameter: diameter.max(1),
        }
    }
}

/// Capacity-bounded content cache.
#[derive(Debug, Clone)]
pub struct ContentStore {
    capacity: usize,
    clock: u64,
    entries: FxHashMap<Name, CacheEntry>,
    by_insertion: BTreeMap<u64, Name>,
    by_recency: BTreeMap<u64, Name>,
}

impl ContentStore {
    pub fn new(capacity: usize) -> Self {
        ContentStore {
            capacity,
            clock: 0,
            entries: FxHashMap::with_capacity_and_hasher(capacity, Default::default()),
            by_insertion: BTreeMap::new(),
            by_recency: BTreeMap::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() >= self.capacity
    }

    pub fn contains(&self, name: Name) -> bool {
        self.entries.contains_key(&name)
    }

    pub fn get(&self, name: Name) -> Option<&CacheEntry> {
        self.entries.get(&name)
    }

    /// Entries in unspecified order.
    pub fn entries(&self) -> impl Iterator<Item = &CacheEntry> {
        self.entries.values()
    }

    /// Names from oldest to newest insertion.
    pub fn insertion_order(&self) -> impl Iterator<Item = Name> + '_ {
        self.by_insertion.values().copied()
    }

    /// Names from least to most recently used.
    pub fn recency_order(&self) -> impl Iterator<Item = Name> + '_ {
        self.by_recency.values().copied()
    }

    fn tick(&mut self) -> u64 {
        self.clock += 1;
        self.clock
    }

    /// Marks `name` as used now. Returns false if it is not cached.
    pub fn touch(&mut self, name: Name) -> bool {
        let now = self.clock + 1;
        let Some(entry) = self.entries.get_mut(&name) else {
            return false;
        };
        self.clock = now;
        self.by_recency.remove(&entry.last_used_at);
        entry.last_used_at = now;
        self.by_recency.insert(now, name);
        true
    }

    pub fn remove(&mut self, name: Name) -> Option<CacheEntry> {
        let entry = self.entries.remove(&name)?;
        self.by_insertion.remove(&entry.inserted_at);
        self.by_recency.remove(&entry.last_used_at);
        Some(entry)
    }

    /// Builds the candidate entry that [`ContentStore::offer`] would insert.
    pub fn candidate(&self, name: Name, hops_from_source: u32) -> CacheEntry {
        let stamp = self.clock + 1;
        CacheEntry {
            name,
            inserted_at: stamp,
            last_used_at: stamp,
            hops_from_source,
        }
    }

    /// Offers new content. Returns `None` when the name is already cached.
    pub fn offer(
        &mut self,
        policy: &dyn ReplacementPolicy,
        name: Name,
        hops_from_source: u32,
        profile: &NodeProfile,
    ) -> Option<Admission> {
        if self.contains(name) {
            return None;
        }
        let candidate = self.candidate(name, hops_from_source);
        let decision = if self.capacity == 0 {
            Admission::Reject
        } else {
            policy.admit(self, &candidate, profile)
        };
        if let Admission::Admit { victim } = decision {
            if let Some(victim) = victim {
                self.remove(victim);
            }
            debug_assert!(self.len() < self.capacity);
            let stamp = self.tick();
            let entry = CacheEntry {
                inserted_at: stamp,
                last_used_at: stamp,
                ..candidate
            };
            self.by_insertion.insert(stamp, name);
            self.by_recency.insert(stamp, name);
            self.entries.insert(name, entry);
        }
        Some(decision)
    }
}

/// A Content Store replacement strategy.
pub trait ReplacementPolicy: Send + fmt::Debug {
    fn kind(&self) -> PolicyKind;

    /// Called for every Interest for `name` reaching this router, hit or miss.
    fn on_access(&mut self, store: &mut ContentStore, name: Name);

    /// Decides whether `candidate` (not yet cached) enters `store`, and what it replaces.
    fn admit(
        &self,
        store: &ContentStore,
        candidate: &CacheEntry,
        profile: &NodeProfile,
    ) -> Admission;
}

/// Evicts the oldest insertion; accesses do not change the order.
#[derive(Debug, Clone, Copy, Default)]
pub struct Fifo;

impl ReplacementPolicy for Fifo {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Fifo
    }

    fn on_access(&mut self, _store: &mut ContentStore, _name: Name) {}

    fn admit(&self, store: &ContentStore, _: &CacheEntry, _: &NodeProfile) -> Admission {
        if !store.is_full() {
            return Admission::Admit { victim: None };
        }
        Admission::Admit {
            victim: store.insertion_order().next(),
        }
    }
}

/// Evicts the entry unused for the longest time.
#[derive(Debug, Clone, Copy, Default)]
pub struct Lru;

impl ReplacementPolicy for Lru {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Lru
    }

    fn on_access(&mut self, store: &mut ContentStore, name: Name) {
        store.touch(name);
    }

    fn admit(&self, store: &ContentStore, _: &CacheEntry, _: &NodeProfile) -> Admission {
        if !store.is_full() {
            return Admission::Admit { victim: None };
        }
        Admission::Admit {
            victim: store.recency_order().next(),
        }
    }
}

/// Weights of the three Content Metric terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UcWeights {
    pub frequency: f64,
    pub distance: f64,
    pub reachability: f64,
}

impl Default for UcWeights {
    fn default() -> Self {
        UcWeights {
            frequency: 1.0 / 3.0,
            distance: 1.0 / 3.0,
            reachability: 1.0 / 3.0,
        }
    }
}

impl UcWeights {
    pub fn new(frequency: f64, distance: f64, reachability: f64) -> Result<Self, PolicyError> {
        let w = UcWeights {
            frequency,
            distance,
            reachability,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        let parts = [self.frequency, self.distance, self.reachability];
        if parts.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(PolicyError::InvalidParameter(format!(
                "UC weights must be non-negative, got {self:?}"
            )));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(PolicyError::InvalidParameter(format!(
                "UC weights must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }
}

/// Content Metric: a weighted sum of normalized access frequency, distance
/// from the serving node, and router reachability (degree). Each term is
/// clamped to `[0, 1]`, so the result lies in `[0, 1]` for weights summing to 1.
pub fn content_metric(
    freq: u64,
    max_freq_in_store: u64,
    hops_from_source: u32,
    diameter: u32,
    node_degree: u32,
    max_degree: u32,
    weights: &UcWeights,
) -> Result<f64, PolicyError> {
    if max_freq_in_store == 0 || diameter == 0 || max_degree == 0 {
        return Err(PolicyError::InvalidParameter(format!(
            "zero denominator (max_freq={max_freq_in_store}, diameter={diameter}, max_degree={max_degree})"
        )));
    }
    let f = (freq as f64 / max_freq_in_store as f64).min(1.0);
    let d = (hops_from_source as f64 / diameter as f64).min(1.0);
    let r = (node_degree as f64 / max_degree as f64).min(1.0);
    Ok(weights.frequency * f + weights.distance * d + weights.reachability * r)
}

/// Bounded per-router access counters; when full, the counter updated least
/// recently is dropped.
#[derive(Debug, Clone)]
pub struct FrequencyTable {
    capacity: usize,
    clock: u64,
    counts: FxHashMap<Name, (u64, u64)>,
    by_update: BTreeMap<u64, Name>,
}

impl FrequencyTable {
    pub fn new(capacity: usize) -> Self {
        FrequencyTable {
            capacity,
            clock: 0,
            counts: FxHashMap::with_capacity_and_hasher(capacity, Default::default()),
            by_update: BTreeMap::new(),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn get(&self, name: Name) -> u64 {
        self.counts.get(&name).map_or(0, |&(count, _)| count)
    }

    /// Increments and returns the new count (0 if the table has no capacity).
    pub fn increment(&mut self, name: Name) -> u64 {
        if self.capacity == 0 {
            return 0;
        }
        self.clock += 1;
        let stamp = self.clock;
        if let Some((count, updated)) = self.counts.get_mut(&name) {
            self.by_update.remove(updated);
            *count += 1;
            *updated = stamp;
            self.by_update.insert(stamp, name);
            return *count;
        }
        if self.counts.len() >= self.capacity {
            if let Some((_, stale)) = self.by_update.pop_first() {
                self.counts.remove(&stale);
            }
        }
        self.counts.insert(name, (1, stamp));
        self.by_update.insert(stamp, name);
        1
    }
}

/// Frequency table size relative to Content Store capacity.
pub const FREQUENCY_TABLE_FACTOR: usize = 4;

/// Universal Caching: admits content whose Content Metric beats the weakest
/// cached entry and evicts that entry.
#[derive(Debug, Clone)]
pub struct UniversalCaching {
    weights: UcWeights,
    frequencies: FrequencyTable,
}

impl UniversalCaching {
    pub fn new(cs_capacity: usize, weights: UcWeights) -> Self {
        UniversalCaching {
            weights,
            frequencies: FrequencyTable::new(FREQUENCY_TABLE_FACTOR * cs_capacity),
        }
    }

    pub fn frequencies(&self) -> &FrequencyTable {
        &self.frequencies
    }

    pub fn weights(&self) -> &UcWeights {
        &self.weights
    }

    fn freq(&self, name: Name) -> u64 {
        self.frequencies.get(name).max(1)
    }
}

impl ReplacementPolicy for UniversalCaching {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Uc
    }

    fn on_access(&mut self, store: &mut ContentStore, name: Name) {
        self.frequencies.increment(name);
        // Recency only breaks Content Metric ties.
        store.touch(name);
    }

    fn admit(
        &self,
        store: &ContentStore,
        candidate: &CacheEntry,
        profile: &NodeProfile,
    ) -> Admission {
        if !store.is_full() {
            return Admission::Admit { victim: None };
        }
        let candidate_freq = self.freq(candidate.name);
        let stored: Vec<(u64, &CacheEntry)> =
            store.entries().map(|e| (self.freq(e.name), e)).collect();
        let max_freq = stored
            .iter()
            .map(|&(f, _)| f)
            .fold(candidate_freq, u64::max);
        let metric = |freq: u64, hops: u32| {
            content_metric(
                freq,
                max_freq,
                hops,
                profile.diameter,
                profile.degree,
                profile.max_degree,
                &self.weights,
            )
            .expect("profile denominators are clamped to >= 1")
        };

        let weakest = stored
            .iter()
            .map(|&(f, e)| (metric(f, e.hops_from_source), e.last_used_at, e.name))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let Some((weakest_cm, _, victim)) = weakest else {
            return Admission::Reject;
        };
        if metric(candidate_freq, candidate.hops_from_source) <= weakest_cm {
            Admission::Reject
        } else {
            Admission::Admit {
                victim: Some(victim),
            }
        }
    }
}
