//! Forwarder data structures: pending-interest table, LRU content store,
//! and the backpressure rule.

use super::name::Name;
use std::collections::{BTreeMap, BTreeSet};

/// A downstream face: the edge an interest arrived on, or the forwarder's
/// own prefetch logic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Face {
    Edge(usize),
    Local,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PitAction {
    /// First request for this name: forward upstream.
    Forwarded,
    /// A live entry already exists; the face was added, nothing forwarded.
    Aggregated,
}

#[derive(Debug, Clone)]
struct PitEntry {
    faces: BTreeSet<Face>,
    expiry_us: u64,
}

/// Pending-interest table: at most one live entry per name, with the set of
/// downstream faces awaiting the data.
#[derive(Debug, Default)]
pub struct Pit {
    entries: BTreeMap<Name, PitEntry>,
}

impl Pit {
    /// Record an interest. A fresh or expired name forwards; a live entry
    /// aggregates.
    pub fn insert_or_aggregate(
        &mut self,
        name: &Name,
        face: Face,
        now_us: u64,
        lifetime_us: u64,
    ) -> PitAction {
        match self.entries.get_mut(name) {
            Some(entry) if entry.expiry_us > now_us => {
                entry.faces.insert(face);
                PitAction::Aggregated
            }
            _ => {
                let mut faces = BTreeSet::new();
                faces.insert(face);
                self.entries.insert(
                    name.clone(),
                    PitEntry {
                        faces,
                        expiry_us: now_us + lifetime_us,
                    },
                );
                PitAction::Forwarded
            }
        }
    }

    /// Satisfy and remove an entry, returning the waiting faces.
    pub fn consume(&mut self, name: &Name, now_us: u64) -> Vec<Face> {
        match self.entries.remove(name) {
            Some(entry) if entry.expiry_us > now_us => entry.faces.into_iter().collect(),
            _ => Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// LRU content store keyed by name, bounded by entry count.
#[derive(Debug)]
pub struct ContentStore {
    capacity: usize,
    clock: u64,
    entries: BTreeMap<Name, (u64, u64)>, // name -> (size bytes, last use)
    pub hits: u64,
    pub misses: u64,
}

impl ContentStore {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            clock: 0,
            entries: BTreeMap::new(),
            hits: 0,
            misses: 0,
        }
    }

    pub fn lookup(&mut self, name: &Name) -> Option<u64> {
        self.clock += 1;
        match self.entries.get_mut(name) {
            Some((size, used)) => {
                *used = self.clock;
                self.hits += 1;
                Some(*size)
            }
            None => {
                self.misses += 1;
                None
            }
        }
    }

    pub fn insert(&mut self, name: Name, size: u64) {
        if self.capacity == 0 {
            return;
        }
        self.clock += 1;
        if self.entries.len() >= self.capacity && !self.entries.contains_key(&name) {
            if let Some(evict) = self
                .entries
                .iter()
                .min_by_key(|(_, (_, used))| *used)
                .map(|(n, _)| n.clone())
            {
                self.entries.remove(&evict);
            }
        }
        self.entries.insert(name, (size, self.clock));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Backpressure rule: when a face's egress backlog would delay service
/// beyond the threshold, recommend one level below the client's current
/// assignment (`None` recommendation at the floor level).
///
/// Returns `None` when the queue is healthy, otherwise
/// `Some(recommended_level)` with `recommended_level = None` at level 1.
pub fn backpressure_recommendation(
    queue_delay_ms: f64,
    threshold_ms: f64,
    current_level: usize,
) -> Option<Option<usize>> {
    if queue_delay_ms <= threshold_ms {
        return None;
    }
    Some(if current_level > 1 {
        Some(current_level - 1)
    } else {
        None
    })
}
