use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use thiserror::Error;

use crate::marking::FaceId;
use crate::messages::{Digest, MessageClass, Name};
use crate::time::SimTime;
use crate::topology::{NodeId, Role};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("unknown erase id {0}")]
    UnknownErase(usize),
}

/// Byte and message counters per message class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClassCounters {
    pub interest: u64,
    pub data: u64,
    pub erase: u64,
    pub nack: u64,
}

impl ClassCounters {
    pub fn add(&mut self, class: MessageClass, n: u64) {
        let slot = match class {
            MessageClass::Interest => &mut self.interest,
            MessageClass::Data => &mut self.data,
            MessageClass::Erase => &mut self.erase,
            MessageClass::Nack => &mut self.nack,
        };
        *slot += n;
    }

    pub fn get(&self, class: MessageClass) -> u64 {
        match class {
            MessageClass::Interest => self.interest,
            MessageClass::Data => self.data,
            MessageClass::Erase => self.erase,
            MessageClass::Nack => self.nack,
        }
    }

    pub fn total(&self) -> u64 {
        self.interest + self.data + self.erase + self.nack
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct NodeCounters {
    pub in_bytes: ClassCounters,
    pub out_bytes: ClassCounters,
    pub in_msgs: ClassCounters,
    pub out_msgs: ClassCounters,
    /// Trace bytes carried by erases this node sent.
    pub erase_trace_bytes_out: u64,
    pub deletions: u64,
    pub auth_failures: u64,
    pub duplicate_erases: u64,
    pub marking_failures: u64,
    pub cache_hits: u64,
    pub collapsed: u64,
    pub no_route: u64,
    pub unsolicited: u64,
}

/// Directed link end: bytes sent out of `(node, face)` and received on the
/// peer's face.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LinkCounters {
    pub sent: u64,
    pub received: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EraseRecord {
    pub id: usize,
    pub name: Name,
    pub digest: Digest,
    pub issued_at: SimTime,
    /// Messages the producer sent for this erase (one per trace, or one per face).
    pub messages: u64,
    /// Routers holding an unexpired matching copy when the erase was issued.
    pub cached_at_issue: BTreeSet<NodeId>,
    pub deleted_by: BTreeSet<NodeId>,
    pub received_by: BTreeSet<NodeId>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConsumerSummary {
    pub issued: u64,
    pub satisfied: u64,
    pub nacked: u64,
    pub pending: u64,
    /// Smallest interest-to-content delay observed.
    pub min_rtt: Option<SimTime>,
    pub unsolicited: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProducerSummary {
    pub published: u64,
    pub republished: u64,
    pub served: u64,
    pub traces_recorded: u64,
    pub erases_issued: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AdversarySummary {
    pub forged_sent: u64,
}

/// Host wall-clock time spent in erase handlers. Not deterministic.
#[derive(Clone, Debug, Default)]
pub struct ProcessingTimes {
    per_router: BTreeMap<NodeId, (u64, Duration)>,
}

impl ProcessingTimes {
    pub fn record(&mut self, router: NodeId, elapsed: Duration) {
        let slot = self.per_router.entry(router).or_default();
        slot.0 += 1;
        slot.1 += elapsed;
    }

    pub fn samples(&self, router: NodeId) -> u64 {
        self.per_router.get(&router).map_or(0, |s| s.0)
    }
}

/// Everything a run measures. Two runs with the same inputs compare equal;
/// `processing` is excluded from the comparison.
#[derive(Clone, Debug, Default)]
pub struct Metrics {
    pub roles: BTreeMap<NodeId, Role>,
    pub nodes: BTreeMap<NodeId, NodeCounters>,
    pub links: BTreeMap<(NodeId, FaceId), LinkCounters>,
    pub erases: Vec<EraseRecord>,
    pub consumers: BTreeMap<NodeId, ConsumerSummary>,
    pub producer: ProducerSummary,
    pub adversary: AdversarySummary,
    /// Deletions whose token failed independent re-verification.
    pub unverified_deletions: u64,
    /// Events whose fire time preceded the clock when popped.
    pub causality_violations: u64,
    pub events: u64,
    pub end_time: SimTime,
    pub processing: ProcessingTimes,
}

impl PartialEq for Metrics {
    fn eq(&self, o: &Self) -> bool {
        self.roles == o.roles
            && self.nodes == o.nodes
            && self.links == o.links
            && self.erases == o.erases
            && self.consumers == o.consumers
            && self.producer == o.producer
            && self.adversary == o.adversary
            && self.unverified_deletions == o.unverified_deletions
            && self.causality_violations == o.causality_violations
            && self.events == o.events
            && self.end_time == o.end_time
    }
}

impl Metrics {
    pub fn node(&self, id: NodeId) -> Option<&NodeCounters> {
        self.nodes.get(&id)
    }

    pub fn routers(&self) -> impl Iterator<Item = (NodeId, &NodeCounters)> {
        self.nodes.iter().filter(|(id, _)| self.roles.get(id) == Some(&Role::Router)).map(|(&id, c)| (id, c))
    }

    /// Sum over routers of bytes received per class.
    pub fn router_in_bytes(&self) -> ClassCounters {
        let mut total = ClassCounters::default();
        for (_, c) in self.routers() {
            for class in [MessageClass::Interest, MessageClass::Data, MessageClass::Erase, MessageClass::Nack] {
                total.add(class, c.in_bytes.get(class));
            }
        }
        total
    }

    /// Network-wide erase bytes over content bytes, both as received by routers.
    pub fn erase_to_content_ratio(&self) -> f64 {
        let t = self.router_in_bytes();
        if t.data == 0 {
            return 0.0;
        }
        t.erase as f64 / t.data as f64
    }

    pub fn total_deletions(&self) -> u64 {
        self.nodes.values().map(|c| c.deletions).sum()
    }

    pub fn total_auth_failures(&self) -> u64 {
        self.nodes.values().map(|c| c.auth_failures).sum()
    }

    pub fn erase(&self, id: usize) -> Result<&EraseRecord, MetricsError> {
        self.erases.get(id).ok_or(MetricsError::UnknownErase(id))
    }
}

/// Fraction of routers caching the target at issue time that deleted it.
/// An erase with no caching routers has penetration 1.
pub fn penetration(metrics: &Metrics, erase_id: usize) -> Result<f64, MetricsError> {
    let e = metrics.erase(erase_id)?;
    if e.cached_at_issue.is_empty() {
        return Ok(1.0);
    }
    let hit = e.cached_at_issue.intersection(&e.deleted_by).count();
    Ok(hit as f64 / e.cached_at_issue.len() as f64)
}

/// Mean erase handler wall-clock time per router in milliseconds. Routers
/// that processed no erase are left out. Host dependent.
pub fn measure_erase_processing(metrics: &Metrics) -> BTreeMap<NodeId, f64> {
    metrics
        .processing
        .per_router
        .iter()
        .filter(|(_, (n, _))| *n > 0)
        .map(|(&id, &(n, total))| (id, total.as_secs_f64() * 1e3 / n as f64))
        .collect()
}
