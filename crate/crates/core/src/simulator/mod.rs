//! Deterministic discrete-event simulation of consumers, routers and one
//! producer.
//!
//! All randomness (start jitter, token seeds, marking keys, erase sampling,
//! counting-filter decrements) comes from a single ChaCha8 stream seeded by
//! [`SimConfig::seed`]. Simultaneous events run in scheduling order.

mod agents;
pub mod export;
pub mod metrics;

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::auth::verify_token;
use crate::forwarder::{Emission, Fib, ForwarderError, Router, RouterConfig, StrategyRegistry};
use crate::histories::HistoryRegistry;
use crate::marking::{trace_bytes, FaceId, MarkingKey};
use crate::messages::{EraseMessage, HeaderSizes, Lambda, Message, Name};
use crate::time::SimTime;
use crate::topology::{populate_fibs, NodeId, Role, Topology, TopologyError};

use agents::{ConsumerAgent, IssuedErase, ProducerAgent};
pub use metrics::{
    measure_erase_processing, penetration, ClassCounters, ConsumerSummary, EraseRecord, LinkCounters, Metrics,
    MetricsError, NodeCounters, ProcessingTimes,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Forwarder(#[from] ForwarderError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConsumerConfig {
    pub prefix: Name,
    /// Interests per second per consumer.
    pub rate: f64,
    pub start: SimTime,
    /// Consumer i (in id order) starts i·stagger after `start`.
    pub stagger: SimTime,
    /// Random start offset within one inter-interest gap.
    pub jitter: bool,
    /// No interests at or after this time. `None` means the run duration.
    pub stop: Option<SimTime>,
    pub max_interests: Option<u64>,
    /// Active consumers; `None` means all.
    pub only: Option<Vec<NodeId>>,
}

impl Default for ConsumerConfig {
    fn default() -> Self {
        ConsumerConfig {
            prefix: "/prefix/A".parse().expect("valid name"),
            rate: 10.0,
            start: SimTime::ZERO,
            stagger: SimTime::ZERO,
            jitter: true,
            stop: None,
            max_interests: None,
            only: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EraseMode {
    /// One erase per recorded interest trace; plain erase when none is stored.
    Traces,
    /// One untraced erase on every producer face.
    Plain,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProducerConfig {
    pub payload_size: usize,
    /// Content lifetime; `None` never expires.
    pub expiry: Option<SimTime>,
    /// Fraction of live content erased per round.
    pub erase_fraction: f64,
    pub erase_period: SimTime,
    /// First erase round. `None` means one period after time zero.
    pub erase_start: Option<SimTime>,
    pub erase_rounds: Option<u64>,
    pub erase_mode: EraseMode,
}

impl Default for ProducerConfig {
    fn default() -> Self {
        ProducerConfig {
            payload_size: 4096,
            expiry: Some(SimTime::from_millis(60_000)),
            erase_fraction: 0.5,
            erase_period: SimTime::from_millis(1000),
            erase_start: None,
            erase_rounds: None,
            erase_mode: EraseMode::Traces,
        }
    }
}

/// A consumer that also sends erases with random tokens for content it has
/// received.
#[derive(Clone, Debug, PartialEq)]
pub struct AdversaryConfig {
    /// Consumer node; `None` picks the lowest consumer id.
    pub node: Option<NodeId>,
    pub count: u64,
    pub start: SimTime,
    pub interval: SimTime,
}

impl Default for AdversaryConfig {
    fn default() -> Self {
        AdversaryConfig { node: None, count: 1000, start: SimTime::from_millis(1000), interval: SimTime::from_millis(1) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    /// Agents act in [0, duration); in-flight messages are then drained.
    pub duration: SimTime,
    /// Deliveries later than duration + drain_limit are abandoned.
    pub drain_limit: SimTime,
    pub sweep_interval: SimTime,
    pub lambda: Lambda,
    pub headers: HeaderSizes,
    /// Routers with a consumer attached.
    pub edge_router: RouterConfig,
    pub core_router: RouterConfig,
    pub consumer: ConsumerConfig,
    pub producer: ProducerConfig,
    pub adversary: Option<AdversaryConfig>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 1,
            duration: SimTime::from_millis(10_000),
            drain_limit: SimTime::from_millis(60_000),
            sweep_interval: SimTime::from_millis(1000),
            lambda: Lambda::DEFAULT,
            headers: HeaderSizes::default(),
            edge_router: RouterConfig::default(),
            core_router: RouterConfig::default(),
            consumer: ConsumerConfig::default(),
            producer: ProducerConfig::default(),
            adversary: None,
        }
    }
}

enum Action {
    Deliver { to: NodeId, face: FaceId, msg: Message },
    ConsumerTick(NodeId),
    EraseRound,
    Sweep,
    Forge,
}

struct Event {
    at: SimTime,
    seq: u64,
    action: Action,
}

impl PartialEq for Event {
    fn eq(&self, o: &Self) -> bool {
        (self.at, self.seq) == (o.at, o.seq)
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

// min-heap on (at, seq)
impl Ord for Event {
    fn cmp(&self, o: &Self) -> Ordering {
        (o.at, o.seq).cmp(&(self.at, self.seq))
    }
}

enum Node {
    Router(Box<Router>),
    Consumer(ConsumerAgent),
    Producer(Box<ProducerAgent>),
}

pub struct Simulation {
    topo: Topology,
    config: SimConfig,
    rng: ChaCha8Rng,
    queue: BinaryHeap<Event>,
    seq: u64,
    now: SimTime,
    nodes: BTreeMap<NodeId, Node>,
    producer: NodeId,
    adversary: Option<(NodeId, u64)>,
    erase_rounds: u64,
    erase_index: HashMap<(Vec<u8>, Vec<u8>), usize>,
    metrics: Metrics,
    finished: bool,
}

impl Simulation {
    pub fn new(topo: Topology, config: SimConfig) -> Result<Self, SimError> {
        topo.validate()?;
        let producers = topo.producers();
        let [producer] = producers[..] else {
            return Err(SimError::Config(format!("expected exactly one producer, found {}", producers.len())));
        };
        if !(config.consumer.rate.is_finite() && config.consumer.rate > 0.0) {
            return Err(SimError::Config("consumer rate must be positive".into()));
        }
        if !(0.0..=1.0).contains(&config.producer.erase_fraction) {
            return Err(SimError::Config("erase fraction must lie in [0, 1]".into()));
        }
        if config.producer.erase_period == SimTime::ZERO || config.sweep_interval == SimTime::ZERO {
            return Err(SimError::Config("periods must be positive".into()));
        }
        let routes = populate_fibs(&topo, producer)?;
        let prefix = config.consumer.prefix.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let strategies = StrategyRegistry::default();
        let histories = HistoryRegistry::default();
        let edge: Vec<NodeId> = topo.edge_routers();
        let is_router = |n: NodeId| topo.role(n) == Some(Role::Router);

        let mut metrics = Metrics::default();
        let mut nodes = BTreeMap::new();
        for (id, role) in topo.nodes() {
            metrics.roles.insert(id, role);
            metrics.nodes.insert(id, NodeCounters::default());
            for p in topo.ports(id) {
                metrics.links.insert((id, p.face), LinkCounters::default());
            }
            let node = match role {
                Role::Router => {
                    let mut fib = Fib::new();
                    if let Some(face) = routes.fib_for(id) {
                        fib.insert(prefix.clone(), face);
                    }
                    let rc = if edge.contains(&id) { &config.edge_router } else { &config.core_router };
                    let key = MarkingKey::generate(&mut rng);
                    let faces = topo.ports(id).into_iter().map(|p| p.face);
                    Node::Router(Box::new(Router::new(
                        id,
                        faces,
                        rc.clone(),
                        fib,
                        key,
                        config.lambda,
                        &strategies,
                        &histories,
                    )?))
                }
                Role::Consumer => {
                    let ports = topo.ports(id);
                    let port = ports.iter().find(|p| is_router(p.peer)).or(ports.first()).expect("validated");
                    Node::Consumer(ConsumerAgent::new(port.face))
                }
                Role::Producer => continue,
            };
            nodes.insert(id, node);
        }
        let token_seed = rng.next_u64();
        nodes.insert(
            producer,
            Node::Producer(Box::new(ProducerAgent::new(
                prefix,
                topo.ports(producer),
                config.producer.clone(),
                config.lambda,
                token_seed,
            ))),
        );

        let adversary = match &config.adversary {
            Some(a) => {
                let node = match a.node {
                    Some(n) => n,
                    None => *topo
                        .consumers()
                        .first()
                        .ok_or_else(|| SimError::Config("adversary needs a consumer".into()))?,
                };
                if topo.role(node) != Some(Role::Consumer) {
                    return Err(SimError::Config(format!("adversary node {node} is not a consumer")));
                }
                Some((node, a.count))
            }
            None => None,
        };
        if let Some(only) = &config.consumer.only {
            if let Some(bad) = only.iter().find(|&&n| topo.role(n) != Some(Role::Consumer)) {
                return Err(SimError::Config(format!("node {bad} is not a consumer")));
            }
        }

        let mut sim = Simulation {
            topo,
            config,
            rng,
            queue: BinaryHeap::new(),
            seq: 0,
            now: SimTime::ZERO,
            nodes,
            producer,
            adversary,
            erase_rounds: 0,
            erase_index: HashMap::new(),
            metrics,
            finished: false,
        };
        sim.schedule_agents();
        Ok(sim)
    }

    fn schedule(&mut self, at: SimTime, action: Action) {
        self.seq += 1;
        self.queue.push(Event { at, seq: self.seq, action });
    }

    fn interest_gap(&self) -> SimTime {
        SimTime::from_secs_f64(1.0 / self.config.consumer.rate)
    }

    fn schedule_agents(&mut self) {
        let cc = self.config.consumer.clone();
        let gap = self.interest_gap();
        let active: Vec<NodeId> = match &cc.only {
            Some(only) => self.topo.consumers().into_iter().filter(|c| only.contains(c)).collect(),
            None => self.topo.consumers(),
        };
        for (i, c) in active.into_iter().enumerate() {
            let jitter = if cc.jitter { self.rng.random_range(0..gap.as_nanos().max(1)) } else { 0 };
            let at = cc.start + SimTime::from_nanos(cc.stagger.as_nanos().saturating_mul(i as u64) + jitter);
            self.schedule(at, Action::ConsumerTick(c));
        }
        let first_erase = self.config.producer.erase_start.unwrap_or(self.config.producer.erase_period);
        if self.config.producer.erase_fraction > 0.0 {
            self.schedule(first_erase, Action::EraseRound);
        }
        self.schedule(self.config.sweep_interval, Action::Sweep);
        if let Some(a) = &self.config.adversary {
            let at = a.start;
            self.schedule(at, Action::Forge);
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn router(&self, id: NodeId) -> Option<&Router> {
        match self.nodes.get(&id) {
            Some(Node::Router(r)) => Some(r),
            _ => None,
        }
    }

    pub fn metrics(&self) -> &Metrics {
        &self.metrics
    }

    /// Runs agents until the configured duration, then drains in-flight
    /// messages.
    pub fn run(&mut self) {
        self.run_until(SimTime::MAX);
    }

    /// Processes events with fire time at most `until` (and never past the
    /// drain limit).
    pub fn run_until(&mut self, until: SimTime) {
        let hard_stop = self.config.duration + self.config.drain_limit;
        while let Some(ev) = self.queue.peek() {
            if ev.at > until || ev.at > hard_stop {
                break;
            }
            let ev = self.queue.pop().expect("peeked");
            if ev.at < self.now {
                self.metrics.causality_violations += 1;
            }
            self.now = ev.at;
            self.metrics.events += 1;
            self.dispatch(ev.action);
        }
        if self.queue.peek().is_none_or(|e| e.at > hard_stop) {
            self.finish();
        }
    }

    fn finish(&mut self) {
        if self.finished {
            return;
        }
        self.finished = true;
        self.metrics.end_time = self.now;
        for (&id, node) in self.nodes.iter_mut() {
            match node {
                Node::Consumer(c) => {
                    self.metrics.consumers.insert(id, c.finish());
                }
                Node::Producer(p) => self.metrics.producer = p.summary.clone(),
                Node::Router(r) => {
                    let s = r.stats();
                    let n = self.metrics.nodes.get_mut(&id).expect("registered");
                    n.duplicate_erases = s.duplicate_erases;
                    n.marking_failures = s.marking_failures;
                    n.cache_hits = s.cache_hits;
                    n.collapsed = s.collapsed;
                    n.no_route = s.no_route;
                    n.unsolicited = s.unsolicited;
                }
            }
        }
    }

    /// Runs to completion and returns the metrics.
    pub fn into_metrics(mut self) -> Metrics {
        self.run();
        self.finish();
        self.metrics
    }

    fn agents_active(&self) -> bool {
        self.now < self.config.duration
    }

    fn send(&mut self, from: NodeId, face: FaceId, msg: Message) {
        let Some(port) = self.topo.port(from, face) else {
            return;
        };
        let size = self.config.headers.message_size_bytes(&msg);
        let class = msg.class();
        let n = self.metrics.nodes.get_mut(&from).expect("registered");
        n.out_bytes.add(class, size);
        n.out_msgs.add(class, 1);
        if let Message::Erase(e) = &msg {
            n.erase_trace_bytes_out += e.trace.as_deref().map_or(0, trace_bytes);
        }
        self.metrics.links.get_mut(&(from, face)).expect("registered").sent += size;
        self.schedule(self.now + port.delay, Action::Deliver { to: port.peer, face: port.peer_face, msg });
    }

    fn emit(&mut self, from: NodeId, emissions: Vec<Emission>) {
        for e in emissions {
            self.send(from, e.face, e.message);
        }
    }

    fn dispatch(&mut self, action: Action) {
        match action {
            Action::Deliver { to, face, msg } => self.deliver(to, face, msg),
            Action::ConsumerTick(c) => self.consumer_tick(c),
            Action::EraseRound => self.erase_round(),
            Action::Sweep => self.sweep(),
            Action::Forge => self.forge(),
        }
    }

    fn deliver(&mut self, to: NodeId, face: FaceId, msg: Message) {
        let size = self.config.headers.message_size_bytes(&msg);
        let class = msg.class();
        let n = self.metrics.nodes.get_mut(&to).expect("registered");
        n.in_bytes.add(class, size);
        n.in_msgs.add(class, 1);
        let port = self.topo.port(to, face).expect("delivery on a linked face");
        self.metrics.links.get_mut(&(port.peer, port.peer_face)).expect("registered").received += size;

        let now = self.now;
        let lambda = self.config.lambda;
        let Some(node) = self.nodes.get_mut(&to) else {
            return;
        };
        match node {
            Node::Router(r) => {
                let result = match msg {
                    Message::Interest(i) => r.on_interest(i, face, now),
                    Message::Content(c) => r.on_content(c, face, now),
                    Message::Nack(k) => r.on_nack(k, face, now),
                    Message::Erase(e) => {
                        let key = (e.digest.as_bytes().to_vec(), e.token.clone());
                        let started = Instant::now();
                        let outcome = r.on_erase(e, face, now);
                        let elapsed = started.elapsed();
                        let outcome = outcome.expect("face checked above");
                        self.metrics.processing.record(to, elapsed);
                        self.note_erase(to, key, &outcome);
                        self.emit(to, outcome.emissions);
                        return;
                    }
                };
                let emissions = result.expect("face checked above");
                self.emit(to, emissions);
            }
            Node::Consumer(c) => match msg {
                Message::Content(content) => c.on_content(&content, lambda, now),
                Message::Nack(k) => c.on_nack(&k.name),
                _ => {}
            },
            Node::Producer(p) => {
                if let Message::Interest(i) = msg {
                    let reply = if p.serves(&i.name) {
                        Message::Content(p.on_interest(&i, now))
                    } else {
                        Message::Nack(crate::messages::Nack { name: i.name })
                    };
                    self.send(to, face, reply);
                }
            }
        }
    }

    fn note_erase(&mut self, router: NodeId, key: (Vec<u8>, Vec<u8>), outcome: &crate::forwarder::EraseOutcome) {
        let n = self.metrics.nodes.get_mut(&router).expect("registered");
        if outcome.auth_failure {
            n.auth_failures += 1;
        }
        if let Some(d) = &outcome.deletion {
            n.deletions += 1;
            let genuine = verify_token(&d.token, &d.token_digest)
                && match self.nodes.get(&self.producer) {
                    Some(Node::Producer(p)) => p.issued_token(&d.name, &d.digest, &d.token),
                    _ => false,
                };
            if !genuine {
                self.metrics.unverified_deletions += 1;
            }
        }
        if let Some(&id) = self.erase_index.get(&key) {
            let rec = &mut self.metrics.erases[id];
            rec.received_by.insert(router);
            if outcome.deletion.is_some() {
                rec.deleted_by.insert(router);
            }
        }
    }

    fn consumer_tick(&mut self, c: NodeId) {
        let cc = &self.config.consumer;
        let stop = cc.stop.unwrap_or(self.config.duration).min(self.config.duration);
        if self.now >= stop {
            return;
        }
        let prefix = cc.prefix.clone();
        let max = cc.max_interests;
        let now = self.now;
        let Some(Node::Consumer(agent)) = self.nodes.get_mut(&c) else {
            return;
        };
        if max.is_some_and(|m| agent.summary.issued >= m) {
            return;
        }
        let interest = agent.next_interest(&prefix, now);
        let face = agent.face;
        self.send(c, face, Message::Interest(interest));
        let next = self.now + self.interest_gap();
        self.schedule(next, Action::ConsumerTick(c));
    }

    fn erase_round(&mut self) {
        if !self.agents_active() {
            return;
        }
        let producer = self.producer;
        let Some(Node::Producer(p)) = self.nodes.get_mut(&producer) else {
            return;
        };
        let issued = p.erase_round(&mut self.rng);
        for e in issued {
            self.issue(e);
        }
        self.erase_rounds += 1;
        let pc = &self.config.producer;
        if pc.erase_rounds.is_none_or(|max| self.erase_rounds < max) {
            let next = self.now + pc.erase_period;
            self.schedule(next, Action::EraseRound);
        }
    }

    /// Erases the live version of `name` now, as the producer would.
    /// Returns the erase id, or `None` if nothing live has that name.
    pub fn erase_now(&mut self, name: &Name) -> Option<usize> {
        let producer = self.producer;
        let Some(Node::Producer(p)) = self.nodes.get_mut(&producer) else {
            return None;
        };
        let e = p.erase(name)?;
        Some(self.issue(e))
    }

    fn issue(&mut self, e: IssuedErase) -> usize {
        let id = self.metrics.erases.len();
        let cached_at_issue = self
            .nodes
            .iter()
            .filter_map(|(&n, node)| match node {
                Node::Router(r) if r.caches(&e.name, &e.digest, self.now) => Some(n),
                _ => None,
            })
            .collect();
        self.metrics.erases.push(EraseRecord {
            id,
            name: e.name.clone(),
            digest: e.digest.clone(),
            issued_at: self.now,
            messages: e.messages.len() as u64,
            cached_at_issue,
            deleted_by: Default::default(),
            received_by: Default::default(),
        });
        self.erase_index.insert((e.digest.as_bytes().to_vec(), e.token), id);
        let producer = self.producer;
        for (face, msg) in e.messages {
            self.send(producer, face, Message::Erase(msg));
        }
        id
    }

    fn sweep(&mut self) {
        let now = self.now;
        for node in self.nodes.values_mut() {
            if let Node::Router(r) = node {
                r.sweep(now, &mut self.rng);
            }
        }
        if self.agents_active() {
            let next = now + self.config.sweep_interval;
            self.schedule(next, Action::Sweep);
        }
    }

    fn forge(&mut self) {
        let Some((node, remaining)) = self.adversary else {
            return;
        };
        if remaining == 0 || !self.agents_active() {
            return;
        }
        let interval = self.config.adversary.as_ref().map_or(SimTime::from_millis(1), |a| a.interval);
        let target = match self.nodes.get(&node) {
            Some(Node::Consumer(c)) => c.last_content.clone().map(|t| (t, c.face)),
            _ => None,
        };
        if let Some(((name, digest), face)) = target {
            let mut token = vec![0u8; self.config.lambda.bytes()];
            self.rng.fill_bytes(&mut token);
            self.send(node, face, Message::Erase(EraseMessage { name, digest, token, trace: None }));
            self.adversary = Some((node, remaining - 1));
            self.metrics.adversary.forged_sent += 1;
        }
        let next = self.now + interval;
        self.schedule(next, Action::Forge);
    }
}

/// Builds and runs a simulation to completion.
pub fn run(topo: Topology, config: SimConfig) -> Result<Metrics, SimError> {
    Ok(Simulation::new(topo, config)?.into_metrics())
}

#[cfg(test)]
mod tests;
