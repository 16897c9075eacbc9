//! Per-router CCN forwarding engine with erase handling.

mod cs;
mod fib;
mod pit;
pub mod strategy;

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use rand::RngCore;
use thiserror::Error;

use crate::auth::verify_token;
use crate::histories::{ForwarderHistory, HistoryConfig, HistoryError, HistoryRegistry};
use crate::marking::{append_trace, FaceId, MarkingError, MarkingKey, RouterId};
use crate::messages::{content_digest, ContentObject, Digest, EraseMessage, Interest, Lambda, Message, Nack, Name};
use crate::time::SimTime;

pub use cs::{CacheEntry, ContentStore};
pub use fib::Fib;
pub use pit::{Pit, PitEntry};
pub use strategy::{flood_faces, EraseContext, EraseStrategy, StrategyRegistry};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ForwarderError {
    #[error("router {router} has no face {face}")]
    UnknownFace { router: RouterId, face: FaceId },
    #[error("unknown erase strategy `{0}`")]
    UnknownStrategy(String),
    #[error(transparent)]
    History(#[from] HistoryError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FloodFallback {
    Flood,
    Drop,
}

/// When forwarded content is recorded into per-face histories.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HistoryInsertion {
    /// As soon as content is sent on a face.
    OnForward,
    /// When the cache entry leaves the content store (uncached content: immediately).
    OnEvict,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RouterConfig {
    pub cache_capacity: usize,
    pub history: HistoryConfig,
    pub history_insertion: HistoryInsertion,
    pub marking_enabled: bool,
    pub flood_fallback: FloodFallback,
    /// Strategy names tried in order; `fallback` resolves to `flood` or `drop`.
    pub strategies: Vec<String>,
    /// Honor CanERASE flags. When false every content/interest is treated as erasable.
    pub honor_can_erase: bool,
    /// How long an erase fingerprint is remembered for duplicate suppression.
    pub erase_dedup_window: SimTime,
}

impl Default for RouterConfig {
    fn default() -> Self {
        RouterConfig {
            cache_capacity: 1000,
            history: HistoryConfig::default(),
            history_insertion: HistoryInsertion::OnForward,
            marking_enabled: false,
            flood_fallback: FloodFallback::Drop,
            strategies: ["marking", "in_cache", "history", "fallback"].map(String::from).to_vec(),
            honor_can_erase: false,
            erase_dedup_window: SimTime::from_millis(30_000),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Emission {
    pub face: FaceId,
    pub message: Message,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RouterStats {
    pub cache_hits: u64,
    pub collapsed: u64,
    pub no_route: u64,
    pub unsolicited: u64,
    pub erases_received: u64,
    pub duplicate_erases: u64,
    pub deletions: u64,
    pub auth_failures: u64,
    pub marking_failures: u64,
}

/// A content-store removal caused by an authenticated erase.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeletionRecord {
    pub name: Name,
    pub digest: Digest,
    /// y_C of the deleted entry and the token that matched it.
    pub token_digest: Vec<u8>,
    pub token: Vec<u8>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct EraseOutcome {
    pub emissions: Vec<Emission>,
    pub deletion: Option<DeletionRecord>,
    pub auth_failure: bool,
    pub duplicate: bool,
    /// Strategy that routed the erase.
    pub strategy: Option<&'static str>,
    pub marking_error: Option<MarkingError>,
}

pub struct Router {
    id: RouterId,
    faces: Vec<FaceId>,
    config: RouterConfig,
    lambda: Lambda,
    cs: ContentStore,
    pit: Pit,
    fib: Fib,
    histories: BTreeMap<FaceId, Box<dyn ForwarderHistory>>,
    strategies: Vec<Arc<dyn EraseStrategy>>,
    marking_key: MarkingKey,
    seen_erases: HashMap<u64, SimTime>,
    stats: RouterStats,
}

impl std::fmt::Debug for Router {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Router")
            .field("id", &self.id)
            .field("faces", &self.faces)
            .field("cs", &self.cs.len())
            .field("pit", &self.pit.len())
            .field("stats", &self.stats)
            .finish()
    }
}

impl Router {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: RouterId,
        faces: impl IntoIterator<Item = FaceId>,
        config: RouterConfig,
        fib: Fib,
        marking_key: MarkingKey,
        lambda: Lambda,
        strategies: &StrategyRegistry,
        histories: &HistoryRegistry,
    ) -> Result<Self, ForwarderError> {
        let faces: Vec<FaceId> = faces.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let chain = config
            .strategies
            .iter()
            .map(|s| {
                let name = match (s.as_str(), config.flood_fallback) {
                    ("fallback", FloodFallback::Flood) => "flood",
                    ("fallback", FloodFallback::Drop) => "drop",
                    (other, _) => other,
                };
                strategies.get(name).ok_or_else(|| ForwarderError::UnknownStrategy(s.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let histories = faces
            .iter()
            .map(|&f| Ok((f, histories.build(&config.history)?)))
            .collect::<Result<BTreeMap<_, _>, HistoryError>>()?;
        Ok(Router {
            id,
            faces,
            cs: ContentStore::new(config.cache_capacity),
            config,
            lambda,
            pit: Pit::default(),
            fib,
            histories,
            strategies: chain,
            marking_key,
            seen_erases: HashMap::new(),
            stats: RouterStats::default(),
        })
    }

    pub fn id(&self) -> RouterId {
        self.id
    }

    pub fn faces(&self) -> &[FaceId] {
        &self.faces
    }

    pub fn config(&self) -> &RouterConfig {
        &self.config
    }

    pub fn stats(&self) -> &RouterStats {
        &self.stats
    }

    pub fn content_store(&self) -> &ContentStore {
        &self.cs
    }

    pub fn pit(&self) -> &Pit {
        &self.pit
    }

    pub fn fib(&self) -> &Fib {
        &self.fib
    }

    pub fn history(&self, face: FaceId) -> Option<&dyn ForwarderHistory> {
        self.histories.get(&face).map(|h| h.as_ref())
    }

    pub fn strategy_names(&self) -> Vec<&'static str> {
        self.strategies.iter().map(|s| s.name()).collect()
    }

    /// True if an unexpired copy of `name` with digest `digest` is cached.
    pub fn caches(&self, name: &Name, digest: &Digest, now: SimTime) -> bool {
        self.cs.peek(name, now).is_some_and(|e| &e.digest == digest)
    }

    fn check_face(&self, face: FaceId) -> Result<(), ForwarderError> {
        if self.faces.binary_search(&face).is_ok() {
            Ok(())
        } else {
            Err(ForwarderError::UnknownFace { router: self.id, face })
        }
    }

    fn erasable(&self, can_erase: bool) -> bool {
        can_erase || !self.config.honor_can_erase
    }

    fn record_history(&mut self, faces: impl IntoIterator<Item = FaceId>, digest: &Digest, now: SimTime) {
        for f in faces {
            if let Some(h) = self.histories.get_mut(&f) {
                h.insert(digest, now);
            }
        }
    }

    /// History insertion for cache entries leaving the store other than by erase.
    fn retire(&mut self, entries: Vec<CacheEntry>, now: SimTime) {
        if self.config.history_insertion != HistoryInsertion::OnEvict {
            return;
        }
        for e in entries {
            if self.erasable(e.content.can_erase) {
                self.record_history(e.forwarded_faces.iter().copied(), &e.digest, now);
            }
        }
    }

    pub fn on_interest(&mut self, interest: Interest, arrival_face: FaceId, now: SimTime) -> Result<Vec<Emission>, ForwarderError> {
        self.check_face(arrival_face)?;
        let (hit, expired) = self.cs.lookup(&interest.name, now);
        if let Some(entry) = hit {
            entry.forwarded_faces.insert(arrival_face);
            let content = entry.content.clone();
            let digest = entry.digest.clone();
            self.stats.cache_hits += 1;
            if self.config.history_insertion == HistoryInsertion::OnForward && self.erasable(content.can_erase) {
                self.record_history([arrival_face], &digest, now);
            }
            return Ok(vec![Emission { face: arrival_face, message: Message::Content(content) }]);
        }
        if let Some(e) = expired {
            self.retire(vec![e], now);
        }
        if self.pit.collapse(&interest.name, arrival_face) {
            self.stats.collapsed += 1;
            return Ok(Vec::new());
        }
        let upstream: Vec<FaceId> =
            self.fib.faces(&interest.name).into_iter().filter(|&f| f != arrival_face).collect();
        if upstream.is_empty() {
            self.stats.no_route += 1;
            let nack = Nack { name: interest.name };
            return Ok(vec![Emission { face: arrival_face, message: Message::Nack(nack) }]);
        }
        self.pit.create(interest.name.clone(), arrival_face, now);
        let interest = if self.config.marking_enabled && self.erasable(interest.can_erase) {
            append_trace(interest, self.id, arrival_face, &self.marking_key)
        } else {
            interest
        };
        Ok(upstream
            .into_iter()
            .map(|face| Emission { face, message: Message::Interest(interest.clone()) })
            .collect())
    }

    pub fn on_content(&mut self, content: ContentObject, arrival_face: FaceId, now: SimTime) -> Result<Vec<Emission>, ForwarderError> {
        self.check_face(arrival_face)?;
        let Some(entry) = self.pit.take(&content.name) else {
            self.stats.unsolicited += 1;
            return Ok(Vec::new());
        };
        let downstream: BTreeSet<FaceId> =
            entry.downstream_faces.into_iter().filter(|&f| f != arrival_face).collect();
        let digest = content_digest(&content, self.lambda);
        let emissions = downstream
            .iter()
            .map(|&face| Emission { face, message: Message::Content(content.clone()) })
            .collect();
        let erasable = self.erasable(content.can_erase);
        let will_cache = self.cs.capacity() > 0 && !content.is_expired(now);
        let record_now = match self.config.history_insertion {
            HistoryInsertion::OnForward => true,
            HistoryInsertion::OnEvict => !will_cache,
        };
        if erasable && record_now {
            self.record_history(downstream.iter().copied(), &digest, now);
        }
        if will_cache {
            let evicted = self.cs.insert(content, digest, downstream, now);
            self.retire(evicted, now);
        }
        Ok(emissions)
    }

    pub fn on_nack(&mut self, nack: Nack, arrival_face: FaceId, _now: SimTime) -> Result<Vec<Emission>, ForwarderError> {
        self.check_face(arrival_face)?;
        let Some(entry) = self.pit.take(&nack.name) else {
            return Ok(Vec::new());
        };
        Ok(entry
            .downstream_faces
            .into_iter()
            .filter(|&f| f != arrival_face)
            .map(|face| Emission { face, message: Message::Nack(nack.clone()) })
            .collect())
    }

    /// Reverse-path flooding of `e` regardless of the configured strategies.
    pub fn flood_erase(&self, e: &EraseMessage, arrival_face: FaceId) -> Vec<Emission> {
        flood_faces(&self.faces, &self.fib.faces(&e.name), arrival_face)
            .into_iter()
            .map(|face| Emission { face, message: Message::Erase(e.clone()) })
            .collect()
    }

    fn erase_fingerprint(e: &EraseMessage) -> u64 {
        let mut h = DefaultHasher::new();
        e.name.hash(&mut h);
        e.digest.hash(&mut h);
        e.token.hash(&mut h);
        e.trace.hash(&mut h);
        h.finish()
    }

    pub fn on_erase(&mut self, mut e: EraseMessage, arrival_face: FaceId, now: SimTime) -> Result<EraseOutcome, ForwarderError> {
        self.check_face(arrival_face)?;
        self.stats.erases_received += 1;
        let mut outcome = EraseOutcome::default();
        let fingerprint = Self::erase_fingerprint(&e);
        if self.seen_erases.contains_key(&fingerprint) {
            self.stats.duplicate_erases += 1;
            outcome.duplicate = true;
            return Ok(outcome);
        }

        // authenticate against a matching cached copy
        let mut cached_faces = None;
        if let Some(entry) = self.cs.peek(&e.name, now).filter(|c| c.digest == e.digest) {
            let token_digest = entry.content.token_digest.clone();
            match token_digest {
                Some(y) if verify_token(&e.token, &y) => {
                    let entry = self.cs.remove(&e.name).expect("peeked");
                    self.stats.deletions += 1;
                    outcome.deletion = Some(DeletionRecord {
                        name: e.name.clone(),
                        digest: e.digest.clone(),
                        token_digest: y,
                        token: e.token.clone(),
                    });
                    cached_faces = Some(entry.forwarded_faces);
                }
                _ => {
                    self.stats.auth_failures += 1;
                    outcome.auth_failure = true;
                    return Ok(outcome);
                }
            }
        }
        self.seen_erases.insert(fingerprint, now);

        let fib_faces = self.fib.faces(&e.name);
        let mut ctx = EraseContext {
            router_id: self.id,
            faces: &self.faces,
            arrival_face,
            erase: &mut e,
            cached_faces: cached_faces.as_ref(),
            histories: &self.histories,
            fib_faces: &fib_faces,
            marking_key: self.config.marking_enabled.then_some(&self.marking_key),
            marking_error: None,
        };
        let mut chosen = Vec::new();
        for s in &self.strategies {
            if let Some(faces) = s.route(&mut ctx) {
                outcome.strategy = Some(s.name());
                chosen = faces;
                break;
            }
        }
        if let Some(err) = ctx.marking_error.take() {
            self.stats.marking_failures += 1;
            outcome.marking_error = Some(err);
        }
        let faces: BTreeSet<FaceId> = chosen.into_iter().filter(|&f| f != arrival_face).collect();
        outcome.emissions =
            faces.into_iter().map(|face| Emission { face, message: Message::Erase(e.clone()) }).collect();
        Ok(outcome)
    }

    /// Periodic maintenance: expired cache entries, history ticks, dedup window.
    pub fn sweep(&mut self, now: SimTime, rng: &mut dyn RngCore) {
        let expired = self.cs.sweep(now);
        self.retire(expired, now);
        for h in self.histories.values_mut() {
            h.tick(now, rng);
        }
        let window = self.config.erase_dedup_window;
        self.seen_erases.retain(|_, &mut seen| now < seen + window);
    }
}

#[cfg(test)]
mod tests;
