use std::collections::{BTreeMap, HashMap};

use bytes::Bytes;
use rand::RngCore;

use crate::auth::{DeletionToken, TokenGenerator, TokenStore};
use crate::marking::{FaceId, TraceStore};
use crate::messages::{content_digest, ContentObject, Digest, EraseMessage, Interest, Lambda, Name};
use crate::time::SimTime;
use crate::topology::Port;

use super::metrics::{ConsumerSummary, ProducerSummary};
use super::{EraseMode, ProducerConfig};

pub(crate) struct ConsumerAgent {
    pub face: FaceId,
    pub next_seq: u64,
    pub pending: HashMap<Name, SimTime>,
    pub summary: ConsumerSummary,
    /// Most recent content received, as (name, digest).
    pub last_content: Option<(Name, Digest)>,
}

impl ConsumerAgent {
    pub fn new(face: FaceId) -> Self {
        ConsumerAgent { face, next_seq: 0, pending: HashMap::new(), summary: ConsumerSummary::default(), last_content: None }
    }

    pub fn next_interest(&mut self, prefix: &Name, now: SimTime) -> Interest {
        let name = prefix.child(self.next_seq.to_string()).expect("non-empty component");
        self.next_seq += 1;
        self.summary.issued += 1;
        self.pending.insert(name.clone(), now);
        Interest::new(name)
    }

    pub fn on_content(&mut self, c: &ContentObject, lambda: Lambda, now: SimTime) {
        match self.pending.remove(&c.name) {
            Some(sent) => {
                self.summary.satisfied += 1;
                let rtt = now.saturating_sub(sent);
                self.summary.min_rtt = Some(self.summary.min_rtt.map_or(rtt, |m| m.min(rtt)));
                self.last_content = Some((c.name.clone(), content_digest(c, lambda)));
            }
            None => self.summary.unsolicited += 1,
        }
    }

    pub fn on_nack(&mut self, name: &Name) {
        if self.pending.remove(name).is_some() {
            self.summary.nacked += 1;
        }
    }

    pub fn finish(&mut self) -> ConsumerSummary {
        self.summary.pending = self.pending.len() as u64;
        self.summary.clone()
    }
}

struct Published {
    content: ContentObject,
    digest: Digest,
    erased: bool,
    version: u64,
}

/// One erase the producer is about to send.
pub(crate) struct IssuedErase {
    pub name: Name,
    pub digest: Digest,
    pub token: Vec<u8>,
    pub messages: Vec<(FaceId, EraseMessage)>,
}

pub(crate) struct ProducerAgent {
    pub prefix: Name,
    ports: Vec<Port>,
    config: ProducerConfig,
    lambda: Lambda,
    tokens: TokenGenerator,
    pub token_store: TokenStore,
    pub traces: TraceStore,
    published: BTreeMap<Name, Published>,
    /// Names not yet erased, in publication order.
    live: BTreeMap<u64, Name>,
    live_key: HashMap<Name, u64>,
    order: u64,
    pub summary: ProducerSummary,
}

impl ProducerAgent {
    pub fn new(prefix: Name, ports: Vec<Port>, config: ProducerConfig, lambda: Lambda, token_seed: u64) -> Self {
        ProducerAgent {
            prefix,
            ports,
            config,
            lambda,
            tokens: TokenGenerator::new(token_seed, lambda),
            token_store: TokenStore::default(),
            traces: TraceStore::default(),
            published: BTreeMap::new(),
            live: BTreeMap::new(),
            live_key: HashMap::new(),
            order: 0,
            summary: ProducerSummary::default(),
        }
    }

    pub fn serves(&self, name: &Name) -> bool {
        self.prefix.is_prefix_of(name) && name.len() > self.prefix.len()
    }

    /// Content for `interest`, publishing a fresh version when the name is
    /// new or its last version was erased.
    pub fn on_interest(&mut self, interest: &Interest, now: SimTime) -> ContentObject {
        let name = &interest.name;
        if !interest.trace.is_empty() && self.traces.record_trace(name, &interest.trace) {
            self.summary.traces_recorded += 1;
        }
        self.summary.served += 1;
        if let Some(p) = self.published.get(name).filter(|p| !p.erased) {
            return p.content.clone();
        }
        let version = self.published.get(name).map_or(0, |p| p.version + 1);
        if version > 0 {
            self.summary.republished += 1;
        }
        self.summary.published += 1;
        let (x, y) = self.tokens.generate();
        let mut payload = vec![0u8; self.config.payload_size];
        let tag = version.to_be_bytes();
        let n = tag.len().min(payload.len());
        payload[..n].copy_from_slice(&tag[..n]);
        let expiry_time = match self.config.expiry {
            Some(e) => now + e,
            None => SimTime::MAX,
        };
        let content = ContentObject {
            name: name.clone(),
            payload: Bytes::from(payload),
            expiry_time,
            token_digest: Some(y.into_bytes()),
            can_erase: true,
        };
        let digest = content_digest(&content, self.lambda);
        self.token_store.insert(name.clone(), digest.clone(), x);
        self.order += 1;
        self.live.insert(self.order, name.clone());
        self.live_key.insert(name.clone(), self.order);
        self.published.insert(name.clone(), Published { content: content.clone(), digest, erased: false, version });
        content
    }

    /// Erases a random `erase_fraction` of the live content.
    pub fn erase_round(&mut self, rng: &mut dyn RngCore) -> Vec<IssuedErase> {
        let n = (self.config.erase_fraction * self.live.len() as f64).round() as usize;
        let n = n.min(self.live.len());
        if n == 0 {
            return Vec::new();
        }
        let mut picks = rand::seq::index::sample(rng, self.live.len(), n).into_vec();
        picks.sort_unstable();
        let names: Vec<Name> = {
            let all: Vec<&Name> = self.live.values().collect();
            picks.iter().map(|&i| all[i].clone()).collect()
        };
        names.iter().filter_map(|name| self.erase(name)).collect()
    }

    /// Builds the erase for the live version of `name`, marking it erased.
    pub fn erase(&mut self, name: &Name) -> Option<IssuedErase> {
        let p = self.published.get_mut(name).filter(|p| !p.erased)?;
        p.erased = true;
        let digest = p.digest.clone();
        if let Some(k) = self.live_key.remove(name) {
            self.live.remove(&k);
        }
        let token: Vec<u8> = self.token_store.get(name, &digest).map(DeletionToken::as_bytes)?.to_vec();
        let mut messages = Vec::new();
        if self.config.erase_mode == EraseMode::Traces {
            if let Ok(per_path) = self.traces.erase_messages_for(name, &digest, &token) {
                for e in per_path {
                    let head = e.trace.as_ref().and_then(|t| t.first()).map(|t| t.router_id);
                    if let Some(port) = self.ports.iter().find(|p| Some(p.peer) == head) {
                        messages.push((port.face, e));
                    }
                }
            }
        }
        if messages.is_empty() {
            let plain = EraseMessage { name: name.clone(), digest: digest.clone(), token: token.clone(), trace: None };
            messages = self.ports.iter().map(|p| (p.face, plain.clone())).collect();
        }
        self.traces.remove(name);
        self.summary.erases_issued += 1;
        Some(IssuedErase { name: name.clone(), digest, token, messages })
    }

    /// True iff `token` is the stored deletion token for (name, digest).
    pub fn issued_token(&self, name: &Name, digest: &Digest, token: &[u8]) -> bool {
        self.token_store.get(name, digest).is_some_and(|t| t.as_bytes() == token)
    }
}
