//! Interest hop-sequence marking.
//!
//! Each marking router inserts `(router_id, face_id, tag)` at the head of the
//! interest's trace, where `tag = HMAC-SHA256(key, name ∥ trace-so-far)`.
//! Producers keep the traces they receive and attach them to erases; each
//! router on the way back checks its own tag before popping the head.

use std::collections::{HashMap, HashSet};

use hmac::{Hmac, KeyInit, Mac};
use rand::RngCore;
use sha2::Sha256;
use thiserror::Error;

use crate::messages::{Digest, EraseMessage, Interest, Name};

type HmacSha256 = Hmac<Sha256>;

pub type RouterId = u32;
pub type FaceId = u16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MarkingError {
    #[error("erase carries no trace")]
    EmptyTrace,
    #[error("trace head names router {found}, not {expected}")]
    WrongRouter { expected: RouterId, found: RouterId },
    #[error("trace tag does not verify")]
    TagMismatch,
    #[error("no stored traces for {0}")]
    NoTraces(Name),
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct TraceTuple {
    pub router_id: RouterId,
    pub face_id: FaceId,
    pub tag: [u8; 32],
}

impl TraceTuple {
    pub const SERIALIZED_LEN: usize = 4 + 2 + 32;

    pub fn to_bytes(&self) -> [u8; Self::SERIALIZED_LEN] {
        let mut out = [0u8; Self::SERIALIZED_LEN];
        out[..4].copy_from_slice(&self.router_id.to_be_bytes());
        out[4..6].copy_from_slice(&self.face_id.to_be_bytes());
        out[6..].copy_from_slice(&self.tag);
        out
    }

    pub fn from_bytes(b: &[u8; Self::SERIALIZED_LEN]) -> Self {
        let mut tag = [0u8; 32];
        tag.copy_from_slice(&b[6..]);
        TraceTuple {
            router_id: u32::from_be_bytes([b[0], b[1], b[2], b[3]]),
            face_id: u16::from_be_bytes([b[4], b[5]]),
            tag,
        }
    }
}

impl std::fmt::Debug for TraceTuple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {:02x}{:02x}..)", self.router_id, self.face_id, self.tag[0], self.tag[1])
    }
}

/// Total serialized size of a trace list.
pub fn trace_bytes(trace: &[TraceTuple]) -> u64 {
    (trace.len() * TraceTuple::SERIALIZED_LEN) as u64
}

/// Per-router MAC key. Never leaves the router.
#[derive(Clone)]
pub struct MarkingKey([u8; 32]);

impl MarkingKey {
    pub fn from_bytes(key: [u8; 32]) -> Self {
        MarkingKey(key)
    }

    pub fn generate(rng: &mut dyn RngCore) -> Self {
        let mut k = [0u8; 32];
        rng.fill_bytes(&mut k);
        MarkingKey(k)
    }

    fn mac(&self, name: &Name, trace: &[TraceTuple], router_id: RouterId, face_id: FaceId) -> HmacSha256 {
        let mut buf = Vec::with_capacity(64 + trace.len() * TraceTuple::SERIALIZED_LEN);
        name.write_canonical(&mut buf);
        buf.extend_from_slice(&(trace.len() as u32).to_be_bytes());
        for t in trace {
            buf.extend_from_slice(&t.to_bytes());
        }
        buf.extend_from_slice(&router_id.to_be_bytes());
        buf.extend_from_slice(&face_id.to_be_bytes());
        let mut mac = HmacSha256::new_from_slice(&self.0).expect("HMAC accepts any key length");
        mac.update(&buf);
        mac
    }

    pub fn tag(&self, name: &Name, trace: &[TraceTuple], router_id: RouterId, face_id: FaceId) -> [u8; 32] {
        self.mac(name, trace, router_id, face_id).finalize().into_bytes().into()
    }

    pub fn verify(
        &self,
        name: &Name,
        trace: &[TraceTuple],
        router_id: RouterId,
        face_id: FaceId,
        tag: &[u8; 32],
    ) -> bool {
        self.mac(name, trace, router_id, face_id).verify_slice(tag).is_ok()
    }
}

impl std::fmt::Debug for MarkingKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("MarkingKey(..)")
    }
}

/// Inserts this router's tuple at the head of the interest's trace.
pub fn append_trace(mut interest: Interest, router_id: RouterId, face_id: FaceId, key: &MarkingKey) -> Interest {
    let tag = key.tag(&interest.name, &interest.trace, router_id, face_id);
    interest.trace.insert(0, TraceTuple { router_id, face_id, tag });
    interest
}

/// Verifies and removes the head tuple, returning the face it recorded.
///
/// On error the erase is left unchanged.
pub fn pop_and_verify(erase: &mut EraseMessage, router_id: RouterId, key: &MarkingKey) -> Result<FaceId, MarkingError> {
    let trace = erase.trace.as_mut().filter(|t| !t.is_empty()).ok_or(MarkingError::EmptyTrace)?;
    let head = trace[0];
    if head.router_id != router_id {
        return Err(MarkingError::WrongRouter { expected: router_id, found: head.router_id });
    }
    if !key.verify(&erase.name, &trace[1..], head.router_id, head.face_id, &head.tag) {
        return Err(MarkingError::TagMismatch);
    }
    trace.remove(0);
    Ok(head.face_id)
}

/// Traces in arrival order plus a set for duplicate checks.
type TraceLog = (Vec<Vec<TraceTuple>>, HashSet<Vec<TraceTuple>>);

/// Producer-side record of the distinct traces seen per name.
#[derive(Debug, Default, Clone)]
pub struct TraceStore {
    traces: HashMap<Name, TraceLog>,
}

impl TraceStore {
    /// Records `trace` under `name` unless an identical list is already stored.
    pub fn record_trace(&mut self, name: &Name, trace: &[TraceTuple]) -> bool {
        let (ordered, seen) = self.traces.entry(name.clone()).or_default();
        if seen.contains(trace) {
            return false;
        }
        seen.insert(trace.to_vec());
        ordered.push(trace.to_vec());
        true
    }

    pub fn traces(&self, name: &Name) -> &[Vec<TraceTuple>] {
        self.traces.get(name).map_or(&[], |(v, _)| v.as_slice())
    }

    pub fn remove(&mut self, name: &Name) {
        self.traces.remove(name);
    }

    pub fn names(&self) -> usize {
        self.traces.len()
    }

    /// One erase per stored trace, each carrying its own trace.
    pub fn erase_messages_for(&self, name: &Name, digest: &Digest, token: &[u8]) -> Result<Vec<EraseMessage>, MarkingError> {
        let traces = self.traces(name);
        if traces.is_empty() {
            return Err(MarkingError::NoTraces(name.clone()));
        }
        Ok(traces
            .iter()
            .map(|t| EraseMessage {
                name: name.clone(),
                digest: digest.clone(),
                token: token.to_vec(),
                trace: Some(t.clone()),
            })
            .collect())
    }
}

/// Trace bytes if all 2^h paths of a height-h tree were folded into one erase:
/// 2^h · (h − 1) · 38.
pub fn aggregated_trace_size(height: u32) -> u64 {
    assert!(height >= 1, "tree height must be >= 1");
    (1u64 << height) * (height as u64 - 1) * TraceTuple::SERIALIZED_LEN as u64
}
