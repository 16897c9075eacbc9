//! Names, the CCN message types and content digests.

use std::fmt;
use std::str::FromStr;

use bytes::Bytes;
use sha2::{Digest as _, Sha256, Sha512};
use thiserror::Error;

use crate::marking::TraceTuple;
use crate::time::SimTime;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MessageError {
    #[error("name must have at least one component")]
    EmptyName,
    #[error("name component {0} is empty")]
    EmptyComponent(usize),
    #[error("digest width {0} bits is not a multiple of 8 in 128..=512")]
    BadLambda(usize),
    #[error("expected {expected} bytes, got {actual}")]
    WrongLength { expected: usize, actual: usize },
}

/// Hierarchical content name, e.g. `/prefix/A/17`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name {
    components: Vec<Bytes>,
}

impl Name {
    pub fn new<I, C>(components: I) -> Result<Self, MessageError>
    where
        I: IntoIterator<Item = C>,
        C: Into<Bytes>,
    {
        let components: Vec<Bytes> = components.into_iter().map(Into::into).collect();
        if components.is_empty() {
            return Err(MessageError::EmptyName);
        }
        if let Some(i) = components.iter().position(|c| c.is_empty()) {
            return Err(MessageError::EmptyComponent(i));
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[Bytes] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// True iff `self` equals the first `self.len()` components of `other`.
    pub fn is_prefix_of(&self, other: &Name) -> bool {
        self.components.len() <= other.components.len()
            && self.components.iter().zip(&other.components).all(|(a, b)| a == b)
    }

    /// The first `len` components. `len` is clamped to `1..=self.len()`.
    pub fn prefix(&self, len: usize) -> Name {
        let len = len.clamp(1, self.components.len());
        Name { components: self.components[..len].to_vec() }
    }

    /// Returns a new name with `component` appended.
    pub fn child(&self, component: impl Into<Bytes>) -> Result<Name, MessageError> {
        let component = component.into();
        if component.is_empty() {
            return Err(MessageError::EmptyComponent(self.components.len()));
        }
        let mut components = self.components.clone();
        components.push(component);
        Ok(Name { components })
    }

    /// Length-prefixed canonical encoding: u32 count, then u32 length + bytes per component.
    pub fn write_canonical(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&(self.components.len() as u32).to_be_bytes());
        for c in &self.components {
            out.extend_from_slice(&(c.len() as u32).to_be_bytes());
            out.extend_from_slice(c);
        }
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.components {
            f.write_str("/")?;
            match std::str::from_utf8(c) {
                Ok(s) => f.write_str(s)?,
                Err(_) => {
                    for b in c.iter() {
                        write!(f, "%{b:02X}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Name({self})")
    }
}

impl FromStr for Name {
    type Err = MessageError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.strip_prefix("ccnx:").unwrap_or(s);
        let trimmed = s.strip_prefix('/').unwrap_or(s);
        if trimmed.is_empty() {
            return Err(MessageError::EmptyName);
        }
        Name::new(trimmed.split('/').map(|c| Bytes::copy_from_slice(c.as_bytes())))
    }
}

/// Digest width in bits (λ). Tokens, token digests and content digests all use it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Lambda(usize);

impl Lambda {
    pub const DEFAULT: Lambda = Lambda(256);

    pub fn new(bits: usize) -> Result<Self, MessageError> {
        if !bits.is_multiple_of(8) || !(128..=512).contains(&bits) {
            return Err(MessageError::BadLambda(bits));
        }
        Ok(Lambda(bits))
    }

    pub fn bits(self) -> usize {
        self.0
    }

    pub fn bytes(self) -> usize {
        self.0 / 8
    }

    /// H(·): SHA-256 for widths up to 256 bits, SHA-512 above, truncated to λ.
    pub fn hash(self, data: &[u8]) -> Vec<u8> {
        let mut out = if self.0 <= 256 {
            Sha256::digest(data).to_vec()
        } else {
            Sha512::digest(data).to_vec()
        };
        out.truncate(self.bytes());
        out
    }
}

impl Default for Lambda {
    fn default() -> Self {
        Lambda::DEFAULT
    }
}

/// λ-bit hash digest.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digest(Box<[u8]>);

impl Digest {
    pub fn from_bytes(bytes: impl Into<Box<[u8]>>) -> Self {
        Digest(bytes.into())
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn bit_len(&self) -> usize {
        self.0.len() * 8
    }

    /// First 16 bytes as two little-endian words, used to derive Bloom indices.
    pub(crate) fn index_seeds(&self) -> (u64, u64) {
        let mut a = [0u8; 8];
        let mut b = [0u8; 8];
        a.copy_from_slice(&self.0[..8]);
        b.copy_from_slice(&self.0[8..16]);
        (u64::from_le_bytes(a), u64::from_le_bytes(b))
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Digest(")?;
        for b in self.0.iter().take(6) {
            write!(f, "{b:02x}")?;
        }
        f.write_str("..)")
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0.iter() {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interest {
    pub name: Name,
    pub payload: Bytes,
    /// Head-first: the router closest to the producer is at index 0.
    pub trace: Vec<TraceTuple>,
    pub can_erase: bool,
}

impl Interest {
    pub fn new(name: Name) -> Self {
        Interest { name, payload: Bytes::new(), trace: Vec::new(), can_erase: true }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContentObject {
    pub name: Name,
    pub payload: Bytes,
    pub expiry_time: SimTime,
    /// y_C; present iff `can_erase`.
    pub token_digest: Option<Vec<u8>>,
    pub can_erase: bool,
}

impl ContentObject {
    pub fn is_expired(&self, now: SimTime) -> bool {
        now >= self.expiry_time
    }

    /// Canonical encoding over (name, payload, expiry_time, token_digest) in that order.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.payload.len() + 128);
        self.name.write_canonical(&mut out);
        out.extend_from_slice(&(self.payload.len() as u64).to_be_bytes());
        out.extend_from_slice(&self.payload);
        out.extend_from_slice(&self.expiry_time.as_nanos().to_be_bytes());
        match &self.token_digest {
            Some(y) => {
                out.push(1);
                out.extend_from_slice(&(y.len() as u32).to_be_bytes());
                out.extend_from_slice(y);
            }
            None => out.push(0),
        }
        out
    }
}

/// E[N, d]: deletion request carrying the deletion token x_C.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EraseMessage {
    pub name: Name,
    pub digest: Digest,
    pub token: Vec<u8>,
    pub trace: Option<Vec<TraceTuple>>,
}

impl EraseMessage {
    pub fn trace_len(&self) -> usize {
        self.trace.as_ref().map_or(0, Vec::len)
    }
}

/// "No such content / no route" reply.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Nack {
    pub name: Name,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Message {
    Interest(Interest),
    Content(ContentObject),
    Erase(EraseMessage),
    Nack(Nack),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MessageClass {
    Interest,
    Data,
    Erase,
    Nack,
}

impl Message {
    pub fn class(&self) -> MessageClass {
        match self {
            Message::Interest(_) => MessageClass::Interest,
            Message::Content(_) => MessageClass::Data,
            Message::Erase(_) => MessageClass::Erase,
            Message::Nack(_) => MessageClass::Nack,
        }
    }

    pub fn name(&self) -> &Name {
        match self {
            Message::Interest(m) => &m.name,
            Message::Content(m) => &m.name,
            Message::Erase(m) => &m.name,
            Message::Nack(m) => &m.name,
        }
    }
}

/// Fixed per-type header sizes in bytes for the size model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HeaderSizes {
    pub interest: u64,
    pub content: u64,
    pub erase: u64,
    pub nack: u64,
}

impl Default for HeaderSizes {
    fn default() -> Self {
        HeaderSizes { interest: 32, content: 64, erase: 96, nack: 32 }
    }
}

impl HeaderSizes {
    pub const ZERO: HeaderSizes = HeaderSizes { interest: 0, content: 0, erase: 0, nack: 0 };

    /// Modeled size: header + payload + 38 bytes per trace tuple.
    pub fn message_size_bytes(&self, m: &Message) -> u64 {
        let tuple = TraceTuple::SERIALIZED_LEN as u64;
        match m {
            Message::Interest(i) => {
                self.interest + i.payload.len() as u64 + tuple * i.trace.len() as u64
            }
            Message::Content(c) => self.content + c.payload.len() as u64,
            Message::Erase(e) => self.erase + tuple * e.trace_len() as u64,
            Message::Nack(_) => self.nack,
        }
    }
}

/// d = H(C[N]) over the canonical encoding.
pub fn content_digest(c: &ContentObject, lambda: Lambda) -> Digest {
    Digest::from_bytes(lambda.hash(&c.canonical_bytes()))
}
