//! Per-interface forwarder histories.
//!
//! A history records the digests of content forwarded on one face so that a
//! later erase for that content can be routed back out of the same face.
//! Variants are registered by name in [`HistoryRegistry`] and selected from
//! configuration.

pub mod analysis;
mod bloom;
mod counting;
mod lossless;

use std::collections::BTreeMap;
use std::fmt;

use rand::RngCore;
use thiserror::Error;

use crate::messages::Digest;
use crate::time::SimTime;

pub use bloom::BloomHistory;
pub use counting::CountingBloomHistory;
pub use lossless::LosslessHistory;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HistoryError {
    #[error("unknown history type `{0}`")]
    UnknownKind(String),
    #[error("invalid history parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Occupancy {
    pub entries: u64,
    pub capacity: Option<u64>,
    pub evictions: u64,
    pub resets: u64,
}

pub trait ForwarderHistory: Send + fmt::Debug {
    /// Registry name of the implementation.
    fn kind(&self) -> &'static str;

    fn insert(&mut self, d: &Digest, now: SimTime);

    fn query(&self, d: &Digest) -> bool;

    /// Periodic housekeeping (random decrements, window rotation).
    fn tick(&mut self, _now: SimTime, _rng: &mut dyn RngCore) {}

    fn occupancy(&self) -> Occupancy;

    /// False for the placeholder that records nothing.
    fn is_recording(&self) -> bool {
        true
    }
}

/// Placeholder for faces without a history.
#[derive(Debug, Default)]
pub struct NoHistory;

impl ForwarderHistory for NoHistory {
    fn kind(&self) -> &'static str {
        "none"
    }

    fn insert(&mut self, _d: &Digest, _now: SimTime) {}

    fn query(&self, _d: &Digest) -> bool {
        false
    }

    fn occupancy(&self) -> Occupancy {
        Occupancy { capacity: Some(0), ..Occupancy::default() }
    }

    fn is_recording(&self) -> bool {
        false
    }
}

/// Number of hash functions: fixed, or derived from expected load.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HashCount {
    Fixed(u32),
    Auto,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HistoryConfig {
    pub kind: String,
    /// Lossless: max entries; `None` is unbounded.
    pub capacity_entries: Option<u64>,
    pub chunk_count: usize,
    /// Lossless: chunk rotation window; `None` rotates on chunk fill.
    pub chunk_window: Option<SimTime>,
    pub m_bits: u64,
    pub k: HashCount,
    pub k_max: Option<u32>,
    /// Expected element count used to derive k when `k` is `Auto`.
    pub expected_entries: u64,
    /// Bloom: flush when the set-bit fraction exceeds this.
    pub reset_threshold: Option<f64>,
    /// Counting Bloom: average content lifetime driving random decrements.
    pub mean_expiry: Option<SimTime>,
}

impl Default for HistoryConfig {
    fn default() -> Self {
        HistoryConfig {
            kind: "lossless".into(),
            capacity_entries: None,
            chunk_count: 12,
            chunk_window: None,
            m_bits: 1 << 20,
            k: HashCount::Auto,
            k_max: Some(64),
            expected_entries: (1 << 20) / 16,
            reset_threshold: Some(0.5),
            mean_expiry: None,
        }
    }
}

impl HistoryConfig {
    pub fn resolved_k(&self) -> Result<u32, HistoryError> {
        match self.k {
            HashCount::Fixed(0) => Err(HistoryError::InvalidParameter("k must be >= 1".into())),
            HashCount::Fixed(k) => Ok(k),
            HashCount::Auto => {
                analysis::optimal_k(self.m_bits as f64, self.expected_entries as f64, self.k_max)
                    .map_err(|e| HistoryError::InvalidParameter(e.to_string()))
            }
        }
    }
}

pub type HistoryFactory = fn(&HistoryConfig) -> Result<Box<dyn ForwarderHistory>, HistoryError>;

/// Name → constructor table for history implementations.
#[derive(Clone)]
pub struct HistoryRegistry {
    factories: BTreeMap<String, HistoryFactory>,
}

impl HistoryRegistry {
    pub fn empty() -> Self {
        HistoryRegistry { factories: BTreeMap::new() }
    }

    pub fn register(&mut self, name: impl Into<String>, factory: HistoryFactory) {
        self.factories.insert(name.into(), factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn build(&self, config: &HistoryConfig) -> Result<Box<dyn ForwarderHistory>, HistoryError> {
        let factory = self
            .factories
            .get(&config.kind)
            .ok_or_else(|| HistoryError::UnknownKind(config.kind.clone()))?;
        factory(config)
    }
}

impl Default for HistoryRegistry {
    fn default() -> Self {
        let mut r = HistoryRegistry::empty();
        r.register("none", |_| Ok(Box::new(NoHistory)));
        r.register("lossless", |c| Ok(Box::new(LosslessHistory::from_config(c)?)));
        r.register("bloom", |c| Ok(Box::new(BloomHistory::from_config(c)?)));
        r.register("cbf", |c| Ok(Box::new(CountingBloomHistory::from_config(c)?)));
        r
    }
}

/// k bit positions from one digest by double hashing: (h1 + i·h2) mod m.
pub(crate) fn bloom_indices(d: &Digest, k: u32, m: u64) -> impl Iterator<Item = usize> {
    let (h1, h2) = d.index_seeds();
    let h2 = h2 | 1;
    (0..k as u64).map(move |i| (h1.wrapping_add(i.wrapping_mul(h2)) % m) as usize)
}
