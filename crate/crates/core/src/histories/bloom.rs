use super::{bloom_indices, ForwarderHistory, HistoryConfig, HistoryError, Occupancy};
use crate::messages::Digest;
use crate::time::SimTime;

/// Plain Bloom filter over digests, flushed when too full.
#[derive(Debug, Clone)]
pub struct BloomHistory {
    words: Vec<u64>,
    m: u64,
    k: u32,
    set_bits: u64,
    inserted: u64,
    reset_threshold: Option<f64>,
    resets: u64,
}

impl BloomHistory {
    pub fn new(m_bits: u64, k: u32, reset_threshold: Option<f64>) -> Result<Self, HistoryError> {
        if m_bits == 0 {
            return Err(HistoryError::InvalidParameter("m_bits must be >= 1".into()));
        }
        if k == 0 {
            return Err(HistoryError::InvalidParameter("k must be >= 1".into()));
        }
        if let Some(t) = reset_threshold {
            if !(t > 0.0 && t <= 1.0) {
                return Err(HistoryError::InvalidParameter(format!("reset threshold {t}")));
            }
        }
        Ok(BloomHistory {
            words: vec![0; m_bits.div_ceil(64) as usize],
            m: m_bits,
            k,
            set_bits: 0,
            inserted: 0,
            reset_threshold,
            resets: 0,
        })
    }

    pub fn from_config(c: &HistoryConfig) -> Result<Self, HistoryError> {
        Self::new(c.m_bits, c.resolved_k()?, c.reset_threshold)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn m_bits(&self) -> u64 {
        self.m
    }

    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn fill_ratio(&self) -> f64 {
        self.set_bits as f64 / self.m as f64
    }

    pub fn resets(&self) -> u64 {
        self.resets
    }

    pub fn clear(&mut self) {
        self.words.iter_mut().for_each(|w| *w = 0);
        self.set_bits = 0;
        self.inserted = 0;
    }
}

impl ForwarderHistory for BloomHistory {
    fn kind(&self) -> &'static str {
        "bloom"
    }

    fn insert(&mut self, d: &Digest, _now: SimTime) {
        if self.reset_threshold.is_some_and(|t| self.fill_ratio() > t) {
            self.clear();
            self.resets += 1;
        }
        for i in bloom_indices(d, self.k, self.m) {
            let (w, b) = (i / 64, 1u64 << (i % 64));
            if self.words[w] & b == 0 {
                self.words[w] |= b;
                self.set_bits += 1;
            }
        }
        self.inserted += 1;
    }

    fn query(&self, d: &Digest) -> bool {
        bloom_indices(d, self.k, self.m).all(|i| self.words[i / 64] & (1u64 << (i % 64)) != 0)
    }

    fn occupancy(&self) -> Occupancy {
        Occupancy { entries: self.inserted, capacity: None, evictions: 0, resets: self.resets }
    }
}
