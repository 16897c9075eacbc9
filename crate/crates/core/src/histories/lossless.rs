use std::collections::{HashMap, HashSet, VecDeque};

use super::{ForwarderHistory, HistoryConfig, HistoryError, Occupancy};
use crate::messages::Digest;
use crate::time::SimTime;

#[derive(Debug)]
struct Chunk {
    seq: u64,
    opened_at: SimTime,
    digests: HashSet<Digest>,
}

/// Exact digest set split into time- or size-bounded chunks.
///
/// When the capacity is reached the oldest chunk is dropped whole. A digest
/// inserted again moves to the current chunk.
#[derive(Debug)]
pub struct LosslessHistory {
    chunks: VecDeque<Chunk>,
    index: HashMap<Digest, u64>,
    next_seq: u64,
    capacity: Option<u64>,
    chunk_count: usize,
    chunk_window: Option<SimTime>,
    evictions: u64,
}

impl LosslessHistory {
    pub fn new(
        capacity: Option<u64>,
        chunk_count: usize,
        chunk_window: Option<SimTime>,
    ) -> Result<Self, HistoryError> {
        if chunk_count == 0 {
            return Err(HistoryError::InvalidParameter("chunk_count must be >= 1".into()));
        }
        if capacity == Some(0) {
            return Err(HistoryError::InvalidParameter("capacity must be >= 1".into()));
        }
        if chunk_window == Some(SimTime::ZERO) {
            return Err(HistoryError::InvalidParameter("chunk_window must be positive".into()));
        }
        Ok(LosslessHistory {
            chunks: VecDeque::new(),
            index: HashMap::new(),
            next_seq: 0,
            capacity,
            chunk_count,
            chunk_window,
            evictions: 0,
        })
    }

    /// Unbounded single-chunk history.
    pub fn unbounded() -> Self {
        Self::new(None, 1, None).expect("valid parameters")
    }

    pub fn from_config(c: &HistoryConfig) -> Result<Self, HistoryError> {
        Self::new(c.capacity_entries, c.chunk_count, c.chunk_window)
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn chunk_len(&self) -> usize {
        self.chunks.len()
    }

    fn chunk_limit(&self) -> Option<u64> {
        match (self.capacity, self.chunk_window) {
            (Some(cap), None) => Some(cap.div_ceil(self.chunk_count as u64)),
            _ => None,
        }
    }

    fn current_is_closed(&self, now: SimTime) -> bool {
        let Some(cur) = self.chunks.back() else {
            return true;
        };
        if let Some(w) = self.chunk_window {
            if now >= cur.opened_at + w {
                return true;
            }
        }
        self.chunk_limit().is_some_and(|lim| cur.digests.len() as u64 >= lim)
    }

    /// Starts a new chunk at `now`.
    pub fn rotate(&mut self, now: SimTime) {
        self.chunks.push_back(Chunk { seq: self.next_seq, opened_at: now, digests: HashSet::new() });
        self.next_seq += 1;
    }

    /// Drops the oldest chunk; returns how many digests it held.
    pub fn evict_oldest_chunk(&mut self) -> usize {
        let Some(chunk) = self.chunks.pop_front() else {
            return 0;
        };
        for d in &chunk.digests {
            self.index.remove(d);
        }
        self.evictions += 1;
        chunk.digests.len()
    }

    fn chunk_mut(&mut self, seq: u64) -> Option<&mut Chunk> {
        let front = self.chunks.front()?.seq;
        self.chunks.get_mut((seq - front) as usize)
    }
}

impl ForwarderHistory for LosslessHistory {
    fn kind(&self) -> &'static str {
        "lossless"
    }

    fn insert(&mut self, d: &Digest, now: SimTime) {
        if self.current_is_closed(now) {
            self.rotate(now);
        }
        let current = self.chunks.back().expect("rotated").seq;
        match self.index.get(d).copied() {
            Some(seq) if seq == current => return,
            Some(seq) => {
                if let Some(chunk) = self.chunk_mut(seq) {
                    chunk.digests.remove(d);
                }
                self.index.remove(d);
            }
            None => {}
        }
        if let Some(cap) = self.capacity {
            while self.index.len() as u64 >= cap {
                self.evict_oldest_chunk();
                if self.chunks.is_empty() {
                    self.rotate(now);
                }
            }
        }
        let current = self.chunks.back_mut().expect("non-empty");
        current.digests.insert(d.clone());
        self.index.insert(d.clone(), current.seq);
    }

    fn query(&self, d: &Digest) -> bool {
        self.index.contains_key(d)
    }

    fn tick(&mut self, now: SimTime, _rng: &mut dyn rand::RngCore) {
        // Open an empty chunk at window boundaries so idle periods still age out.
        if self.chunk_window.is_some() && !self.chunks.is_empty() && self.current_is_closed(now) {
            self.rotate(now);
            while self.chunks.len() > 1 && self.chunks.front().is_some_and(|c| c.digests.is_empty()) {
                self.chunks.pop_front();
            }
        }
    }

    fn occupancy(&self) -> Occupancy {
        Occupancy {
            entries: self.index.len() as u64,
            capacity: self.capacity,
            evictions: self.evictions,
            resets: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn d(i: u32) -> Digest {
        let mut b = vec![0u8; 32];
        b[..4].copy_from_slice(&i.to_be_bytes());
        b[8] = 1;
        Digest::from_bytes(b)
    }

    #[test]
    fn insert_then_query() {
        let mut h = LosslessHistory::unbounded();
        assert!(!h.query(&d(1)));
        h.insert(&d(1), SimTime::ZERO);
        assert!(h.query(&d(1)));
        assert!(!h.query(&d(2)));
    }

    #[test]
    fn capacity_plus_one_evicts_oldest_window() {
        // 12 chunks of one second each, 120 entries total, 10 inserts per window.
        let mut h = LosslessHistory::new(Some(120), 12, Some(SimTime::from_millis(1000))).unwrap();
        let mut t = 0u64;
        for i in 0..120 {
            h.insert(&d(i), SimTime::from_millis(t));
            if i % 10 == 9 {
                t += 1000;
            }
        }
        assert_eq!(h.len(), 120);
        assert_eq!(h.chunk_len(), 12);
        h.insert(&d(1000), SimTime::from_millis(t));
        for i in 0..10 {
            assert!(!h.query(&d(i)), "digest {i} should be evicted");
        }
        for i in 10..120 {
            assert!(h.query(&d(i)));
        }
        assert!(h.query(&d(1000)));
        assert_eq!(h.occupancy().evictions, 1);
    }

    #[test]
    fn size_rotated_chunks() {
        let mut h = LosslessHistory::new(Some(12), 4, None).unwrap();
        for i in 0..12 {
            h.insert(&d(i), SimTime::ZERO);
        }
        assert_eq!(h.chunk_len(), 4);
        h.insert(&d(99), SimTime::ZERO);
        assert_eq!(h.len(), 10);
        assert!(!h.query(&d(0)) && !h.query(&d(2)));
        assert!(h.query(&d(3)));
    }

    #[test]
    fn reinsert_refreshes() {
        let mut h = LosslessHistory::new(Some(4), 2, None).unwrap();
        for i in 0..4 {
            h.insert(&d(i), SimTime::ZERO);
        }
        h.insert(&d(0), SimTime::ZERO);
        assert_eq!(h.len(), 4);
        h.insert(&d(7), SimTime::ZERO);
        assert!(h.query(&d(0)));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(LosslessHistory::new(Some(0), 1, None).is_err());
        assert!(LosslessHistory::new(None, 0, None).is_err());
        assert!(LosslessHistory::new(None, 1, Some(SimTime::ZERO)).is_err());
    }

    /// Naive reference: a list of chunks scanned linearly.
    #[derive(Default)]
    struct Oracle {
        chunks: Vec<Vec<u32>>,
    }

    impl Oracle {
        fn contains(&self, x: u32) -> bool {
            self.chunks.iter().any(|c| c.contains(&x))
        }
    }

    #[derive(Clone, Debug)]
    enum Op {
        Insert(u32),
        Rotate,
        Evict,
    }

    fn op() -> impl Strategy<Value = Op> {
        prop_oneof![
            6 => (0u32..64).prop_map(Op::Insert),
            1 => Just(Op::Rotate),
            1 => Just(Op::Evict),
        ]
    }

    proptest! {
        #[test]
        fn matches_reference_model(ops in proptest::collection::vec(op(), 1..400)) {
            let mut h = LosslessHistory::unbounded();
            let mut oracle = Oracle::default();
            for op in ops {
                match op {
                    Op::Insert(x) => {
                        h.insert(&d(x), SimTime::ZERO);
                        if oracle.chunks.is_empty() {
                            oracle.chunks.push(Vec::new());
                        }
                        for c in &mut oracle.chunks {
                            c.retain(|&y| y != x);
                        }
                        oracle.chunks.last_mut().unwrap().push(x);
                    }
                    Op::Rotate => {
                        h.rotate(SimTime::ZERO);
                        oracle.chunks.push(Vec::new());
                    }
                    Op::Evict => {
                        h.evict_oldest_chunk();
                        if !oracle.chunks.is_empty() {
                            oracle.chunks.remove(0);
                        }
                    }
                }
                for x in 0..64 {
                    prop_assert_eq!(h.query(&d(x)), oracle.contains(x));
                }
            }
        }
    }
}
