use rand::{Rng, RngCore};

use super::{bloom_indices, ForwarderHistory, HistoryConfig, HistoryError, Occupancy};
use crate::messages::Digest;
use crate::time::SimTime;

/// Largest value of a 4-bit counter.
pub const COUNTER_MAX: u8 = 15;

/// Counting Bloom filter with 4-bit saturating counters.
///
/// Routers do not know which digests are in the filter, so elements are aged
/// out by decrementing random non-zero counters. With `mean_expiry` set,
/// `tick` removes on average `live / mean_expiry` elements per second, each
/// removal being k random decrements.
#[derive(Debug, Clone)]
pub struct CountingBloomHistory {
    counters: Vec<u8>,
    k: u32,
    nonzero: u64,
    inserted: u64,
    live_estimate: f64,
    mean_expiry: Option<SimTime>,
    last_tick: Option<SimTime>,
    carry: f64,
}

impl CountingBloomHistory {
    pub fn new(m: u64, k: u32, mean_expiry: Option<SimTime>) -> Result<Self, HistoryError> {
        if m == 0 || k == 0 {
            return Err(HistoryError::InvalidParameter("m and k must be >= 1".into()));
        }
        if mean_expiry == Some(SimTime::ZERO) {
            return Err(HistoryError::InvalidParameter("mean_expiry must be positive".into()));
        }
        Ok(CountingBloomHistory {
            counters: vec![0; m as usize],
            k,
            nonzero: 0,
            inserted: 0,
            live_estimate: 0.0,
            mean_expiry,
            last_tick: None,
            carry: 0.0,
        })
    }

    pub fn from_config(c: &HistoryConfig) -> Result<Self, HistoryError> {
        Self::new(c.m_bits, c.resolved_k()?, c.mean_expiry)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn counters(&self) -> &[u8] {
        &self.counters
    }

    /// Fraction of counters that are non-zero.
    pub fn occupied_fraction(&self) -> f64 {
        self.nonzero as f64 / self.counters.len() as f64
    }

    /// Decrements `count` randomly chosen non-zero counters.
    pub fn decrement_random(&mut self, count: u64, rng: &mut dyn RngCore) {
        let m = self.counters.len();
        for _ in 0..count {
            if self.nonzero == 0 {
                return;
            }
            let start = rng.random_range(0..m);
            let i = (0..m).map(|o| (start + o) % m).find(|&i| self.counters[i] > 0).expect("nonzero > 0");
            self.counters[i] -= 1;
            if self.counters[i] == 0 {
                self.nonzero -= 1;
            }
        }
    }
}

impl ForwarderHistory for CountingBloomHistory {
    fn kind(&self) -> &'static str {
        "cbf"
    }

    fn insert(&mut self, d: &Digest, now: SimTime) {
        if self.last_tick.is_none() {
            self.last_tick = Some(now);
        }
        for i in bloom_indices(d, self.k, self.counters.len() as u64) {
            let c = &mut self.counters[i];
            if *c == 0 {
                self.nonzero += 1;
            }
            *c = c.saturating_add(1).min(COUNTER_MAX);
        }
        self.inserted += 1;
        self.live_estimate += 1.0;
    }

    fn query(&self, d: &Digest) -> bool {
        bloom_indices(d, self.k, self.counters.len() as u64).all(|i| self.counters[i] > 0)
    }

    fn tick(&mut self, now: SimTime, rng: &mut dyn RngCore) {
        let Some(mean) = self.mean_expiry else {
            return;
        };
        let last = *self.last_tick.get_or_insert(now);
        self.last_tick = Some(now);
        let dt = now.saturating_sub(last).as_secs_f64();
        if dt <= 0.0 || self.live_estimate <= 0.0 {
            return;
        }
        let due = self.live_estimate * (dt / mean.as_secs_f64()).min(1.0) + self.carry;
        let removals = due.floor();
        self.carry = due - removals;
        self.live_estimate = (self.live_estimate - removals).max(0.0);
        self.decrement_random(removals as u64 * self.k as u64, rng);
    }

    fn occupancy(&self) -> Occupancy {
        Occupancy {
            entries: self.live_estimate.round() as u64,
            capacity: None,
            evictions: 0,
            resets: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn random_digest(rng: &mut impl RngCore) -> Digest {
        let mut b = vec![0u8; 32];
        rng.fill_bytes(&mut b);
        Digest::from_bytes(b)
    }

    #[test]
    fn zero_decrement_rate_never_forgets() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut h = CountingBloomHistory::new(20_000, 5, None).unwrap();
        let ds: Vec<Digest> = (0..2_000).map(|_| random_digest(&mut rng)).collect();
        for (i, d) in ds.iter().enumerate() {
            h.insert(d, SimTime::from_millis(i as u64));
            h.tick(SimTime::from_millis(i as u64), &mut rng);
        }
        assert!(ds.iter().all(|d| h.query(d)));
    }

    #[test]
    fn random_decrements_cause_false_negatives() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut h = CountingBloomHistory::new(10_000, 4, None).unwrap();
        let ds: Vec<Digest> = (0..1_000).map(|_| random_digest(&mut rng)).collect();
        for d in &ds {
            h.insert(d, SimTime::ZERO);
        }
        // k decrements per occupied-fraction share of the inserted elements
        let total = (h.k() as f64 * h.occupied_fraction() * ds.len() as f64) as u64;
        h.decrement_random(total, &mut rng);
        let misses = ds.iter().filter(|d| !h.query(d)).count();
        assert!(misses > 0);
        assert!(h.counters().iter().all(|&c| c <= COUNTER_MAX));
    }

    #[test]
    fn counters_saturate_and_floor_at_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut h = CountingBloomHistory::new(8, 8, None).unwrap();
        let d = random_digest(&mut rng);
        for _ in 0..40 {
            h.insert(&d, SimTime::ZERO);
        }
        assert!(h.counters().iter().all(|&c| c <= COUNTER_MAX));
        h.decrement_random(10_000, &mut rng);
        assert!(h.counters().iter().all(|&c| c == 0));
        assert!(!h.query(&d));
    }

    #[test]
    fn tick_ages_out_at_the_expiry_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut h = CountingBloomHistory::new(50_000, 4, Some(SimTime::from_millis(10_000))).unwrap();
        for _ in 0..1000 {
            h.insert(&random_digest(&mut rng), SimTime::ZERO);
        }
        h.tick(SimTime::from_millis(1000), &mut rng);
        // a tenth of the mean lifetime elapsed: ~100 elements removed
        assert_eq!(h.occupancy().entries, 900);
        for s in 2..=100 {
            h.tick(SimTime::from_millis(1000 * s), &mut rng);
        }
        assert!(h.occupied_fraction() < 0.01);
    }
}
