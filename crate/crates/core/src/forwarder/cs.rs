use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::marking::FaceId;
use crate::messages::{ContentObject, Digest, Name};
use crate::time::SimTime;

#[derive(Debug, Clone)]
pub struct CacheEntry {
    pub content: ContentObject,
    pub digest: Digest,
    /// Downstream faces this cached copy was delivered on.
    pub forwarded_faces: BTreeSet<FaceId>,
    pub inserted_at: SimTime,
    pub last_access: SimTime,
    stamp: u64,
}

/// LRU content store; expired entries are dropped lazily on lookup and by `sweep`.
#[derive(Debug, Clone)]
pub struct ContentStore {
    capacity: usize,
    entries: HashMap<Name, CacheEntry>,
    lru: BTreeMap<u64, Name>,
    clock: u64,
}

impl ContentStore {
    pub fn new(capacity: usize) -> Self {
        ContentStore { capacity, entries: HashMap::new(), lru: BTreeMap::new(), clock: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Unexpired entry for `name` without touching recency.
    pub fn peek(&self, name: &Name, now: SimTime) -> Option<&CacheEntry> {
        self.entries.get(name).filter(|e| !e.content.is_expired(now))
    }

    /// Looks up `name`, refreshing recency. An expired entry is removed and
    /// returned in the second slot.
    pub fn lookup(&mut self, name: &Name, now: SimTime) -> (Option<&mut CacheEntry>, Option<CacheEntry>) {
        let expired = match self.entries.get(name) {
            Some(e) => e.content.is_expired(now),
            None => return (None, None),
        };
        if expired {
            return (None, self.remove(name));
        }
        self.clock += 1;
        let stamp = self.clock;
        let entry = self.entries.get_mut(name).expect("present");
        self.lru.remove(&entry.stamp);
        self.lru.insert(stamp, name.clone());
        entry.stamp = stamp;
        entry.last_access = now;
        (Some(entry), None)
    }

    /// Caches `content`, returning entries evicted to make room (including a
    /// previous version under the same name).
    pub fn insert(
        &mut self,
        content: ContentObject,
        digest: Digest,
        forwarded_faces: BTreeSet<FaceId>,
        now: SimTime,
    ) -> Vec<CacheEntry> {
        let mut evicted = Vec::new();
        if self.capacity == 0 || content.is_expired(now) {
            return evicted;
        }
        if let Some(old) = self.remove(&content.name) {
            evicted.push(old);
        }
        while self.entries.len() >= self.capacity {
            let (_, victim) = self.lru.pop_first().expect("non-empty at capacity");
            evicted.push(self.entries.remove(&victim).expect("lru and map agree"));
        }
        self.clock += 1;
        let name = content.name.clone();
        self.lru.insert(self.clock, name.clone());
        self.entries.insert(
            name,
            CacheEntry { content, digest, forwarded_faces, inserted_at: now, last_access: now, stamp: self.clock },
        );
        evicted
    }

    pub fn remove(&mut self, name: &Name) -> Option<CacheEntry> {
        let e = self.entries.remove(name)?;
        self.lru.remove(&e.stamp);
        Some(e)
    }

    /// Removes every expired entry.
    pub fn sweep(&mut self, now: SimTime) -> Vec<CacheEntry> {
        let mut expired: Vec<Name> =
            self.entries.iter().filter(|(_, e)| e.content.is_expired(now)).map(|(n, _)| n.clone()).collect();
        expired.sort();
        expired.iter().filter_map(|n| self.remove(n)).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &CacheEntry> {
        self.entries.values()
    }
}
