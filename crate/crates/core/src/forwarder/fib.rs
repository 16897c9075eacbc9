use std::collections::{BTreeSet, HashMap};

use crate::marking::FaceId;
use crate::messages::Name;

/// Name-prefix routing table with longest-prefix-match lookup.
#[derive(Debug, Clone, Default)]
pub struct Fib {
    entries: HashMap<Name, BTreeSet<FaceId>>,
    longest: usize,
}

impl Fib {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, prefix: Name, face: FaceId) {
        self.longest = self.longest.max(prefix.len());
        self.entries.entry(prefix).or_default().insert(face);
    }

    pub fn remove(&mut self, prefix: &Name) -> Option<BTreeSet<FaceId>> {
        self.entries.remove(prefix)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &BTreeSet<FaceId>)> {
        self.entries.iter()
    }

    /// Entry for the longest stored prefix of `name`.
    pub fn lookup(&self, name: &Name) -> Option<(&Name, &BTreeSet<FaceId>)> {
        (1..=name.len().min(self.longest))
            .rev()
            .find_map(|len| self.entries.get_key_value(&name.prefix(len)))
    }

    /// Faces of the longest match, or empty when nothing matches.
    pub fn faces(&self, name: &Name) -> Vec<FaceId> {
        self.lookup(name).map(|(_, f)| f.iter().copied().collect()).unwrap_or_default()
    }
}
