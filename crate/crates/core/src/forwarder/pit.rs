use std::collections::{BTreeSet, HashMap};

use crate::marking::FaceId;
use crate::messages::Name;
use crate::time::SimTime;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PitEntry {
    pub downstream_faces: BTreeSet<FaceId>,
    pub created_at: SimTime,
}

#[derive(Debug, Clone, Default)]
pub struct Pit {
    entries: HashMap<Name, PitEntry>,
}

impl Pit {
    pub fn get(&self, name: &Name) -> Option<&PitEntry> {
        self.entries.get(name)
    }

    /// Adds `face` to a pending entry; false if there is none.
    pub fn collapse(&mut self, name: &Name, face: FaceId) -> bool {
        match self.entries.get_mut(name) {
            Some(e) => {
                e.downstream_faces.insert(face);
                true
            }
            None => false,
        }
    }

    pub fn create(&mut self, name: Name, face: FaceId, now: SimTime) {
        self.entries.insert(name, PitEntry { downstream_faces: BTreeSet::from([face]), created_at: now });
    }

    pub fn take(&mut self, name: &Name) -> Option<PitEntry> {
        self.entries.remove(name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
