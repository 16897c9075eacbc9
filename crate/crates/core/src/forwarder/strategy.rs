//! Erase routing strategies.
//!
//! A router tries its configured strategies in order; the first one that
//! returns `Some(faces)` decides where the erase goes. `None` falls through.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::histories::ForwarderHistory;
use crate::marking::{pop_and_verify, FaceId, MarkingError, MarkingKey, RouterId};
use crate::messages::EraseMessage;

pub struct EraseContext<'a> {
    pub router_id: RouterId,
    pub faces: &'a [FaceId],
    pub arrival_face: FaceId,
    pub erase: &'a mut EraseMessage,
    /// Forwarding set of the cache entry the erase just deleted, if any.
    pub cached_faces: Option<&'a BTreeSet<FaceId>>,
    pub histories: &'a BTreeMap<FaceId, Box<dyn ForwarderHistory>>,
    /// FIB longest-match faces for the erase name (toward the producer).
    pub fib_faces: &'a [FaceId],
    /// Present iff interest marking is enabled on this router.
    pub marking_key: Option<&'a MarkingKey>,
    pub marking_error: Option<MarkingError>,
}

pub trait EraseStrategy: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn route(&self, ctx: &mut EraseContext<'_>) -> Option<Vec<FaceId>>;
}

/// Follows the router's own verified tuple at the head of the erase trace.
#[derive(Debug)]
pub struct MarkingStrategy;

impl EraseStrategy for MarkingStrategy {
    fn name(&self) -> &'static str {
        "marking"
    }

    fn route(&self, ctx: &mut EraseContext<'_>) -> Option<Vec<FaceId>> {
        let key = ctx.marking_key?;
        if ctx.erase.trace_len() == 0 {
            return None;
        }
        match pop_and_verify(ctx.erase, ctx.router_id, key) {
            Ok(face) => Some(vec![face]),
            Err(e) => {
                ctx.marking_error = Some(e);
                None
            }
        }
    }
}

/// Uses the deleted cache entry's forwarding set.
#[derive(Debug)]
pub struct InCacheStrategy;

impl EraseStrategy for InCacheStrategy {
    fn name(&self) -> &'static str {
        "in_cache"
    }

    fn route(&self, ctx: &mut EraseContext<'_>) -> Option<Vec<FaceId>> {
        ctx.cached_faces.map(|f| f.iter().copied().collect())
    }
}

/// Queries each face's history for the erase digest. Faces toward the
/// producer are skipped.
#[derive(Debug)]
pub struct HistoryStrategy;

impl EraseStrategy for HistoryStrategy {
    fn name(&self) -> &'static str {
        "history"
    }

    fn route(&self, ctx: &mut EraseContext<'_>) -> Option<Vec<FaceId>> {
        if !ctx.histories.values().any(|h| h.is_recording()) {
            return None;
        }
        Some(
            ctx.histories
                .iter()
                .filter(|(f, _)| !ctx.fib_faces.contains(f))
                .filter(|(_, h)| h.query(&ctx.erase.digest))
                .map(|(&f, _)| f)
                .collect(),
        )
    }
}

/// Reverse-path flooding: every face not in the FIB match for the name.
#[derive(Debug)]
pub struct FloodStrategy;

impl EraseStrategy for FloodStrategy {
    fn name(&self) -> &'static str {
        "flood"
    }

    fn route(&self, ctx: &mut EraseContext<'_>) -> Option<Vec<FaceId>> {
        Some(flood_faces(ctx.faces, ctx.fib_faces, ctx.arrival_face))
    }
}

#[derive(Debug)]
pub struct DropStrategy;

impl EraseStrategy for DropStrategy {
    fn name(&self) -> &'static str {
        "drop"
    }

    fn route(&self, _ctx: &mut EraseContext<'_>) -> Option<Vec<FaceId>> {
        Some(Vec::new())
    }
}

/// Faces outside `fib_faces`, excluding the arrival face.
pub fn flood_faces(faces: &[FaceId], fib_faces: &[FaceId], arrival_face: FaceId) -> Vec<FaceId> {
    faces.iter().copied().filter(|f| *f != arrival_face && !fib_faces.contains(f)).collect()
}

#[derive(Clone)]
pub struct StrategyRegistry {
    strategies: BTreeMap<String, Arc<dyn EraseStrategy>>,
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        StrategyRegistry { strategies: BTreeMap::new() }
    }

    pub fn register(&mut self, strategy: Arc<dyn EraseStrategy>) {
        self.strategies.insert(strategy.name().to_string(), strategy);
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn EraseStrategy>> {
        self.strategies.get(name).cloned()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.strategies.keys().map(String::as_str)
    }
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        let mut r = StrategyRegistry::empty();
        r.register(Arc::new(MarkingStrategy));
        r.register(Arc::new(InCacheStrategy));
        r.register(Arc::new(HistoryStrategy));
        r.register(Arc::new(FloodStrategy));
        r.register(Arc::new(DropStrategy));
        r
    }
}
