//! Content-centric network simulator with best-effort authenticated deletion.
//!
//! Routers keep a content store, pending-interest table and FIB, and route
//! producer-issued erase messages with a configurable chain of strategies:
//! interest-marking traces, in-cache forwarding sets, per-face histories and
//! reverse-path flooding.

pub mod auth;
pub mod forwarder;
pub mod histories;
pub mod marking;
pub mod messages;
pub mod simulator;
pub mod time;
pub mod topology;

pub use messages::{content_digest, ContentObject, Digest, EraseMessage, Interest, Lambda, Message, Name};
pub use time::SimTime;
