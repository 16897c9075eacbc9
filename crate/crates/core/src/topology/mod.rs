//! Network graph, topology files, builders and FIB population.
//!
//! Topology files are line oriented:
//!
//! ```text
//! # comment
//! node <id> <router|consumer|producer>
//! link <idA> <faceA> <idB> <faceB> [<delay_ms>]
//! ```
//!
//! Ids are unsigned 32-bit integers, faces unsigned 16-bit integers, delays
//! non-negative decimal milliseconds (default 10). Tokens are separated by
//! whitespace; anything after `#` is ignored.

pub mod builders;
mod routes;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::marking::FaceId;
use crate::time::SimTime;

pub use routes::{populate_fibs, RouteTable};

pub type NodeId = u32;

pub const DEFAULT_LINK_DELAY: SimTime = SimTime::from_millis(10);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TopologyError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid topology: {0}")]
    Validation(String),
}

fn validation(msg: impl Into<String>) -> TopologyError {
    TopologyError::Validation(msg.into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Router,
    Consumer,
    Producer,
}

impl FromStr for Role {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "router" => Ok(Role::Router),
            "consumer" => Ok(Role::Consumer),
            "producer" => Ok(Role::Producer),
            other => Err(format!("unknown role `{other}`")),
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Router => "router",
            Role::Consumer => "consumer",
            Role::Producer => "producer",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Link {
    pub a: NodeId,
    pub face_a: FaceId,
    pub b: NodeId,
    pub face_b: FaceId,
    pub delay: SimTime,
}

/// One end of a link as seen from a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Port {
    pub face: FaceId,
    pub peer: NodeId,
    pub peer_face: FaceId,
    pub delay: SimTime,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Topology {
    nodes: BTreeMap<NodeId, Role>,
    links: Vec<Link>,
}

impl Topology {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: NodeId, role: Role) -> Result<(), TopologyError> {
        if self.nodes.insert(id, role).is_some() {
            return Err(validation(format!("node {id} declared twice")));
        }
        Ok(())
    }

    pub fn add_link(&mut self, link: Link) -> Result<(), TopologyError> {
        for (n, f) in [(link.a, link.face_a), (link.b, link.face_b)] {
            if !self.nodes.contains_key(&n) {
                return Err(validation(format!("link references unknown node {n}")));
            }
            if self.port(n, f).is_some() {
                return Err(validation(format!("node {n} face {f} used twice")));
            }
        }
        if link.a == link.b {
            return Err(validation(format!("self-loop on node {}", link.a)));
        }
        self.links.push(link);
        Ok(())
    }

    /// Adds a link on the next free face of each endpoint.
    pub fn connect(&mut self, a: NodeId, b: NodeId, delay: SimTime) -> Result<(), TopologyError> {
        let face_a = self.next_face(a);
        let face_b = self.next_face(b);
        self.add_link(Link { a, face_a, b, face_b, delay })
    }

    fn next_face(&self, n: NodeId) -> FaceId {
        self.ports(n).iter().map(|p| p.face + 1).max().unwrap_or(0)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, Role)> + '_ {
        self.nodes.iter().map(|(&id, &r)| (id, r))
    }

    pub fn role(&self, id: NodeId) -> Option<Role> {
        self.nodes.get(&id).copied()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn with_role(&self, role: Role) -> Vec<NodeId> {
        self.nodes.iter().filter(|(_, &r)| r == role).map(|(&id, _)| id).collect()
    }

    pub fn routers(&self) -> Vec<NodeId> {
        self.with_role(Role::Router)
    }

    pub fn consumers(&self) -> Vec<NodeId> {
        self.with_role(Role::Consumer)
    }

    pub fn producers(&self) -> Vec<NodeId> {
        self.with_role(Role::Producer)
    }

    /// Ports of `n`, sorted by face.
    pub fn ports(&self, n: NodeId) -> Vec<Port> {
        let mut out: Vec<Port> = self
            .links
            .iter()
            .filter_map(|l| {
                if l.a == n {
                    Some(Port { face: l.face_a, peer: l.b, peer_face: l.face_b, delay: l.delay })
                } else if l.b == n {
                    Some(Port { face: l.face_b, peer: l.a, peer_face: l.face_a, delay: l.delay })
                } else {
                    None
                }
            })
            .collect();
        out.sort_by_key(|p| p.face);
        out
    }

    pub fn port(&self, n: NodeId, face: FaceId) -> Option<Port> {
        self.links.iter().find_map(|l| {
            if l.a == n && l.face_a == face {
                Some(Port { face, peer: l.b, peer_face: l.face_b, delay: l.delay })
            } else if l.b == n && l.face_b == face {
                Some(Port { face, peer: l.a, peer_face: l.face_a, delay: l.delay })
            } else {
                None
            }
        })
    }

    /// Routers with at least one attached consumer.
    pub fn edge_routers(&self) -> Vec<NodeId> {
        self.routers()
            .into_iter()
            .filter(|&r| self.ports(r).iter().any(|p| self.role(p.peer) == Some(Role::Consumer)))
            .collect()
    }

    /// Checks face uniqueness, connectivity and end-host attachment.
    pub fn validate(&self) -> Result<(), TopologyError> {
        if self.nodes.is_empty() {
            return Err(validation("no nodes"));
        }
        let mut seen = BTreeSet::new();
        for l in &self.links {
            for key in [(l.a, l.face_a), (l.b, l.face_b)] {
                if !seen.insert(key) {
                    return Err(validation(format!("node {} face {} used twice", key.0, key.1)));
                }
            }
        }
        let start = *self.nodes.keys().next().expect("non-empty");
        let mut reached = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(n) = queue.pop_front() {
            for p in self.ports(n) {
                if reached.insert(p.peer) {
                    queue.push_back(p.peer);
                }
            }
        }
        if reached.len() != self.nodes.len() {
            let missing = self.nodes.keys().find(|n| !reached.contains(n)).expect("some unreached");
            return Err(validation(format!("graph is disconnected (node {missing} unreachable)")));
        }
        let has_routers = self.nodes.values().any(|&r| r == Role::Router);
        for (&id, &role) in &self.nodes {
            if role == Role::Router {
                continue;
            }
            let ports = self.ports(id);
            if ports.is_empty() {
                return Err(validation(format!("{role} {id} has no link")));
            }
            if has_routers && !ports.iter().any(|p| self.role(p.peer) == Some(Role::Router)) {
                return Err(validation(format!("{role} {id} is not attached to a router")));
            }
        }
        Ok(())
    }

    /// Serializes in the file grammar; `load_topology` reads it back.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (id, role) in self.nodes() {
            s.push_str(&format!("node {id} {role}\n"));
        }
        for l in &self.links {
            let ms = l.delay.as_nanos() as f64 / 1e6;
            s.push_str(&format!("link {} {} {} {} {}\n", l.a, l.face_a, l.b, l.face_b, ms));
        }
        s
    }
}

/// Parses and validates a topology file.
pub fn load_topology(text: &str) -> Result<Topology, TopologyError> {
    let mut t = Topology::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| TopologyError::Parse { line, message };
        let content = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let Some(&keyword) = tokens.first() else {
            continue;
        };
        match keyword {
            "node" => {
                let [_, id, role] = tokens[..] else {
                    return Err(err("expected `node <id> <role>`".into()));
                };
                let id = id.parse().map_err(|_| err(format!("bad node id `{id}`")))?;
                let role = role.parse().map_err(err)?;
                t.add_node(id, role).map_err(|e| err(e.to_string()))?;
            }
            "link" => {
                if !(5..=6).contains(&tokens.len()) {
                    return Err(err("expected `link <idA> <faceA> <idB> <faceB> [<delay_ms>]`".into()));
                }
                let id = |s: &str| s.parse::<NodeId>().map_err(|_| err(format!("bad node id `{s}`")));
                let face = |s: &str| s.parse::<FaceId>().map_err(|_| err(format!("bad face id `{s}`")));
                let delay = match tokens.get(5) {
                    Some(s) => {
                        let ms: f64 = s.parse().map_err(|_| err(format!("bad delay `{s}`")))?;
                        if !(ms.is_finite() && ms >= 0.0) {
                            return Err(err(format!("bad delay `{s}`")));
                        }
                        SimTime::from_nanos((ms * 1e6).round() as u64)
                    }
                    None => DEFAULT_LINK_DELAY,
                };
                let link = Link {
                    a: id(tokens[1])?,
                    face_a: face(tokens[2])?,
                    b: id(tokens[3])?,
                    face_b: face(tokens[4])?,
                    delay,
                };
                t.add_link(link)?;
            }
            other => return Err(err(format!("unknown directive `{other}`"))),
        }
    }
    t.validate()?;
    Ok(t)
}
