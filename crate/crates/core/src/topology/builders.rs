//! Programmatic and bundled topologies.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{load_topology, NodeId, Role, Topology, TopologyError, DEFAULT_LINK_DELAY};

const DFN30: &str = include_str!("data/dfn30.topo");
const ATT: &str = include_str!("data/att.topo");

/// 30-router research backbone with 16 edge routers, 160 consumers and one
/// producer.
pub fn dfn30() -> Topology {
    load_topology(DFN30).expect("bundled topology is valid")
}

/// 134-router ISP backbone with 32 edge routers, 160 consumers and one
/// producer.
pub fn att() -> Topology {
    load_topology(ATT).expect("bundled topology is valid")
}

/// Resolves `builtin:<name>` references: `dfn30`, `att`, `tree:<h>`,
/// `line:<routers>`.
pub fn builtin(name: &str) -> Result<Topology, TopologyError> {
    let bad = || TopologyError::Validation(format!("unknown builtin topology `{name}`"));
    match name {
        "dfn30" => Ok(dfn30()),
        "att" => Ok(att()),
        _ => {
            let (kind, arg) = name.split_once(':').ok_or_else(bad)?;
            let n: u32 = arg.parse().map_err(|_| bad())?;
            match kind {
                "tree" => build_tree(n),
                "line" => line(n),
                _ => Err(bad()),
            }
        }
    }
}

/// consumer 0, routers 1..=n, producer n+1, connected in a chain.
pub fn line(routers: u32) -> Result<Topology, TopologyError> {
    let mut t = Topology::new();
    t.add_node(0, Role::Consumer)?;
    for r in 1..=routers {
        t.add_node(r, Role::Router)?;
    }
    t.add_node(routers + 1, Role::Producer)?;
    for a in 0..=routers {
        t.connect(a, a + 1, DEFAULT_LINK_DELAY)?;
    }
    t.validate()?;
    Ok(t)
}

/// Full binary tree of height `h`: the producer is the root (id 0), levels
/// 1..h-1 are routers and the 2^h leaves are consumers. Ids follow heap order.
pub fn build_tree(h: u32) -> Result<Topology, TopologyError> {
    if !(1..=16).contains(&h) {
        return Err(TopologyError::Validation(format!("tree height {h} outside 1..=16")));
    }
    let total: NodeId = (1 << (h + 1)) - 1;
    let first_leaf: NodeId = (1 << h) - 1;
    let mut t = Topology::new();
    for id in 0..total {
        let role = match id {
            0 => Role::Producer,
            id if id >= first_leaf => Role::Consumer,
            _ => Role::Router,
        };
        t.add_node(id, role)?;
    }
    for id in 1..total {
        t.connect((id - 1) / 2, id, DEFAULT_LINK_DELAY)?;
    }
    Ok(t)
}

/// Random connected router graph with `consumers` consumers on random
/// routers and one producer on router 0. Deterministic in `seed`.
pub fn random_connected(seed: u64, routers: u32, consumers: u32, extra_links: u32) -> Result<Topology, TopologyError> {
    if routers == 0 {
        return Err(TopologyError::Validation("need at least one router".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = Topology::new();
    for r in 0..routers {
        t.add_node(r, Role::Router)?;
    }
    for r in 1..routers {
        t.connect(rng.random_range(0..r), r, DEFAULT_LINK_DELAY)?;
    }
    let mut adjacent: std::collections::BTreeSet<(NodeId, NodeId)> =
        t.links().iter().map(|l| (l.a.min(l.b), l.a.max(l.b))).collect();
    for _ in 0..extra_links {
        let a = rng.random_range(0..routers);
        let b = rng.random_range(0..routers);
        if a != b && adjacent.insert((a.min(b), a.max(b))) {
            t.connect(a, b, DEFAULT_LINK_DELAY)?;
        }
    }
    for c in 0..consumers {
        let id = routers + c;
        t.add_node(id, Role::Consumer)?;
        t.connect(id, rng.random_range(0..routers), DEFAULT_LINK_DELAY)?;
    }
    let producer = routers + consumers;
    t.add_node(producer, Role::Producer)?;
    t.connect(producer, 0, DEFAULT_LINK_DELAY)?;
    t.validate()?;
    Ok(t)
}
