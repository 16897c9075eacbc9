use std::collections::{BTreeMap, VecDeque};

use super::{NodeId, Role, Topology, TopologyError};
use crate::marking::FaceId;

/// Shortest-hop next hops toward one producer. Only routers transit traffic;
/// ties go to the lowest neighbor id, then the lowest face.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RouteTable {
    producer: NodeId,
    next: BTreeMap<NodeId, (FaceId, NodeId)>,
    hops: BTreeMap<NodeId, u32>,
}

pub fn populate_fibs(topo: &Topology, producer: NodeId) -> Result<RouteTable, TopologyError> {
    if topo.role(producer) != Some(Role::Producer) {
        return Err(TopologyError::Validation(format!("node {producer} is not a producer")));
    }
    let mut hops = BTreeMap::from([(producer, 0u32)]);
    let mut queue = VecDeque::from([producer]);
    while let Some(n) = queue.pop_front() {
        if n != producer && topo.role(n) != Some(Role::Router) {
            continue;
        }
        let d = hops[&n];
        for p in topo.ports(n) {
            hops.entry(p.peer).or_insert_with(|| {
                queue.push_back(p.peer);
                d + 1
            });
        }
    }
    let mut next = BTreeMap::new();
    for (&n, &d) in &hops {
        if n == producer {
            continue;
        }
        let best = topo
            .ports(n)
            .into_iter()
            .filter(|p| p.peer == producer || topo.role(p.peer) == Some(Role::Router))
            .filter(|p| hops.get(&p.peer) == Some(&(d - 1)))
            .min_by_key(|p| (p.peer, p.face))
            .expect("BFS parent exists");
        next.insert(n, (best.face, best.peer));
    }
    Ok(RouteTable { producer, next, hops })
}

impl RouteTable {
    pub fn producer(&self) -> NodeId {
        self.producer
    }

    /// Face toward the producer, if `node` can reach it.
    pub fn fib_for(&self, node: NodeId) -> Option<FaceId> {
        self.next.get(&node).map(|&(f, _)| f)
    }

    pub fn next_hop(&self, node: NodeId) -> Option<NodeId> {
        self.next.get(&node).map(|&(_, n)| n)
    }

    pub fn hops(&self, node: NodeId) -> Option<u32> {
        self.hops.get(&node).copied()
    }

    /// Nodes visited from `node` to the producer, both inclusive.
    pub fn path(&self, node: NodeId) -> Result<Vec<NodeId>, TopologyError> {
        let mut path = vec![node];
        let mut cur = node;
        while cur != self.producer {
            cur = self
                .next_hop(cur)
                .ok_or_else(|| TopologyError::Validation(format!("node {cur} has no route")))?;
            if path.len() > self.next.len() + 1 {
                return Err(TopologyError::Validation(format!("routing loop from node {node}")));
            }
            path.push(cur);
        }
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::super::builders::{att, build_tree, dfn30, line, random_connected};
    use super::*;

    fn check_walks(t: &Topology, max_hops: usize) {
        let producer = t.producers()[0];
        let rt = populate_fibs(t, producer).unwrap();
        for c in t.consumers().into_iter().chain(t.routers()) {
            let path = rt.path(c).unwrap();
            assert!(path.len() - 1 <= max_hops, "{c}: {path:?}");
            assert_eq!(*path.last().unwrap(), producer);
            for w in path[1..path.len() - 1].iter() {
                assert_eq!(t.role(*w), Some(Role::Router));
            }
            assert_eq!(rt.hops(c), Some(path.len() as u32 - 1));
        }
    }

    #[test]
    fn walks_terminate_at_producer() {
        check_walks(&line(4).unwrap(), 5);
        check_walks(&build_tree(4).unwrap(), 4);
        check_walks(&dfn30(), 30);
        check_walks(&att(), 134);
        for seed in 0..20 {
            check_walks(&random_connected(seed, 25, 15, 20).unwrap(), 26);
        }
    }

    #[test]
    fn tree_paths_cross_h_minus_one_routers() {
        let t = build_tree(4).unwrap();
        let rt = populate_fibs(&t, 0).unwrap();
        for c in t.consumers() {
            assert_eq!(rt.path(c).unwrap().len(), 5);
        }
    }

    #[test]
    fn consumers_do_not_transit() {
        // two routers joined only through a consumer: router 3 is unreachable
        let text = "node 0 producer\nnode 1 router\nnode 2 consumer\nnode 3 router\n\
                    link 0 0 1 0\nlink 1 1 2 0\nlink 2 1 3 0\n";
        let t = super::super::load_topology(text).unwrap();
        let rt = populate_fibs(&t, 0).unwrap();
        assert_eq!(rt.fib_for(1), Some(0));
        assert_eq!(rt.fib_for(2), Some(0));
        assert_eq!(rt.fib_for(3), None);
        assert!(populate_fibs(&t, 1).is_err());
    }
}
