use super::*;
use crate::forwarder::FloodFallback;
use crate::histories::HistoryConfig;
use crate::topology::builders::{build_tree, dfn30, line, random_connected};

fn quiet(seed: u64) -> SimConfig {
    SimConfig {
        seed,
        duration: SimTime::from_millis(2_000),
        producer: ProducerConfig { erase_fraction: 0.0, ..ProducerConfig::default() },
        ..SimConfig::default()
    }
}

fn history(kind: &str) -> HistoryConfig {
    HistoryConfig { kind: kind.into(), ..HistoryConfig::default() }
}

#[test]
fn single_interest_on_a_line() {
    let mut cfg = quiet(3);
    cfg.consumer.max_interests = Some(1);
    let m = run(line(3).unwrap(), cfg).unwrap();
    let content = 64 + 4096;
    for r in 1..=3 {
        let n = m.node(r).unwrap();
        assert_eq!(n.in_bytes.data, content, "router {r}");
        assert_eq!(n.in_msgs.data, 1);
        assert_eq!(n.in_msgs.interest, 1);
    }
    let c = &m.consumers[&0];
    assert_eq!((c.issued, c.satisfied, c.nacked, c.pending), (1, 1, 0, 0));
    // 4 links each way, 10 ms each
    assert_eq!(c.min_rtt, Some(SimTime::from_millis(80)));
}

#[test]
fn same_seed_same_metrics() {
    let cfg = SimConfig { duration: SimTime::from_millis(3_000), ..SimConfig::default() };
    let a = run(dfn30(), cfg.clone()).unwrap();
    let b = run(dfn30(), cfg.clone()).unwrap();
    assert_eq!(a, b);
    let c = run(dfn30(), SimConfig { seed: 2, ..cfg }).unwrap();
    assert_ne!(a, c);
}

#[test]
fn conservation_accounting_and_causality() {
    let cfg = SimConfig { duration: SimTime::from_millis(3_000), ..SimConfig::default() };
    let topo = dfn30();
    let m = run(topo.clone(), cfg).unwrap();
    for l in topo.links() {
        for (from, face) in [(l.a, l.face_a), (l.b, l.face_b)] {
            let c = m.links[&(from, face)];
            assert_eq!(c.sent, c.received, "link end ({from}, {face})");
        }
    }
    let sent: u64 = m.nodes.values().map(|n| n.out_bytes.total()).sum();
    let received: u64 = m.nodes.values().map(|n| n.in_bytes.total()).sum();
    assert_eq!(sent, received);
    assert_eq!(m.causality_violations, 0);
    for (id, c) in &m.consumers {
        assert_eq!(c.issued, c.satisfied + c.nacked + c.pending, "consumer {id}");
        assert!(c.issued > 0);
        // at least the consumer link both ways
        assert!(c.min_rtt.unwrap() >= SimTime::from_millis(20));
    }
    assert!(m.producer.erases_issued > 0);
    assert!(m.total_deletions() > 0);
    assert_eq!(m.unverified_deletions, 0);
}

/// consumer 0 - r1 - r2 - r3 - producer 4. Only r1 caches.
fn line_scenario(fallback: FloodFallback) -> (Simulation, Name) {
    let mut cfg = quiet(5);
    cfg.consumer.max_interests = Some(1);
    cfg.consumer.jitter = false;
    cfg.producer.expiry = None;
    for rc in [&mut cfg.edge_router, &mut cfg.core_router] {
        rc.history = history("none");
        rc.flood_fallback = fallback;
    }
    cfg.core_router.cache_capacity = 0;
    let mut sim = Simulation::new(line(3).unwrap(), cfg).unwrap();
    sim.run_until(SimTime::from_millis(500));
    let name: Name = "/prefix/A/0".parse().unwrap();
    (sim, name)
}

#[test]
fn drop_fallback_misses_distant_cache() {
    let (mut sim, name) = line_scenario(FloodFallback::Drop);
    let id = sim.erase_now(&name).unwrap();
    sim.run();
    let m = sim.metrics();
    assert_eq!(m.erases[id].cached_at_issue.iter().copied().collect::<Vec<_>>(), [1]);
    assert!(penetration(m, id).unwrap() < 1.0);
    assert_eq!(m.node(2).unwrap().in_msgs.erase, 0);
}

#[test]
fn flooding_reaches_distant_cache() {
    let (mut sim, name) = line_scenario(FloodFallback::Flood);
    let id = sim.erase_now(&name).unwrap();
    sim.run();
    let m = sim.metrics();
    assert_eq!(penetration(m, id), Ok(1.0));
    assert!(sim.router(1).unwrap().content_store().is_empty());
    assert_eq!(sim.erase_now(&name), None);
}

#[test]
fn per_path_erases_on_tree_carry_all_traces() {
    let mut cfg = quiet(9);
    cfg.consumer.max_interests = Some(1);
    cfg.consumer.jitter = false;
    cfg.consumer.stagger = SimTime::from_millis(500);
    cfg.duration = SimTime::from_millis(10_000);
    for rc in [&mut cfg.edge_router, &mut cfg.core_router] {
        rc.cache_capacity = 0;
        rc.marking_enabled = true;
    }
    let mut sim = Simulation::new(build_tree(4).unwrap(), cfg).unwrap();
    sim.run_until(SimTime::from_millis(9_000));
    assert_eq!(sim.metrics().node(0).unwrap().in_msgs.interest, 16);
    let id = sim.erase_now(&"/prefix/A/0".parse().unwrap()).unwrap();
    sim.run();
    let m = sim.metrics();
    assert_eq!(m.erases[id].messages, 16);
    assert_eq!(m.node(0).unwrap().erase_trace_bytes_out, 16 * 3 * 38);
    // every path is walked down to its consumer
    for c in build_tree(4).unwrap().consumers() {
        assert_eq!(m.node(c).unwrap().in_msgs.erase, 1, "consumer {c}");
    }
}

#[test]
fn forged_erases_never_delete() {
    let mut cfg = quiet(11);
    cfg.duration = SimTime::from_millis(3_000);
    cfg.adversary = Some(AdversaryConfig { count: 50, ..AdversaryConfig::default() });
    let m = run(dfn30(), cfg).unwrap();
    assert_eq!(m.adversary.forged_sent, 50);
    assert_eq!(m.total_auth_failures(), 50);
    assert_eq!(m.total_deletions(), 0);
}

#[test]
fn history_routing_matches_flooding() {
    let topo = random_connected(4, 20, 12, 10).unwrap();
    let mut deleted = Vec::new();
    for (hist, fallback, strategies) in [
        ("lossless", FloodFallback::Drop, ["in_cache", "history", "fallback"]),
        ("none", FloodFallback::Flood, ["in_cache", "history", "fallback"]),
    ] {
        let mut cfg = quiet(21);
        cfg.consumer.stop = Some(SimTime::from_millis(500));
        cfg.producer.expiry = None;
        for rc in [&mut cfg.edge_router, &mut cfg.core_router] {
            rc.history = history(hist);
            rc.flood_fallback = fallback;
            rc.strategies = strategies.map(String::from).to_vec();
        }
        let mut sim = Simulation::new(topo.clone(), cfg).unwrap();
        sim.run_until(SimTime::from_millis(1_000));
        let ids: Vec<usize> =
            (0..5).filter_map(|s| sim.erase_now(&format!("/prefix/A/{s}").parse().unwrap())).collect();
        assert_eq!(ids.len(), 5);
        sim.run();
        let m = sim.metrics();
        for &id in &ids {
            assert!(!m.erases[id].cached_at_issue.is_empty());
            assert_eq!(penetration(m, id), Ok(1.0), "{hist}");
        }
        deleted.push(ids.iter().map(|&id| m.erases[id].deleted_by.clone()).collect::<Vec<_>>());
    }
    assert_eq!(deleted[0], deleted[1]);
}

#[test]
fn bad_configs_are_rejected() {
    let topo = line(2).unwrap();
    let mut cfg = quiet(1);
    cfg.consumer.rate = 0.0;
    assert!(matches!(Simulation::new(topo.clone(), cfg), Err(SimError::Config(_))));
    let mut cfg = quiet(1);
    cfg.adversary = Some(AdversaryConfig { node: Some(1), ..AdversaryConfig::default() });
    assert!(matches!(Simulation::new(topo.clone(), cfg), Err(SimError::Config(_))));
    let mut cfg = quiet(1);
    cfg.edge_router.strategies = vec!["spanning_tree".into()];
    assert!(matches!(Simulation::new(topo, cfg), Err(SimError::Forwarder(_))));
}
