use bytes::Bytes;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::auth::TokenGenerator;
use crate::marking::TraceTuple;

const UP: FaceId = 1;

fn key(seed: u64) -> MarkingKey {
    MarkingKey::generate(&mut ChaCha8Rng::seed_from_u64(seed))
}

fn router_with(id: RouterId, faces: &[FaceId], config: RouterConfig) -> Router {
    let mut fib = Fib::new();
    fib.insert("/prefix/A".parse().unwrap(), UP);
    Router::new(
        id,
        faces.iter().copied(),
        config,
        fib,
        key(id as u64),
        Lambda::DEFAULT,
        &StrategyRegistry::default(),
        &HistoryRegistry::default(),
    )
    .unwrap()
}

fn router(faces: &[FaceId]) -> Router {
    router_with(7, faces, RouterConfig::default())
}

fn name(s: &str) -> Name {
    s.parse().unwrap()
}

struct Published {
    content: ContentObject,
    digest: Digest,
    token: Vec<u8>,
}

fn publish(n: &str, seed: u64) -> Published {
    let (x, y) = TokenGenerator::new(seed, Lambda::DEFAULT).generate();
    let content = ContentObject {
        name: name(n),
        payload: Bytes::from(vec![1u8; 64]),
        expiry_time: SimTime::MAX,
        token_digest: Some(y.into_bytes()),
        can_erase: true,
    };
    let digest = content_digest(&content, Lambda::DEFAULT);
    Published { content, digest, token: x.into_bytes() }
}

fn erase_for(p: &Published) -> EraseMessage {
    EraseMessage { name: p.content.name.clone(), digest: p.digest.clone(), token: p.token.clone(), trace: None }
}

fn t(ms: u64) -> SimTime {
    SimTime::from_millis(ms)
}

fn faces_of(em: &[Emission]) -> Vec<FaceId> {
    em.iter().map(|e| e.face).collect()
}

#[test]
fn cold_interest_goes_upstream() {
    let mut r = router(&[1, 2, 3]);
    let out = r.on_interest(Interest::new(name("/prefix/A/1")), 2, t(0)).unwrap();
    assert_eq!(faces_of(&out), vec![UP]);
    assert!(matches!(out[0].message, Message::Interest(_)));
    assert_eq!(r.pit().len(), 1);
}

#[test]
fn concurrent_interests_collapse() {
    let mut r = router(&[1, 2, 3]);
    r.on_interest(Interest::new(name("/prefix/A/1")), 2, t(0)).unwrap();
    let out = r.on_interest(Interest::new(name("/prefix/A/1")), 3, t(1)).unwrap();
    assert!(out.is_empty());
    let entry = r.pit().get(&name("/prefix/A/1")).unwrap();
    assert_eq!(entry.downstream_faces, BTreeSet::from([2, 3]));
    assert_eq!(r.stats().collapsed, 1);
}

#[test]
fn collapsing_keeps_one_upstream_emission() {
    let mut r = router(&[1, 2, 3, 4, 5]);
    let upstream: usize = (0..50)
        .map(|i| r.on_interest(Interest::new(name("/prefix/A/9")), 2 + (i % 4) as FaceId, t(i)).unwrap())
        .map(|out| out.iter().filter(|e| e.face == UP).count())
        .sum();
    assert_eq!(upstream, 1);
}

#[test]
fn content_fans_out_and_is_cached() {
    let mut r = router(&[1, 2, 5]);
    let p = publish("/prefix/A/1", 1);
    r.on_interest(Interest::new(p.content.name.clone()), 2, t(0)).unwrap();
    r.on_interest(Interest::new(p.content.name.clone()), 5, t(0)).unwrap();
    let out = r.on_content(p.content.clone(), UP, t(10)).unwrap();
    assert_eq!(faces_of(&out), vec![2, 5]);
    assert!(r.pit().is_empty());
    let entry = r.content_store().peek(&p.content.name, t(10)).unwrap();
    assert_eq!(entry.forwarded_faces, BTreeSet::from([2, 5]));
    assert_eq!(entry.digest, p.digest);
    // both faces recorded in their histories
    assert!(r.history(2).unwrap().query(&p.digest));
    assert!(r.history(5).unwrap().query(&p.digest));
    assert!(!r.history(1).unwrap().query(&p.digest));
}

#[test]
fn cache_hit_serves_and_grows_forwarding_set() {
    let mut r = router(&[1, 2, 3]);
    let p = publish("/prefix/A/1", 1);
    r.on_interest(Interest::new(p.content.name.clone()), 2, t(0)).unwrap();
    r.on_content(p.content.clone(), UP, t(10)).unwrap();
    let out = r.on_interest(Interest::new(p.content.name.clone()), 3, t(20)).unwrap();
    assert_eq!(out, vec![Emission { face: 3, message: Message::Content(p.content.clone()) }]);
    assert!(r.pit().is_empty());
    let entry = r.content_store().peek(&p.content.name, t(20)).unwrap();
    assert_eq!(entry.forwarded_faces, BTreeSet::from([2, 3]));
    assert_eq!(r.stats().cache_hits, 1);
}

#[test]
fn unsolicited_content_dropped() {
    let mut r = router(&[1, 2]);
    let p = publish("/prefix/A/1", 1);
    assert!(r.on_content(p.content, UP, t(0)).unwrap().is_empty());
    assert_eq!(r.stats().unsolicited, 1);
    assert!(r.content_store().is_empty());
}

#[test]
fn cache_eviction_is_lru() {
    let mut r = router_with(1, &[1, 2], RouterConfig { cache_capacity: 2, ..RouterConfig::default() });
    for i in 0..3 {
        let p = publish(&format!("/prefix/A/{i}"), i);
        r.on_interest(Interest::new(p.content.name.clone()), 2, t(i)).unwrap();
        r.on_content(p.content, UP, t(i)).unwrap();
    }
    assert_eq!(r.content_store().len(), 2);
    assert!(r.content_store().peek(&name("/prefix/A/0"), t(5)).is_none());
}

#[test]
fn no_route_nacks() {
    let mut r = router(&[1, 2]);
    let out = r.on_interest(Interest::new(name("/elsewhere/x")), 2, t(0)).unwrap();
    assert_eq!(faces_of(&out), vec![2]);
    assert!(matches!(out[0].message, Message::Nack(_)));
    assert_eq!(r.stats().no_route, 1);
    assert!(r.pit().is_empty());
}

#[test]
fn nack_flushes_pit() {
    let mut r = router(&[1, 2, 3]);
    r.on_interest(Interest::new(name("/prefix/A/1")), 2, t(0)).unwrap();
    r.on_interest(Interest::new(name("/prefix/A/1")), 3, t(0)).unwrap();
    let out = r.on_nack(Nack { name: name("/prefix/A/1") }, UP, t(1)).unwrap();
    assert_eq!(faces_of(&out), vec![2, 3]);
    assert!(r.pit().is_empty());
}

#[test]
fn unknown_face_rejected() {
    let mut r = router(&[1, 2]);
    assert_eq!(
        r.on_interest(Interest::new(name("/prefix/A/1")), 9, t(0)),
        Err(ForwarderError::UnknownFace { router: 7, face: 9 })
    );
}

#[test]
fn flood_erase_examples() {
    let p = publish("/prefix/A/1", 1);
    let e = erase_for(&p);
    let r = router(&[1, 2, 3, 4]);
    assert_eq!(faces_of(&r.flood_erase(&e, 2)), vec![3, 4]);

    let mut all = Fib::new();
    for f in 1..=4 {
        all.insert(name("/prefix"), f);
    }
    let r = Router::new(1, [1, 2, 3, 4], RouterConfig::default(), all, key(1), Lambda::DEFAULT, &StrategyRegistry::default(), &HistoryRegistry::default()).unwrap();
    assert!(r.flood_erase(&e, 2).is_empty());

    let r = Router::new(1, [1, 2, 3, 4], RouterConfig::default(), Fib::new(), key(1), Lambda::DEFAULT, &StrategyRegistry::default(), &HistoryRegistry::default()).unwrap();
    assert_eq!(faces_of(&r.flood_erase(&e, 2)), vec![1, 3, 4]);
}

#[test]
fn authenticated_erase_deletes_and_follows_forwarding_set() {
    // upstream on 1, content delivered on face 7
    let mut r = router(&[1, 3, 7]);
    let p = publish("/prefix/A/1", 1);
    r.on_interest(Interest::new(p.content.name.clone()), 7, t(0)).unwrap();
    r.on_content(p.content.clone(), UP, t(10)).unwrap();
    let out = r.on_erase(erase_for(&p), UP, t(20)).unwrap();
    assert_eq!(out.strategy, Some("in_cache"));
    assert_eq!(faces_of(&out.emissions), vec![7]);
    let del = out.deletion.unwrap();
    assert!(verify_token(&del.token, &del.token_digest));
    assert!(r.content_store().is_empty());
    assert_eq!(r.stats().deletions, 1);
}

#[test]
fn forged_token_is_dropped() {
    let mut r = router(&[1, 3, 7]);
    let p = publish("/prefix/A/1", 1);
    r.on_interest(Interest::new(p.content.name.clone()), 7, t(0)).unwrap();
    r.on_content(p.content.clone(), UP, t(10)).unwrap();
    let mut forged = erase_for(&p);
    forged.token[0] ^= 1;
    let out = r.on_erase(forged, 3, t(20)).unwrap();
    assert!(out.auth_failure);
    assert!(out.emissions.is_empty());
    assert!(out.deletion.is_none());
    assert_eq!(r.stats().auth_failures, 1);
    assert_eq!(r.content_store().len(), 1);
    // the genuine erase still goes through afterwards
    let out = r.on_erase(erase_for(&p), UP, t(30)).unwrap();
    assert!(out.deletion.is_some());
}

#[test]
fn history_routes_uncached_content() {
    let mut r = router_with(3, &[1, 2, 3, 4], RouterConfig { cache_capacity: 0, ..RouterConfig::default() });
    let p = publish("/prefix/A/1", 1);
    r.on_interest(Interest::new(p.content.name.clone()), 2, t(0)).unwrap();
    r.on_interest(Interest::new(p.content.name.clone()), 4, t(0)).unwrap();
    r.on_content(p.content.clone(), UP, t(10)).unwrap();
    assert!(r.content_store().is_empty());
    let out = r.on_erase(erase_for(&p), UP, t(20)).unwrap();
    assert_eq!(out.strategy, Some("history"));
    assert_eq!(faces_of(&out.emissions), vec![2, 4]);
    assert!(out.deletion.is_none());
}

#[test]
fn fallback_flood_or_drop() {
    let p = publish("/prefix/A/1", 1);
    let none = HistoryConfig { kind: "none".into(), ..HistoryConfig::default() };
    let mut flood = router_with(1, &[1, 2, 3], RouterConfig { history: none.clone(), flood_fallback: FloodFallback::Flood, ..RouterConfig::default() });
    let out = flood.on_erase(erase_for(&p), UP, t(0)).unwrap();
    assert_eq!(out.strategy, Some("flood"));
    assert_eq!(faces_of(&out.emissions), vec![2, 3]);

    let mut drop = router_with(1, &[1, 2, 3], RouterConfig { history: none, ..RouterConfig::default() });
    let out = drop.on_erase(erase_for(&p), UP, t(0)).unwrap();
    assert_eq!(out.strategy, Some("drop"));
    assert!(out.emissions.is_empty());
}

#[test]
fn marked_erase_follows_trace() {
    let cfg = RouterConfig { marking_enabled: true, cache_capacity: 0, ..RouterConfig::default() };
    let mut r = router_with(12, &[1, 2, 3], cfg);
    let p = publish("/prefix/A/1", 1);
    let out = r.on_interest(Interest::new(p.content.name.clone()), 3, t(0)).unwrap();
    let Message::Interest(marked) = &out[0].message else { panic!() };
    assert_eq!(marked.trace.len(), 1);
    assert_eq!(marked.trace[0].router_id, 12);
    assert_eq!(marked.trace[0].face_id, 3);

    let mut e = erase_for(&p);
    e.trace = Some(marked.trace.clone());
    let out = r.on_erase(e, UP, t(10)).unwrap();
    assert_eq!(out.strategy, Some("marking"));
    assert_eq!(faces_of(&out.emissions), vec![3]);
    let Message::Erase(fwd) = &out.emissions[0].message else { panic!() };
    assert_eq!(fwd.trace_len(), 0);
}

#[test]
fn bad_trace_falls_through() {
    let cfg = RouterConfig { marking_enabled: true, ..RouterConfig::default() };
    let mut r = router_with(12, &[1, 2, 3], cfg);
    let p = publish("/prefix/A/1", 1);
    r.on_interest(Interest::new(p.content.name.clone()), 2, t(0)).unwrap();
    r.on_content(p.content.clone(), UP, t(5)).unwrap();
    let mut e = erase_for(&p);
    e.trace = Some(vec![TraceTuple { router_id: 12, face_id: 3, tag: [0; 32] }]);
    let out = r.on_erase(e, UP, t(10)).unwrap();
    assert_eq!(out.marking_error, Some(MarkingError::TagMismatch));
    assert_eq!(out.strategy, Some("in_cache"));
    assert_eq!(faces_of(&out.emissions), vec![2]);
    assert_eq!(r.stats().marking_failures, 1);
}

#[test]
fn can_erase_flags_are_honored_when_enabled() {
    let cfg = RouterConfig { marking_enabled: true, honor_can_erase: true, ..RouterConfig::default() };
    let mut r = router_with(5, &[1, 2], cfg);
    let mut i = Interest::new(name("/prefix/A/1"));
    i.can_erase = false;
    let out = r.on_interest(i, 2, t(0)).unwrap();
    let Message::Interest(fwd) = &out[0].message else { panic!() };
    assert!(fwd.trace.is_empty());
    let mut c = publish("/prefix/A/1", 1).content;
    c.can_erase = false;
    c.token_digest = None;
    let d = content_digest(&c, Lambda::DEFAULT);
    r.on_content(c, UP, t(1)).unwrap();
    assert!(!r.history(2).unwrap().query(&d));
}

#[test]
fn duplicate_erases_suppressed() {
    let none = HistoryConfig { kind: "none".into(), ..HistoryConfig::default() };
    let mut r = router_with(1, &[1, 2, 3], RouterConfig { history: none, flood_fallback: FloodFallback::Flood, ..RouterConfig::default() });
    let p = publish("/prefix/A/1", 1);
    assert_eq!(r.on_erase(erase_for(&p), UP, t(0)).unwrap().emissions.len(), 2);
    let again = r.on_erase(erase_for(&p), 2, t(1)).unwrap();
    assert!(again.duplicate && again.emissions.is_empty());
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    r.sweep(t(60_000), &mut rng);
    assert_eq!(r.on_erase(erase_for(&p), UP, t(60_000)).unwrap().emissions.len(), 2);
}

#[test]
fn on_evict_insertion_records_when_cache_drops_entry() {
    let cfg = RouterConfig { cache_capacity: 1, history_insertion: HistoryInsertion::OnEvict, ..RouterConfig::default() };
    let mut r = router_with(1, &[1, 2], cfg);
    let a = publish("/prefix/A/1", 1);
    let b = publish("/prefix/A/2", 2);
    r.on_interest(Interest::new(a.content.name.clone()), 2, t(0)).unwrap();
    r.on_content(a.content.clone(), UP, t(1)).unwrap();
    assert!(!r.history(2).unwrap().query(&a.digest));
    r.on_interest(Interest::new(b.content.name.clone()), 2, t(2)).unwrap();
    r.on_content(b.content.clone(), UP, t(3)).unwrap();
    assert!(r.history(2).unwrap().query(&a.digest));
    assert!(!r.history(2).unwrap().query(&b.digest));
}

#[test]
fn unknown_strategy_rejected() {
    let cfg = RouterConfig { strategies: vec!["teleport".into()], ..RouterConfig::default() };
    let err = Router::new(1, [1], cfg, Fib::new(), key(1), Lambda::DEFAULT, &StrategyRegistry::default(), &HistoryRegistry::default()).unwrap_err();
    assert_eq!(err, ForwarderError::UnknownStrategy("teleport".into()));
}
