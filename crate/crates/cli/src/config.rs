//! Scenario files.
//!
//! A scenario is a TOML document. Every section and key is optional except
//! `scenario.topology` and `scenario.seed`; unknown keys are errors.
//!
//! ```toml
//! [scenario]
//! topology = "builtin:dfn30"   # or a path relative to this file
//! seed = 1
//! duration_s = 60
//! out_dir = "out/dfn30"
//!
//! [router]                     # both router classes
//! cache_capacity = 1000
//! history = "lossless"
//!
//! [router.core]                # overrides for routers without consumers
//! marking = true
//!
//! [producer]
//! payload = "4KiB"
//! ```
//!
//! Byte quantities accept integers or strings with a B/KiB/MiB/GiB/TiB
//! suffix. Durations are seconds.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use bead_core::forwarder::{FloodFallback, HistoryInsertion, RouterConfig};
use bead_core::histories::HashCount;
use bead_core::messages::{HeaderSizes, Lambda};
use bead_core::simulator::{AdversaryConfig, EraseMode, SimConfig};
use bead_core::topology::{builders, load_topology, Topology};
use bead_core::{Name, SimTime};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Syntax(String),
    #[error("{key}: {message}")]
    Value { key: String, message: String },
    #[error("topology {source_name}: {message}")]
    Topology { source_name: String, message: String },
}

fn bad(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Value { key: key.into(), message: message.into() }
}

/// Parses `4096`, `32B`, `4KiB`, `1.5MiB`, `4GiB`, `1TiB`.
pub fn parse_bytes(s: &str) -> Result<u64, String> {
    let s = s.trim();
    let split = s.find(|c: char| c.is_ascii_alphabetic()).unwrap_or(s.len());
    let (num, unit) = s.split_at(split);
    let mult: u64 = match unit.trim() {
        "" | "B" => 1,
        "KiB" => 1 << 10,
        "MiB" => 1 << 20,
        "GiB" => 1 << 30,
        "TiB" => 1 << 40,
        other => return Err(format!("unknown byte unit `{other}`")),
    };
    let num = num.trim();
    if let Ok(n) = num.parse::<u64>() {
        return n.checked_mul(mult).ok_or_else(|| format!("`{s}` overflows"));
    }
    let x: f64 = num.parse().map_err(|_| format!("bad byte quantity `{s}`"))?;
    let v = x * mult as f64;
    if !(x.is_finite() && x >= 0.0 && v < u64::MAX as f64 && v.fract() == 0.0) {
        return Err(format!("bad byte quantity `{s}`"));
    }
    Ok(v as u64)
}

#[derive(Debug, Deserialize, Clone)]
#[serde(untagged)]
enum Bytes {
    Int(u64),
    Text(String),
}

impl Bytes {
    fn get(&self, key: &str) -> Result<u64, ConfigError> {
        match self {
            Bytes::Int(n) => Ok(*n),
            Bytes::Text(s) => parse_bytes(s).map_err(|e| bad(key, e)),
        }
    }
}

#[derive(Debug, Deserialize, Clone)]
#[serde(untagged)]
enum Limit {
    Int(u64),
    Text(String),
}

/// Integer or a keyword such as `unlimited` / `never` / `auto` / `none`.
impl Limit {
    fn get(&self, key: &str, keyword: &str) -> Result<Option<u64>, ConfigError> {
        match self {
            Limit::Int(n) => Ok(Some(*n)),
            Limit::Text(s) if s == keyword => Ok(None),
            Limit::Text(s) => s.parse().map(Some).map_err(|_| bad(key, format!("expected an integer or `{keyword}`"))),
        }
    }
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct File {
    scenario: Option<ScenarioSection>,
    router: Option<RouterSection>,
    consumer: Option<ConsumerSection>,
    producer: Option<ProducerSection>,
    adversary: Option<AdversarySection>,
    headers: Option<HeadersSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioSection {
    topology: String,
    seed: u64,
    duration_s: Option<f64>,
    drain_s: Option<f64>,
    sweep_s: Option<f64>,
    out_dir: Option<String>,
    lambda_bits: Option<usize>,
}

#[derive(Debug, Deserialize, Default, Clone)]
#[serde(deny_unknown_fields)]
struct RouterSection {
    cache_capacity: Option<usize>,
    history: Option<String>,
    history_capacity: Option<Limit>,
    history_chunks: Option<usize>,
    history_window_s: Option<f64>,
    history_m_bits: Option<u64>,
    history_k: Option<Limit>,
    history_k_max: Option<Limit>,
    history_expected: Option<u64>,
    history_reset: Option<toml::Value>,
    history_mean_expiry_s: Option<f64>,
    history_insertion: Option<String>,
    marking: Option<bool>,
    flood_fallback: Option<String>,
    strategies: Option<Vec<String>>,
    honor_can_erase: Option<bool>,
    erase_dedup_s: Option<f64>,
    edge: Option<Box<RouterSection>>,
    core: Option<Box<RouterSection>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConsumerSection {
    prefix: Option<String>,
    rate: Option<f64>,
    start_s: Option<f64>,
    stagger_s: Option<f64>,
    jitter: Option<bool>,
    stop_s: Option<f64>,
    max_interests: Option<u64>,
    only: Option<Vec<u32>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProducerSection {
    payload: Option<Bytes>,
    expiry_s: Option<toml::Value>,
    erase_fraction: Option<f64>,
    erase_period_s: Option<f64>,
    erase_start_s: Option<f64>,
    erase_rounds: Option<u64>,
    erase_mode: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AdversarySection {
    enabled: Option<bool>,
    node: Option<u32>,
    count: Option<u64>,
    start_s: Option<f64>,
    interval_s: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeadersSection {
    interest: Option<Bytes>,
    content: Option<Bytes>,
    erase: Option<Bytes>,
    nack: Option<Bytes>,
}

/// A fully resolved scenario.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub topology_source: String,
    pub topology: Topology,
    pub sim: SimConfig,
    pub out_dir: Option<PathBuf>,
    /// SHA-256 of the scenario file bytes.
    pub digest: String,
}

fn secs(key: &str, v: f64) -> Result<SimTime, ConfigError> {
    if !(v.is_finite() && v >= 0.0) {
        return Err(bad(key, "expected a non-negative number of seconds"));
    }
    Ok(SimTime::from_secs_f64(v))
}

fn positive_secs(key: &str, v: f64) -> Result<SimTime, ConfigError> {
    let t = secs(key, v)?;
    if t == SimTime::ZERO {
        return Err(bad(key, "must be positive"));
    }
    Ok(t)
}

fn apply_router(r: &mut RouterConfig, s: &RouterSection, scope: &str) -> Result<(), ConfigError> {
    let key = |k: &str| format!("{scope}.{k}");
    if let Some(v) = s.cache_capacity {
        r.cache_capacity = v;
    }
    if let Some(v) = &s.history {
        r.history.kind = v.clone();
    }
    if let Some(v) = &s.history_capacity {
        let k = key("history_capacity");
        r.history.capacity_entries = v.get(&k, "unlimited")?;
    }
    if let Some(v) = s.history_chunks {
        r.history.chunk_count = v;
    }
    if let Some(v) = s.history_window_s {
        r.history.chunk_window = Some(positive_secs(&key("history_window_s"), v)?);
    }
    if let Some(v) = s.history_m_bits {
        r.history.m_bits = v;
    }
    if let Some(v) = &s.history_k {
        r.history.k = match v.get(&key("history_k"), "auto")? {
            Some(k) => HashCount::Fixed(u32::try_from(k).map_err(|_| bad(&key("history_k"), "too large"))?),
            None => HashCount::Auto,
        };
    }
    if let Some(v) = &s.history_k_max {
        r.history.k_max = v
            .get(&key("history_k_max"), "none")?
            .map(|k| u32::try_from(k).map_err(|_| bad(&key("history_k_max"), "too large")))
            .transpose()?;
    }
    if let Some(v) = s.history_expected {
        r.history.expected_entries = v;
    }
    if let Some(v) = &s.history_reset {
        r.history.reset_threshold = match v {
            toml::Value::Float(f) => Some(*f),
            toml::Value::Integer(i) => Some(*i as f64),
            toml::Value::String(s) if s == "none" => None,
            _ => return Err(bad(&key("history_reset"), "expected a fraction or `none`")),
        };
    }
    if let Some(v) = s.history_mean_expiry_s {
        r.history.mean_expiry = Some(positive_secs(&key("history_mean_expiry_s"), v)?);
    }
    if let Some(v) = &s.history_insertion {
        r.history_insertion = match v.as_str() {
            "on_forward" => HistoryInsertion::OnForward,
            "on_evict" => HistoryInsertion::OnEvict,
            _ => return Err(bad(&key("history_insertion"), "expected `on_forward` or `on_evict`")),
        };
    }
    if let Some(v) = s.marking {
        r.marking_enabled = v;
    }
    if let Some(v) = &s.flood_fallback {
        r.flood_fallback = match v.as_str() {
            "flood" => FloodFallback::Flood,
            "drop" => FloodFallback::Drop,
            _ => return Err(bad(&key("flood_fallback"), "expected `flood` or `drop`")),
        };
    }
    if let Some(v) = &s.strategies {
        r.strategies = v.clone();
    }
    if let Some(v) = s.honor_can_erase {
        r.honor_can_erase = v;
    }
    if let Some(v) = s.erase_dedup_s {
        r.erase_dedup_window = secs(&key("erase_dedup_s"), v)?;
    }
    Ok(())
}

fn topology_from(source: &str, base: &Path) -> Result<Topology, ConfigError> {
    let err = |message: String| ConfigError::Topology { source_name: source.into(), message };
    if let Some(name) = source.strip_prefix("builtin:") {
        return builders::builtin(name).map_err(|e| err(e.to_string()));
    }
    let path = base.join(source);
    let text = std::fs::read_to_string(&path).map_err(|e| err(format!("{}: {e}", path.display())))?;
    load_topology(&text).map_err(|e| err(e.to_string()))
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses scenario text; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, ConfigError> {
        let file: File = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        let scenario = file.scenario.ok_or_else(|| bad("scenario", "section is required"))?;
        let mut sim = SimConfig { seed: scenario.seed, ..SimConfig::default() };
        if let Some(v) = scenario.duration_s {
            sim.duration = positive_secs("scenario.duration_s", v)?;
        }
        if let Some(v) = scenario.drain_s {
            sim.drain_limit = secs("scenario.drain_s", v)?;
        }
        if let Some(v) = scenario.sweep_s {
            sim.sweep_interval = positive_secs("scenario.sweep_s", v)?;
        }
        if let Some(v) = scenario.lambda_bits {
            sim.lambda = Lambda::new(v).map_err(|e| bad("scenario.lambda_bits", e.to_string()))?;
        }

        let router = file.router.unwrap_or_default();
        for r in [&mut sim.edge_router, &mut sim.core_router] {
            apply_router(r, &router, "router")?;
        }
        for (scope, section, target) in [
            ("router.edge", &router.edge, &mut sim.edge_router),
            ("router.core", &router.core, &mut sim.core_router),
        ] {
            if let Some(s) = section {
                if s.edge.is_some() || s.core.is_some() {
                    return Err(bad(scope, "router classes do not nest"));
                }
                apply_router(target, s, scope)?;
            }
        }
        for (scope, r) in [("router.edge", &sim.edge_router), ("router.core", &sim.core_router)] {
            check_router(scope, r)?;
        }

        if let Some(c) = file.consumer {
            let cc = &mut sim.consumer;
            if let Some(v) = c.prefix {
                cc.prefix = v.parse::<Name>().map_err(|e| bad("consumer.prefix", e.to_string()))?;
            }
            if let Some(v) = c.rate {
                if !(v.is_finite() && v > 0.0) {
                    return Err(bad("consumer.rate", "must be positive"));
                }
                cc.rate = v;
            }
            if let Some(v) = c.start_s {
                cc.start = secs("consumer.start_s", v)?;
            }
            if let Some(v) = c.stagger_s {
                cc.stagger = secs("consumer.stagger_s", v)?;
            }
            if let Some(v) = c.jitter {
                cc.jitter = v;
            }
            if let Some(v) = c.stop_s {
                cc.stop = Some(secs("consumer.stop_s", v)?);
            }
            cc.max_interests = c.max_interests.or(cc.max_interests);
            cc.only = c.only.or(cc.only.take());
        }

        if let Some(p) = file.producer {
            let pc = &mut sim.producer;
            if let Some(v) = p.payload {
                pc.payload_size = v.get("producer.payload")? as usize;
            }
            if let Some(v) = p.expiry_s {
                pc.expiry = match v {
                    toml::Value::String(s) if s == "never" => None,
                    toml::Value::Float(f) => Some(positive_secs("producer.expiry_s", f)?),
                    toml::Value::Integer(i) => Some(positive_secs("producer.expiry_s", i as f64)?),
                    _ => return Err(bad("producer.expiry_s", "expected seconds or `never`")),
                };
            }
            if let Some(v) = p.erase_fraction {
                if !(0.0..=1.0).contains(&v) {
                    return Err(bad("producer.erase_fraction", "must lie in [0, 1]"));
                }
                pc.erase_fraction = v;
            }
            if let Some(v) = p.erase_period_s {
                pc.erase_period = positive_secs("producer.erase_period_s", v)?;
            }
            if let Some(v) = p.erase_start_s {
                pc.erase_start = Some(secs("producer.erase_start_s", v)?);
            }
            pc.erase_rounds = p.erase_rounds.or(pc.erase_rounds);
            if let Some(v) = p.erase_mode {
                pc.erase_mode = match v.as_str() {
                    "traces" => EraseMode::Traces,
                    "plain" => EraseMode::Plain,
                    _ => return Err(bad("producer.erase_mode", "expected `traces` or `plain`")),
                };
            }
        }

        if let Some(a) = file.adversary {
            if a.enabled.unwrap_or(true) {
                let mut ac = AdversaryConfig { node: a.node, ..AdversaryConfig::default() };
                ac.count = a.count.unwrap_or(ac.count);
                if let Some(v) = a.start_s {
                    ac.start = secs("adversary.start_s", v)?;
                }
                if let Some(v) = a.interval_s {
                    ac.interval = positive_secs("adversary.interval_s", v)?;
                }
                sim.adversary = Some(ac);
            }
        }

        if let Some(h) = file.headers {
            let mut hs = HeaderSizes::default();
            for (slot, v, key) in [
                (&mut hs.interest, h.interest, "headers.interest"),
                (&mut hs.content, h.content, "headers.content"),
                (&mut hs.erase, h.erase, "headers.erase"),
                (&mut hs.nack, h.nack, "headers.nack"),
            ] {
                if let Some(v) = v {
                    *slot = v.get(key)?;
                }
            }
            sim.headers = hs;
        }

        let topology = topology_from(&scenario.topology, base)?;
        Ok(ScenarioConfig {
            topology_source: scenario.topology,
            topology,
            sim,
            out_dir: scenario.out_dir.map(|d| base.join(d)),
            digest: Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect(),
        })
    }
}

/// Catches bad history and strategy names before the run starts.
fn check_router(scope: &str, r: &RouterConfig) -> Result<(), ConfigError> {
    let histories = bead_core::histories::HistoryRegistry::default();
    histories.build(&r.history).map_err(|e| bad(&format!("{scope}.history"), e.to_string()))?;
    let strategies = bead_core::forwarder::StrategyRegistry::default();
    for s in &r.strategies {
        if s != "fallback" && strategies.get(s).is_none() {
            return Err(bad(&format!("{scope}.strategies"), format!("unknown strategy `{s}`")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ScenarioConfig, ConfigError> {
        ScenarioConfig::parse(text, Path::new("."))
    }

    #[test]
    fn byte_suffixes() {
        assert_eq!(parse_bytes("4096"), Ok(4096));
        assert_eq!(parse_bytes("32B"), Ok(32));
        assert_eq!(parse_bytes("4KiB"), Ok(4096));
        assert_eq!(parse_bytes("4GiB"), Ok(1 << 32));
        assert_eq!(parse_bytes("1 TiB"), Ok(1 << 40));
        assert_eq!(parse_bytes("1.5KiB"), Ok(1536));
        assert!(parse_bytes("4GB").is_err());
        assert!(parse_bytes("-1").is_err());
        assert!(parse_bytes("x").is_err());
    }

    #[test]
    fn minimal_scenario_uses_defaults() {
        let c = parse("[scenario]\ntopology = \"builtin:tree:2\"\nseed = 4\n").unwrap();
        assert_eq!(c.sim.seed, 4);
        assert_eq!(c.topology.routers().len(), 2);
        assert_eq!(c.sim.edge_router, RouterConfig::default());
        assert_eq!(c.digest.len(), 64);
    }

    #[test]
    fn router_class_overrides() {
        let c = parse(
            r#"
[scenario]
topology = "builtin:dfn30"
seed = 1
duration_s = 5

[router]
cache_capacity = 10
history = "bloom"
history_m_bits = 65536
history_k = 4

[router.core]
marking = true
history = "none"

[producer]
payload = "1KiB"
expiry_s = "never"
erase_mode = "plain"

[headers]
erase = "128B"
"#,
        )
        .unwrap();
        assert_eq!(c.sim.edge_router.cache_capacity, 10);
        assert_eq!(c.sim.core_router.cache_capacity, 10);
        assert_eq!(c.sim.edge_router.history.kind, "bloom");
        assert_eq!(c.sim.core_router.history.kind, "none");
        assert!(c.sim.core_router.marking_enabled && !c.sim.edge_router.marking_enabled);
        assert_eq!(c.sim.edge_router.history.k, HashCount::Fixed(4));
        assert_eq!(c.sim.producer.payload_size, 1024);
        assert_eq!(c.sim.producer.expiry, None);
        assert_eq!(c.sim.producer.erase_mode, EraseMode::Plain);
        assert_eq!(c.sim.headers.erase, 128);
        assert_eq!(c.sim.duration, SimTime::from_millis(5000));
    }

    #[test]
    fn errors() {
        assert!(matches!(parse("[scenario]\nseed = 1\n"), Err(ConfigError::Syntax(_))));
        assert!(matches!(
            parse("[scenario]\ntopology = \"builtin:dfn30\"\nseed = 1\ncolour = 3\n"),
            Err(ConfigError::Syntax(_))
        ));
        assert!(matches!(
            parse("[scenario]\ntopology = \"missing.topo\"\nseed = 1\n"),
            Err(ConfigError::Topology { .. })
        ));
        assert!(matches!(
            parse("[scenario]\ntopology = \"builtin:dfn30\"\nseed = 1\n[router]\nhistory = \"magic\"\n"),
            Err(ConfigError::Value { .. })
        ));
        assert!(matches!(
            parse("[scenario]\ntopology = \"builtin:dfn30\"\nseed = 1\n[router]\nstrategies = [\"teleport\"]\n"),
            Err(ConfigError::Value { .. })
        ));
        assert!(matches!(
            parse("[scenario]\ntopology = \"builtin:dfn30\"\nseed = 1\n[producer]\nerase_fraction = 2.0\n"),
            Err(ConfigError::Value { .. })
        ));
    }
}
