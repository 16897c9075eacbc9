//! CSV renderings of [`Metrics`]. All tables except `processing_csv` are
//! deterministic; numbers use fixed formats independent of locale.

use std::fmt::Write;

use super::metrics::{measure_erase_processing, penetration, Metrics, NodeCounters};

type Field = (&'static str, &'static str, fn(&NodeCounters) -> u64);

/// Per-router metrics in output order: (metric, unit, accessor).
pub const ROUTER_METRICS: &[Field] = &[
    ("in_data", "bytes", |c| c.in_bytes.data),
    ("out_data", "bytes", |c| c.out_bytes.data),
    ("in_erase", "bytes", |c| c.in_bytes.erase),
    ("out_erase", "bytes", |c| c.out_bytes.erase),
    ("in_interest", "bytes", |c| c.in_bytes.interest),
    ("out_interest", "bytes", |c| c.out_bytes.interest),
    ("in_nack", "bytes", |c| c.in_bytes.nack),
    ("out_nack", "bytes", |c| c.out_bytes.nack),
    ("erase_trace_out", "bytes", |c| c.erase_trace_bytes_out),
    ("erases_received", "messages", |c| c.in_msgs.erase),
    ("deletions", "count", |c| c.deletions),
    ("auth_failures", "count", |c| c.auth_failures),
    ("duplicate_erases", "count", |c| c.duplicate_erases),
    ("marking_failures", "count", |c| c.marking_failures),
    ("cache_hits", "count", |c| c.cache_hits),
    ("collapsed_interests", "count", |c| c.collapsed),
    ("no_route", "count", |c| c.no_route),
    ("unsolicited_data", "count", |c| c.unsolicited),
];

/// `node_id,metric,value,unit`, one row per router and metric.
pub fn metrics_csv(m: &Metrics) -> String {
    let mut s = String::from("node_id,metric,value,unit\n");
    for (id, c) in m.routers() {
        for (metric, unit, get) in ROUTER_METRICS {
            writeln!(s, "{id},{metric},{},{unit}", get(c)).unwrap();
        }
    }
    s
}

/// Run-level totals as `key,value`.
pub fn summary_csv(m: &Metrics) -> String {
    let consumers = m.consumers.values();
    let (mut issued, mut satisfied, mut nacked, mut pending) = (0, 0, 0, 0);
    for c in consumers {
        issued += c.issued;
        satisfied += c.satisfied;
        nacked += c.nacked;
        pending += c.pending;
    }
    let bytes = m.router_in_bytes();
    let pens: Vec<f64> = (0..m.erases.len()).filter_map(|i| penetration(m, i).ok()).collect();
    let mean_pen = if pens.is_empty() { 1.0 } else { pens.iter().sum::<f64>() / pens.len() as f64 };
    let rows: Vec<(&str, String)> = vec![
        ("end_time_s", format!("{:.6}", m.end_time.as_secs_f64())),
        ("events", m.events.to_string()),
        ("interests_issued", issued.to_string()),
        ("interests_satisfied", satisfied.to_string()),
        ("interests_nacked", nacked.to_string()),
        ("interests_pending", pending.to_string()),
        ("content_published", m.producer.published.to_string()),
        ("content_republished", m.producer.republished.to_string()),
        ("traces_recorded", m.producer.traces_recorded.to_string()),
        ("erases_issued", m.producer.erases_issued.to_string()),
        ("forged_erases_sent", m.adversary.forged_sent.to_string()),
        ("deletions", m.total_deletions().to_string()),
        ("auth_failures", m.total_auth_failures().to_string()),
        ("unverified_deletions", m.unverified_deletions.to_string()),
        ("causality_violations", m.causality_violations.to_string()),
        ("router_in_data_bytes", bytes.data.to_string()),
        ("router_in_erase_bytes", bytes.erase.to_string()),
        ("erase_to_data_ratio", format!("{:.6}", m.erase_to_content_ratio())),
        ("mean_penetration", format!("{mean_pen:.6}")),
    ];
    let mut s = String::from("key,value\n");
    for (k, v) in rows {
        writeln!(s, "{k},{v}").unwrap();
    }
    s
}

/// One row per producer-issued erase.
pub fn erases_csv(m: &Metrics) -> String {
    let mut s = String::from("erase_id,name,issued_at_s,messages,cached_at_issue,deleted,received,penetration\n");
    for e in &m.erases {
        let p = penetration(m, e.id).unwrap_or(f64::NAN);
        writeln!(
            s,
            "{},{},{:.6},{},{},{},{},{:.6}",
            e.id,
            e.name,
            e.issued_at.as_secs_f64(),
            e.messages,
            e.cached_at_issue.len(),
            e.deleted_by.len(),
            e.received_by.len(),
            p
        )
        .unwrap();
    }
    s
}

/// Bytes per directed link end.
pub fn links_csv(m: &Metrics) -> String {
    let mut s = String::from("node_id,face,sent_bytes,received_bytes\n");
    for ((n, f), c) in &m.links {
        writeln!(s, "{n},{f},{},{}", c.sent, c.received).unwrap();
    }
    s
}

/// Mean host wall-clock time per erase handler call. Host dependent, so kept
/// out of the deterministic tables.
pub fn processing_csv(m: &Metrics) -> String {
    let mut s = String::from("node_id,erases,mean_ms\n");
    for (id, ms) in measure_erase_processing(m) {
        writeln!(s, "{id},{},{ms:.6}", m.processing.samples(id)).unwrap();
    }
    s
}
