//! Calculator tables. Each row is (quantity, value, unit); values use fixed,
//! locale-independent formatting.

use bead_core::histories::analysis::{
    bloom_saturation_time, false_positive_rate, false_positive_rate_with_k, optimal_k, saturation_time, AnalysisError,
};
use bead_core::marking::{aggregated_trace_size, TraceTuple};

pub type Row = (&'static str, String, &'static str);

pub fn render(rows: &[Row]) -> String {
    let mut s = String::from("quantity\tvalue\tunit\n");
    for (q, v, u) in rows {
        s.push_str(&format!("{q}\t{v}\t{u}\n"));
    }
    s
}

/// Lossless history lifetime for `storage` bytes of `entry`-byte digests.
pub fn saturation(storage: u64, entry: u64, rate: f64) -> Result<Vec<Row>, AnalysisError> {
    if entry == 0 {
        return Err(AnalysisError::NonPositive("entry"));
    }
    let entries = storage / entry;
    let t = saturation_time(entries as f64, rate)?;
    Ok(vec![
        ("storage", storage.to_string(), "bytes"),
        ("entry", entry.to_string(), "bytes"),
        ("entries", entries.to_string(), "entries"),
        ("rate", format!("{rate}"), "entries/s"),
        ("saturation_time", format!("{t:.0}"), "s"),
    ])
}

/// Bloom filter of `m_bytes` bytes holding `n` elements. With `rate`, also
/// the time until the filter is saturated at the chosen k.
pub fn bloom(m_bytes: u64, n: f64, k: Option<u32>, k_max: Option<u32>, rate: Option<f64>) -> Result<Vec<Row>, AnalysisError> {
    let m_bits = m_bytes as f64 * 8.0;
    let k_opt = optimal_k(m_bits, n, k_max)?;
    let k_used = k.unwrap_or(k_opt);
    let mut rows = vec![
        ("m", m_bytes.to_string(), "bytes"),
        ("m_bits", format!("{m_bits:.0}"), "bits"),
        ("n", format!("{n:.0}"), "elements"),
        ("bits_per_element", format!("{:.2}", m_bits / n), "bits"),
        ("k_optimal", k_opt.to_string(), "hashes"),
        ("fp_rate_optimal", format!("{:.3e}", false_positive_rate(m_bits, n)?), "probability"),
    ];
    if k.is_some() {
        rows.push(("k", k_used.to_string(), "hashes"));
        rows.push(("fp_rate_k", format!("{:.3e}", false_positive_rate_with_k(m_bits, n, k_used)), "probability"));
    }
    if let Some(rate) = rate {
        rows.push(("rate", format!("{rate}"), "elements/s"));
        rows.push(("saturation_time", format!("{:.0}", bloom_saturation_time(m_bits, k_used, rate)?), "s"));
    }
    Ok(rows)
}

/// Trace sizes for a tree of height `h`.
pub fn marking(h: u32) -> Result<Vec<Row>, AnalysisError> {
    if h == 0 {
        return Err(AnalysisError::NonPositive("height"));
    }
    let tuple = TraceTuple::SERIALIZED_LEN as u64;
    Ok(vec![
        ("height", h.to_string(), "hops"),
        ("trace_tuple", tuple.to_string(), "bytes"),
        ("per_interest", (tuple * h as u64).to_string(), "bytes"),
        ("per_path_erases", (1u64 << h).to_string(), "messages"),
        ("aggregated_trace", aggregated_trace_size(h).to_string(), "bytes"),
    ])
}
