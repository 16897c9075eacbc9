//! Closed-form sizing calculators for forwarder histories.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("{0} must be positive and finite")]
    NonPositive(&'static str),
}

fn positive(v: f64, what: &'static str) -> Result<f64, AnalysisError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(AnalysisError::NonPositive(what))
    }
}

/// Approximate false-positive rate of an optimally tuned Bloom filter: 0.6185^(m/n).
pub fn false_positive_rate(m_bits: f64, n: f64) -> Result<f64, AnalysisError> {
    let m = positive(m_bits, "m")?;
    let n = positive(n, "n")?;
    Ok(0.6185f64.powf(m / n))
}

/// Exact-form false-positive rate for a given k: (1 - e^(-kn/m))^k.
pub fn false_positive_rate_with_k(m_bits: f64, n: f64, k: u32) -> f64 {
    (1.0 - (-(k as f64) * n / m_bits).exp()).powi(k as i32)
}

/// Number of hash functions minimizing the false-positive rate, near ln2 · m/n.
///
/// Of the two integers bracketing ln2 · m/n, the one with the lower
/// `false_positive_rate_with_k` wins. The result is clamped to `[1, k_max]`.
pub fn optimal_k(m_bits: f64, n: f64, k_max: Option<u32>) -> Result<u32, AnalysisError> {
    let m = positive(m_bits, "m")?;
    let n = positive(n, "n")?;
    let ideal = std::f64::consts::LN_2 * m / n;
    let lo = ideal.floor().max(1.0).min(u32::MAX as f64) as u32;
    let hi = ideal.ceil().max(1.0).min(u32::MAX as f64) as u32;
    let k = if lo == hi
        || false_positive_rate_with_k(m, n, lo) <= false_positive_rate_with_k(m, n, hi)
    {
        lo
    } else {
        hi
    };
    Ok(k.clamp(1, k_max.unwrap_or(u32::MAX).max(1)))
}

/// Seconds until a lossless history of `capacity_entries` fills at `rate` entries/s.
pub fn saturation_time(capacity_entries: f64, rate: f64) -> Result<f64, AnalysisError> {
    let rate = positive(rate, "rate")?;
    if !capacity_entries.is_finite() || capacity_entries < 0.0 {
        return Err(AnalysisError::NonPositive("capacity"));
    }
    Ok(capacity_entries / rate)
}

/// Worst-case Bloom saturation: every insert sets k fresh bits, so m/k inserts fill it.
pub fn bloom_saturation_time(m_bits: f64, k: u32, rate: f64) -> Result<f64, AnalysisError> {
    let m = positive(m_bits, "m")?;
    let rate = positive(rate, "rate")?;
    if k == 0 {
        return Err(AnalysisError::NonPositive("k"));
    }
    Ok(m / k as f64 / rate)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    const GIB: f64 = (1u64 << 30) as f64;
    const TIB: f64 = (1u64 << 40) as f64;

    #[test]
    fn consumer_facing_router_figures() {
        let entries = 4.0 * GIB / 32.0;
        assert_eq!(entries, 134_217_728.0);
        let t = saturation_time(entries, 3200.0).unwrap();
        assert!((t - 41_943.0).abs() <= 1.0, "{t}");

        let m = 4.0 * GIB * 8.0;
        let k = optimal_k(m, 2e8, None).unwrap();
        assert!(k == 119 || k == 120, "{k}");
        assert!(false_positive_rate(m, 2e8).unwrap() <= 1e-32);
        let t = bloom_saturation_time(m, 120, 3200.0).unwrap();
        assert!((t - 89_478.0).abs() <= 1.0, "{t}");
    }

    #[test]
    fn core_router_figures() {
        let t = saturation_time(TIB / 32.0, 335_544_320.0).unwrap();
        assert!((t - 102.4).abs() < 1e-9);
        assert_eq!(t.round(), 102.0);

        let m = TIB * 8.0;
        assert_eq!(optimal_k(m, 5.7e10, None).unwrap(), 107);
        let t = bloom_saturation_time(m, 107, 335_544_320.0).unwrap();
        assert!((t - 245.0).abs() <= 1.0, "{t}");
    }

    #[test]
    fn trivial_cases() {
        assert_eq!(optimal_k(1.0 / std::f64::consts::LN_2, 1.0, None).unwrap(), 1);
        assert_eq!(optimal_k(1.0, 1000.0, None).unwrap(), 1);
        assert_eq!(optimal_k(1e6, 1.0, Some(16)).unwrap(), 16);
        assert!((false_positive_rate(5.0, 5.0).unwrap() - 0.6185).abs() < 1e-12);
        assert_eq!(saturation_time(0.0, 10.0).unwrap(), 0.0);
        assert_eq!(bloom_saturation_time(64.0, 64, 8.0).unwrap(), 1.0 / 8.0);
    }

    #[test]
    fn ten_bits_per_element() {
        let f = false_positive_rate(10.0, 1.0).unwrap();
        assert!((f - 8.2e-3).abs() < 0.05e-3, "{f}");
        // cross-check against the k-explicit form at the optimum
        let k = optimal_k(10.0, 1.0, None).unwrap();
        assert_eq!(k, 7);
        let exact = false_positive_rate_with_k(10.0, 1.0, k);
        assert!((exact / f - 1.0).abs() < 0.03, "{exact} vs {f}");
    }

    #[test]
    fn invalid_inputs() {
        assert!(optimal_k(0.0, 1.0, None).is_err());
        assert!(optimal_k(1.0, -1.0, None).is_err());
        assert!(false_positive_rate(1.0, 0.0).is_err());
        assert!(saturation_time(10.0, 0.0).is_err());
        assert!(bloom_saturation_time(10.0, 0, 1.0).is_err());
    }

    #[test]
    fn optimal_k_matches_brute_force_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..20 {
            let n: f64 = rng.random_range(100.0..1e6);
            let m: f64 = n * rng.random_range(1.5..40.0);
            let upper = (2.0 * std::f64::consts::LN_2 * m / n).floor() as u32;
            let best = (1..=upper.max(1))
                .min_by(|&a, &b| {
                    false_positive_rate_with_k(m, n, a)
                        .partial_cmp(&false_positive_rate_with_k(m, n, b))
                        .unwrap()
                })
                .unwrap();
            assert_eq!(optimal_k(m, n, None).unwrap(), best, "m={m} n={n}");
        }
    }
}
