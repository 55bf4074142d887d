//! Latency/bandwidth tuning: the interactive game's duration model and the
//! tree degree that minimizes it.
//!
//! One mediated exchange at degree `m` costs `4*delta + (m*H + log2 m)/C`
//! seconds, and a game over an `L`-entry history takes `log L / log m`
//! exchanges, giving
//!
//! ```text
//! duration(L, m) = (ln L / ln m) * (4*delta + m*H/C) + ln L / C
//! ```
//!
//! The minimizing degree satisfies `m (ln m - 1) = 4*delta*C/H`. We solve
//! that equation directly by bisection on the monotone left-hand side
//! (avoiding a special-function implementation) and pick whichever
//! neighboring integer evaluates cheaper.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TuningError {
    #[error("latency, bandwidth, hash width, degree, and ledger size must all be positive")]
    InvalidParams,
}

/// Duration in seconds of one full game over `ledger` entries at degree `m`.
/// Logarithms are natural; the exchange-count ratio is base-independent.
pub fn game_duration(
    ledger: f64,
    m: f64,
    delta_s: f64,
    bandwidth_bps: f64,
    hash_bits: f64,
) -> Result<f64, TuningError> {
    if !(ledger >= 2.0) || !(m >= 2.0) || !(delta_s > 0.0) || !(bandwidth_bps > 0.0)
        || !(hash_bits > 0.0)
    {
        return Err(TuningError::InvalidParams);
    }
    let ln_l = ledger.ln();
    Ok((ln_l / m.ln()) * (4.0 * delta_s + m * hash_bits / bandwidth_bps) + ln_l / bandwidth_bps)
}

/// The ledger-independent part of the duration, used to compare degrees.
fn per_log_cost(m: f64, delta_s: f64, bandwidth_bps: f64, hash_bits: f64) -> f64 {
    (4.0 * delta_s + m * hash_bits / bandwidth_bps) / m.ln()
}

/// Integer degree minimizing the game duration for the given channel.
pub fn optimal_degree(
    delta_s: f64,
    bandwidth_bps: f64,
    hash_bits: f64,
) -> Result<u64, TuningError> {
    if !(delta_s > 0.0) || !(bandwidth_bps > 0.0) || !(hash_bits > 0.0) {
        return Err(TuningError::InvalidParams);
    }
    let target = 4.0 * delta_s * bandwidth_bps / hash_bits;
    let f = |m: f64| m * (m.ln() - 1.0) - target;

    let mut lo = 3.0f64;
    let mut hi = (1u64 << 40) as f64;
    let continuous = if f(lo) >= 0.0 {
        lo // the stationary point sits at or below the bracket
    } else {
        debug_assert!(f(hi) > 0.0);
        while hi / lo - 1.0 > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };

    let mut candidates = vec![2u64, continuous.floor() as u64, continuous.ceil() as u64];
    candidates.retain(|&m| m >= 2);
    candidates.sort_unstable();
    candidates.dedup();
    let best = candidates
        .into_iter()
        .min_by(|&a, &b| {
            per_log_cost(a as f64, delta_s, bandwidth_bps, hash_bits)
                .total_cmp(&per_log_cost(b as f64, delta_s, bandwidth_bps, hash_bits))
        })
        .expect("non-empty candidate list");
    Ok(best)
}
