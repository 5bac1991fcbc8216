//! Asymptotic generation rates for the key and the reusable base string,
//! their error-rate thresholds, and the curve data behind them.
//!
//! With channel bit error rate e, the key distills at R_k(e) = 1 - 2H(e)
//! and the base string refreshes at R_b(e) = 1 - H(2e) (valid for 2e < 1/2,
//! taken at the achievable bound). Chaining rounds through the refreshed
//! base string yields a geometric series with ratio R_b, so the total key
//! per initial base bit is R_k / (2 (1 - R_b)) -- unbounded on a noiseless
//! channel, where the base string never shrinks.

use crate::error::{Error, Result};
use serde::Serialize;

/// Largest e at which the base string still refreshes at a positive rate.
pub const BASE_THRESHOLD: f64 = 0.25;

/// Binary entropy H(x) = -x log2 x - (1-x) log2 (1-x), with H(0) = H(1) = 0.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) || x.is_nan() {
        return Err(Error::invalid(format!(
            "entropy argument {x} outside [0, 1]"
        )));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

/// Key generation rate R_k(e) = 1 - 2H(e); negative above the threshold,
/// callers clamp when converting to lengths.
pub fn key_rate(e: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&e) || e.is_nan() {
        return Err(Error::invalid(format!(
            "bit error rate {e} outside [0, 0.5]"
        )));
    }
    Ok(1.0 - 2.0 * binary_entropy(e)?)
}

/// Base-string refresh rate R_b(e) = 1 - H(2e) for e <= 0.25; beyond the
/// validity range of the bound the rate is reported as 0.
pub fn base_rate(e: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&e) || e.is_nan() {
        return Err(Error::invalid(format!(
            "bit error rate {e} outside [0, 0.5]"
        )));
    }
    if e > BASE_THRESHOLD {
        return Ok(0.0);
    }
    Ok(1.0 - binary_entropy(2.0 * e)?)
}

/// Whether `e` lies beyond the validity range of the base-rate bound.
pub fn base_rate_out_of_range(e: f64) -> bool {
    e > BASE_THRESHOLD
}

/// Total key per initial base bit over unboundedly many reuse rounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TotalKeyRatio {
    Finite(f64),
    /// The e = 0 limit: the base string never shrinks and the series
    /// diverges.
    Unbounded,
}

impl TotalKeyRatio {
    pub fn finite(&self) -> Option<f64> {
        match self {
            TotalKeyRatio::Finite(v) => Some(*v),
            TotalKeyRatio::Unbounded => None,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self, TotalKeyRatio::Unbounded)
    }
}

impl Serialize for TotalKeyRatio {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            TotalKeyRatio::Finite(v) => s.serialize_f64(*v),
            TotalKeyRatio::Unbounded => s.serialize_none(),
        }
    }
}

/// L_k / (2n) = R_k(e) / (2 (1 - R_b(e))), clamped at 0 once R_k goes
/// negative; Unbounded at e = 0.
pub fn total_key_ratio(e: f64) -> Result<TotalKeyRatio> {
    if !(0.0..=BASE_THRESHOLD).contains(&e) || e.is_nan() {
        return Err(Error::invalid(format!(
            "bit error rate {e} outside [0, {BASE_THRESHOLD}]"
        )));
    }
    if e == 0.0 {
        return Ok(TotalKeyRatio::Unbounded);
    }
    let rk = key_rate(e)?;
    if rk <= 0.0 {
        return Ok(TotalKeyRatio::Finite(0.0));
    }
    let rb = base_rate(e)?;
    Ok(TotalKeyRatio::Finite(rk / (2.0 * (1.0 - rb))))
}

/// Root of R_k on (0, 0.25), found by bisection to 1e-9.
pub fn key_threshold() -> f64 {
    let mut lo = 1e-9;
    let mut hi = BASE_THRESHOLD;
    // R_k(lo) > 0, R_k(hi) < 0
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if key_rate(mid).expect("mid in domain") > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Largest e with a positive base-refresh rate: exactly 0.25.
pub fn base_threshold() -> f64 {
    BASE_THRESHOLD
}

/// One grid point of the rate curves.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RatePoint {
    pub e: f64,
    pub r_k: f64,
    pub r_b: f64,
    pub lk_over_2n: TotalKeyRatio,
}

/// Inclusive grid of rate points on [e_min, e_max].
pub fn rate_curve(e_min: f64, e_max: f64, step: f64) -> Result<Vec<RatePoint>> {
    if e_min.is_nan() || e_max.is_nan() || step.is_nan() {
        return Err(Error::invalid("rate grid parameters must be finite"));
    }
    if !(0.0..=BASE_THRESHOLD).contains(&e_min) || e_max > BASE_THRESHOLD || e_min >= e_max {
        return Err(Error::invalid(format!(
            "rate grid [{e_min}, {e_max}] must satisfy 0 <= min < max <= {BASE_THRESHOLD}"
        )));
    }
    if step <= 0.0 {
        return Err(Error::invalid(format!(
            "rate grid step {step} must be positive"
        )));
    }
    let mut points = Vec::new();
    let mut i = 0usize;
    loop {
        let e = e_min + i as f64 * step;
        if e > e_max + step * 1e-9 {
            break;
        }
        let e = e.min(e_max); // absorb accumulation rounding at the endpoint
        points.push(RatePoint {
            e,
            r_k: key_rate(e)?,
            r_b: base_rate(e)?,
            lk_over_2n: total_key_ratio(e)?,
        });
        i += 1;
    }
    Ok(points)
}

/// Formats to `sig` significant digits, plain decimal notation.
fn fmt_sig(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    let prec = (sig as i32 - 1 - mag).max(0) as usize;
    format!("{x:.prec$}")
}

/// Renders rate points in the published CSV schema:
/// header `e,R_k,R_b,Lk_over_2n`, one row per point, six significant
/// digits, `inf` for the unbounded ratio.
pub fn rates_to_csv(points: &[RatePoint]) -> String {
    let mut out = String::from("e,R_k,R_b,Lk_over_2n\n");
    for p in points {
        let lk = match p.lk_over_2n {
            TotalKeyRatio::Unbounded => "inf".to_string(),
            TotalKeyRatio::Finite(v) => fmt_sig(v, 6),
        };
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_sig(p.e, 6),
            fmt_sig(p.r_k, 6),
            fmt_sig(p.r_b, 6),
            lk
        ));
    }
    out
}
