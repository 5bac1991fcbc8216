//! The four error rates of a block under a given channel, computed two
//! independent ways, and the relations between them.
//!
//! The closed-form route sums a per-operator contribution over the Kraus
//! set; the exact route builds the corrupted block state and reads the -1
//! rates of the four block observables off the density matrix. The two
//! must agree to ~1e-9 for every trace-preserving channel, which is the
//! main correctness gate of the simulator.

use crate::attack_models::KrausChannel;
use crate::block_sim::{corrupted_block_state, minus_one_rate, BlockObservable};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Bit/phase error rates of the communicating and base pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRates {
    pub e_bit_comm: f64,
    pub e_ph_comm: f64,
    pub e_bit_base: f64,
    pub e_ph_base: f64,
}

impl ErrorRates {
    fn clamped(raw: [f64; 4]) -> Result<Self> {
        for (i, &v) in raw.iter().enumerate() {
            if !(-1e-9..=1.0 + 1e-9).contains(&v) {
                return Err(Error::numeric(format!(
                    "rate component {i} = {v:.12} outside [0, 1] beyond tolerance"
                )));
            }
        }
        let c = |v: f64| v.clamp(0.0, 1.0);
        Ok(ErrorRates {
            e_bit_comm: c(raw[0]),
            e_ph_comm: c(raw[1]),
            e_bit_base: c(raw[2]),
            e_ph_base: c(raw[3]),
        })
    }

    pub fn max_abs_diff(&self, other: &ErrorRates) -> f64 {
        [
            self.e_bit_comm - other.e_bit_comm,
            self.e_ph_comm - other.e_ph_comm,
            self.e_bit_base - other.e_bit_base,
            self.e_ph_base - other.e_ph_base,
        ]
        .iter()
        .map(|d| d.abs())
        .fold(0.0, f64::max)
    }
}

/// Closed-form rates: per-operator contributions summed over the Kraus set.
///
/// For an operator with entries a11, a12, a21, a22 the communicating-pair
/// contribution is (|a11-a22|^2 + |a12-a21|^2 + 2|a12|^2 + 2|a21|^2)/8; the
/// phase rate of the communicating pair equals its bit rate, the base pair
/// takes no bit error at all, and the base phase rate adds a cross term
/// ((a22-a11)(a12+a21)* + c.c.)/8 on top of the communicating bit rate.
pub fn error_rates_formula(ch: &KrausChannel) -> Result<ErrorRates> {
    ch.check_complete()?;
    let mut bit_comm = 0.0;
    let mut ph_base = 0.0;
    for m in ch.operators() {
        let a11 = m[(0, 0)];
        let a12 = m[(0, 1)];
        let a21 = m[(1, 0)];
        let a22 = m[(1, 1)];

        let bit = ((a11 - a22).norm_sqr()
            + (a12 - a21).norm_sqr()
            + 2.0 * a12.norm_sqr()
            + 2.0 * a21.norm_sqr())
            / 8.0;
        bit_comm += bit;

        // value plus its own conjugate; the imaginary part must vanish
        let half = (a22 - a11) * (a12.conj() + a21.conj());
        let cross = half + half.conj();
        if cross.im.abs() > 1e-12 {
            return Err(Error::numeric(format!(
                "base phase cross term has imaginary residue {:.3e}",
                cross.im
            )));
        }
        ph_base += bit + cross.re / 8.0;
    }
    ErrorRates::clamped([bit_comm, bit_comm, 0.0, ph_base])
}

/// Exact rates: -1 rates of the four block observables on the corrupted
/// block state. This is the brute-force oracle for the closed forms.
pub fn error_rates_exact(ch: &KrausChannel) -> Result<ErrorRates> {
    let state = corrupted_block_state(ch)?;
    ErrorRates::clamped([
        minus_one_rate(&state, BlockObservable::Z2Z3)?,
        minus_one_rate(&state, BlockObservable::X2X3)?,
        minus_one_rate(&state, BlockObservable::Z1Z4)?,
        minus_one_rate(&state, BlockObservable::X1X4)?,
    ])
}

/// How far a set of rates sits from the three aggregate relations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelationReport {
    /// |e_ph_comm - e_bit_comm|; zero when the phase and bit rates of the
    /// communicating pair coincide.
    pub ph_eq_bit_residual: f64,
    /// e_bit_base itself; the base pair never takes bit errors.
    pub base_bit_residual: f64,
    /// 2 e_bit_comm - e_ph_base; nonnegative (within rounding) when the
    /// base phase rate respects its bound, zero at saturation.
    pub ph_base_slack: f64,
}

impl RelationReport {
    /// True when every relation holds within `tol` (the base bit residual
    /// is held to 1e-12 regardless, since it is exact).
    pub fn holds(&self, tol: f64) -> bool {
        self.ph_eq_bit_residual <= tol
            && self.base_bit_residual <= 1e-12
            && self.ph_base_slack >= -tol
    }
}

pub fn check_relations(rates: &ErrorRates) -> RelationReport {
    RelationReport {
        ph_eq_bit_residual: (rates.e_ph_comm - rates.e_bit_comm).abs(),
        base_bit_residual: rates.e_bit_base,
        ph_base_slack: 2.0 * rates.e_bit_comm - rates.e_ph_base,
    }
}

/// Upper bound on the base-pair phase error rate given the observed channel
/// bit error rate: min(2e, 1).
pub fn phase_error_bound(e: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&e) || e.is_nan() {
        return Err(Error::invalid(format!(
            "bit error rate {e} outside [0, 0.5]"
        )));
    }
    Ok((2.0 * e).min(1.0))
}
