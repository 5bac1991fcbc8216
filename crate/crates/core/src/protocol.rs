//! The prepare-and-measure protocol, executed end to end: Alice encodes key
//! bits against the shared base string, Bob measures against his copy, the
//! two estimate the channel error rate on a public check set, reconcile the
//! code bits through the CSS pair, and compress the base string for the
//! next round.
//!
//! A session is a pure function of its config: every random draw comes from
//! streams forked off the session seed by purpose (base bits, value bits,
//! measurement outcomes, check-set permutation, codeword draws), so the
//! base string and its refresh never depend on the channel, and raising the
//! abort threshold can only ever un-abort a run.

use crate::attack_models::{build_channel, ChannelModel, KrausChannel};
use crate::error::{Error, Result};
use crate::error_analysis::error_rates_formula;
use crate::gf2_codes::{named_code, refresh_base, BitString, CssCode, LinearCode};
use crate::linalg::{Cplx, QMatrix};
use crate::rate_theory::{base_rate, key_rate, key_threshold};
use crate::rng::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// One qubit preparation: base bit selects the basis (0 -> Z, 1 -> X),
/// value bit selects the state within it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QubitPrep {
    pub base_bit: u8,
    pub value_bit: u8,
}

/// The density matrix Alice sends for a preparation: |0>/|1> in the Z
/// basis, |+>/|-> in the X basis.
pub fn prepare_qubit(p: QubitPrep) -> QMatrix {
    debug_assert!(p.base_bit <= 1 && p.value_bit <= 1);
    let mut rho = QMatrix::zeros(2);
    if p.base_bit == 0 {
        let v = p.value_bit as usize;
        rho[(v, v)] = Cplx::real(1.0);
    } else {
        let sign = if p.value_bit == 0 { 1.0 } else { -1.0 };
        rho[(0, 0)] = Cplx::real(0.5);
        rho[(0, 1)] = Cplx::real(0.5 * sign);
        rho[(1, 0)] = Cplx::real(0.5 * sign);
        rho[(1, 1)] = Cplx::real(0.5);
    }
    rho
}

/// Probability that a Z- (base 0) or X-basis (base 1) measurement of the
/// state yields outcome 1.
fn outcome_one_probability(state: &QMatrix, base_bit: u8) -> f64 {
    if base_bit == 0 {
        state[(1, 1)].re
    } else {
        // <minus| rho |minus> = (rho00 + rho11 - rho01 - rho10) / 2
        0.5 * (state[(0, 0)].re + state[(1, 1)].re - state[(0, 1)].re - state[(1, 0)].re)
    }
}

/// Projective measurement, deterministic in the supplied uniform variate:
/// outcome 1 exactly when `rand` falls below the outcome-1 probability.
pub fn measure_qubit(state: &QMatrix, base_bit: u8, rand: f64) -> Result<u8> {
    if state.dim() != 2 {
        return Err(Error::invalid("measurement needs a 2x2 state"));
    }
    let tr = state.trace();
    if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 || state.hermiticity_residual() > 1e-9 {
        return Err(Error::invalid("measurement input is not a density matrix"));
    }
    if !(0.0..1.0).contains(&rand) {
        return Err(Error::invalid(format!(
            "measurement variate {rand} outside [0, 1)"
        )));
    }
    let p1 = outcome_one_probability(state, base_bit).clamp(0.0, 1.0);
    Ok(u8::from(rand < p1))
}

/// Exact probability that Bob's matching-basis measurement of the channel
/// output disagrees with the prepared value bit.
pub fn qubit_error_probability(p: QubitPrep, ch: &KrausChannel) -> Result<f64> {
    ch.check_complete()?;
    let out = ch.apply(&prepare_qubit(p));
    let p1 = outcome_one_probability(&out, p.base_bit);
    let p_err = if p.value_bit == 1 { 1.0 - p1 } else { p1 };
    if !(-1e-9..=1.0 + 1e-9).contains(&p_err) {
        return Err(Error::numeric(format!(
            "qubit error probability {p_err} outside [0, 1]"
        )));
    }
    Ok(p_err.clamp(0.0, 1.0))
}

// ---------------------------------------------------------------------------
// Session configuration

/// How the base string is compressed at the end of a round.
#[derive(Debug, Clone)]
pub enum RefreshSpec {
    /// A truncation code sized for the worst error rate the session
    /// tolerates: output length = floor(2n * R_b(abort threshold)).
    Auto,
    /// Any named code (see the code grammar); `trunc:<n>:<k>` is applied
    /// without materializing matrices, so it scales to any length.
    Named(String),
}

/// Resolved refresh map for one concrete base-string length.
#[derive(Debug, Clone)]
enum ResolvedRefresh {
    Trunc { len: usize, out_len: usize },
    Code(Box<LinearCode>),
}

impl ResolvedRefresh {
    fn input_len(&self) -> usize {
        match self {
            ResolvedRefresh::Trunc { len, .. } => *len,
            ResolvedRefresh::Code(code) => code.n(),
        }
    }

    fn apply(&self, b: &BitString) -> Result<BitString> {
        if b.len() != self.input_len() {
            return Err(Error::invalid(format!(
                "refresh expects {} bits, got {}",
                self.input_len(),
                b.len()
            )));
        }
        match self {
            ResolvedRefresh::Trunc { out_len, .. } => Ok(b.prefix(*out_len)),
            ResolvedRefresh::Code(code) => refresh_base(b, code),
        }
    }
}

fn auto_refresh_out_len(total_len: usize, abort_threshold: f64) -> usize {
    let e = abort_threshold.min(0.5);
    let rb = base_rate(e).unwrap_or(0.0);
    ((total_len as f64 * rb).floor() as usize).clamp(1, total_len - 1)
}

impl RefreshSpec {
    /// Resolves for a base string of `total_len` bits. Round 1 applies the
    /// named code exactly; later rounds of the reuse loop re-derive a code
    /// of the same rate at the shrunken length.
    fn resolve(
        &self,
        total_len: usize,
        abort_threshold: f64,
        round: usize,
    ) -> Result<ResolvedRefresh> {
        if total_len < 2 {
            return Err(Error::config(format!(
                "base string of {total_len} bits cannot be refreshed"
            )));
        }
        match self {
            RefreshSpec::Auto => Ok(ResolvedRefresh::Trunc {
                len: total_len,
                out_len: auto_refresh_out_len(total_len, abort_threshold),
            }),
            RefreshSpec::Named(spec) => {
                if let Some(rest) = spec.strip_prefix("trunc:") {
                    let parts: Vec<&str> = rest.split(':').collect();
                    if parts.len() != 2 {
                        return Err(Error::invalid(format!("bad truncation spec {spec:?}")));
                    }
                    let n: usize = parts[0]
                        .parse()
                        .map_err(|_| Error::invalid(format!("bad length in {spec:?}")))?;
                    let k: usize = parts[1]
                        .parse()
                        .map_err(|_| Error::invalid(format!("bad dimension in {spec:?}")))?;
                    if k == 0 || k >= n {
                        return Err(Error::invalid(format!(
                            "truncation dimensions [{n}, {k}] must satisfy 0 < k < n"
                        )));
                    }
                    if round == 1 {
                        if n != total_len {
                            return Err(Error::config(format!(
                                "refresh code length {n} != base string length {total_len}"
                            )));
                        }
                        return Ok(ResolvedRefresh::Trunc {
                            len: n,
                            out_len: n - k,
                        });
                    }
                    // keep the configured compression ratio at the new length
                    let out = (((n - k) as f64 / n as f64) * total_len as f64).round() as usize;
                    let out = out.clamp(1, total_len - 1);
                    return Ok(ResolvedRefresh::Trunc {
                        len: total_len,
                        out_len: out,
                    });
                }
                if let Some(rest) = spec.strip_prefix("random:") {
                    let parts: Vec<&str> = rest.split(':').collect();
                    if parts.len() == 3 && round > 1 {
                        let n: usize = parts[0]
                            .parse()
                            .map_err(|_| Error::invalid(format!("bad length in {spec:?}")))?;
                        let k: usize = parts[1]
                            .parse()
                            .map_err(|_| Error::invalid(format!("bad dimension in {spec:?}")))?;
                        let seed: u64 = parts[2]
                            .parse()
                            .map_err(|_| Error::invalid(format!("bad seed in {spec:?}")))?;
                        let k_scaled = ((k as f64 / n as f64) * total_len as f64).round() as usize;
                        let k_scaled = k_scaled.clamp(1, total_len - 1);
                        let derived = format!(
                            "random:{}:{}:{}",
                            total_len,
                            k_scaled,
                            seed.wrapping_add(round as u64)
                        );
                        let code = named_code(&derived)?;
                        return Ok(ResolvedRefresh::Code(Box::new(code)));
                    }
                }
                let code = named_code(spec)?;
                if code.n() != total_len {
                    return Err(Error::config(format!(
                        "refresh code length {} != base string length {total_len}",
                        code.n()
                    )));
                }
                Ok(ResolvedRefresh::Code(Box::new(code)))
            }
        }
    }
}

/// Configuration of one protocol session over 2n qubits.
#[derive(Debug, Clone)]
pub struct SessionConfig {
    /// Check-set size; the session transmits 2n qubits, n checks, n code.
    pub n: usize,
    pub channel: ChannelModel,
    /// CSS pair for key distillation, applied per block of c1.n code qubits.
    pub css: CssCode,
    /// Base-string refresh code.
    pub c2_prime: RefreshSpec,
    /// The session aborts when the observed error rate reaches this value.
    pub abort_threshold: f64,
    pub rng_seed: u64,
}

impl SessionConfig {
    /// A session with the Steane pair, auto-sized refresh, and the
    /// key-rate threshold as abort level.
    pub fn new(n: usize, channel: ChannelModel, rng_seed: u64) -> Self {
        SessionConfig {
            n,
            channel,
            css: CssCode::steane_pair(),
            c2_prime: RefreshSpec::Auto,
            abort_threshold: key_threshold(),
            rng_seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::config("n must be positive"));
        }
        if !(0.0..=1.0).contains(&self.abort_threshold) || self.abort_threshold == 0.0 {
            return Err(Error::config(format!(
                "abort threshold {} outside (0, 1]",
                self.abort_threshold
            )));
        }
        if self.css.c1().n() > self.n {
            return Err(Error::config(format!(
                "CSS block length {} exceeds the {} code qubits",
                self.css.c1().n(),
                self.n
            )));
        }
        // fail on unusable refresh specs before simulating anything
        self.c2_prime.resolve(2 * self.n, self.abort_threshold, 1)?;
        build_channel(&self.channel)?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Transcript and results

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Alice,
    Bob,
}

/// Announcements exchanged over the public classical channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Reception { received: usize },
    CheckIndices { indices: Vec<usize> },
    CheckBits { bits: BitString },
    ReconciliationMask { block: usize, mask: BitString },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptMessage {
    pub step: u8,
    pub sender: Role,
    pub payload: Payload,
}

/// Everything one session produces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionResult {
    pub observed_e: f64,
    pub aborted: bool,
    pub key_alice: BitString,
    pub key_bob: BitString,
    pub refreshed_base: BitString,
    pub transcript: Vec<TranscriptMessage>,
}

/// One round of the reuse loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReuseRound {
    pub round_index: usize,
    pub base_len_in: usize,
    pub observed_e: f64,
    pub key_len_out: usize,
    pub base_len_out: usize,
}

/// Accumulated outcome of repeated protocol runs on the same base string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReuseReport {
    pub rounds: Vec<ReuseRound>,
    pub rounds_run: usize,
    pub initial_base_len: usize,
    pub total_key_bits: usize,
    /// total_key_bits / initial_base_len, the measured counterpart of the
    /// closed-form total key ratio.
    pub key_per_initial_base: f64,
    pub aborted: bool,
}

/// How the reuse loop sizes key extraction and base refresh per round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReuseSizing {
    /// Lengths follow the asymptotic rates at the channel's analytic error
    /// rate (floor-rounded); this is the mode that reproduces the
    /// geometric-series total.
    Idealized,
    /// Every round runs the full coded session (CSS reconciliation and the
    /// configured refresh code, rescaled to each round's length).
    Coded,
}

// ---------------------------------------------------------------------------
// Session execution

fn round_seed(seed: u64, round: usize) -> u64 {
    let mut h = seed ^ (round as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    // one splitmix-style diffusion step
    h = (h ^ (h >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    h ^ (h >> 31)
}

struct Transmission {
    alice_values: BitString,
    bob_values: BitString,
}

/// Sends every qubit through the channel and measures it on Bob's side.
/// `injected` bypasses the channel entirely and flips exactly the given
/// positions (indices into the full qubit sequence).
fn transmit(
    base: &BitString,
    channel: Option<&KrausChannel>,
    injected: Option<&BTreeSet<usize>>,
    seed: u64,
) -> Result<Transmission> {
    let len = base.len();
    let mut rng_values = Rng::fork(seed, "values");
    let mut rng_measure = Rng::fork(seed, "measure");
    let alice_values = BitString::random(len, &mut rng_values);
    let mut bob_values = BitString::zeros(len);
    for i in 0..len {
        let prep = QubitPrep {
            base_bit: base.get(i),
            value_bit: alice_values.get(i),
        };
        let bob = match channel {
            Some(ch) => {
                let rho = ch.apply(&prepare_qubit(prep));
                measure_qubit(&rho, prep.base_bit, rng_measure.next_f64())?
            }
            None => {
                let flip = injected.is_some_and(|set| set.contains(&i));
                prep.value_bit ^ u8::from(flip)
            }
        };
        bob_values.set(i, bob);
    }
    Ok(Transmission {
        alice_values,
        bob_values,
    })
}

/// Runs one full protocol round on an existing base string.
fn run_round(
    base: &BitString,
    css: &CssCode,
    refresh: &ResolvedRefresh,
    channel: Option<&KrausChannel>,
    injected: Option<&BTreeSet<usize>>,
    abort_threshold: f64,
    seed: u64,
) -> Result<SessionResult> {
    debug_assert!(injected.is_none() || channel.is_none());
    let total = base.len();
    let n_check = total / 2;
    let n_code = total - n_check;
    let mut transcript = Vec::new();

    // check/code split from the shared public coin stream
    let mut rng_check = Rng::fork(seed, "check-set");
    let mut perm: Vec<usize> = (0..total).collect();
    rng_check.shuffle(&mut perm);
    let check_idx = &perm[..n_check];
    let code_idx = &perm[n_check..];

    // injected positions index the code-qubit sequence; map them onto the
    // raw qubit order the transmission uses
    let injected_raw: Option<BTreeSet<usize>> =
        injected.map(|set| set.iter().map(|&code_pos| code_idx[code_pos]).collect());
    let tx = transmit(base, channel, injected_raw.as_ref(), seed)?;

    transcript.push(TranscriptMessage {
        step: 4,
        sender: Role::Bob,
        payload: Payload::Reception { received: total },
    });
    transcript.push(TranscriptMessage {
        step: 5,
        sender: Role::Alice,
        payload: Payload::CheckIndices {
            indices: check_idx.to_vec(),
        },
    });

    let mut alice_check = BitString::zeros(n_check);
    let mut bob_check = BitString::zeros(n_check);
    let mut mismatches = 0usize;
    for (slot, &i) in check_idx.iter().enumerate() {
        let a = tx.alice_values.get(i);
        let b = tx.bob_values.get(i);
        alice_check.set(slot, a);
        bob_check.set(slot, b);
        mismatches += usize::from(a != b);
    }
    transcript.push(TranscriptMessage {
        step: 6,
        sender: Role::Alice,
        payload: Payload::CheckBits { bits: alice_check },
    });
    transcript.push(TranscriptMessage {
        step: 6,
        sender: Role::Bob,
        payload: Payload::CheckBits { bits: bob_check },
    });
    let observed_e = mismatches as f64 / n_check as f64;

    if observed_e >= abort_threshold {
        return Ok(SessionResult {
            observed_e,
            aborted: true,
            key_alice: BitString::empty(),
            key_bob: BitString::empty(),
            refreshed_base: BitString::empty(),
            transcript,
        });
    }

    // reconciliation per code block: Alice masks her bits with a random C1
    // codeword, Bob unmasks, decodes, and both take coset labels
    let block_len = css.c1().n();
    let blocks = n_code / block_len;
    let mut rng_codewords = Rng::fork(seed, "codewords");
    let mut key_alice = BitString::empty();
    let mut key_bob = BitString::empty();
    for block in 0..blocks {
        let positions = &code_idx[block * block_len..(block + 1) * block_len];
        let mut alice_bits = BitString::zeros(block_len);
        let mut bob_bits = BitString::zeros(block_len);
        for (slot, &i) in positions.iter().enumerate() {
            alice_bits.set(slot, tx.alice_values.get(i));
            bob_bits.set(slot, tx.bob_values.get(i));
        }
        let message = BitString::random(css.c1().k(), &mut rng_codewords);
        let u = css.c1().encode(&message)?;
        let mask = alice_bits.xor(&u)?;
        transcript.push(TranscriptMessage {
            step: 7,
            sender: Role::Alice,
            payload: Payload::ReconciliationMask {
                block,
                mask: mask.clone(),
            },
        });
        let noisy = bob_bits.xor(&mask)?; // u + channel errors
        let decoded = css.c1().syndrome_decode(&noisy)?;
        key_alice.extend_from(&css.coset_label(&u)?);
        key_bob.extend_from(&css.coset_label(&decoded)?);
    }

    let refreshed_base = refresh.apply(base)?;

    Ok(SessionResult {
        observed_e,
        aborted: false,
        key_alice,
        key_bob,
        refreshed_base,
        transcript,
    })
}

/// Runs one full session per the configuration.
pub fn run_session(cfg: &SessionConfig) -> Result<SessionResult> {
    cfg.validate()?;
    let mut rng_base = Rng::fork(cfg.rng_seed, "base");
    let base = BitString::random(2 * cfg.n, &mut rng_base);
    let refresh = cfg.c2_prime.resolve(2 * cfg.n, cfg.abort_threshold, 1)?;
    let channel = build_channel(&cfg.channel)?;
    run_round(
        &base,
        &cfg.css,
        &refresh,
        Some(&channel),
        None,
        cfg.abort_threshold,
        round_seed(cfg.rng_seed, 1),
    )
}

/// Runs a session with a noiseless channel and exactly the given code-qubit
/// positions flipped on Bob's side; positions index the code-qubit sequence
/// (0..n).
pub fn run_session_with_injected_errors(
    cfg: &SessionConfig,
    error_positions: &BTreeSet<usize>,
) -> Result<SessionResult> {
    cfg.validate()?;
    if let Some(&max) = error_positions.iter().next_back() {
        if max >= cfg.n {
            return Err(Error::invalid(format!(
                "injected position {max} outside the {} code qubits",
                cfg.n
            )));
        }
    }
    let mut rng_base = Rng::fork(cfg.rng_seed, "base");
    let base = BitString::random(2 * cfg.n, &mut rng_base);
    let refresh = cfg.c2_prime.resolve(2 * cfg.n, cfg.abort_threshold, 1)?;
    run_round(
        &base,
        &cfg.css,
        &refresh,
        None,
        Some(error_positions),
        cfg.abort_threshold,
        round_seed(cfg.rng_seed, 1),
    )
}

/// Repeats the protocol, each round keying off the previous round's
/// refreshed base string, until `rounds` rounds have run or the base string
/// is shorter than one code block.
pub fn run_reuse_loop(
    cfg: &SessionConfig,
    rounds: usize,
    sizing: ReuseSizing,
) -> Result<ReuseReport> {
    if rounds == 0 {
        return Err(Error::invalid("reuse loop needs at least one round"));
    }
    cfg.validate()?;
    let channel = build_channel(&cfg.channel)?;
    let initial_base_len = 2 * cfg.n;
    let mut rng_base = Rng::fork(cfg.rng_seed, "base");
    let mut base = BitString::random(initial_base_len, &mut rng_base);

    // analytic sizing rates for the idealized mode
    let e_ref = error_rates_formula(&channel)?.e_bit_comm;
    let rk_ideal = if e_ref <= 0.5 {
        key_rate(e_ref)?.max(0.0)
    } else {
        0.0
    };
    let rb_ideal = base_rate(e_ref.min(0.5))?;

    let block_len = cfg.css.c1().n();
    let mut report = ReuseReport {
        rounds: Vec::new(),
        rounds_run: 0,
        initial_base_len,
        total_key_bits: 0,
        key_per_initial_base: 0.0,
        aborted: false,
    };

    for round in 1..=rounds {
        let len = base.len();
        if len < block_len {
            break;
        }
        let seed = round_seed(cfg.rng_seed, round);
        match sizing {
            ReuseSizing::Idealized => {
                let n_check = len / 2;
                let n_code = len - n_check;
                if n_check == 0 {
                    break;
                }
                let tx = transmit(&base, Some(&channel), None, seed)?;
                let mut rng_check = Rng::fork(seed, "check-set");
                let mut perm: Vec<usize> = (0..len).collect();
                rng_check.shuffle(&mut perm);
                let mismatches = perm[..n_check]
                    .iter()
                    .filter(|&&i| tx.alice_values.get(i) != tx.bob_values.get(i))
                    .count();
                let observed_e = mismatches as f64 / n_check as f64;
                if observed_e >= cfg.abort_threshold {
                    report.rounds.push(ReuseRound {
                        round_index: round,
                        base_len_in: len,
                        observed_e,
                        key_len_out: 0,
                        base_len_out: 0,
                    });
                    report.rounds_run = round;
                    report.aborted = true;
                    break;
                }
                let key_len = (n_code as f64 * rk_ideal).floor() as usize;
                let base_out = (len as f64 * rb_ideal).floor() as usize;
                report.rounds.push(ReuseRound {
                    round_index: round,
                    base_len_in: len,
                    observed_e,
                    key_len_out: key_len,
                    base_len_out: base_out,
                });
                report.total_key_bits += key_len;
                report.rounds_run = round;
                base = base.prefix(base_out);
                if base_out == 0 {
                    break;
                }
            }
            ReuseSizing::Coded => {
                let refresh = cfg.c2_prime.resolve(len, cfg.abort_threshold, round)?;
                let result = run_round(
                    &base,
                    &cfg.css,
                    &refresh,
                    Some(&channel),
                    None,
                    cfg.abort_threshold,
                    seed,
                )?;
                let entry = ReuseRound {
                    round_index: round,
                    base_len_in: len,
                    observed_e: result.observed_e,
                    key_len_out: result.key_alice.len(),
                    base_len_out: result.refreshed_base.len(),
                };
                report.rounds.push(entry);
                report.rounds_run = round;
                if result.aborted {
                    report.aborted = true;
                    break;
                }
                report.total_key_bits += result.key_alice.len();
                base = result.refreshed_base;
            }
        }
    }

    report.key_per_initial_base = report.total_key_bits as f64 / initial_base_len as f64;
    Ok(report)
}
