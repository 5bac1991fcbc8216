//! Exact simulation of one protocol block: two EPR pairs, four qubits.
//!
//! Qubit 1 and 4 form the base pair (never transmitted), qubits 2 and 3 the
//! communicating pair; qubit 3 is the one that crosses the channel. The
//! 16-dimensional density matrix uses basis index `8*q1 + 4*q2 + 2*q3 + q4`
//! (qubit 1 most significant). A dense representation is deliberate: the
//! attacks of interest are arbitrary Kraus channels, which a stabilizer
//! simulation cannot express, and 16 dimensions costs nothing.

use crate::attack_models::KrausChannel;
use crate::error::{Error, Result};
use crate::linalg::{embed_single, hadamard, min_eigenvalue, pauli_x, pauli_z, Cplx, QMatrix};

/// Hermiticity and trace tolerance for stored states.
pub const STATE_TOL: f64 = 1e-10;
/// Slack allowed on the smallest eigenvalue of a stored state.
pub const PSD_TOL: f64 = 1e-9;

const N_QUBITS: usize = 4;

/// Density matrix of one 4-qubit block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockState {
    rho: QMatrix,
}

impl BlockState {
    /// Wraps a 16x16 density matrix, enforcing Hermiticity, unit trace and
    /// positive semidefiniteness within tolerance.
    pub fn new(rho: QMatrix) -> Result<Self> {
        if rho.dim() != 16 {
            return Err(Error::invalid(format!(
                "block state must be 16x16, got {}x{}",
                rho.dim(),
                rho.dim()
            )));
        }
        if !rho.is_finite() {
            return Err(Error::numeric("block state has non-finite entries"));
        }
        let herm = rho.hermiticity_residual();
        if herm > STATE_TOL {
            return Err(Error::numeric(format!(
                "block state not Hermitian: residual {herm:.3e}"
            )));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::numeric(format!(
                "block state trace {:.12} + {:.3e}i != 1",
                tr.re, tr.im
            )));
        }
        let min_eig = min_eigenvalue(&rho)?;
        if min_eig < -PSD_TOL {
            return Err(Error::numeric(format!(
                "block state not positive semidefinite: min eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(BlockState { rho })
    }

    pub fn rho(&self) -> &QMatrix {
        &self.rho
    }

    /// Tr(rho^2).
    pub fn purity(&self) -> f64 {
        self.rho.mul(&self.rho).trace().re
    }
}

/// The four block observables whose -1 rates define the error rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockObservable {
    /// Bit agreement of the base pair.
    Z1Z4,
    /// Phase agreement of the base pair.
    X1X4,
    /// Bit agreement of the communicating pair.
    Z2Z3,
    /// Phase agreement of the communicating pair.
    X2X3,
}

impl BlockObservable {
    /// The observable as a 16x16 matrix.
    pub fn matrix(self) -> QMatrix {
        let (op, a, b) = match self {
            BlockObservable::Z1Z4 => (pauli_z(), 1, 4),
            BlockObservable::X1X4 => (pauli_x(), 1, 4),
            BlockObservable::Z2Z3 => (pauli_z(), 2, 3),
            BlockObservable::X2X3 => (pauli_x(), 2, 3),
        };
        embed_single(&op, a, N_QUBITS).mul(&embed_single(&op, b, N_QUBITS))
    }
}

/// The state both pairs start in: |phi+> on qubits (1,4) and on (2,3).
pub fn initial_block_state() -> BlockState {
    // |psi0> = 1/2 (|00> + |11>)_14 (x) (|00> + |11>)_23
    // support: |0000>, |0110>, |1001>, |1111>
    let support = [0b0000usize, 0b0110, 0b1001, 0b1111];
    let mut rho = QMatrix::zeros(16);
    for &i in &support {
        for &j in &support {
            rho[(i, j)] = Cplx::real(0.25);
        }
    }
    BlockState::new(rho).expect("initial state is a valid density matrix")
}

/// Controlled-Hadamard on 4 qubits: Hadamard on `target_qubit` when
/// `control_qubit` is |1>, identity otherwise. Indices are 1-based.
pub fn controlled_hadamard(control_qubit: usize, target_qubit: usize) -> Result<QMatrix> {
    if !(1..=N_QUBITS).contains(&control_qubit) || !(1..=N_QUBITS).contains(&target_qubit) {
        return Err(Error::invalid(format!(
            "qubit indices must be in 1..=4, got control {control_qubit}, target {target_qubit}"
        )));
    }
    if control_qubit == target_qubit {
        return Err(Error::invalid(
            "controlled-Hadamard control and target must differ",
        ));
    }
    let p0 = QMatrix::from_rows(&[vec![(1.0, 0.0), (0.0, 0.0)], vec![(0.0, 0.0), (0.0, 0.0)]])?;
    let p1 = QMatrix::from_rows(&[vec![(0.0, 0.0), (0.0, 0.0)], vec![(0.0, 0.0), (1.0, 0.0)]])?;
    let idle = embed_single(&p0, control_qubit, N_QUBITS);
    let act = embed_single(&p1, control_qubit, N_QUBITS).mul(&embed_single(
        &hadamard(),
        target_qubit,
        N_QUBITS,
    ));
    Ok(idle.add(&act))
}

/// Conjugates the state by a unitary: U rho U^dagger.
pub fn apply_unitary(state: &BlockState, u: &QMatrix) -> Result<BlockState> {
    if u.dim() != 16 {
        return Err(Error::invalid(format!(
            "unitary must be 16x16, got {0}x{0}",
            u.dim()
        )));
    }
    let res = u.unitarity_residual();
    if res > STATE_TOL {
        return Err(Error::invalid(format!(
            "matrix is not unitary: residual {res:.3e}"
        )));
    }
    BlockState::new(u.mul(state.rho()).mul(&u.dagger()))
}

/// Applies a Kraus channel to qubit 3: rho -> sum_mu (I x I x M_mu x I) rho (.)^dagger.
pub fn apply_channel_on_qubit3(state: &BlockState, ch: &KrausChannel) -> Result<BlockState> {
    ch.check_complete()?;
    let mut out = QMatrix::zeros(16);
    for m in ch.operators() {
        let big = embed_single(m, 3, N_QUBITS);
        out = out.add(&big.mul(state.rho()).mul(&big.dagger()));
    }
    BlockState::new(out)
}

/// The block state after the full channel passage: CH13, Eve's channel on
/// qubit 3, then CH43 on Bob's side.
pub fn corrupted_block_state(ch: &KrausChannel) -> Result<BlockState> {
    let state = initial_block_state();
    let ch13 = controlled_hadamard(1, 3)?;
    let ch43 = controlled_hadamard(4, 3)?;
    let state = apply_unitary(&state, &ch13)?;
    let state = apply_channel_on_qubit3(&state, ch)?;
    apply_unitary(&state, &ch43)
}

/// Probability of outcome -1 when measuring the observable on the state:
/// (1 - Tr(O rho)) / 2, clamped to [0, 1] within rounding slack.
pub fn minus_one_rate(state: &BlockState, obs: BlockObservable) -> Result<f64> {
    let tr = obs.matrix().mul(state.rho()).trace();
    if tr.im.abs() > 1e-10 {
        return Err(Error::numeric(format!(
            "expectation of {obs:?} has imaginary part {:.3e}",
            tr.im
        )));
    }
    let raw = (1.0 - tr.re) / 2.0;
    if !(-PSD_TOL..=1.0 + PSD_TOL).contains(&raw) {
        return Err(Error::numeric(format!(
            "-1 rate {raw:.12} outside [0, 1] beyond tolerance"
        )));
    }
    Ok(raw.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack_models::{build_channel, ChannelModel, KrausChannel};
    use crate::linalg::{hermitian_eigen, qubit_marginal};

    #[test]
    fn initial_state_entries() {
        let rho = initial_block_state();
        let support = [0b0000usize, 0b0110, 0b1001, 0b1111];
        for i in 0..16 {
            for j in 0..16 {
                let expected = if support.contains(&i) && support.contains(&j) {
                    0.25
                } else {
                    0.0
                };
                assert_eq!(rho.rho()[(i, j)], Cplx::real(expected), "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn initial_state_is_pure_and_correlated() {
        let rho = initial_block_state();
        assert!((rho.purity() - 1.0).abs() < 1e-12);
        for obs in [
            BlockObservable::Z1Z4,
            BlockObservable::X1X4,
            BlockObservable::Z2Z3,
            BlockObservable::X2X3,
        ] {
            assert!(minus_one_rate(&rho, obs).unwrap() < 1e-12);
        }
    }

    #[test]
    fn ch_moves_target_to_plus_when_control_set() {
        // CH13 |1000> = |1>|0>|+>|0>
        let ch13 = controlled_hadamard(1, 3).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let input = 0b1000;
        for i in 0..16 {
            let amp = ch13[(i, input)];
            let expected = match i {
                0b1000 | 0b1010 => h,
                _ => 0.0,
            };
            assert!(
                (amp.re - expected).abs() < 1e-15 && amp.im == 0.0,
                "row {i}"
            );
        }
    }

    #[test]
    fn ch_is_identity_when_control_clear() {
        let ch13 = controlled_hadamard(1, 3).unwrap();
        for input in 0..8 {
            // q1 = 0
            for i in 0..16 {
                let expected = if i == input { 1.0 } else { 0.0 };
                assert!((ch13[(i, input)].re - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn ch_squares_to_identity() {
        // matrix-multiplication oracle for the involution property
        let ch43 = controlled_hadamard(4, 3).unwrap();
        let sq = ch43.mul(&ch43);
        assert!(sq.max_abs_diff(&QMatrix::identity(16)) < 1e-12);
        let ch13 = controlled_hadamard(1, 3).unwrap();
        assert!(ch13.mul(&ch13).max_abs_diff(&QMatrix::identity(16)) < 1e-12);
    }

    #[test]
    fn ch_rejects_equal_indices() {
        assert!(controlled_hadamard(2, 2).is_err());
        assert!(controlled_hadamard(0, 1).is_err());
        assert!(controlled_hadamard(1, 5).is_err());
    }

    #[test]
    fn apply_unitary_identity_and_involution() {
        let rho = initial_block_state();
        let id = QMatrix::identity(16);
        let same = apply_unitary(&rho, &id).unwrap();
        assert!(same.rho().max_abs_diff(rho.rho()) < 1e-15);

        let ch13 = controlled_hadamard(1, 3).unwrap();
        let once = apply_unitary(&rho, &ch13).unwrap();
        let twice = apply_unitary(&once, &ch13).unwrap();
        assert!(twice.rho().max_abs_diff(rho.rho()) < 1e-12);
    }

    #[test]
    fn apply_unitary_rejects_non_unitary() {
        let rho = initial_block_state();
        let bad = QMatrix::identity(16).scale(Cplx::real(0.5));
        assert!(apply_unitary(&rho, &bad).is_err());
    }

    #[test]
    fn identity_channel_is_a_noop() {
        let rho = initial_block_state();
        let ch = build_channel(&ChannelModel::Identity).unwrap();
        let out = apply_channel_on_qubit3(&rho, &ch).unwrap();
        assert!(out.rho().max_abs_diff(rho.rho()) < 1e-15);
    }

    #[test]
    fn full_bit_flip_flips_qubit3() {
        let rho = initial_block_state();
        let ch = build_channel(&ChannelModel::BitFlip(1.0)).unwrap();
        let out = apply_channel_on_qubit3(&rho, &ch).unwrap();
        assert!((out.purity() - 1.0).abs() < 1e-12);
        // Z2Z3 is now anti-correlated
        assert!((minus_one_rate(&out, BlockObservable::Z2Z3).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_depolarizing_mixes_qubit3_marginal() {
        // partial-trace oracle
        let rho = initial_block_state();
        let ch = build_channel(&ChannelModel::Depolarizing(1.0)).unwrap();
        let out = apply_channel_on_qubit3(&rho, &ch).unwrap();
        let marginal = qubit_marginal(out.rho(), 3, 4);
        let mixed = QMatrix::identity(2).scale(Cplx::real(0.5));
        assert!(marginal.max_abs_diff(&mixed) < 1e-12);
    }

    #[test]
    fn corrupted_state_identity_channel_keeps_all_correlations() {
        let ch = build_channel(&ChannelModel::Identity).unwrap();
        let out = corrupted_block_state(&ch).unwrap();
        for obs in [
            BlockObservable::Z1Z4,
            BlockObservable::X1X4,
            BlockObservable::Z2Z3,
            BlockObservable::X2X3,
        ] {
            assert!(minus_one_rate(&out, obs).unwrap() < 1e-12, "{obs:?}");
        }
    }

    #[test]
    fn corrupted_state_single_x_gives_half_bit_error() {
        let ch = KrausChannel::new(vec![pauli_x()], Some("X".into())).unwrap();
        let out = corrupted_block_state(&ch).unwrap();
        let rate = minus_one_rate(&out, BlockObservable::Z2Z3).unwrap();
        assert!((rate - 0.5).abs() < 1e-12);
        // no base bit error, ever
        let base = minus_one_rate(&out, BlockObservable::Z1Z4).unwrap();
        assert!(base < 1e-12);
    }

    #[test]
    fn minus_one_rate_matches_projector_oracle() {
        // independent route: build the projector onto the -1 eigenspace by
        // eigendecomposition and compute Tr(P rho)
        let ch = KrausChannel::new(
            vec![
                pauli_x().scale(Cplx::real(0.6f64.sqrt())),
                pauli_z().scale(Cplx::real(0.4f64.sqrt())),
            ],
            None,
        )
        .unwrap();
        let state = corrupted_block_state(&ch).unwrap();
        for obs in [
            BlockObservable::Z1Z4,
            BlockObservable::X1X4,
            BlockObservable::Z2Z3,
            BlockObservable::X2X3,
        ] {
            let m = obs.matrix();
            let (vals, vecs) = hermitian_eigen(&m).unwrap();
            let mut proj = QMatrix::zeros(16);
            for (idx, &lambda) in vals.iter().enumerate() {
                if lambda < 0.0 {
                    for i in 0..16 {
                        for j in 0..16 {
                            let vi = vecs[(i, idx)];
                            let vj = vecs[(j, idx)];
                            proj[(i, j)] += vi * vj.conj();
                        }
                    }
                }
            }
            let oracle = proj.mul(state.rho()).trace().re;
            let fast = minus_one_rate(&state, obs).unwrap();
            assert!((oracle - fast).abs() < 1e-10, "{obs:?}: {oracle} vs {fast}");
        }
    }

    #[test]
    fn observables_square_to_identity() {
        for obs in [
            BlockObservable::Z1Z4,
            BlockObservable::X1X4,
            BlockObservable::Z2Z3,
            BlockObservable::X2X3,
        ] {
            let m = obs.matrix();
            assert!(m.hermiticity_residual() < 1e-15);
            assert!(m.mul(&m).max_abs_diff(&QMatrix::identity(16)) < 1e-15);
        }
    }
}
