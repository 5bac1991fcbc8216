//! Eve's channels: named noise models and arbitrary Kraus operator sets.

use crate::error::{Error, Result};
use crate::linalg::{pauli_x, pauli_y, pauli_z, Cplx, QMatrix};
use crate::rng::Rng;

/// Completeness tolerance for trace-preserving channels.
pub const CHANNEL_TOL: f64 = 1e-10;

/// A qubit channel given by its Kraus operators M_mu, with the
/// trace-preservation constraint sum_mu M_mu^dagger M_mu = I.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    operators: Vec<QMatrix>,
    label: Option<String>,
}

impl KrausChannel {
    pub fn new(operators: Vec<QMatrix>, label: Option<String>) -> Result<Self> {
        if operators.is_empty() {
            return Err(Error::invalid("channel needs at least one Kraus operator"));
        }
        for (i, m) in operators.iter().enumerate() {
            if m.dim() != 2 {
                return Err(Error::invalid(format!(
                    "Kraus operator {i} must be 2x2, got {0}x{0}",
                    m.dim()
                )));
            }
            if !m.is_finite() {
                return Err(Error::invalid(format!(
                    "Kraus operator {i} has non-finite entries"
                )));
            }
        }
        let ch = KrausChannel { operators, label };
        ch.check_complete()?;
        Ok(ch)
    }

    pub fn operators(&self) -> &[QMatrix] {
        &self.operators
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    /// ||sum M^dagger M - I||_max.
    pub fn completeness_residual(&self) -> f64 {
        let mut sum = QMatrix::zeros(2);
        for m in &self.operators {
            sum = sum.add(&m.dagger().mul(m));
        }
        sum.max_abs_diff(&QMatrix::identity(2))
    }

    pub(crate) fn check_complete(&self) -> Result<()> {
        let res = self.completeness_residual();
        if res > CHANNEL_TOL {
            return Err(Error::invalid(format!(
                "channel is not trace-preserving: completeness residual {res:.3e}"
            )));
        }
        Ok(())
    }

    /// Applies the channel to a single-qubit density matrix.
    pub fn apply(&self, rho: &QMatrix) -> QMatrix {
        assert_eq!(rho.dim(), 2);
        let mut out = QMatrix::zeros(2);
        for m in &self.operators {
            out = out.add(&m.mul(rho).mul(&m.dagger()));
        }
        out
    }
}

/// ||sum M^dagger M - I||_max, as a free function for report output.
pub fn validate_channel(ch: &KrausChannel) -> f64 {
    ch.completeness_residual()
}

/// The named attack models the toolkit ships with.
#[derive(Debug, Clone)]
pub enum ChannelModel {
    Identity,
    BitFlip(f64),
    PhaseFlip(f64),
    Depolarizing(f64),
    /// Eve measures in Z and resends her result.
    InterceptResendZ,
    /// Eve measures in a random basis (Z or X) and resends her result.
    InterceptResendRandom,
    Custom(KrausChannel),
}

impl ChannelModel {
    pub fn label(&self) -> String {
        match self {
            ChannelModel::Identity => "identity".into(),
            ChannelModel::BitFlip(p) => format!("bitflip:{p}"),
            ChannelModel::PhaseFlip(p) => format!("phaseflip:{p}"),
            ChannelModel::Depolarizing(p) => format!("depolarizing:{p}"),
            ChannelModel::InterceptResendZ => "ir-z".into(),
            ChannelModel::InterceptResendRandom => "ir-random".into(),
            ChannelModel::Custom(ch) => ch.label().unwrap_or("custom").to_string(),
        }
    }
}

fn check_probability(p: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::invalid(format!(
            "{what} probability {p} outside [0, 1]"
        )));
    }
    Ok(())
}

/// Builds the Kraus representation of a named model.
pub fn build_channel(model: &ChannelModel) -> Result<KrausChannel> {
    let id = QMatrix::identity(2);
    let ops = match model {
        ChannelModel::Identity => vec![id],
        ChannelModel::BitFlip(p) => {
            check_probability(*p, "bit-flip")?;
            vec![
                id.scale(Cplx::real((1.0 - p).sqrt())),
                pauli_x().scale(Cplx::real(p.sqrt())),
            ]
        }
        ChannelModel::PhaseFlip(p) => {
            check_probability(*p, "phase-flip")?;
            vec![
                id.scale(Cplx::real((1.0 - p).sqrt())),
                pauli_z().scale(Cplx::real(p.sqrt())),
            ]
        }
        ChannelModel::Depolarizing(p) => {
            check_probability(*p, "depolarizing")?;
            vec![
                id.scale(Cplx::real((1.0 - 3.0 * p / 4.0).sqrt())),
                pauli_x().scale(Cplx::real((p / 4.0).sqrt())),
                pauli_y().scale(Cplx::real((p / 4.0).sqrt())),
                pauli_z().scale(Cplx::real((p / 4.0).sqrt())),
            ]
        }
        ChannelModel::InterceptResendZ => vec![projector(0), projector(1)],
        ChannelModel::InterceptResendRandom => {
            let s = Cplx::real(std::f64::consts::FRAC_1_SQRT_2);
            vec![
                projector(0).scale(s),
                projector(1).scale(s),
                plus_projector(1.0).scale(s),
                plus_projector(-1.0).scale(s),
            ]
        }
        ChannelModel::Custom(ch) => {
            return KrausChannel::new(ch.operators().to_vec(), ch.label().map(String::from))
        }
    };
    KrausChannel::new(ops, Some(model.label()))
}

fn projector(bit: usize) -> QMatrix {
    let mut m = QMatrix::zeros(2);
    m[(bit, bit)] = Cplx::real(1.0);
    m
}

fn plus_projector(sign: f64) -> QMatrix {
    // |+><+| for sign = +1, |-><-| for sign = -1
    let mut m = QMatrix::zeros(2);
    m[(0, 0)] = Cplx::real(0.5);
    m[(0, 1)] = Cplx::real(0.5 * sign);
    m[(1, 0)] = Cplx::real(0.5 * sign);
    m[(1, 1)] = Cplx::real(0.5);
    m
}

/// The family {sqrt(1 - 2 d^2) I, d (Z - X)} that meets the phase-error
/// bound of the base pair with equality; `delta_sq` is d^2 and must lie in
/// [0, 1/2].
pub fn phase_bound_saturating_channel(delta_sq: f64) -> Result<KrausChannel> {
    if !(0.0..=0.5).contains(&delta_sq) || delta_sq.is_nan() {
        return Err(Error::invalid(format!(
            "delta^2 = {delta_sq} outside [0, 0.5]"
        )));
    }
    let d = delta_sq.sqrt();
    let m0 = QMatrix::identity(2).scale(Cplx::real((1.0 - 2.0 * delta_sq).sqrt()));
    let zx = pauli_z().add(&pauli_x().scale(Cplx::real(-1.0)));
    let m1 = zx.scale(Cplx::real(d));
    KrausChannel::new(vec![m0, m1], Some(format!("saturating:{delta_sq}")))
}

/// Deterministically builds a valid random channel with `num_kraus`
/// operators: draw complex Gaussian matrices, then right-multiply by
/// (sum M^dagger M)^(-1/2) so completeness holds by construction.
pub fn random_channel(seed: u64, num_kraus: usize) -> Result<KrausChannel> {
    if !(1..=8).contains(&num_kraus) {
        return Err(Error::invalid(format!(
            "num_kraus {num_kraus} outside 1..=8"
        )));
    }
    let mut attempt_seed = seed;
    loop {
        let mut rng = Rng::fork(attempt_seed, "random-channel");
        let raw: Vec<QMatrix> = (0..num_kraus)
            .map(|_| {
                let mut m = QMatrix::zeros(2);
                for i in 0..2 {
                    for j in 0..2 {
                        m[(i, j)] = Cplx::new(rng.next_gaussian(), rng.next_gaussian());
                    }
                }
                m
            })
            .collect();
        let mut total = QMatrix::zeros(2);
        for m in &raw {
            total = total.add(&m.dagger().mul(m));
        }
        match inv_sqrt_2x2(&total) {
            Some(w) => {
                let ops = raw.iter().map(|m| m.mul(&w)).collect();
                return KrausChannel::new(ops, Some(format!("random:{seed}:{num_kraus}")));
            }
            None => {
                // near-singular draw; retry with a perturbed stream
                attempt_seed = attempt_seed.wrapping_mul(0x5DEE_CE66).wrapping_add(11);
            }
        }
    }
}

/// Inverse square root of a 2x2 Hermitian positive-definite matrix, or None
/// if the matrix is too ill-conditioned to invert reliably.
fn inv_sqrt_2x2(t: &QMatrix) -> Option<QMatrix> {
    let a = t[(0, 0)].re;
    let d = t[(1, 1)].re;
    let b = t[(0, 1)];
    let tr = a + d;
    let det = a * d - b.norm_sqr();
    if det <= 0.0 || tr <= 0.0 {
        return None;
    }
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    let (lo, hi) = ((tr - disc) / 2.0, (tr + disc) / 2.0);
    if lo <= 0.0 || hi / lo > 1e12 {
        return None;
    }
    // sqrt(T) = (T + sqrt(det) I) / sqrt(tr + 2 sqrt(det)), then invert
    let s = det.sqrt();
    let denom = (tr + 2.0 * s).sqrt();
    let sq = t
        .add(&QMatrix::identity(2).scale(Cplx::real(s)))
        .scale(Cplx::real(1.0 / denom));
    // 2x2 inverse
    let sdet = sq[(0, 0)] * sq[(1, 1)] - sq[(0, 1)] * sq[(1, 0)];
    if sdet.abs() < 1e-300 {
        return None;
    }
    let inv_det = Cplx::new(sdet.re / sdet.norm_sqr(), -sdet.im / sdet.norm_sqr());
    let mut inv = QMatrix::zeros(2);
    inv[(0, 0)] = sq[(1, 1)] * inv_det;
    inv[(0, 1)] = -sq[(0, 1)] * inv_det;
    inv[(1, 0)] = -sq[(1, 0)] * inv_det;
    inv[(1, 1)] = sq[(0, 0)] * inv_det;
    Some(inv)
}

/// A channel specification as it appears on the command line.
#[derive(Debug, Clone)]
pub enum ChannelSpec {
    Model(ChannelModel),
    /// `custom:<path>` — a JSON file holding the Kraus matrices; resolving
    /// the path is left to the caller (the CLI reads files, the browser
    /// demo does not).
    CustomFile(String),
}

/// Parses the channel grammar: `identity`, `bitflip:<p>`, `phaseflip:<p>`,
/// `depolarizing:<p>`, `ir-z`, `ir-random`, `custom:<path>`.
pub fn parse_channel_spec(spec: &str) -> Result<ChannelSpec> {
    let parse_p = |rest: &str, what: &str| -> Result<f64> {
        rest.parse::<f64>()
            .map_err(|_| Error::invalid(format!("bad {what} probability {rest:?}")))
    };
    let model = if spec == "identity" {
        ChannelModel::Identity
    } else if let Some(rest) = spec.strip_prefix("bitflip:") {
        ChannelModel::BitFlip(parse_p(rest, "bitflip")?)
    } else if let Some(rest) = spec.strip_prefix("phaseflip:") {
        ChannelModel::PhaseFlip(parse_p(rest, "phaseflip")?)
    } else if let Some(rest) = spec.strip_prefix("depolarizing:") {
        ChannelModel::Depolarizing(parse_p(rest, "depolarizing")?)
    } else if spec == "ir-z" {
        ChannelModel::InterceptResendZ
    } else if spec == "ir-random" {
        ChannelModel::InterceptResendRandom
    } else if let Some(path) = spec.strip_prefix("custom:") {
        return Ok(ChannelSpec::CustomFile(path.to_string()));
    } else {
        return Err(Error::invalid(format!("unknown channel spec {spec:?}")));
    };
    Ok(ChannelSpec::Model(model))
}

/// Builds a channel from raw matrix entries `[[[re,im]; 2]; 2]` per
/// operator, the layout of the `custom:` JSON files.
pub fn channel_from_entries(matrices: &[[[[f64; 2]; 2]; 2]]) -> Result<KrausChannel> {
    let ops = matrices
        .iter()
        .map(|m| {
            QMatrix::from_rows(&[
                vec![(m[0][0][0], m[0][0][1]), (m[0][1][0], m[0][1][1])],
                vec![(m[1][0][0], m[1][0][1]), (m[1][1][0], m[1][1][1])],
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    KrausChannel::new(ops, Some("custom".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_channels_are_complete() {
        let models = [
            ChannelModel::Identity,
            ChannelModel::BitFlip(0.3),
            ChannelModel::PhaseFlip(0.7),
            ChannelModel::Depolarizing(0.5),
            ChannelModel::InterceptResendZ,
            ChannelModel::InterceptResendRandom,
        ];
        for model in models {
            let ch = build_channel(&model).unwrap();
            assert!(
                validate_channel(&ch) <= 1e-10,
                "{}: residual {}",
                model.label(),
                validate_channel(&ch)
            );
        }
    }

    #[test]
    fn identity_residual_is_zero() {
        let ch = build_channel(&ChannelModel::Identity).unwrap();
        assert_eq!(validate_channel(&ch), 0.0);
        assert_eq!(ch.operators().len(), 1);
    }

    #[test]
    fn bitflip_completeness_exact() {
        let ch = build_channel(&ChannelModel::BitFlip(0.3)).unwrap();
        assert!(validate_channel(&ch) <= 1e-15);
    }

    #[test]
    fn intercept_resend_z_is_projector_complete() {
        let ch = build_channel(&ChannelModel::InterceptResendZ).unwrap();
        assert!(validate_channel(&ch) <= 1e-15);
        assert_eq!(ch.operators().len(), 2);
    }

    #[test]
    fn scaled_identity_residual() {
        // {I/2}: sum M^dagger M = I/4, so max deviation is 0.75
        let half = QMatrix::identity(2).scale(Cplx::real(0.5));
        let ch = KrausChannel {
            operators: vec![half],
            label: None,
        };
        assert!((ch.completeness_residual() - 0.75).abs() < 1e-15);
        assert!(ch.check_complete().is_err());
    }

    #[test]
    fn probability_bounds_enforced() {
        assert!(build_channel(&ChannelModel::BitFlip(-0.1)).is_err());
        assert!(build_channel(&ChannelModel::Depolarizing(1.2)).is_err());
        assert!(build_channel(&ChannelModel::PhaseFlip(f64::NAN)).is_err());
    }

    #[test]
    fn random_channel_is_deterministic_and_complete() {
        for seed in 0..50u64 {
            let k = 1 + (seed as usize) % 4;
            let a = random_channel(seed, k).unwrap();
            let b = random_channel(seed, k).unwrap();
            for (ma, mb) in a.operators().iter().zip(b.operators()) {
                assert!(ma.max_abs_diff(mb) == 0.0);
            }
            assert!(validate_channel(&a) <= 1e-10, "seed {seed}");
        }
    }

    #[test]
    fn single_kraus_random_channel_is_unitary() {
        for seed in 0..20u64 {
            let ch = random_channel(seed, 1).unwrap();
            let m = &ch.operators()[0];
            assert!(m.unitarity_residual() <= 1e-10, "seed {seed}");
        }
    }

    #[test]
    fn num_kraus_bounds() {
        assert!(random_channel(0, 0).is_err());
        assert!(random_channel(0, 9).is_err());
        assert!(random_channel(0, 8).is_ok());
    }

    #[test]
    fn saturating_channel_complete() {
        for &d2 in &[0.01, 0.05, 0.1, 0.25] {
            let ch = phase_bound_saturating_channel(d2).unwrap();
            assert!(validate_channel(&ch) <= 1e-12);
        }
        assert!(phase_bound_saturating_channel(0.6).is_err());
    }

    #[test]
    fn spec_grammar_round_trips() {
        match parse_channel_spec("depolarizing:0.25").unwrap() {
            ChannelSpec::Model(ChannelModel::Depolarizing(p)) => assert_eq!(p, 0.25),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_channel_spec("ir-random").unwrap(),
            ChannelSpec::Model(ChannelModel::InterceptResendRandom)
        ));
        match parse_channel_spec("custom:/tmp/ops.json").unwrap() {
            ChannelSpec::CustomFile(p) => assert_eq!(p, "/tmp/ops.json"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_channel_spec("garbage").is_err());
        assert!(parse_channel_spec("bitflip:x").is_err());
    }

    #[test]
    fn channel_from_entries_builds_pauli_x() {
        let entries = [[[[0.0, 0.0], [1.0, 0.0]], [[1.0, 0.0], [0.0, 0.0]]]];
        let ch = channel_from_entries(&entries).unwrap();
        assert!(ch.operators()[0].max_abs_diff(&pauli_x()) < 1e-15);
    }

    #[test]
    fn inv_sqrt_inverts() {
        let mut rng = Rng::new(77);
        for _ in 0..100 {
            let mut m = QMatrix::zeros(2);
            for i in 0..2 {
                for j in 0..2 {
                    m[(i, j)] = Cplx::new(rng.next_gaussian(), rng.next_gaussian());
                }
            }
            let t = m
                .dagger()
                .mul(&m)
                .add(&QMatrix::identity(2).scale(Cplx::real(0.1)));
            let w = inv_sqrt_2x2(&t).unwrap();
            // w t w = I  (w = t^(-1/2) is Hermitian for Hermitian t)
            let recon = w.mul(&t).mul(&w);
            assert!(recon.max_abs_diff(&QMatrix::identity(2)) < 1e-12);
        }
    }
}
