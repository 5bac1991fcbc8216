//! Complex scalars, small dense complex matrices, and a Hermitian
//! eigensolver.
//!
//! Everything in the crate lives in dimensions 2, 4 and 16, so the matrix
//! type is a plain row-major `Vec` with no sparsity or blocking. The
//! eigensolver is a cyclic complex Jacobi iteration; at 16x16 it converges
//! in a handful of sweeps and is the strongest positive-semidefiniteness
//! test available to the state validators.

use crate::error::{Error, Result};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// Complex number with `f64` parts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Cplx {
    pub re: f64,
    pub im: f64,
}

pub const C_ZERO: Cplx = Cplx { re: 0.0, im: 0.0 };
pub const C_ONE: Cplx = Cplx { re: 1.0, im: 0.0 };

impl Cplx {
    pub const fn new(re: f64, im: f64) -> Self {
        Cplx { re, im }
    }

    pub const fn real(re: f64) -> Self {
        Cplx { re, im: 0.0 }
    }

    pub fn conj(self) -> Self {
        Cplx::new(self.re, -self.im)
    }

    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn abs(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(self, s: f64) -> Self {
        Cplx::new(self.re * s, self.im * s)
    }

    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl Add for Cplx {
    type Output = Cplx;
    fn add(self, rhs: Cplx) -> Cplx {
        Cplx::new(self.re + rhs.re, self.im + rhs.im)
    }
}

impl AddAssign for Cplx {
    fn add_assign(&mut self, rhs: Cplx) {
        self.re += rhs.re;
        self.im += rhs.im;
    }
}

impl Sub for Cplx {
    type Output = Cplx;
    fn sub(self, rhs: Cplx) -> Cplx {
        Cplx::new(self.re - rhs.re, self.im - rhs.im)
    }
}

impl Mul for Cplx {
    type Output = Cplx;
    fn mul(self, rhs: Cplx) -> Cplx {
        Cplx::new(
            self.re * rhs.re - self.im * rhs.im,
            self.re * rhs.im + self.im * rhs.re,
        )
    }
}

impl Neg for Cplx {
    type Output = Cplx;
    fn neg(self) -> Cplx {
        Cplx::new(-self.re, -self.im)
    }
}

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct QMatrix {
    dim: usize,
    entries: Vec<Cplx>,
}

impl QMatrix {
    pub fn zeros(dim: usize) -> Self {
        QMatrix {
            dim,
            entries: vec![C_ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = QMatrix::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = C_ONE;
        }
        m
    }

    /// Builds a matrix from rows of (re, im) pairs.
    pub fn from_rows(rows: &[Vec<(f64, f64)>]) -> Result<Self> {
        let dim = rows.len();
        let mut m = QMatrix::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::invalid(format!(
                    "row {i} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            for (j, &(re, im)) in row.iter().enumerate() {
                m[(i, j)] = Cplx::new(re, im);
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Cplx] {
        &self.entries
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|c| c.is_finite())
    }

    pub fn mul(&self, rhs: &QMatrix) -> QMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let n = self.dim;
        let mut out = QMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &QMatrix) -> QMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let mut out = self.clone();
        for (o, r) in out.entries.iter_mut().zip(rhs.entries.iter()) {
            *o += *r;
        }
        out
    }

    pub fn scale(&self, s: Cplx) -> QMatrix {
        let mut out = self.clone();
        for e in &mut out.entries {
            *e = *e * s;
        }
        out
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> QMatrix {
        let n = self.dim;
        let mut out = QMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Cplx {
        (0..self.dim).fold(C_ZERO, |acc, i| acc + self[(i, i)])
    }

    /// max_ij |A_ij - B_ij|.
    pub fn max_abs_diff(&self, rhs: &QMatrix) -> f64 {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        self.entries
            .iter()
            .zip(rhs.entries.iter())
            .map(|(a, b)| (*a - *b).abs())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_residual(&self) -> f64 {
        self.max_abs_diff(&self.dagger())
    }

    pub fn unitarity_residual(&self) -> f64 {
        self.dagger()
            .mul(self)
            .max_abs_diff(&QMatrix::identity(self.dim))
    }

    /// Kronecker product; `self` acts on the more significant index.
    pub fn kron(&self, rhs: &QMatrix) -> QMatrix {
        let (a, b) = (self.dim, rhs.dim);
        let n = a * b;
        let mut out = QMatrix::zeros(n);
        for i in 0..a {
            for j in 0..a {
                let v = self[(i, j)];
                if v.re == 0.0 && v.im == 0.0 {
                    continue;
                }
                for k in 0..b {
                    for l in 0..b {
                        out[(i * b + k, j * b + l)] = v * rhs[(k, l)];
                    }
                }
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for QMatrix {
    type Output = Cplx;
    fn index(&self, (i, j): (usize, usize)) -> &Cplx {
        &self.entries[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for QMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cplx {
        &mut self.entries[i * self.dim + j]
    }
}

/// Pauli and Hadamard 2x2 constants.
pub fn pauli_x() -> QMatrix {
    QMatrix::from_rows(&[vec![(0.0, 0.0), (1.0, 0.0)], vec![(1.0, 0.0), (0.0, 0.0)]]).unwrap()
}

pub fn pauli_y() -> QMatrix {
    QMatrix::from_rows(&[vec![(0.0, 0.0), (0.0, -1.0)], vec![(0.0, 1.0), (0.0, 0.0)]]).unwrap()
}

pub fn pauli_z() -> QMatrix {
    QMatrix::from_rows(&[vec![(1.0, 0.0), (0.0, 0.0)], vec![(0.0, 0.0), (-1.0, 0.0)]]).unwrap()
}

pub fn hadamard() -> QMatrix {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    QMatrix::from_rows(&[vec![(h, 0.0), (h, 0.0)], vec![(h, 0.0), (-h, 0.0)]]).unwrap()
}

/// Embeds a single-qubit operator on qubit `q` (1-based) of an `n_qubits`
/// register, qubit 1 most significant.
pub fn embed_single(op: &QMatrix, q: usize, n_qubits: usize) -> QMatrix {
    assert_eq!(op.dim(), 2);
    assert!(q >= 1 && q <= n_qubits);
    let mut out = QMatrix::identity(1);
    for pos in 1..=n_qubits {
        let factor = if pos == q {
            op.clone()
        } else {
            QMatrix::identity(2)
        };
        out = out.kron(&factor);
    }
    out
}

/// Reduced 2x2 state of qubit `q` (1-based, qubit 1 most significant) of a
/// register state, by partial trace over the other qubits.
pub fn qubit_marginal(rho: &QMatrix, q: usize, n_qubits: usize) -> QMatrix {
    assert_eq!(rho.dim(), 1 << n_qubits);
    assert!(q >= 1 && q <= n_qubits);
    let shift = n_qubits - q; // bit position of qubit q inside the index
    let mut out = QMatrix::zeros(2);
    let rest = 1 << (n_qubits - 1);
    for a in 0..2usize {
        for b in 0..2usize {
            let mut acc = C_ZERO;
            for r in 0..rest {
                // splice the qubit value into bit `shift` of the raw index
                let low = r & ((1 << shift) - 1);
                let high = (r >> shift) << (shift + 1);
                let i = high | (a << shift) | low;
                let j = high | (b << shift) | low;
                acc += rho[(i, j)];
            }
            out[(a, b)] = acc;
        }
    }
    out
}

/// Eigen decomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Returns eigenvalues (ascending) and, as columns of the second
/// element, the corresponding orthonormal eigenvectors.
pub fn hermitian_eigen(a: &QMatrix) -> Result<(Vec<f64>, QMatrix)> {
    let n = a.dim();
    if a.hermiticity_residual() > 1e-8 {
        return Err(Error::invalid(
            "hermitian_eigen: matrix is not Hermitian".to_string(),
        ));
    }
    let mut m = a.clone();
    // Symmetrize exactly so rounding in the input cannot bias the sweep.
    let dag = m.dagger();
    m = m.add(&dag).scale(Cplx::real(0.5));
    let mut v = QMatrix::identity(n);

    let off = |m: &QMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)].norm_sqr();
                }
            }
        }
        s
    };

    for _sweep in 0..60 {
        if off(&m) < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let r = apq.abs();
                if r < 1e-300 {
                    continue;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                // phase of the pivot entry
                let phase = apq.scale(1.0 / r);
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // J = I except J[p][p]=c, J[p][q]=s*phase, J[q][p]=-s*conj(phase), J[q][q]=c
                // Column update: M <- M J
                for i in 0..n {
                    let mip = m[(i, p)];
                    let miq = m[(i, q)];
                    m[(i, p)] = mip.scale(c) - miq * phase.conj().scale(s);
                    m[(i, q)] = mip * phase.scale(s) + miq.scale(c);
                }
                // Row update: M <- J^dagger M
                for j in 0..n {
                    let mpj = m[(p, j)];
                    let mqj = m[(q, j)];
                    m[(p, j)] = mpj.scale(c) - mqj * phase.scale(s);
                    m[(q, j)] = mpj * phase.conj().scale(s) + mqj.scale(c);
                }
                // Accumulate eigenvectors: V <- V J
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip.scale(c) - viq * phase.conj().scale(s);
                    v[(i, q)] = vip * phase.scale(s) + viq.scale(c);
                }
            }
        }
    }

    if off(&m) > 1e-18 {
        return Err(Error::numeric(format!(
            "hermitian_eigen: Jacobi failed to converge, off-norm {:.3e}",
            off(&m).sqrt()
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    let eig: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    order.sort_by(|&i, &j| eig[i].total_cmp(&eig[j]));
    let values: Vec<f64> = order.iter().map(|&i| eig[i]).collect();
    let mut vectors = QMatrix::zeros(n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for i in 0..n {
            vectors[(i, new_col)] = v[(i, old_col)];
        }
    }
    Ok((values, vectors))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(a: &QMatrix) -> Result<f64> {
    let (vals, _) = hermitian_eigen(a)?;
    Ok(vals[0])
}
