//! GF(2) linear algebra, linear codes, CSS pairs, syndrome decoding and
//! coset labels — the classical post-processing behind key distillation
//! and base-string refresh.
//!
//! Everything here is desk scale and exact: decoding goes through an
//! exhaustive coset-leader table (block length <= 24), distances are found
//! by codeword enumeration, and ties between minimum-weight leaders break
//! to the lexicographically smallest so transcripts reproduce bit for bit.

use crate::error::{Error, Result};
use crate::rng::Rng;
use serde::{Deserialize, Serialize};

/// Largest block length for which the exhaustive coset-leader table is built.
pub const MAX_DECODE_N: usize = 24;
/// Largest block length a named code will materialize matrices for.
pub const MAX_MATERIALIZED_N: usize = 4096;

// ---------------------------------------------------------------------------
// BitString

/// An ordered sequence of bits. Keys of aborted sessions are empty; all code
/// operations validate the lengths they need.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct BitString {
    bits: Vec<u8>,
}

impl BitString {
    pub fn zeros(len: usize) -> Self {
        BitString { bits: vec![0; len] }
    }

    pub fn empty() -> Self {
        BitString { bits: Vec::new() }
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::invalid("bit values must be 0 or 1"));
        }
        Ok(BitString {
            bits: bits.to_vec(),
        })
    }

    pub fn from_str01(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0u8),
                '1' => Ok(1u8),
                other => Err(Error::invalid(format!("bad bit character {other:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Ok(BitString { bits })
    }

    pub fn random(len: usize, rng: &mut Rng) -> Self {
        BitString {
            bits: (0..len).map(|_| rng.next_bit()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, i: usize) -> u8 {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, v: u8) {
        debug_assert!(v <= 1);
        self.bits[i] = v;
    }

    pub fn flip(&mut self, i: usize) {
        self.bits[i] ^= 1;
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn weight(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        if self.len() != other.len() {
            return Err(Error::invalid(format!(
                "xor length mismatch: {} vs {}",
                self.len(),
                other.len()
            )));
        }
        Ok(BitString {
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(a, b)| a ^ b)
                .collect(),
        })
    }

    /// The first `m` bits.
    pub fn prefix(&self, m: usize) -> BitString {
        BitString {
            bits: self.bits[..m.min(self.len())].to_vec(),
        }
    }

    pub fn extend_from(&mut self, other: &BitString) {
        self.bits.extend_from_slice(&other.bits);
    }

    fn packed(&self) -> Vec<u64> {
        let words = self.len().div_ceil(64).max(1);
        let mut out = vec![0u64; words];
        for (i, &b) in self.bits.iter().enumerate() {
            if b == 1 {
                out[i / 64] |= 1u64 << (i % 64);
            }
        }
        out
    }
}

impl std::fmt::Display for BitString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

impl std::fmt::Debug for BitString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitString({self})")
    }
}

impl Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        BitString::from_str01(&s).map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// BitMatrix

/// Dense GF(2) matrix with u64-packed rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    wpr: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let wpr = cols.div_ceil(64).max(1);
        BitMatrix {
            rows,
            cols,
            wpr,
            data: vec![0; rows * wpr],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = BitMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn from_rows(rows: &[BitString]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("matrix needs at least one row"));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("rows have unequal lengths"));
        }
        let mut m = BitMatrix::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            for j in 0..cols {
                m.set(i, j, r.get(j));
            }
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> u8 {
        ((self.data[r * self.wpr + c / 64] >> (c % 64)) & 1) as u8
    }

    pub fn set(&mut self, r: usize, c: usize, v: u8) {
        let idx = r * self.wpr + c / 64;
        let mask = 1u64 << (c % 64);
        if v == 1 {
            self.data[idx] |= mask;
        } else {
            self.data[idx] &= !mask;
        }
    }

    fn row_slice(&self, r: usize) -> &[u64] {
        &self.data[r * self.wpr..(r + 1) * self.wpr]
    }

    fn row_xor(&mut self, dst: usize, src: usize) {
        let (d, s) = (dst * self.wpr, src * self.wpr);
        for w in 0..self.wpr {
            let v = self.data[s + w];
            self.data[d + w] ^= v;
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for w in 0..self.wpr {
            self.data.swap(a * self.wpr + w, b * self.wpr + w);
        }
    }

    pub fn row_to_bitstring(&self, r: usize) -> BitString {
        let mut out = BitString::zeros(self.cols);
        for c in 0..self.cols {
            out.set(c, self.get(r, c));
        }
        out
    }

    /// Rows as 0/1 vectors, the JSON export layout.
    pub fn rows_as_vecs(&self) -> Vec<Vec<u8>> {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.get(r, c)).collect())
            .collect()
    }

    /// Matrix-vector product over GF(2): one output bit per row.
    pub fn mul_vec(&self, v: &BitString) -> Result<BitString> {
        if v.len() != self.cols {
            return Err(Error::invalid(format!(
                "matrix has {} columns, vector has {} bits",
                self.cols,
                v.len()
            )));
        }
        let packed = v.packed();
        let mut out = BitString::zeros(self.rows);
        for r in 0..self.rows {
            let mut acc = 0u64;
            for (a, b) in self.row_slice(r).iter().zip(&packed) {
                acc ^= a & b;
            }
            out.set(r, (acc.count_ones() & 1) as u8);
        }
        Ok(out)
    }

    /// In-place Gauss-Jordan reduction; returns the pivot columns.
    fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row == self.rows {
                break;
            }
            if let Some(pr) = (row..self.rows).find(|&i| self.get(i, col) == 1) {
                self.swap_rows(row, pr);
                for i in 0..self.rows {
                    if i != row && self.get(i, col) == 1 {
                        self.row_xor(i, row);
                    }
                }
                pivots.push(col);
                row += 1;
            }
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }

    /// Basis of the right nullspace {x : M x^T = 0}, deterministic (free
    /// columns in ascending order).
    pub fn nullspace_basis(&self) -> Vec<BitString> {
        let mut r = self.clone();
        let pivots = r.rref();
        let pivot_set: std::collections::HashSet<usize> = pivots.iter().copied().collect();
        let mut basis = Vec::new();
        for f in 0..self.cols {
            if pivot_set.contains(&f) {
                continue;
            }
            let mut x = BitString::zeros(self.cols);
            x.set(f, 1);
            for (j, &p) in pivots.iter().enumerate() {
                x.set(p, r.get(j, f));
            }
            basis.push(x);
        }
        basis
    }
}

// ---------------------------------------------------------------------------
// LinearCode

/// Precomputed coset-leader table: for each syndrome, the minimum-weight
/// error pattern (lexicographically smallest on ties).
#[derive(Debug, Clone)]
struct DecodeTable {
    /// Leader words packed MSB-first (bit n-1-i holds position i), so
    /// ascending numeric order is ascending lexicographic order.
    leaders: Vec<u32>,
    weights: Vec<u8>,
    /// Correction radius floor((d-1)/2) when the distance is known.
    radius: Option<usize>,
}

/// A binary linear [n, k] code with explicit generator and parity-check
/// matrices.
#[derive(Debug, Clone)]
pub struct LinearCode {
    n: usize,
    k: usize,
    generator: BitMatrix,
    parity: BitMatrix,
    min_distance: Option<usize>,
    table: Option<DecodeTable>,
}

impl LinearCode {
    fn assemble(generator: BitMatrix, parity: BitMatrix) -> Result<Self> {
        let n = generator.cols();
        let k = generator.rows();
        if n == 0 || k == 0 || k >= n {
            return Err(Error::invalid(format!(
                "code dimensions [{n}, {k}] must satisfy 0 < k < n"
            )));
        }
        if parity.cols() != n || parity.rows() != n - k {
            return Err(Error::invalid(format!(
                "parity matrix must be {}x{n}, got {}x{}",
                n - k,
                parity.rows(),
                parity.cols()
            )));
        }
        if generator.rank() != k {
            return Err(Error::invalid("generator matrix is rank-deficient"));
        }
        if parity.rank() != n - k {
            return Err(Error::invalid("parity matrix is rank-deficient"));
        }
        for i in 0..k {
            let row = generator.row_to_bitstring(i);
            if parity.mul_vec(&row)?.weight() != 0 {
                return Err(Error::invalid(format!(
                    "generator row {i} is not in the parity kernel"
                )));
            }
        }
        let mut code = LinearCode {
            n,
            k,
            generator,
            parity,
            min_distance: None,
            table: None,
        };
        if k <= 20 {
            code.min_distance = Some(code.compute_min_distance());
        }
        if n <= MAX_DECODE_N && n - k <= 20 {
            code.table = Some(code.build_decode_table());
        }
        Ok(code)
    }

    pub fn from_generator(generator: BitMatrix) -> Result<Self> {
        let basis = generator.nullspace_basis();
        let parity = BitMatrix::from_rows(&basis)?;
        LinearCode::assemble(generator, parity)
    }

    pub fn from_parity(parity: BitMatrix) -> Result<Self> {
        let basis = parity.nullspace_basis();
        let generator = BitMatrix::from_rows(&basis)?;
        LinearCode::assemble(generator, parity)
    }

    /// Systematic seed-deterministic code: G = [I | R], H = [R^T | I].
    pub fn systematic_random(n: usize, k: usize, seed: u64) -> Result<Self> {
        if n > MAX_MATERIALIZED_N {
            return Err(Error::invalid(format!(
                "code length {n} exceeds the materialization limit {MAX_MATERIALIZED_N}; use trunc:<n>:<k>"
            )));
        }
        if k == 0 || k >= n {
            return Err(Error::invalid(format!(
                "code dimensions [{n}, {k}] must satisfy 0 < k < n"
            )));
        }
        let mut rng = Rng::fork(seed, "systematic-code");
        let mut generator = BitMatrix::zeros(k, n);
        let mut parity = BitMatrix::zeros(n - k, n);
        for i in 0..k {
            generator.set(i, i, 1);
            for j in 0..(n - k) {
                let bit = rng.next_bit();
                generator.set(i, k + j, bit);
                parity.set(j, i, bit);
            }
        }
        for j in 0..(n - k) {
            parity.set(j, k + j, 1);
        }
        LinearCode::assemble(generator, parity)
    }

    /// Code of words vanishing on the first n-k coordinates; its syndrome
    /// map is plain truncation, usable at any length.
    pub fn truncation(n: usize, k: usize) -> Result<Self> {
        if n > MAX_MATERIALIZED_N {
            return Err(Error::invalid(format!(
                "code length {n} exceeds the materialization limit {MAX_MATERIALIZED_N}"
            )));
        }
        if k == 0 || k >= n {
            return Err(Error::invalid(format!(
                "code dimensions [{n}, {k}] must satisfy 0 < k < n"
            )));
        }
        let m = n - k;
        let mut generator = BitMatrix::zeros(k, n);
        for i in 0..k {
            generator.set(i, m + i, 1);
        }
        let mut parity = BitMatrix::zeros(m, n);
        for j in 0..m {
            parity.set(j, j, 1);
        }
        LinearCode::assemble(generator, parity)
    }

    pub fn repetition(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("repetition code needs length >= 2"));
        }
        let mut g = BitMatrix::zeros(1, n);
        for j in 0..n {
            g.set(0, j, 1);
        }
        LinearCode::from_generator(g)
    }

    /// The [7, 4, 3] Hamming code; parity-check columns are the binary
    /// numerals 1..7.
    pub fn hamming7() -> Self {
        let mut h = BitMatrix::zeros(3, 7);
        for col in 0..7u32 {
            let value = col + 1;
            for row in 0..3 {
                h.set(row as usize, col as usize, ((value >> (2 - row)) & 1) as u8);
            }
        }
        LinearCode::from_parity(h).expect("Hamming [7,4] construction")
    }

    /// The [7, 3] dual of the Hamming code (the Steane pair's inner code).
    pub fn dual_hamming7() -> Self {
        let hamming = LinearCode::hamming7();
        LinearCode::from_generator(hamming.parity.clone()).expect("dual Hamming [7,3] construction")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn generator(&self) -> &BitMatrix {
        &self.generator
    }

    pub fn parity(&self) -> &BitMatrix {
        &self.parity
    }

    pub fn min_distance(&self) -> Option<usize> {
        self.min_distance
    }

    fn compute_min_distance(&self) -> usize {
        // Gray-code walk over all nonzero messages
        let rows: Vec<Vec<u64>> = (0..self.k)
            .map(|i| self.generator.row_slice(i).to_vec())
            .collect();
        let wpr = rows[0].len();
        let mut current = vec![0u64; wpr];
        let mut best = self.n;
        for m in 1u64..(1u64 << self.k) {
            let changed = m.trailing_zeros() as usize;
            for w in 0..wpr {
                current[w] ^= rows[changed][w];
            }
            let weight: u32 = current.iter().map(|w| w.count_ones()).sum();
            if weight > 0 {
                best = best.min(weight as usize);
            }
        }
        best
    }

    fn build_decode_table(&self) -> DecodeTable {
        let m = self.n - self.k;
        // syndrome of each unit vector, packed row i -> bit i
        let col_syndrome: Vec<u32> = (0..self.n)
            .map(|pos| {
                let mut s = 0u32;
                for row in 0..m {
                    if self.parity.get(row, pos) == 1 {
                        s |= 1 << row;
                    }
                }
                s
            })
            .collect();
        let size = 1usize << m;
        let mut leaders = vec![0u32; size];
        let mut weights = vec![u8::MAX; size];
        // MSB-first packing makes ascending v ascending lexicographic order,
        // so the first word seen at a given weight is the lex-smallest.
        for v in 0..(1u32 << self.n) {
            let w = v.count_ones() as u8;
            let mut s = 0u32;
            let mut rest = v;
            while rest != 0 {
                let bit = rest.trailing_zeros() as usize;
                let pos = self.n - 1 - bit;
                s ^= col_syndrome[pos];
                rest &= rest - 1;
            }
            let s = s as usize;
            if w < weights[s] {
                weights[s] = w;
                leaders[s] = v;
            }
        }
        debug_assert!(weights.iter().all(|&w| w != u8::MAX));
        DecodeTable {
            leaders,
            weights,
            radius: self.min_distance.map(|d| (d - 1) / 2),
        }
    }

    fn unpack_msb_first(&self, v: u32) -> BitString {
        let mut out = BitString::zeros(self.n);
        for pos in 0..self.n {
            out.set(pos, ((v >> (self.n - 1 - pos)) & 1) as u8);
        }
        out
    }

    fn syndrome_index(&self, word: &BitString) -> Result<usize> {
        let s = self.syndrome(word)?;
        let mut idx = 0usize;
        for i in 0..s.len() {
            idx |= (s.get(i) as usize) << i;
        }
        Ok(idx)
    }

    /// message * G.
    pub fn encode(&self, message: &BitString) -> Result<BitString> {
        if message.len() != self.k {
            return Err(Error::invalid(format!(
                "message length {} != code dimension {}",
                message.len(),
                self.k
            )));
        }
        let mut acc = vec![0u64; self.generator.wpr];
        for i in 0..self.k {
            if message.get(i) == 1 {
                for (a, b) in acc.iter_mut().zip(self.generator.row_slice(i)) {
                    *a ^= b;
                }
            }
        }
        let mut out = BitString::zeros(self.n);
        for j in 0..self.n {
            out.set(j, ((acc[j / 64] >> (j % 64)) & 1) as u8);
        }
        Ok(out)
    }

    /// H * word^T.
    pub fn syndrome(&self, word: &BitString) -> Result<BitString> {
        if word.len() != self.n {
            return Err(Error::invalid(format!(
                "word length {} != block length {}",
                word.len(),
                self.n
            )));
        }
        self.parity.mul_vec(word)
    }

    /// Nearest-codeword decoding via the coset-leader table.
    pub fn syndrome_decode(&self, word: &BitString) -> Result<BitString> {
        let table = self.table.as_ref().ok_or_else(|| {
            Error::invalid(format!(
                "no decode table for [{}, {}]: block length above {MAX_DECODE_N}",
                self.n, self.k
            ))
        })?;
        let idx = self.syndrome_index(word)?;
        let leader = self.unpack_msb_first(table.leaders[idx]);
        word.xor(&leader)
    }

    /// As `syndrome_decode`, but refuses syndromes whose leader lies beyond
    /// the guaranteed correction radius.
    pub fn syndrome_decode_strict(&self, word: &BitString) -> Result<BitString> {
        let table = self.table.as_ref().ok_or_else(|| {
            Error::invalid(format!(
                "no decode table for [{}, {}]: block length above {MAX_DECODE_N}",
                self.n, self.k
            ))
        })?;
        let radius = table
            .radius
            .ok_or_else(|| Error::invalid("strict decoding needs a known minimum distance"))?;
        let idx = self.syndrome_index(word)?;
        if table.weights[idx] as usize > radius {
            return Err(Error::DecodeFailure(format!(
                "syndrome {idx} needs a weight-{} correction, beyond radius {radius}",
                table.weights[idx]
            )));
        }
        let leader = self.unpack_msb_first(table.leaders[idx]);
        word.xor(&leader)
    }
}

/// True when every generator row of `c2` is a codeword of `c1`.
pub fn is_subcode(c2: &LinearCode, c1: &LinearCode) -> Result<bool> {
    if c2.n() != c1.n() {
        return Err(Error::invalid(format!(
            "subcode check needs equal lengths, got {} and {}",
            c2.n(),
            c1.n()
        )));
    }
    for i in 0..c2.k() {
        let row = c2.generator.row_to_bitstring(i);
        if c1.syndrome(&row)?.weight() != 0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Parses the code grammar: `hamming7`, `dual-hamming7`, `repetition:<n>`,
/// `random:<n>:<k>:<seed>`, `trunc:<n>:<k>`.
pub fn named_code(spec: &str) -> Result<LinearCode> {
    let parse_usize = |s: &str, what: &str| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|_| Error::invalid(format!("bad {what} in code spec: {s:?}")))
    };
    if spec == "hamming7" {
        return Ok(LinearCode::hamming7());
    }
    if spec == "dual-hamming7" {
        return Ok(LinearCode::dual_hamming7());
    }
    if let Some(rest) = spec.strip_prefix("repetition:") {
        return LinearCode::repetition(parse_usize(rest, "length")?);
    }
    if let Some(rest) = spec.strip_prefix("random:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::invalid(format!(
                "random code spec must be random:<n>:<k>:<seed>, got {spec:?}"
            )));
        }
        let n = parse_usize(parts[0], "length")?;
        let k = parse_usize(parts[1], "dimension")?;
        let seed = parts[2]
            .parse::<u64>()
            .map_err(|_| Error::invalid(format!("bad seed in code spec: {:?}", parts[2])))?;
        return LinearCode::systematic_random(n, k, seed);
    }
    if let Some(rest) = spec.strip_prefix("trunc:") {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 2 {
            return Err(Error::invalid(format!(
                "truncation code spec must be trunc:<n>:<k>, got {spec:?}"
            )));
        }
        return LinearCode::truncation(
            parse_usize(parts[0], "length")?,
            parse_usize(parts[1], "dimension")?,
        );
    }
    Err(Error::invalid(format!("unknown code name {spec:?}")))
}

// ---------------------------------------------------------------------------
// CssCode

/// A CSS pair Q(C1, C2) with C2 a proper subcode of C1. The quotient C1/C2
/// carries the distilled key: `coset_label` maps a C1 codeword to its class.
#[derive(Debug, Clone)]
pub struct CssCode {
    c1: LinearCode,
    c2: LinearCode,
    /// Basis of C1 whose first k2 rows generate C2 (RREF form).
    basis_rref: BitMatrix,
    /// Row transform with basis_rref = transform * basis.
    transform: BitMatrix,
    pivots: Vec<usize>,
}

impl CssCode {
    pub fn new(c1: LinearCode, c2: LinearCode) -> Result<Self> {
        if c1.n() != c2.n() {
            return Err(Error::invalid(format!(
                "CSS pair needs equal lengths, got {} and {}",
                c1.n(),
                c2.n()
            )));
        }
        if !is_subcode(&c2, &c1)? {
            return Err(Error::invalid("C2 is not a subcode of C1"));
        }
        if c2.k() >= c1.k() {
            return Err(Error::invalid(format!(
                "CSS pair needs k1 > k2, got k1 = {}, k2 = {}",
                c1.k(),
                c2.k()
            )));
        }
        // Basis of C1: the C2 generators first, then C1 generator rows that
        // extend them (greedy, deterministic).
        let mut rows: Vec<BitString> = (0..c2.k())
            .map(|i| c2.generator.row_to_bitstring(i))
            .collect();
        for i in 0..c1.k() {
            if rows.len() == c1.k() {
                break;
            }
            let cand = c1.generator.row_to_bitstring(i);
            let mut probe = rows.clone();
            probe.push(cand.clone());
            if BitMatrix::from_rows(&probe)?.rank() == probe.len() {
                rows.push(cand);
            }
        }
        if rows.len() != c1.k() {
            return Err(Error::numeric("failed to extend C2 basis to a C1 basis"));
        }
        let basis = BitMatrix::from_rows(&rows)?;
        // Gauss-Jordan on [basis | I] to solve coordinate systems later
        let k1 = c1.k();
        let n = c1.n();
        let mut aug = BitMatrix::zeros(k1, n + k1);
        for r in 0..k1 {
            for c in 0..n {
                aug.set(r, c, basis.get(r, c));
            }
            aug.set(r, n + r, 1);
        }
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..n {
            if row == k1 {
                break;
            }
            if let Some(pr) = (row..k1).find(|&i| aug.get(i, col) == 1) {
                aug.swap_rows(row, pr);
                for i in 0..k1 {
                    if i != row && aug.get(i, col) == 1 {
                        aug.row_xor(i, row);
                    }
                }
                pivots.push(col);
                row += 1;
            }
        }
        if pivots.len() != k1 {
            return Err(Error::numeric("C1 basis failed to reduce"));
        }
        let mut basis_rref = BitMatrix::zeros(k1, n);
        let mut transform = BitMatrix::zeros(k1, k1);
        for r in 0..k1 {
            for c in 0..n {
                basis_rref.set(r, c, aug.get(r, c));
            }
            for c in 0..k1 {
                transform.set(r, c, aug.get(r, n + c));
            }
        }
        Ok(CssCode {
            c1,
            c2,
            basis_rref,
            transform,
            pivots,
        })
    }

    /// The default pair: the Hamming code over its dual.
    pub fn steane_pair() -> Self {
        CssCode::new(LinearCode::hamming7(), LinearCode::dual_hamming7())
            .expect("Steane pair construction")
    }

    pub fn c1(&self) -> &LinearCode {
        &self.c1
    }

    pub fn c2(&self) -> &LinearCode {
        &self.c2
    }

    /// Key bits contributed per block.
    pub fn label_len(&self) -> usize {
        self.c1.k() - self.c2.k()
    }

    /// The class of a C1 codeword in C1/C2: express the word in the fixed
    /// C1 basis and keep the coefficients outside C2's span. Words get equal
    /// labels exactly when they differ by a C2 codeword.
    pub fn coset_label(&self, codeword: &BitString) -> Result<BitString> {
        if codeword.len() != self.c1.n() {
            return Err(Error::invalid(format!(
                "word length {} != block length {}",
                codeword.len(),
                self.c1.n()
            )));
        }
        if self.c1.syndrome(codeword)?.weight() != 0 {
            return Err(Error::invalid("word is not a codeword of C1"));
        }
        let k1 = self.c1.k();
        // coefficients in the RREF basis read off at the pivot columns
        let mut y = BitString::zeros(k1);
        for (j, &p) in self.pivots.iter().enumerate() {
            y.set(j, codeword.get(p));
        }
        // consistency: y * basis_rref must reproduce the word
        let mut recon = BitString::zeros(self.c1.n());
        for j in 0..k1 {
            if y.get(j) == 1 {
                recon = recon.xor(&self.basis_rref.row_to_bitstring(j))?;
            }
        }
        if recon != *codeword {
            return Err(Error::numeric(
                "codeword failed to decompose in the C1 basis",
            ));
        }
        // back to the original basis ordering: x = y * transform
        let mut x = BitString::zeros(k1);
        for i in 0..k1 {
            let mut acc = 0u8;
            for j in 0..k1 {
                acc ^= y.get(j) & self.transform.get(j, i);
            }
            x.set(i, acc);
        }
        let mut label = BitString::zeros(self.label_len());
        for i in 0..self.label_len() {
            label.set(i, x.get(self.c2.k() + i));
        }
        Ok(label)
    }
}

/// Coset of the base string with respect to the refresh code: the syndrome
/// is the deterministic representative, of length n - k'.
pub fn refresh_base(b: &BitString, c2_prime: &LinearCode) -> Result<BitString> {
    c2_prime.syndrome(b)
}
