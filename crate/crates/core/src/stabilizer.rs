//! Bit-packed stabilizer tableau for Clifford circuits on |0...0>.
//!
//! The tableau holds 2n signed Pauli generators: destabilizer rows 0..n and
//! stabilizer rows n..2n, with row n+i pairing destabilizer i. Storage is
//! column-major: each qubit owns an X column and a Z column of 2n bits, so
//! a gate update is a handful of word-wide AND/XOR sweeps. All queries are
//! non-destructive: expectations are computed by expressing the observable
//! in the stabilizer group, never by collapsing a measurement.

use crate::gate::{CliffordGate, GateKind};
use crate::pauli::{Pauli, PauliString};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilizerTableau {
    n: usize,
    /// Words per 2n-bit column.
    words: usize,
    /// X columns, qubit-major: column q occupies x[q*words .. (q+1)*words].
    x: Vec<u64>,
    /// Z columns, same layout.
    z: Vec<u64>,
    /// Sign bits, one per row (set = negative generator).
    r: Vec<u64>,
}

#[inline]
fn bit_at(buf: &[u64], i: usize) -> bool {
    buf[i / 64] >> (i % 64) & 1 == 1
}

#[inline]
fn set_bit(buf: &mut [u64], i: usize) {
    buf[i / 64] |= 1 << (i % 64);
}

impl StabilizerTableau {
    /// Tableau of |0...0>: destabilizers X_i, stabilizers Z_i, all positive.
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "tableau needs at least one qubit");
        let words = (2 * n).div_ceil(64);
        let mut t = StabilizerTableau {
            n,
            words,
            x: vec![0; n * words],
            z: vec![0; n * words],
            r: vec![0; words],
        };
        for q in 0..n {
            set_bit(&mut t.x[q * words..(q + 1) * words], q);
            set_bit(&mut t.z[q * words..(q + 1) * words], n + q);
        }
        t
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Apply all gates in order to |0...0>.
    pub fn run_circuit(gates: &[CliffordGate], n: usize) -> Self {
        let mut t = StabilizerTableau::new(n);
        t.apply_all(gates);
        t
    }

    pub fn apply_all(&mut self, gates: &[CliffordGate]) {
        for g in gates {
            self.apply(g);
        }
    }

    /// Conjugate every generator by the gate. Panics on out-of-range
    /// indices (validate gates at the input boundary).
    pub fn apply(&mut self, gate: &CliffordGate) {
        let w = self.words;
        let t = gate.target;
        assert!(t < self.n, "target {t} out of range for {} qubits", self.n);
        if let Some(c) = gate.control {
            assert!(c < self.n, "control {c} out of range for {} qubits", self.n);
            assert_ne!(c, t, "two-qubit gate needs distinct qubits");
            for k in 0..w {
                let xc = self.x[c * w + k];
                let zc = self.z[c * w + k];
                let xt = self.x[t * w + k];
                let zt = self.z[t * w + k];
                match gate.kind {
                    GateKind::Cz => {
                        self.r[k] ^= xc & xt & (zc ^ zt);
                        self.z[c * w + k] = zc ^ xt;
                        self.z[t * w + k] = zt ^ xc;
                    }
                    GateKind::Cnot => {
                        self.r[k] ^= xc & zt & !(xt ^ zc);
                        self.x[t * w + k] = xt ^ xc;
                        self.z[c * w + k] = zc ^ zt;
                    }
                    GateKind::CnotX => {
                        self.r[k] ^= (xc & zt & !(xt ^ zc)) ^ zt;
                        self.x[t * w + k] = xt ^ xc;
                        self.z[c * w + k] = zc ^ zt;
                    }
                    _ => unreachable!("single-qubit kind with control"),
                }
            }
        } else {
            for k in 0..w {
                let xt = self.x[t * w + k];
                let zt = self.z[t * w + k];
                match gate.kind {
                    GateKind::I => {}
                    GateKind::X => self.r[k] ^= zt,
                    GateKind::Y => self.r[k] ^= xt ^ zt,
                    GateKind::Z => self.r[k] ^= xt,
                    GateKind::H => {
                        self.r[k] ^= xt & zt;
                        self.x[t * w + k] = zt;
                        self.z[t * w + k] = xt;
                    }
                    GateKind::S => {
                        self.r[k] ^= xt & zt;
                        self.z[t * w + k] = zt ^ xt;
                    }
                    GateKind::Sdg => {
                        self.r[k] ^= xt & !zt;
                        self.z[t * w + k] = zt ^ xt;
                    }
                    _ => unreachable!("two-qubit kind without control"),
                }
            }
        }
    }

    #[inline]
    fn x_col(&self, q: usize) -> &[u64] {
        &self.x[q * self.words..(q + 1) * self.words]
    }

    #[inline]
    fn z_col(&self, q: usize) -> &[u64] {
        &self.z[q * self.words..(q + 1) * self.words]
    }

    /// Expectation of a signed Pauli string: 0 if it anticommutes with any
    /// stabilizer, else the +-1 sign it carries in the stabilizer group.
    pub fn pauli_expectation(&self, p: &PauliString) -> f64 {
        assert_eq!(p.len(), self.n, "observable length mismatch");
        let w = self.words;
        // Row i anticommutes with p iff bit i is set here.
        let mut anti = vec![0u64; w];
        for q in 0..self.n {
            match p.pauli(q) {
                Pauli::I => {}
                Pauli::X => xor_into(&mut anti, self.z_col(q)),
                Pauli::Z => xor_into(&mut anti, self.x_col(q)),
                Pauli::Y => {
                    xor_into(&mut anti, self.x_col(q));
                    xor_into(&mut anti, self.z_col(q));
                }
            }
        }
        for i in self.n..2 * self.n {
            if bit_at(&anti, i) {
                return 0.0;
            }
        }
        // p commutes with the whole group, so it equals a +-1 multiple of
        // the product of the stabilizers whose destabilizer partners
        // anticommute with it. Accumulate that product with exact phase.
        let qwords = self.n.div_ceil(64);
        let mut acc_x = vec![0u64; qwords];
        let mut acc_z = vec![0u64; qwords];
        let mut row_x = vec![0u64; qwords];
        let mut row_z = vec![0u64; qwords];
        // i-exponent of the accumulated product, mod 4.
        let mut exponent: i64 = 0;
        for j in 0..self.n {
            if !bit_at(&anti, j) {
                continue;
            }
            let row = self.n + j;
            for rw in row_x.iter_mut() {
                *rw = 0;
            }
            for rw in row_z.iter_mut() {
                *rw = 0;
            }
            for q in 0..self.n {
                if bit_at(self.x_col(q), row) {
                    set_bit(&mut row_x, q);
                }
                if bit_at(self.z_col(q), row) {
                    set_bit(&mut row_z, q);
                }
            }
            if bit_at(&self.r, row) {
                exponent += 2;
            }
            for k in 0..qwords {
                let (x1, z1, x2, z2) = (acc_x[k], acc_z[k], row_x[k], row_z[k]);
                let (px1, py1, pz1) = (x1 & !z1, x1 & z1, !x1 & z1);
                let (px2, py2, pz2) = (x2 & !z2, x2 & z2, !x2 & z2);
                let plus = (px1 & py2) | (py1 & pz2) | (pz1 & px2);
                let minus = (px1 & pz2) | (py1 & px2) | (pz1 & py2);
                exponent += plus.count_ones() as i64 - minus.count_ones() as i64;
                acc_x[k] ^= x2;
                acc_z[k] ^= z2;
            }
        }
        // The product is Hermitian and matches p up to sign.
        debug_assert_eq!(exponent.rem_euclid(2), 0);
        #[cfg(debug_assertions)]
        for q in 0..self.n {
            let (px, pz) = p.pauli(q).bits();
            debug_assert_eq!(bit_at(&acc_x, q), px);
            debug_assert_eq!(bit_at(&acc_z, q), pz);
        }
        let magnitude = if exponent.rem_euclid(4) == 0 { 1.0 } else { -1.0 };
        p.sign() * magnitude
    }

    /// Probability that measuring every support qubit in the computational
    /// basis yields all zeros. Always 0 or a power of 1/2.
    ///
    /// A subset of stabilizer products is Z-type on the support and identity
    /// elsewhere; each positive one halves the count of free support bits,
    /// and one negative member forces probability zero. The subset is found
    /// by eliminating the stabilizer rows over their X bits (all qubits)
    /// and Z bits (off-support qubits).
    pub fn zero_projector_probability(&self, support: &[usize]) -> f64 {
        assert!(!support.is_empty(), "projector support must be nonempty");
        let n = self.n;
        let mut on_support = vec![false; n];
        for &q in support {
            assert!(q < n, "support qubit {q} out of range");
            on_support[q] = true;
        }
        let support_size = on_support.iter().filter(|&&b| b).count();
        let off_support: Vec<usize> =
            (0..n).filter(|&q| !on_support[q]).collect();

        // One elimination row per stabilizer generator: constraint bits
        // [X_0..X_{n-1} | Z_q for q off support], plus tracking bits that
        // remember which generators were combined.
        let cbits = n + off_support.len();
        let cwords = cbits.max(1).div_ceil(64);
        let twords = n.div_ceil(64);
        let mut rows: Vec<(Vec<u64>, Vec<u64>)> = Vec::with_capacity(n);
        for j in 0..n {
            let row = n + j;
            let mut constraint = vec![0u64; cwords];
            let mut tracking = vec![0u64; twords];
            for q in 0..n {
                if bit_at(self.x_col(q), row) {
                    set_bit(&mut constraint, q);
                }
            }
            for (idx, &q) in off_support.iter().enumerate() {
                if bit_at(self.z_col(q), row) {
                    set_bit(&mut constraint, n + idx);
                }
            }
            set_bit(&mut tracking, j);
            rows.push((constraint, tracking));
        }

        let mut pivot_rows = 0;
        for col in 0..cbits {
            let Some(found) = (pivot_rows..rows.len())
                .find(|&i| bit_at(&rows[i].0, col))
            else {
                continue;
            };
            rows.swap(pivot_rows, found);
            let (head, tail) = rows.split_at_mut(pivot_rows + 1);
            let pivot = &head[pivot_rows];
            for other in tail.iter_mut() {
                if bit_at(&other.0, col) {
                    for k in 0..cwords {
                        other.0[k] ^= pivot.0[k];
                    }
                    for k in 0..twords {
                        other.1[k] ^= pivot.1[k];
                    }
                }
            }
            pivot_rows += 1;
        }

        // Rows eliminated to zero index the Z-type support elements.
        let free = rows.len() - pivot_rows;
        for (_, tracking) in &rows[pivot_rows..] {
            let mut zpauli = PauliString::identity(n);
            for q in 0..n {
                if !on_support[q] {
                    continue;
                }
                let mut parity = 0u32;
                for (k, word) in self.z_col(q).iter().enumerate() {
                    // Tracking bit j selects tableau row n + j.
                    let selected = shifted_word(tracking, k, n);
                    parity ^= (word & selected).count_ones() & 1;
                }
                if parity == 1 {
                    zpauli.set(q, Pauli::Z);
                }
            }
            let value = self.pauli_expectation(&zpauli);
            debug_assert!(value != 0.0);
            if value < 0.0 {
                return 0.0;
            }
        }
        0.5f64.powi((support_size - free) as i32)
    }

    /// Check the symplectic pairing: row i anticommutes with row j exactly
    /// when they are a destabilizer/stabilizer pair (|i - j| = n).
    pub fn symplectic_ok(&self) -> bool {
        let rows = 2 * self.n;
        let w = self.words;
        for i in 0..rows {
            let mut gram = vec![0u64; w];
            for q in 0..self.n {
                if bit_at(self.x_col(q), i) {
                    xor_into(&mut gram, self.z_col(q));
                }
                if bit_at(self.z_col(q), i) {
                    xor_into(&mut gram, self.x_col(q));
                }
            }
            for j in 0..rows {
                let expect = i.abs_diff(j) == self.n;
                if bit_at(&gram, j) != expect {
                    return false;
                }
            }
        }
        true
    }
}

#[inline]
fn xor_into(dst: &mut [u64], src: &[u64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

/// Word k of the tracking mask shifted to tableau-row numbering: tracking
/// bit j corresponds to row n + j.
#[inline]
fn shifted_word(tracking: &[u64], k: usize, n: usize) -> u64 {
    let bit_offset = n % 64;
    let word_offset = n / 64;
    let lo = k
        .checked_sub(word_offset)
        .and_then(|idx| tracking.get(idx))
        .copied()
        .unwrap_or(0);
    if bit_offset == 0 {
        return lo;
    }
    let hi = k
        .checked_sub(word_offset + 1)
        .and_then(|idx| tracking.get(idx))
        .copied()
        .unwrap_or(0);
    (lo << bit_offset) | (hi >> (64 - bit_offset))
}
