//! Signed Pauli strings and their transformation under Clifford conjugation.
//!
//! A string stores one Pauli per qubit plus an overall sign in {+1, -1}. The
//! conjugation rules here are the scalar (one-row) version of the word-wide
//! tableau updates in [`crate::stabilizer`]; the two are cross-checked by
//! tests.

use crate::gate::{CliffordGate, GateKind};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    /// Symplectic bit pair (x, z); Y is (1, 1).
    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Pauli {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PauliError {
    #[error("invalid Pauli character {0:?}")]
    BadCharacter(char),
    #[error("qubit {qubit} exceeds string length {len}")]
    QubitOutOfRange { qubit: usize, len: usize },
}

/// A length-n Pauli string with a sign in {+1, -1}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PauliString {
    paulis: Vec<Pauli>,
    negative: bool,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        PauliString { paulis: vec![Pauli::I; n], negative: false }
    }

    pub fn new(paulis: Vec<Pauli>, negative: bool) -> Self {
        PauliString { paulis, negative }
    }

    /// Parse from characters over "IXYZ", with an optional leading '+' or '-'.
    pub fn parse(s: &str) -> Result<Self, PauliError> {
        let mut negative = false;
        let mut paulis = Vec::with_capacity(s.len());
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '+' if i == 0 => {}
                '-' if i == 0 => negative = true,
                'I' => paulis.push(Pauli::I),
                'X' => paulis.push(Pauli::X),
                'Y' => paulis.push(Pauli::Y),
                'Z' => paulis.push(Pauli::Z),
                other => return Err(PauliError::BadCharacter(other)),
            }
        }
        Ok(PauliString { paulis, negative })
    }

    pub fn len(&self) -> usize {
        self.paulis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paulis.is_empty()
    }

    pub fn pauli(&self, qubit: usize) -> Pauli {
        self.paulis[qubit]
    }

    pub fn set(&mut self, qubit: usize, p: Pauli) {
        self.paulis[qubit] = p;
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    pub fn sign(&self) -> f64 {
        if self.negative {
            -1.0
        } else {
            1.0
        }
    }

    /// Qubits carrying a non-identity Pauli.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.paulis
            .iter()
            .enumerate()
            .filter(|(_, p)| **p != Pauli::I)
            .map(|(q, _)| q)
    }

    pub fn is_identity(&self) -> bool {
        self.paulis.iter().all(|p| *p == Pauli::I)
    }

    /// Concatenation: self on the first block of qubits, other on the second.
    pub fn tensor(&self, other: &PauliString) -> PauliString {
        let mut paulis = self.paulis.clone();
        paulis.extend_from_slice(&other.paulis);
        PauliString { paulis, negative: self.negative ^ other.negative }
    }

    /// In-place conjugation: P <- G P G^dagger.
    ///
    /// Panics if the gate addresses qubits beyond the string length; validate
    /// gates against the register first.
    pub fn conjugate_by(&mut self, gate: &CliffordGate) {
        let t = gate.target;
        match gate.kind {
            GateKind::I => {}
            GateKind::X => {
                let (x, z) = self.paulis[t].bits();
                // X: Z -> -Z, Y -> -Y
                self.negative ^= z;
                let _ = x;
            }
            GateKind::Y => {
                let (x, z) = self.paulis[t].bits();
                self.negative ^= x ^ z;
            }
            GateKind::Z => {
                let (x, _) = self.paulis[t].bits();
                self.negative ^= x;
            }
            GateKind::H => {
                let (x, z) = self.paulis[t].bits();
                self.negative ^= x & z;
                self.paulis[t] = Pauli::from_bits(z, x);
            }
            GateKind::S => {
                let (x, z) = self.paulis[t].bits();
                self.negative ^= x & z;
                self.paulis[t] = Pauli::from_bits(x, z ^ x);
            }
            GateKind::Sdg => {
                let (x, z) = self.paulis[t].bits();
                self.negative ^= x & !z;
                self.paulis[t] = Pauli::from_bits(x, z ^ x);
            }
            GateKind::Cz => {
                let a = gate.control.expect("CZ is two-qubit");
                let (xa, za) = self.paulis[a].bits();
                let (xb, zb) = self.paulis[t].bits();
                self.negative ^= xa & xb & (za ^ zb);
                self.paulis[a] = Pauli::from_bits(xa, za ^ xb);
                self.paulis[t] = Pauli::from_bits(xb, zb ^ xa);
            }
            GateKind::Cnot => {
                let c = gate.control.expect("CNOT is two-qubit");
                let (xc, zc) = self.paulis[c].bits();
                let (xt, zt) = self.paulis[t].bits();
                self.negative ^= xc & zt & !(xt ^ zc);
                self.paulis[t] = Pauli::from_bits(xt ^ xc, zt);
                self.paulis[c] = Pauli::from_bits(xc, zc ^ zt);
            }
            GateKind::CnotX => {
                let c = gate.control.expect("CNOT_X is two-qubit");
                let (xc, zc) = self.paulis[c].bits();
                let (xt, zt) = self.paulis[t].bits();
                self.negative ^= (xc & zt & !(xt ^ zc)) ^ zt;
                self.paulis[t] = Pauli::from_bits(xt ^ xc, zt);
                self.paulis[c] = Pauli::from_bits(xc, zc ^ zt);
            }
        }
    }
}

impl std::fmt::Display for PauliString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.negative {
            write!(f, "-")?;
        }
        for p in &self.paulis {
            let ch = match p {
                Pauli::I => 'I',
                Pauli::X => 'X',
                Pauli::Y => 'Y',
                Pauli::Z => 'Z',
            };
            write!(f, "{ch}")?;
        }
        Ok(())
    }
}
