//! Small dense complex matrices for exact channel reconstruction.
//!
//! Everything here lives on a handful of qubits (channel identities are
//! checked on one to three rotation copies), so flat row-major storage and
//! naive O(d^3) products are plenty. Qubit q maps to bit q of the basis
//! index; the first factor of a written tensor product is qubit 0.

use crate::gate::{CliffordGate, GateKind, PauliAxis};
use num_complex::Complex64;

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct CMatrix {
    pub dim: usize,
    pub data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        CMatrix { dim, data: vec![Complex64::ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = CMatrix::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex64::ONE;
        }
        m
    }

    pub fn from_rows(dim: usize, rows: &[Complex64]) -> Self {
        assert_eq!(rows.len(), dim * dim);
        CMatrix { dim, data: rows.to_vec() }
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    pub fn mul(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim);
        let d = self.dim;
        let mut out = CMatrix::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == Complex64::ZERO {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * rhs.data[k * d + j];
                }
            }
        }
        out
    }

    pub fn kron(&self, rhs: &CMatrix) -> CMatrix {
        let (da, db) = (self.dim, rhs.dim);
        let d = da * db;
        let mut out = CMatrix::zeros(d);
        for ia in 0..da {
            for ja in 0..da {
                let a = self.data[ia * da + ja];
                if a == Complex64::ZERO {
                    continue;
                }
                for ib in 0..db {
                    for jb in 0..db {
                        out.data[(ia * db + ib) * d + (ja * db + jb)] =
                            a * rhs.data[ib * db + jb];
                    }
                }
            }
        }
        out
    }

    #[cfg(test)]
    pub fn dagger(&self) -> CMatrix {
        let d = self.dim;
        let mut out = CMatrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out.data[j * d + i] = self.data[i * d + j].conj();
            }
        }
        out
    }

    pub fn conj(&self) -> CMatrix {
        CMatrix { dim: self.dim, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    /// self += w * other.
    pub fn add_scaled(&mut self, w: Complex64, other: &CMatrix) {
        assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += w * b;
        }
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// 2x2 matrix of a single-qubit gate kind.
pub(crate) fn single_qubit_matrix(kind: GateKind) -> CMatrix {
    let rt = std::f64::consts::FRAC_1_SQRT_2;
    let rows: [Complex64; 4] = match kind {
        GateKind::I => [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        GateKind::X => [c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        GateKind::Y => [c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)],
        GateKind::Z => [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
        GateKind::H => [c(rt, 0.0), c(rt, 0.0), c(rt, 0.0), c(-rt, 0.0)],
        GateKind::S => [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)],
        GateKind::Sdg => [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, -1.0)],
        other => panic!("{other:?} is not single-qubit"),
    };
    CMatrix::from_rows(2, &rows)
}

/// exp(-i theta P / 2) for a Pauli axis.
pub(crate) fn rotation_matrix(axis: PauliAxis, theta: f64) -> CMatrix {
    let (cos, sin) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let rows: [Complex64; 4] = match axis {
        PauliAxis::X => [c(cos, 0.0), c(0.0, -sin), c(0.0, -sin), c(cos, 0.0)],
        PauliAxis::Y => [c(cos, 0.0), c(-sin, 0.0), c(sin, 0.0), c(cos, 0.0)],
        PauliAxis::Z => [c(cos, -sin), c(0.0, 0.0), c(0.0, 0.0), c(cos, sin)],
    };
    CMatrix::from_rows(2, &rows)
}

/// Embed ops on selected qubits (identity elsewhere) into 2^n dimensions.
/// Qubit q is bit q, so the kron chain runs from qubit n-1 down to 0.
pub(crate) fn embed_product(ops: &[(usize, CMatrix)], n: usize) -> CMatrix {
    let mut out = CMatrix::identity(1);
    for q in (0..n).rev() {
        let factor = ops
            .iter()
            .find(|(site, _)| *site == q)
            .map(|(_, m)| m.clone())
            .unwrap_or_else(|| CMatrix::identity(2));
        out = out.kron(&factor);
    }
    out
}

/// Full 2^n x 2^n matrix of one Clifford gate.
pub(crate) fn embed_gate(gate: &CliffordGate, n: usize) -> CMatrix {
    if let Some(control) = gate.control {
        let target = gate.target;
        let p0 = CMatrix::from_rows(
            2,
            &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)],
        );
        let p1 = CMatrix::from_rows(
            2,
            &[c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        );
        // Controlled action: on-branch applies the payload to the target.
        let (off_proj, on_proj, payload) = match gate.kind {
            GateKind::Cz => (p0, p1, single_qubit_matrix(GateKind::Z)),
            GateKind::Cnot => (p0, p1, single_qubit_matrix(GateKind::X)),
            GateKind::CnotX => (p1, p0, single_qubit_matrix(GateKind::X)),
            other => panic!("{other:?} is not two-qubit"),
        };
        let mut out = embed_product(&[(control, off_proj)], n);
        let on = embed_product(&[(control, on_proj), (target, payload)], n);
        out.add_scaled(Complex64::ONE, &on);
        out
    } else {
        embed_product(&[(gate.target, single_qubit_matrix(gate.kind))], n)
    }
}

/// Product of a gate sequence as a unitary: gates apply left to right in
/// time, so later gates multiply on the left.
pub(crate) fn unitary_from_gates(gates: &[CliffordGate], n: usize) -> CMatrix {
    let mut u = CMatrix::identity(1 << n);
    for gate in gates {
        u = embed_gate(gate, n).mul(&u);
    }
    u
}

/// Column-stacking superoperator of rho -> U rho U^dagger, i.e. conj(U) (x) U.
pub(crate) fn superoperator(u: &CMatrix) -> CMatrix {
    u.conj().kron(u)
}
