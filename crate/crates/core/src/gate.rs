//! Gate vocabulary shared by circuits, channel mixtures, and the stabilizer
//! engine.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Rotation axis of a parameterized single-qubit rotation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

/// The Clifford gates the engine understands.
///
/// `CnotX` is CNOT conjugated by X on both qubits, i.e. a NOT on the target
/// controlled on the control being |0>.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    I,
    X,
    Y,
    Z,
    H,
    S,
    Sdg,
    #[serde(rename = "CZ")]
    Cz,
    #[serde(rename = "CNOT")]
    Cnot,
    #[serde(rename = "CNOT_X")]
    CnotX,
}

impl GateKind {
    pub fn is_two_qubit(self) -> bool {
        matches!(self, GateKind::Cz | GateKind::Cnot | GateKind::CnotX)
    }

    /// The kind of the inverse gate. All kinds here are self-inverse except
    /// the phase gates.
    pub fn inverse(self) -> GateKind {
        match self {
            GateKind::S => GateKind::Sdg,
            GateKind::Sdg => GateKind::S,
            other => other,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            GateKind::I => "I",
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::H => "H",
            GateKind::S => "S",
            GateKind::Sdg => "Sdg",
            GateKind::Cz => "CZ",
            GateKind::Cnot => "CNOT",
            GateKind::CnotX => "CNOT_X",
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GateError {
    #[error("gate {kind:?} on qubit {qubit} exceeds register size {n}")]
    QubitOutOfRange { kind: GateKind, qubit: usize, n: usize },
    #[error("two-qubit gate {kind:?} addresses the same qubit {qubit} twice")]
    DuplicateQubit { kind: GateKind, qubit: usize },
    #[error("gate {kind:?} given {given} qubit operands, needs {needed}")]
    WrongArity { kind: GateKind, given: usize, needed: usize },
}

/// One fixed Clifford gate instance.
///
/// `control` is present iff the kind is two-qubit. For `Cnot` and `CnotX` the
/// control is the controlling qubit; `Cz` is symmetric but keeps the same
/// field layout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CliffordGate {
    pub kind: GateKind,
    pub target: usize,
    pub control: Option<usize>,
}

impl CliffordGate {
    /// A single-qubit gate. Panics if `kind` is two-qubit.
    pub fn single(kind: GateKind, target: usize) -> Self {
        assert!(!kind.is_two_qubit(), "{kind:?} needs a control qubit");
        CliffordGate { kind, target, control: None }
    }

    /// A two-qubit gate. Panics if `kind` is single-qubit or the qubits
    /// coincide.
    pub fn two(kind: GateKind, control: usize, target: usize) -> Self {
        assert!(kind.is_two_qubit(), "{kind:?} takes no control qubit");
        assert!(control != target, "{kind:?} needs two distinct qubits");
        CliffordGate { kind, target, control: Some(control) }
    }

    pub fn validate(&self, n: usize) -> Result<(), GateError> {
        let needed = if self.kind.is_two_qubit() { 2 } else { 1 };
        let given = 1 + self.control.iter().count();
        if given != needed {
            return Err(GateError::WrongArity { kind: self.kind, given, needed });
        }
        if self.target >= n {
            return Err(GateError::QubitOutOfRange { kind: self.kind, qubit: self.target, n });
        }
        if let Some(c) = self.control {
            if c >= n {
                return Err(GateError::QubitOutOfRange { kind: self.kind, qubit: c, n });
            }
            if c == self.target {
                return Err(GateError::DuplicateQubit { kind: self.kind, qubit: c });
            }
        }
        Ok(())
    }

    /// The same gate with all qubit indices shifted by `offset`.
    pub fn shifted(&self, offset: usize) -> Self {
        CliffordGate {
            kind: self.kind,
            target: self.target + offset,
            control: self.control.map(|c| c + offset),
        }
    }
}
