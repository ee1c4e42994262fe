//! JSON circuit documents.
//!
//! A document carries the qubit count, the alternating layers (each a
//! rotation plus the fixed gates running before it), an optional tail of
//! fixed gates after the last rotation, and the observable. Parsing
//! assigns parameter index k and distribution id k to the k-th layer's
//! rotation, in document order.
//!
//! ```json
//! {
//!   "n": 2,
//!   "layers": [
//!     {
//!       "rotation": {"qubit": 0, "axis": "Z", "dist": {"dist": "uniform"}},
//!       "fixed": [{"kind": "H", "q": [0]}]
//!     }
//!   ],
//!   "tail": [{"kind": "CZ", "q": [0, 1]}],
//!   "observable": {"kind": "zero_projector", "support": [0, 1]}
//! }
//! ```

use crate::circuit::{
    CircuitError, FixedLayer, Layer, Observable, ObservableKind, ParamCircuit, RotationSite,
};
use crate::dist::{AngleDistribution, AngleLaw, DistError};
use crate::gate::{CliffordGate, GateKind, PauliAxis};
use crate::pauli::{Pauli, PauliError, PauliString};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SchemaError {
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("unknown gate kind {0:?}")]
    UnknownGateKind(String),
    #[error("gate {kind} takes {needed} qubit operands, got {given}")]
    GateArity { kind: String, needed: usize, given: usize },
    #[error("unknown rotation axis {0:?}, expected \"X\", \"Y\" or \"Z\"")]
    UnknownAxis(String),
    #[error(transparent)]
    Pauli(#[from] PauliError),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error("circuit references distribution {dist}, but only {count} exist")]
    MissingDistribution { dist: usize, count: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitDoc {
    pub n: usize,
    pub layers: Vec<LayerDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tail: Vec<GateDoc>,
    pub observable: ObservableDoc,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerDoc {
    pub rotation: RotationDoc,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fixed: Vec<GateDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotationDoc {
    pub qubit: usize,
    pub axis: String,
    pub dist: DistDoc,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateDoc {
    pub kind: String,
    pub q: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "lowercase", deny_unknown_fields)]
pub enum DistDoc {
    Uniform {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<f64>,
    },
    Gaussian {
        mean: f64,
        var: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<f64>,
    },
    Dirac {
        atoms: Vec<(f64, f64)>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<f64>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableDoc {
    PauliSum { terms: Vec<(f64, String)> },
    ZeroProjector { support: Vec<usize> },
}

fn gate_kind_from_label(label: &str) -> Result<GateKind, SchemaError> {
    Ok(match label {
        "I" => GateKind::I,
        "H" => GateKind::H,
        "S" => GateKind::S,
        "Sdg" => GateKind::Sdg,
        "X" => GateKind::X,
        "Y" => GateKind::Y,
        "Z" => GateKind::Z,
        "CZ" => GateKind::Cz,
        "CNOT" => GateKind::Cnot,
        "CNOT_X" => GateKind::CnotX,
        other => return Err(SchemaError::UnknownGateKind(other.to_string())),
    })
}

impl GateDoc {
    pub fn to_gate(&self) -> Result<CliffordGate, SchemaError> {
        let kind = gate_kind_from_label(&self.kind)?;
        let needed = if kind.is_two_qubit() { 2 } else { 1 };
        if self.q.len() != needed {
            return Err(SchemaError::GateArity {
                kind: self.kind.clone(),
                needed,
                given: self.q.len(),
            });
        }
        // Built directly so that duplicate qubits surface as a validation
        // error downstream instead of a panic here.
        Ok(if kind.is_two_qubit() {
            CliffordGate { kind, target: self.q[1], control: Some(self.q[0]) }
        } else {
            CliffordGate { kind, target: self.q[0], control: None }
        })
    }

    pub fn from_gate(gate: &CliffordGate) -> GateDoc {
        let mut q = Vec::new();
        if let Some(c) = gate.control {
            q.push(c);
        }
        q.push(gate.target);
        GateDoc { kind: gate.kind.label().to_string(), q }
    }
}

impl DistDoc {
    pub fn to_dist(&self) -> Result<AngleDistribution, SchemaError> {
        let (dist, center) = match self {
            DistDoc::Uniform { center } => (AngleDistribution::uniform(), *center),
            DistDoc::Gaussian { mean, var, center } => {
                (AngleDistribution::gaussian(*mean, *var)?, *center)
            }
            DistDoc::Dirac { atoms, center } => {
                (AngleDistribution::dirac_mixture(atoms.clone())?, *center)
            }
        };
        Ok(match center {
            Some(c) => dist.with_center(c)?,
            None => dist,
        })
    }

    /// Tabulated laws have no JSON form: they exist only as the output of
    /// recentering inside the library.
    pub fn from_dist(dist: &AngleDistribution) -> Result<DistDoc, SchemaError> {
        let center = dist.center();
        Ok(match dist.law() {
            AngleLaw::Uniform => DistDoc::Uniform { center },
            AngleLaw::Gaussian { mean, var } => {
                DistDoc::Gaussian { mean: *mean, var: *var, center }
            }
            AngleLaw::DiracMixture(atoms) => {
                DistDoc::Dirac { atoms: atoms.clone(), center }
            }
            AngleLaw::TabulatedMoments { .. } => {
                return Err(SchemaError::Dist(DistError::CannotSample))
            }
        })
    }
}

fn axis_from_label(label: &str) -> Result<PauliAxis, SchemaError> {
    Ok(match label {
        "X" => PauliAxis::X,
        "Y" => PauliAxis::Y,
        "Z" => PauliAxis::Z,
        other => return Err(SchemaError::UnknownAxis(other.to_string())),
    })
}

fn axis_label(axis: PauliAxis) -> &'static str {
    match axis {
        PauliAxis::X => "X",
        PauliAxis::Y => "Y",
        PauliAxis::Z => "Z",
    }
}

fn pauli_string_label(p: &PauliString) -> String {
    let mut out = String::with_capacity(p.len() + 1);
    if p.is_negative() {
        out.push('-');
    }
    for q in 0..p.len() {
        out.push(match p.pauli(q) {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        });
    }
    out
}

impl ObservableDoc {
    pub fn to_observable(&self, n: usize) -> Result<Observable, SchemaError> {
        Ok(match self {
            ObservableDoc::PauliSum { terms } => {
                let parsed = terms
                    .iter()
                    .map(|(c, s)| Ok((*c, PauliString::parse(s)?)))
                    .collect::<Result<Vec<_>, SchemaError>>()?;
                Observable::pauli_sum(n, parsed)?
            }
            ObservableDoc::ZeroProjector { support } => {
                Observable::zero_projector(n, support.clone())?
            }
        })
    }

    pub fn from_observable(observable: &Observable) -> ObservableDoc {
        match observable.kind() {
            ObservableKind::PauliSum(terms) => ObservableDoc::PauliSum {
                terms: terms
                    .iter()
                    .map(|(c, p)| (*c, pauli_string_label(p)))
                    .collect(),
            },
            ObservableKind::ZeroProjector(support) => {
                ObservableDoc::ZeroProjector { support: support.clone() }
            }
        }
    }
}

impl CircuitDoc {
    /// Build the circuit, its per-parameter angle laws (distribution id =
    /// parameter index = layer position) and the observable.
    pub fn build(
        &self,
    ) -> Result<(ParamCircuit, Vec<AngleDistribution>, Observable), SchemaError> {
        let mut layers = Vec::with_capacity(self.layers.len());
        let mut dists = Vec::with_capacity(self.layers.len());
        for (k, layer) in self.layers.iter().enumerate() {
            let gates = layer
                .fixed
                .iter()
                .map(|g| g.to_gate())
                .collect::<Result<Vec<_>, _>>()?;
            dists.push(layer.rotation.dist.to_dist()?);
            layers.push(Layer {
                fixed: FixedLayer::new(gates),
                rotation: RotationSite {
                    qubit: layer.rotation.qubit,
                    axis: axis_from_label(&layer.rotation.axis)?,
                    param: k,
                    dist: k,
                },
            });
        }
        let tail = self
            .tail
            .iter()
            .map(|g| g.to_gate())
            .collect::<Result<Vec<_>, _>>()?;
        let circuit = ParamCircuit::new(self.n, layers, FixedLayer::new(tail))?;
        let observable = self.observable.to_observable(self.n)?;
        Ok((circuit, dists, observable))
    }

    pub fn from_parts(
        circuit: &ParamCircuit,
        dists: &[AngleDistribution],
        observable: &Observable,
    ) -> Result<CircuitDoc, SchemaError> {
        let mut layers = Vec::with_capacity(circuit.layers().len());
        for layer in circuit.layers() {
            let site = &layer.rotation;
            if site.dist >= dists.len() {
                return Err(SchemaError::MissingDistribution {
                    dist: site.dist,
                    count: dists.len(),
                });
            }
            layers.push(LayerDoc {
                rotation: RotationDoc {
                    qubit: site.qubit,
                    axis: axis_label(site.axis).to_string(),
                    dist: DistDoc::from_dist(&dists[site.dist])?,
                },
                fixed: layer.fixed.gates.iter().map(GateDoc::from_gate).collect(),
            });
        }
        Ok(CircuitDoc {
            n: circuit.n(),
            layers,
            tail: circuit.tail().gates.iter().map(GateDoc::from_gate).collect(),
            observable: ObservableDoc::from_observable(observable),
        })
    }
}

/// Parse a circuit document.
pub fn circuit_from_json(
    text: &str,
) -> Result<(ParamCircuit, Vec<AngleDistribution>, Observable), SchemaError> {
    serde_json::from_str::<CircuitDoc>(text)?.build()
}

/// Serialize a circuit, its angle laws and its observable.
pub fn circuit_to_json(
    circuit: &ParamCircuit,
    dists: &[AngleDistribution],
    observable: &Observable,
) -> Result<String, SchemaError> {
    Ok(serde_json::to_string_pretty(&CircuitDoc::from_parts(
        circuit, dists, observable,
    )?)?)
}
