//! Layered parameterized circuits and the rewrites the sampling scheme
//! needs.
//!
//! A circuit is an alternating sequence of fixed Clifford layers and
//! single-qubit rotations, applied to |0...0>: within step k the fixed
//! gates run first, then the rotation. A trailing fixed layer holds gates
//! after the last rotation. The rewrites here never change the circuit's
//! channel at matched angles: axis canonicalization rewrites X and Y
//! rotations as conjugated Z rotations, symmetry-center extraction factors
//! a Clifford angle out of a rotation's law, parameter shifting moves a
//! quarter-turn into the adjacent fixed layer, and doubling lays two
//! synchronized copies side by side for second-order quantities.

use crate::dist::{AngleDistribution, DistError};
use crate::gate::{CliffordGate, GateKind, PauliAxis};
use crate::pauli::PauliString;
use crate::stabilizer::StabilizerTableau;
use std::f64::consts::FRAC_PI_2;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error(transparent)]
    Gate(#[from] crate::gate::GateError),
    #[error("rotation site touches qubit {qubit}, but the circuit has {n} qubits")]
    SiteOutOfRange { qubit: usize, n: usize },
    #[error("parameter indices must cover 0..{expected} with one site each")]
    BadParameterIndices { expected: usize },
    #[error("parameter index {k} out of range for {m} parameters")]
    ParameterOutOfRange { k: usize, m: usize },
    #[error("parameter {k} is shared by several sites; shift copies independently")]
    SharedParameter { k: usize },
    #[error("operation requires all rotation axes canonicalized to Z")]
    NotCanonical,
    #[error("rotation references distribution {dist}, but only {count} are given")]
    MissingDistribution { dist: usize, count: usize },
    #[error("symmetry center {0} is not a multiple of pi/2")]
    InvalidCenter(f64),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("observable needs at least one term")]
    EmptyObservable,
    #[error("Pauli string has length {len}, expected {n}")]
    ObservableLength { len: usize, n: usize },
    #[error("projector support qubit {qubit} out of range for {n} qubits")]
    SupportOutOfRange { qubit: usize, n: usize },
}

/// One parameterized rotation exp(-i theta P / 2).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RotationSite {
    pub qubit: usize,
    pub axis: PauliAxis,
    /// Parameter index; unique per site until a circuit is doubled.
    pub param: usize,
    /// Index into the caller's distribution list.
    pub dist: usize,
}

/// An ordered run of fixed Clifford gates.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FixedLayer {
    pub gates: Vec<CliffordGate>,
}

impl FixedLayer {
    pub fn new(gates: Vec<CliffordGate>) -> Self {
        FixedLayer { gates }
    }

    pub fn empty() -> Self {
        FixedLayer::default()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    fn validate(&self, n: usize) -> Result<(), CircuitError> {
        for g in &self.gates {
            g.validate(n)?;
        }
        Ok(())
    }

    fn shifted(&self, offset: usize) -> FixedLayer {
        FixedLayer { gates: self.gates.iter().map(|g| g.shifted(offset)).collect() }
    }
}

/// One alternation step: fixed gates, then a rotation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layer {
    pub fixed: FixedLayer,
    pub rotation: RotationSite,
}

/// Direction of a quarter-turn parameter shift.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShiftSign {
    Plus,
    Minus,
}

impl ShiftSign {
    /// The Clifford absorbed by the adjacent fixed layer: the shifted
    /// rotation factors as the unshifted one times a phase gate, with the
    /// global phase dropped.
    pub fn gate_kind(self) -> GateKind {
        match self {
            ShiftSign::Plus => GateKind::S,
            ShiftSign::Minus => GateKind::Sdg,
        }
    }
}

/// A layered ansatz on n qubits applied to |0...0>.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamCircuit {
    n: usize,
    layers: Vec<Layer>,
    tail: FixedLayer,
    params: usize,
}

impl ParamCircuit {
    /// Build and validate a circuit; each parameter index in 0..M must own
    /// exactly one rotation site.
    pub fn new(n: usize, layers: Vec<Layer>, tail: FixedLayer) -> Result<Self, CircuitError> {
        let m = layers.len();
        let mut seen = vec![false; m];
        for layer in &layers {
            layer.fixed.validate(n)?;
            let site = &layer.rotation;
            if site.qubit >= n {
                return Err(CircuitError::SiteOutOfRange { qubit: site.qubit, n });
            }
            if site.param >= m || seen[site.param] {
                return Err(CircuitError::BadParameterIndices { expected: m });
            }
            seen[site.param] = true;
        }
        tail.validate(n)?;
        Ok(ParamCircuit { n, layers, tail, params: m })
    }

    fn from_parts(n: usize, layers: Vec<Layer>, tail: FixedLayer, params: usize) -> Self {
        ParamCircuit { n, layers, tail, params }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of independent parameters (sites may share one after
    /// doubling).
    pub fn m(&self) -> usize {
        self.params
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn tail(&self) -> &FixedLayer {
        &self.tail
    }

    pub fn is_canonical(&self) -> bool {
        self.layers.iter().all(|l| l.rotation.axis == PauliAxis::Z)
    }

    /// Layer indices whose rotation site uses parameter k, in time order.
    pub fn param_layers(&self, k: usize) -> Vec<usize> {
        self.layers
            .iter()
            .enumerate()
            .filter(|(_, l)| l.rotation.param == k)
            .map(|(i, _)| i)
            .collect()
    }

    /// Rewrite every X or Y rotation as a Z rotation conjugated by fixed
    /// Cliffords, absorbed into the neighboring layers. Idempotent; the
    /// channel at every angle vector is unchanged.
    pub fn canonicalize_to_z(&self) -> ParamCircuit {
        let mut layers = self.layers.clone();
        let mut tail = self.tail.clone();
        for idx in 0..layers.len() {
            let q = layers[idx].rotation.qubit;
            let after: Vec<CliffordGate> = match layers[idx].rotation.axis {
                PauliAxis::Z => continue,
                PauliAxis::X => {
                    layers[idx].fixed.gates.push(CliffordGate::single(GateKind::H, q));
                    vec![CliffordGate::single(GateKind::H, q)]
                }
                PauliAxis::Y => {
                    layers[idx]
                        .fixed
                        .gates
                        .extend([
                            CliffordGate::single(GateKind::Sdg, q),
                            CliffordGate::single(GateKind::H, q),
                        ]);
                    vec![
                        CliffordGate::single(GateKind::H, q),
                        CliffordGate::single(GateKind::S, q),
                    ]
                }
            };
            layers[idx].rotation.axis = PauliAxis::Z;
            let target = match layers.get_mut(idx + 1) {
                Some(next) => &mut next.fixed.gates,
                None => &mut tail.gates,
            };
            target.splice(0..0, after);
        }
        ParamCircuit::from_parts(self.n, layers, tail, self.params)
    }

    /// Factor each declared Clifford symmetry center out of its rotation:
    /// the rotation becomes zero-centered and the center's Clifford gate
    /// ({I, S, Z, Sdg} for 0, pi/2, pi, 3pi/2) lands in the following
    /// fixed layer. Returns the rewritten circuit and the recentered laws.
    pub fn extract_symmetry_center(
        &self,
        dists: &[AngleDistribution],
    ) -> Result<(ParamCircuit, Vec<AngleDistribution>), CircuitError> {
        if !self.is_canonical() {
            return Err(CircuitError::NotCanonical);
        }
        let mut layers = self.layers.clone();
        let mut tail = self.tail.clone();
        let mut out_dists = dists.to_vec();
        let mut recentered = vec![false; dists.len()];
        for idx in 0..layers.len() {
            let site = layers[idx].rotation.clone();
            if site.dist >= dists.len() {
                return Err(CircuitError::MissingDistribution {
                    dist: site.dist,
                    count: dists.len(),
                });
            }
            let Some(center) = dists[site.dist].center() else { continue };
            let quarters = (center / FRAC_PI_2).round();
            if (center / FRAC_PI_2 - quarters).abs() > 1e-9 {
                return Err(CircuitError::InvalidCenter(center));
            }
            let kind = match (quarters as i64).rem_euclid(4) {
                0 => None,
                1 => Some(GateKind::S),
                2 => Some(GateKind::Z),
                _ => Some(GateKind::Sdg),
            };
            if let Some(kind) = kind {
                let gate = CliffordGate::single(kind, site.qubit);
                let target = match layers.get_mut(idx + 1) {
                    Some(next) => &mut next.fixed.gates,
                    None => &mut tail.gates,
                };
                target.insert(0, gate);
            }
            if !recentered[site.dist] {
                out_dists[site.dist] = dists[site.dist].recenter(center)?;
                recentered[site.dist] = true;
            }
        }
        Ok((
            ParamCircuit::from_parts(self.n, layers, tail, self.params),
            out_dists,
        ))
    }

    /// Shift parameter k by a quarter turn: the factored phase gate is
    /// appended to fixed layer k, so the circuit at angle theta equals the
    /// original at theta +- pi/2 as a channel.
    pub fn apply_parameter_shift(
        &self,
        k: usize,
        sign: ShiftSign,
    ) -> Result<ParamCircuit, CircuitError> {
        if !self.is_canonical() {
            return Err(CircuitError::NotCanonical);
        }
        if k >= self.params {
            return Err(CircuitError::ParameterOutOfRange { k, m: self.params });
        }
        let sites = self.param_layers(k);
        if sites.len() != 1 {
            return Err(CircuitError::SharedParameter { k });
        }
        let mut layers = self.layers.clone();
        let layer = &mut layers[sites[0]];
        layer
            .fixed
            .gates
            .push(CliffordGate::single(sign.gate_kind(), layer.rotation.qubit));
        Ok(ParamCircuit::from_parts(self.n, layers, self.tail.clone(), self.params))
    }

    /// Two synchronized copies side by side on 2n qubits: copy B's qubit j
    /// becomes n+j and each parameter tags the pair of copied sites.
    /// Optional per-copy quarter-turn shifts are applied independently.
    pub fn double_circuit(
        &self,
        shift_a: Option<(usize, ShiftSign)>,
        shift_b: Option<(usize, ShiftSign)>,
    ) -> Result<ParamCircuit, CircuitError> {
        if !self.is_canonical() {
            return Err(CircuitError::NotCanonical);
        }
        for shift in [shift_a, shift_b].into_iter().flatten() {
            if shift.0 >= self.params {
                return Err(CircuitError::ParameterOutOfRange { k: shift.0, m: self.params });
            }
        }
        let n = self.n;
        let mut layers = Vec::with_capacity(2 * self.layers.len());
        for layer in &self.layers {
            let site = &layer.rotation;
            let mut fixed = layer.fixed.clone();
            if let Some((k, sign)) = shift_a {
                if site.param == k {
                    fixed
                        .gates
                        .push(CliffordGate::single(sign.gate_kind(), site.qubit));
                }
            }
            fixed.gates.extend(layer.fixed.shifted(n).gates);
            if let Some((k, sign)) = shift_b {
                if site.param == k {
                    fixed
                        .gates
                        .push(CliffordGate::single(sign.gate_kind(), site.qubit + n));
                }
            }
            layers.push(Layer { fixed, rotation: site.clone() });
            layers.push(Layer {
                fixed: FixedLayer::empty(),
                rotation: RotationSite { qubit: site.qubit + n, ..site.clone() },
            });
        }
        let mut tail = self.tail.clone();
        tail.gates.extend(self.tail.shifted(n).gates);
        Ok(ParamCircuit::from_parts(2 * n, layers, tail, self.params))
    }
}

/// What is measured at the end of the circuit.
#[derive(Clone, Debug, PartialEq)]
pub enum ObservableKind {
    /// Weighted sum of signed Pauli strings.
    PauliSum(Vec<(f64, PauliString)>),
    /// |0><0| on every listed qubit, identity elsewhere.
    ZeroProjector(Vec<usize>),
}

/// An observable plus a cached spectral-norm upper bound (sum of absolute
/// coefficients for Pauli sums, 1 for projectors). Sample planning only
/// needs the bound, never the exact norm.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    kind: ObservableKind,
    norm_bound: f64,
}

impl Observable {
    pub fn pauli_sum(n: usize, terms: Vec<(f64, PauliString)>) -> Result<Self, CircuitError> {
        if terms.is_empty() {
            return Err(CircuitError::EmptyObservable);
        }
        for (_, p) in &terms {
            if p.len() != n {
                return Err(CircuitError::ObservableLength { len: p.len(), n });
            }
        }
        let norm_bound = terms.iter().map(|(c, _)| c.abs()).sum();
        Ok(Observable { kind: ObservableKind::PauliSum(terms), norm_bound })
    }

    pub fn zero_projector(n: usize, mut support: Vec<usize>) -> Result<Self, CircuitError> {
        if support.is_empty() {
            return Err(CircuitError::EmptyObservable);
        }
        support.sort_unstable();
        support.dedup();
        if let Some(&q) = support.iter().find(|&&q| q >= n) {
            return Err(CircuitError::SupportOutOfRange { qubit: q, n });
        }
        Ok(Observable { kind: ObservableKind::ZeroProjector(support), norm_bound: 1.0 })
    }

    pub fn kind(&self) -> &ObservableKind {
        &self.kind
    }

    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    /// Number of terms a measurement must evaluate.
    pub fn term_count(&self) -> usize {
        match &self.kind {
            ObservableKind::PauliSum(terms) => terms.len(),
            ObservableKind::ZeroProjector(_) => 1,
        }
    }

    /// Expectation in the state a tableau holds.
    pub fn expectation(&self, tableau: &StabilizerTableau) -> f64 {
        match &self.kind {
            ObservableKind::PauliSum(terms) => terms
                .iter()
                .map(|(c, p)| c * tableau.pauli_expectation(p))
                .sum(),
            ObservableKind::ZeroProjector(support) => {
                tableau.zero_projector_probability(support)
            }
        }
    }

    /// The observable measuring this one on each of two copies of an
    /// n-qubit circuit (their product), for use on a doubled circuit.
    pub fn doubled_with_n(&self, n: usize) -> Observable {
        match &self.kind {
            ObservableKind::PauliSum(terms) => {
                let mut doubled = Vec::with_capacity(terms.len() * terms.len());
                for (ca, pa) in terms {
                    for (cb, pb) in terms {
                        doubled.push((ca * cb, pa.tensor(pb)));
                    }
                }
                let norm_bound = self.norm_bound * self.norm_bound;
                Observable { kind: ObservableKind::PauliSum(doubled), norm_bound }
            }
            ObservableKind::ZeroProjector(support) => {
                let mut doubled = support.clone();
                doubled.extend(support.iter().map(|q| q + n));
                Observable { kind: ObservableKind::ZeroProjector(doubled), norm_bound: 1.0 }
            }
        }
    }

    /// Absorb trailing fixed gates W into the observable (O becomes
    /// W^dagger O W, so measuring after W equals measuring the new
    /// observable before it). Returns false, leaving the observable
    /// untouched, when the form cannot absorb Cliffords (projectors).
    pub fn absorb_gates(&mut self, gates: &[CliffordGate]) -> bool {
        match &mut self.kind {
            ObservableKind::PauliSum(terms) => {
                for (_, p) in terms.iter_mut() {
                    for gate in gates.iter().rev() {
                        let inverse = CliffordGate { kind: gate.kind.inverse(), ..*gate };
                        p.conjugate_by(&inverse);
                    }
                }
                true
            }
            ObservableKind::ZeroProjector(_) => false,
        }
    }
}
