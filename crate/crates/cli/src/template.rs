//! Turns a template spec into a concrete circuit for one architecture draw.
//!
//! Draw order is part of the reproducibility contract: for each layer, first
//! the rotated qubits (under thinning), then one axis per rotation; the
//! observable draws last. Entangling gates go into the fixed gates ahead of
//! the next rotation, so a circuit reads rotations-then-bricks per layer.

use crate::config::{
    AxisPolicy, DistSpec, EntanglerSpec, ObservableSpec, TemplateSpec, ThinningSpec,
};
use anyhow::{Context, Result};
use cliffvar::{
    AngleDistribution, CliffordGate, FixedLayer, GateKind, Layer, Observable, ParamCircuit,
    Pauli, PauliAxis, PauliString, RotationSite,
};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// One drawn architecture: the circuit, one angle law per parameter, and
/// the observable.
pub struct BuiltCircuit {
    pub circuit: ParamCircuit,
    pub dists: Vec<AngleDistribution>,
    pub observable: Observable,
}

fn draw_axis(policy: AxisPolicy, rng: &mut ChaCha8Rng) -> PauliAxis {
    match policy {
        AxisPolicy::Random => match rng.random_range(0..3) {
            0 => PauliAxis::X,
            1 => PauliAxis::Y,
            _ => PauliAxis::Z,
        },
        AxisPolicy::X => PauliAxis::X,
        AxisPolicy::Y => PauliAxis::Y,
        AxisPolicy::Z => PauliAxis::Z,
    }
}

/// Brick entangler for one layer: even layers pair (0,1)(2,3).., odd layers
/// (1,2)(3,4)..
fn brick_gates(spec: EntanglerSpec, layer: usize, n: usize) -> Vec<CliffordGate> {
    match spec {
        EntanglerSpec::None => Vec::new(),
        EntanglerSpec::CzBricks => {
            let start = layer % 2;
            (start..n.saturating_sub(1))
                .step_by(2)
                .map(|q| CliffordGate::two(GateKind::Cz, q, q + 1))
                .collect()
        }
    }
}

/// Qubits rotated in one layer, ascending. Under thinning, m_l ~
/// Uniform{0..n} distinct qubits.
fn layer_qubits(thinning: ThinningSpec, n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    match thinning {
        ThinningSpec::None => (0..n).collect(),
        ThinningSpec::UniformPerLayer => {
            let count = rng.random_range(0..=n);
            let mut qubits: Vec<usize> = (0..n).collect();
            qubits.shuffle(rng);
            qubits.truncate(count);
            qubits.sort_unstable();
            qubits
        }
    }
}

fn build_observable(
    spec: &ObservableSpec,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Observable> {
    match spec {
        ObservableSpec::ZeroProjector => {
            Observable::zero_projector(n, (0..n).collect()).context("zero projector")
        }
        ObservableSpec::PauliSum { terms } => {
            let parsed = terms
                .iter()
                .map(|(coeff, text)| Ok((*coeff, PauliString::parse(text)?)))
                .collect::<Result<Vec<_>>>()?;
            Observable::pauli_sum(n, parsed).context("pauli sum")
        }
        ObservableSpec::RandomPauliSum { count } => {
            let mut terms = Vec::with_capacity(*count);
            for _ in 0..*count {
                let string = loop {
                    let paulis: Vec<Pauli> = (0..n)
                        .map(|_| match rng.random_range(0..4) {
                            0 => Pauli::I,
                            1 => Pauli::X,
                            2 => Pauli::Y,
                            _ => Pauli::Z,
                        })
                        .collect();
                    let candidate = PauliString::new(paulis, false);
                    if !candidate.is_identity() {
                        break candidate;
                    }
                };
                terms.push((1.0, string));
            }
            Observable::pauli_sum(n, terms).context("random pauli sum")
        }
    }
}

/// Draw one architecture from the template. Every rotation gets its own
/// parameter and its own copy of the configured angle law.
pub fn build(
    template: &TemplateSpec,
    dist: &DistSpec,
    observable: &ObservableSpec,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<BuiltCircuit> {
    let law = dist.to_distribution()?;
    let mut layers = Vec::new();
    let mut pending: Vec<CliffordGate> = Vec::new();
    let mut param = 0;
    for l in 0..template.layers {
        for qubit in layer_qubits(template.thinning, n, rng) {
            let axis = draw_axis(template.axes, rng);
            layers.push(Layer {
                fixed: FixedLayer::new(std::mem::take(&mut pending)),
                rotation: RotationSite { qubit, axis, param, dist: param },
            });
            param += 1;
        }
        pending.extend(brick_gates(template.entangler, l, n));
    }
    let circuit = ParamCircuit::new(n, layers, FixedLayer::new(pending))
        .context("template circuit")?;
    let dists = vec![law; param];
    let observable = build_observable(observable, n, rng)?;
    Ok(BuiltCircuit { circuit, dists, observable })
}
