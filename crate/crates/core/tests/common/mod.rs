//! Shared random generators for the integration suites. Every suite derives
//! its instances from explicit ChaCha seeds so a failure replays exactly.
#![allow(dead_code)]

use cliffvar::{
    AngleDistribution, CliffordGate, FixedLayer, GateKind, Layer, Observable, ParamCircuit,
    Pauli, PauliAxis, PauliString, RotationSite,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

const SINGLE_KINDS: [GateKind; 7] = [
    GateKind::I,
    GateKind::X,
    GateKind::Y,
    GateKind::Z,
    GateKind::H,
    GateKind::S,
    GateKind::Sdg,
];
const TWO_KINDS: [GateKind; 3] = [GateKind::Cz, GateKind::Cnot, GateKind::CnotX];

pub fn random_gate<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CliffordGate {
    if n >= 2 && rng.random_bool(0.4) {
        let kind = TWO_KINDS[rng.random_range(0..TWO_KINDS.len())];
        let control = rng.random_range(0..n);
        let mut target = rng.random_range(0..n - 1);
        if target >= control {
            target += 1;
        }
        CliffordGate::two(kind, control, target)
    } else {
        let kind = SINGLE_KINDS[rng.random_range(0..SINGLE_KINDS.len())];
        CliffordGate::single(kind, rng.random_range(0..n))
    }
}

pub fn random_gates<R: Rng + ?Sized>(rng: &mut R, n: usize, count: usize) -> Vec<CliffordGate> {
    (0..count).map(|_| random_gate(rng, n)).collect()
}

pub fn random_axis<R: Rng + ?Sized>(rng: &mut R) -> PauliAxis {
    [PauliAxis::X, PauliAxis::Y, PauliAxis::Z][rng.random_range(0..3)]
}

/// Point-mass law on 1..=max_atoms arbitrary angles with normalized weights.
pub fn random_dirac_mixture<R: Rng + ?Sized>(rng: &mut R, max_atoms: usize) -> AngleDistribution {
    let count = rng.random_range(1..=max_atoms);
    let mut atoms: Vec<(f64, f64)> = (0..count)
        .map(|_| (rng.random_range(0.0..TAU), rng.random_range(0.05..1.0)))
        .collect();
    let total: f64 = atoms.iter().map(|(_, w)| w).sum();
    for (_, w) in &mut atoms {
        *w /= total;
    }
    AngleDistribution::dirac_mixture(atoms).unwrap()
}

/// Even point-mass law: weight split over +-theta pairs (exact sine moments
/// cancellation is guaranteed by construction inside `dirac_mixture`).
pub fn random_even_mixture<R: Rng + ?Sized>(rng: &mut R, max_pairs: usize) -> AngleDistribution {
    let pairs = rng.random_range(1..=max_pairs);
    let mut atoms = Vec::with_capacity(2 * pairs);
    for _ in 0..pairs {
        let w = rng.random_range(0.05..1.0);
        let theta = rng.random_range(0.0..TAU);
        atoms.push((theta, w / 2.0));
        atoms.push((-theta, w / 2.0));
    }
    let total: f64 = atoms.iter().map(|(_, w)| w).sum();
    for (_, w) in &mut atoms {
        *w /= total;
    }
    AngleDistribution::dirac_mixture(atoms).unwrap()
}

/// A law from every family the pipeline accepts for sampling.
pub fn random_dist<R: Rng + ?Sized>(rng: &mut R) -> AngleDistribution {
    match rng.random_range(0..5) {
        0 => AngleDistribution::uniform(),
        1 => AngleDistribution::gaussian(0.0, rng.random_range(0.05..3.0)).unwrap(),
        2 => AngleDistribution::gaussian(
            rng.random_range(-2.0..2.0),
            rng.random_range(0.05..3.0),
        )
        .unwrap(),
        3 => random_even_mixture(rng, 3),
        _ => random_dirac_mixture(rng, 4),
    }
}

pub fn random_theta<R: Rng + ?Sized>(rng: &mut R, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.random_range(0.0..TAU)).collect()
}

pub fn random_pauli_string<R: Rng + ?Sized>(rng: &mut R, n: usize) -> PauliString {
    let paulis = (0..n)
        .map(|_| [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][rng.random_range(0..4)])
        .collect();
    PauliString::new(paulis, rng.random_bool(0.2))
}

pub fn random_pauli_sum<R: Rng + ?Sized>(rng: &mut R, n: usize, max_terms: usize) -> Observable {
    let count = rng.random_range(1..=max_terms);
    let terms = (0..count)
        .map(|_| (rng.random_range(-2.0..2.0), random_pauli_string(rng, n)))
        .collect();
    Observable::pauli_sum(n, terms).unwrap()
}

pub fn random_projector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Observable {
    let mut support: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.6)).collect();
    if support.is_empty() {
        support.push(rng.random_range(0..n));
    }
    Observable::zero_projector(n, support).unwrap()
}

pub fn random_observable<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Observable {
    if rng.random_bool(0.5) {
        random_pauli_sum(rng, n, 4)
    } else {
        random_projector(rng, n)
    }
}

/// Layered ansatz with arbitrary rotation axes; parameter k and law k both
/// live on layer k.
pub fn random_circuit<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    m: usize,
    max_fixed: usize,
) -> ParamCircuit {
    layered_circuit(rng, n, m, max_fixed, None)
}

/// Same shape but already Z-canonical, for the sampling pipeline.
pub fn random_z_circuit<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    m: usize,
    max_fixed: usize,
) -> ParamCircuit {
    layered_circuit(rng, n, m, max_fixed, Some(PauliAxis::Z))
}

fn layered_circuit<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    m: usize,
    max_fixed: usize,
    axis: Option<PauliAxis>,
) -> ParamCircuit {
    let mut layers = Vec::with_capacity(m);
    for k in 0..m {
        let count = rng.random_range(0..=max_fixed);
        layers.push(Layer {
            fixed: FixedLayer::new(random_gates(rng, n, count)),
            rotation: RotationSite {
                qubit: rng.random_range(0..n),
                axis: axis.unwrap_or_else(|| random_axis(rng)),
                param: k,
                dist: k,
            },
        });
    }
    let count = rng.random_range(0..=max_fixed);
    let tail = FixedLayer::new(random_gates(rng, n, count));
    ParamCircuit::new(n, layers, tail).unwrap()
}
