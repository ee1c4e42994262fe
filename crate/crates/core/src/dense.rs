//! Dense statevector ground truth for small registers.
//!
//! Everything here is brute force on 2^n amplitudes: exact cost evaluation
//! at explicit angles, derivatives through the quarter-turn shift rule, and
//! Monte Carlo or tensor-grid averaging over the angle laws. The stabilizer
//! sampling pipeline is verified against these references at small n; none
//! of this is meant to scale.

use crate::channel::DenseChannel;
use crate::circuit::{Observable, ObservableKind, ParamCircuit};
use crate::dist::{AngleDistribution, AngleLaw, DistError};
use crate::gate::{CliffordGate, GateKind, PauliAxis};
use crate::linalg::{self, CMatrix};
use crate::pauli::{Pauli, PauliString};
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::{FRAC_PI_2, TAU};
use thiserror::Error;

/// Hard cap on statevector width.
pub const DENSE_QUBIT_CAP: usize = 14;

/// Cap for full superoperator construction (4^n x 4^n entries).
pub const CHANNEL_QUBIT_CAP: usize = 5;

/// Quadrature averaging enumerates a tensor grid; more axes than this is
/// pointless versus Monte Carlo.
pub const QUADRATURE_PARAM_CAP: usize = 3;

#[derive(Debug, Error)]
pub enum DenseError {
    #[error("{n} qubits exceed the dense simulation cap {cap}")]
    CapExceeded { n: usize, cap: usize },
    #[error("theta has {given} entries, the circuit has {m} parameters")]
    ThetaLength { given: usize, m: usize },
    #[error("parameter {k} out of range for {m} parameters")]
    ParameterOutOfRange { k: usize, m: usize },
    #[error("Monte Carlo averaging needs at least one draw")]
    NoDraws,
    #[error("quadrature grids need at least two points per axis")]
    GridTooSmall,
    #[error("quadrature supports at most {cap} parameters, the circuit has {m}")]
    TooManyParameters { m: usize, cap: usize },
    #[error("rotation references distribution {dist}, but only {count} are given")]
    MissingDistribution { dist: usize, count: usize },
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// A normalized pure state on n qubits; qubit q is bit q of the amplitude
/// index.
#[derive(Clone, Debug)]
pub struct DenseState {
    n: usize,
    amps: Vec<Complex64>,
}

impl DenseState {
    pub fn zero(n: usize) -> Result<Self, DenseError> {
        if n > DENSE_QUBIT_CAP {
            return Err(DenseError::CapExceeded { n, cap: DENSE_QUBIT_CAP });
        }
        let mut amps = vec![Complex64::ZERO; 1 << n];
        amps[0] = Complex64::ONE;
        Ok(DenseState { n, amps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn apply_single(&mut self, qubit: usize, m: &CMatrix) {
        let bit = 1usize << qubit;
        let (m00, m01) = (m.get(0, 0), m.get(0, 1));
        let (m10, m11) = (m.get(1, 0), m.get(1, 1));
        for x in 0..self.amps.len() {
            if x & bit != 0 {
                continue;
            }
            let a0 = self.amps[x];
            let a1 = self.amps[x | bit];
            self.amps[x] = m00 * a0 + m01 * a1;
            self.amps[x | bit] = m10 * a0 + m11 * a1;
        }
    }

    pub fn apply_gate(&mut self, gate: &CliffordGate) {
        match gate.kind {
            GateKind::I => {}
            GateKind::H | GateKind::S | GateKind::Sdg | GateKind::X | GateKind::Y
            | GateKind::Z => {
                let m = linalg::single_qubit_matrix(gate.kind);
                self.apply_single(gate.target, &m);
            }
            GateKind::Cz => {
                let mask = (1usize << gate.target) | (1usize << gate.control.unwrap());
                for (x, a) in self.amps.iter_mut().enumerate() {
                    if x & mask == mask {
                        *a = -*a;
                    }
                }
            }
            GateKind::Cnot | GateKind::CnotX => {
                let c = 1usize << gate.control.unwrap();
                let t = 1usize << gate.target;
                // CNOT flips the target when the control is set, the
                // X-controlled variant when it is clear.
                let want = if gate.kind == GateKind::Cnot { c } else { 0 };
                for x in 0..self.amps.len() {
                    if x & c == want && x & t == 0 {
                        self.amps.swap(x, x | t);
                    }
                }
            }
        }
    }

    /// Apply exp(-i theta P / 2) on one qubit.
    pub fn apply_rotation(&mut self, qubit: usize, axis: PauliAxis, theta: f64) {
        let m = linalg::rotation_matrix(axis, theta);
        self.apply_single(qubit, &m);
    }

    /// <psi| P |psi> for one signed Pauli string.
    fn pauli_term(&self, p: &PauliString) -> f64 {
        let mut flip = 0usize;
        let mut phase_mask = 0usize;
        let mut y_count = 0u32;
        for q in 0..self.n {
            match p.pauli(q) {
                Pauli::I => {}
                Pauli::X => flip |= 1 << q,
                Pauli::Y => {
                    flip |= 1 << q;
                    phase_mask |= 1 << q;
                    y_count += 1;
                }
                Pauli::Z => phase_mask |= 1 << q,
            }
        }
        let i_pow = Complex64::i().powu(y_count % 4);
        let mut acc = Complex64::ZERO;
        for (x, a) in self.amps.iter().enumerate() {
            let sign = if (x & phase_mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            acc += self.amps[x ^ flip].conj() * (i_pow * sign * a);
        }
        let value = p.sign() * acc.re;
        debug_assert!(acc.im.abs() < 1e-10, "Pauli expectations are real");
        value
    }

    pub fn expectation(&self, observable: &Observable) -> f64 {
        match observable.kind() {
            ObservableKind::PauliSum(terms) => {
                terms.iter().map(|(c, p)| c * self.pauli_term(p)).sum()
            }
            ObservableKind::ZeroProjector(support) => {
                let mask: usize = support.iter().map(|q| 1usize << q).sum();
                self.amps
                    .iter()
                    .enumerate()
                    .filter(|(x, _)| x & mask == 0)
                    .map(|(_, a)| a.norm_sqr())
                    .sum()
            }
        }
    }
}

/// Run the circuit at an explicit angle vector.
pub fn run_circuit(circuit: &ParamCircuit, theta: &[f64]) -> Result<DenseState, DenseError> {
    if theta.len() != circuit.m() {
        return Err(DenseError::ThetaLength { given: theta.len(), m: circuit.m() });
    }
    let mut state = DenseState::zero(circuit.n())?;
    for layer in circuit.layers() {
        for gate in &layer.fixed.gates {
            state.apply_gate(gate);
        }
        let site = &layer.rotation;
        state.apply_rotation(site.qubit, site.axis, theta[site.param]);
    }
    for gate in &circuit.tail().gates {
        state.apply_gate(gate);
    }
    Ok(state)
}

/// Exact cost at an explicit angle vector.
pub fn evaluate_cost(
    circuit: &ParamCircuit,
    observable: &Observable,
    theta: &[f64],
) -> Result<f64, DenseError> {
    Ok(run_circuit(circuit, theta)?.expectation(observable))
}

/// Which scalar an average runs over.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DenseQuantity {
    Cost,
    /// d/d theta_k of the cost, via the exact quarter-turn shift rule.
    Gradient(usize),
    SquaredCost,
    SquaredGradient(usize),
}

impl DenseQuantity {
    fn validate(self, m: usize) -> Result<(), DenseError> {
        match self {
            DenseQuantity::Gradient(k) | DenseQuantity::SquaredGradient(k) if k >= m => {
                Err(DenseError::ParameterOutOfRange { k, m })
            }
            _ => Ok(()),
        }
    }
}

/// Evaluate one quantity at an explicit angle vector.
pub fn evaluate_quantity(
    circuit: &ParamCircuit,
    observable: &Observable,
    theta: &[f64],
    quantity: DenseQuantity,
) -> Result<f64, DenseError> {
    quantity.validate(circuit.m())?;
    let gradient = |k: usize| -> Result<f64, DenseError> {
        let mut plus = theta.to_vec();
        plus[k] += FRAC_PI_2;
        let mut minus = theta.to_vec();
        minus[k] -= FRAC_PI_2;
        Ok((evaluate_cost(circuit, observable, &plus)?
            - evaluate_cost(circuit, observable, &minus)?)
            / 2.0)
    };
    match quantity {
        DenseQuantity::Cost => evaluate_cost(circuit, observable, theta),
        DenseQuantity::Gradient(k) => gradient(k),
        DenseQuantity::SquaredCost => evaluate_cost(circuit, observable, theta).map(|c| c * c),
        DenseQuantity::SquaredGradient(k) => gradient(k).map(|g| g * g),
    }
}

/// Distribution index for each parameter. Sites sharing a parameter share
/// its law by construction.
fn param_dists(circuit: &ParamCircuit, count: usize) -> Result<Vec<usize>, DenseError> {
    let mut map = vec![usize::MAX; circuit.m()];
    for layer in circuit.layers() {
        let site = &layer.rotation;
        if site.dist >= count {
            return Err(DenseError::MissingDistribution { dist: site.dist, count });
        }
        map[site.param] = site.dist;
    }
    Ok(map)
}

/// Monte Carlo average of a quantity over the angle laws; returns the mean
/// and its standard error.
pub fn mc_average<R: Rng + ?Sized>(
    circuit: &ParamCircuit,
    observable: &Observable,
    dists: &[AngleDistribution],
    quantity: DenseQuantity,
    draws: usize,
    rng: &mut R,
) -> Result<(f64, f64), DenseError> {
    if draws == 0 {
        return Err(DenseError::NoDraws);
    }
    quantity.validate(circuit.m())?;
    let map = param_dists(circuit, dists.len())?;
    let mut theta = vec![0.0; circuit.m()];
    let mut values = Vec::with_capacity(draws);
    for _ in 0..draws {
        for (k, &d) in map.iter().enumerate() {
            theta[k] = dists[d].sample(rng)?;
        }
        values.push(evaluate_quantity(circuit, observable, &theta, quantity)?);
    }
    let mean = values.iter().sum::<f64>() / draws as f64;
    let stderr = if draws > 1 {
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (draws - 1) as f64;
        (var / draws as f64).sqrt()
    } else {
        0.0
    };
    Ok((mean, stderr))
}

/// Nodes and weights for one angle axis.
fn axis_nodes(dist: &AngleDistribution, grid: usize) -> Result<Vec<(f64, f64)>, DenseError> {
    match dist.law() {
        AngleLaw::Uniform => Ok((0..grid)
            .map(|j| ((j as f64 + 0.5) * TAU / grid as f64, 1.0 / grid as f64))
            .collect()),
        AngleLaw::Gaussian { mean, var } => {
            if *var == 0.0 {
                return Ok(vec![(*mean, 1.0)]);
            }
            let sigma = var.sqrt();
            let lo = mean - 10.0 * sigma;
            let h = 20.0 * sigma / grid as f64;
            let mut nodes: Vec<(f64, f64)> = (0..grid)
                .map(|j| {
                    let x = lo + (j as f64 + 0.5) * h;
                    let z = (x - mean) / sigma;
                    (x, (-0.5 * z * z).exp())
                })
                .collect();
            let total: f64 = nodes.iter().map(|(_, w)| w).sum();
            for (_, w) in &mut nodes {
                *w /= total;
            }
            Ok(nodes)
        }
        AngleLaw::DiracMixture(atoms) => Ok(atoms.clone()),
        AngleLaw::TabulatedMoments { .. } => Err(DistError::CannotSample.into()),
    }
}

/// Deterministic tensor-grid average of a quantity over the angle laws.
/// Midpoint rules on periodic (uniform) and rapidly decaying (Gaussian)
/// densities converge far faster than Monte Carlo; Dirac atoms are summed
/// exactly.
pub fn quadrature_average(
    circuit: &ParamCircuit,
    observable: &Observable,
    dists: &[AngleDistribution],
    quantity: DenseQuantity,
    grid: usize,
) -> Result<f64, DenseError> {
    let m = circuit.m();
    if m > QUADRATURE_PARAM_CAP {
        return Err(DenseError::TooManyParameters { m, cap: QUADRATURE_PARAM_CAP });
    }
    if grid < 2 {
        return Err(DenseError::GridTooSmall);
    }
    quantity.validate(m)?;
    let map = param_dists(circuit, dists.len())?;
    let axes: Vec<Vec<(f64, f64)>> = map
        .iter()
        .map(|&d| axis_nodes(&dists[d], grid))
        .collect::<Result<_, _>>()?;
    let mut idx = vec![0usize; m];
    let mut theta = vec![0.0; m];
    let mut total = 0.0;
    loop {
        let mut weight = 1.0;
        for k in 0..m {
            let (angle, w) = axes[k][idx[k]];
            theta[k] = angle;
            weight *= w;
        }
        total += weight * evaluate_quantity(circuit, observable, &theta, quantity)?;
        let mut k = 0;
        loop {
            if k == m {
                return Ok(total);
            }
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// The circuit's full superoperator at an explicit angle vector, for
/// channel-equality checks between rewrites. Far more expensive than a
/// state sweep, hence the lower cap.
pub fn circuit_channel(
    circuit: &ParamCircuit,
    theta: &[f64],
) -> Result<DenseChannel, DenseError> {
    let n = circuit.n();
    if n > CHANNEL_QUBIT_CAP {
        return Err(DenseError::CapExceeded { n, cap: CHANNEL_QUBIT_CAP });
    }
    if theta.len() != circuit.m() {
        return Err(DenseError::ThetaLength { given: theta.len(), m: circuit.m() });
    }
    let mut u = CMatrix::identity(1 << n);
    for layer in circuit.layers() {
        for gate in &layer.fixed.gates {
            u = linalg::embed_gate(gate, n).mul(&u);
        }
        let site = &layer.rotation;
        let r = linalg::rotation_matrix(site.axis, theta[site.param]);
        u = linalg::embed_product(&[(site.qubit, r)], n).mul(&u);
    }
    for gate in &circuit.tail().gates {
        u = linalg::embed_gate(gate, n).mul(&u);
    }
    Ok(DenseChannel::from_superoperator(n, linalg::superoperator(&u)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{FixedLayer, Layer, RotationSite};
    use crate::stabilizer::StabilizerTableau;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    /// H R_Z(theta) H on one qubit: cost of Z is cos(theta).
    fn conjugated_rotation() -> ParamCircuit {
        ParamCircuit::new(
            1,
            vec![Layer {
                fixed: FixedLayer::new(vec![CliffordGate::single(GateKind::H, 0)]),
                rotation: RotationSite { qubit: 0, axis: PauliAxis::Z, param: 0, dist: 0 },
            }],
            FixedLayer::new(vec![CliffordGate::single(GateKind::H, 0)]),
        )
        .unwrap()
    }

    fn z_observable() -> Observable {
        let mut z = PauliString::identity(1);
        z.set(0, Pauli::Z);
        Observable::pauli_sum(1, vec![(1.0, z)]).unwrap()
    }

    #[test]
    fn empty_circuit_projector_is_one() {
        let c = ParamCircuit::new(2, vec![], FixedLayer::empty()).unwrap();
        let obs = Observable::zero_projector(2, vec![0, 1]).unwrap();
        assert_eq!(evaluate_cost(&c, &obs, &[]).unwrap(), 1.0);
    }

    #[test]
    fn conjugated_rotation_cost_is_cosine() {
        let c = conjugated_rotation();
        let obs = z_observable();
        for (theta, want) in [(0.0, 1.0), (FRAC_PI_2, 0.0), (PI, -1.0), (0.7, 0.7f64.cos())] {
            let got = evaluate_cost(&c, &obs, &[theta]).unwrap();
            assert!((got - want).abs() < 1e-12, "theta={theta}: {got} vs {want}");
        }
    }

    #[test]
    fn shift_rule_gradient_is_exact() {
        let c = conjugated_rotation();
        let obs = z_observable();
        let got =
            evaluate_quantity(&c, &obs, &[0.7], DenseQuantity::Gradient(0)).unwrap();
        assert!((got + 0.7f64.sin()).abs() < 1e-12);
    }

    #[test]
    fn dirac_average_is_exact_with_zero_stderr() {
        let c = conjugated_rotation();
        let obs = z_observable();
        let dists = vec![AngleDistribution::dirac(1.1)];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (mean, stderr) =
            mc_average(&c, &obs, &dists, DenseQuantity::Cost, 50, &mut rng).unwrap();
        assert!((mean - 1.1f64.cos()).abs() < 1e-12);
        assert_eq!(stderr, 0.0);
    }

    #[test]
    fn two_atom_mixture_averages_to_zero() {
        let c = conjugated_rotation();
        let obs = z_observable();
        let dists =
            vec![AngleDistribution::dirac_mixture(vec![(0.0, 0.5), (PI, 0.5)]).unwrap()];
        let got =
            quadrature_average(&c, &obs, &dists, DenseQuantity::Cost, 2).unwrap();
        assert!(got.abs() < 1e-12);
    }

    #[test]
    fn uniform_squared_cost_is_one_half() {
        let c = conjugated_rotation();
        let obs = z_observable();
        let dists = vec![AngleDistribution::uniform()];
        let got =
            quadrature_average(&c, &obs, &dists, DenseQuantity::SquaredCost, 64).unwrap();
        assert!((got - 0.5).abs() < 1e-10, "E[cos^2] = {got}");
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (mean, stderr) =
            mc_average(&c, &obs, &dists, DenseQuantity::SquaredCost, 4000, &mut rng).unwrap();
        assert!((mean - 0.5).abs() < 4.0 * stderr.max(1e-3));
    }

    #[test]
    fn gaussian_quadrature_matches_moment() {
        // E[cos theta] for a Gaussian is exp(-var/2) cos(mean).
        let c = conjugated_rotation();
        let obs = z_observable();
        let dists = vec![AngleDistribution::gaussian(0.4, 0.9).unwrap()];
        let got = quadrature_average(&c, &obs, &dists, DenseQuantity::Cost, 400).unwrap();
        let want = (-0.45f64).exp() * 0.4f64.cos();
        assert!((got - want).abs() < 1e-10, "{got} vs {want}");
    }

    #[test]
    fn matches_stabilizer_engine_at_clifford_angles() {
        // R_Z(pi/2) is the phase gate up to global phase.
        let c = ParamCircuit::new(
            2,
            vec![
                Layer {
                    fixed: FixedLayer::new(vec![CliffordGate::single(GateKind::H, 0)]),
                    rotation: RotationSite { qubit: 0, axis: PauliAxis::Z, param: 0, dist: 0 },
                },
                Layer {
                    fixed: FixedLayer::new(vec![CliffordGate::two(GateKind::Cnot, 0, 1)]),
                    rotation: RotationSite { qubit: 1, axis: PauliAxis::Z, param: 1, dist: 0 },
                },
            ],
            FixedLayer::empty(),
        )
        .unwrap();
        let obs = Observable::zero_projector(2, vec![0, 1]).unwrap();
        let dense = evaluate_cost(&c, &obs, &[FRAC_PI_2, FRAC_PI_2]).unwrap();
        let t = StabilizerTableau::run_circuit(
            &[
                CliffordGate::single(GateKind::H, 0),
                CliffordGate::single(GateKind::S, 0),
                CliffordGate::two(GateKind::Cnot, 0, 1),
                CliffordGate::single(GateKind::S, 1),
            ],
            2,
        );
        let stab = obs.expectation(&t);
        assert!((dense - stab).abs() < 1e-12, "{dense} vs {stab}");
    }

    #[test]
    fn canonicalization_preserves_the_channel() {
        let c = ParamCircuit::new(
            2,
            vec![
                Layer {
                    fixed: FixedLayer::empty(),
                    rotation: RotationSite { qubit: 0, axis: PauliAxis::X, param: 0, dist: 0 },
                },
                Layer {
                    fixed: FixedLayer::new(vec![CliffordGate::two(GateKind::Cz, 0, 1)]),
                    rotation: RotationSite { qubit: 1, axis: PauliAxis::Y, param: 1, dist: 0 },
                },
            ],
            FixedLayer::empty(),
        )
        .unwrap();
        let canon = c.canonicalize_to_z();
        for theta in [[0.3, -1.2], [2.1, 0.9]] {
            let a = circuit_channel(&c, &theta).unwrap();
            let b = circuit_channel(&canon, &theta).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-12);
        }
    }

    #[test]
    fn cap_violations_are_rejected() {
        assert!(matches!(
            DenseState::zero(15),
            Err(DenseError::CapExceeded { .. })
        ));
        let c = conjugated_rotation();
        let obs = z_observable();
        assert!(matches!(
            evaluate_cost(&c, &obs, &[0.0, 0.0]),
            Err(DenseError::ThetaLength { .. })
        ));
        assert!(matches!(
            evaluate_quantity(&c, &obs, &[0.0], DenseQuantity::Gradient(1)),
            Err(DenseError::ParameterOutOfRange { .. })
        ));
    }
}
