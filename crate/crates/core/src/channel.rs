//! Clifford-mixture forms of averaged Z-rotation channels.
//!
//! Averaging a Z-rotation over its angle law yields a channel that is a
//! signed, real combination of Clifford conjugations. [`one_fold`] covers a
//! single rotation copy, [`two_fold`] a synchronized pair (as arises when a
//! cost function is squared), and [`n_fold_coefficients`] the general
//! N-copy expansion in products of {1, Z, S, S^dagger}. Signed weights are
//! sampled by magnitude and corrected by sign, at a variance cost tracked by
//! gamma, the weight 1-norm. [`reconstruct_dense_channel`] rebuilds the
//! dense superoperator of any term list so tests can compare mixtures
//! against directly averaged channels.

use crate::dist::{AngleDistribution, DistError};
use crate::gate::{CliffordGate, GateKind};
use crate::linalg::{superoperator, unitary_from_gates, CMatrix};
use num_complex::Complex64;
use serde_json::json;
use thiserror::Error;

/// Weights at or above this may be treated as nonnegative; smaller negative
/// weights are genuine sign structure.
pub const CONVEXITY_TOL: f64 = 1e-14;

/// |E sin t*theta| at or below this counts as an even law, selecting the
/// four-term pair mixture over the twelve-term general one.
pub const EVEN_TOL: f64 = 1e-13;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error("dense reconstruction supports 1 to 3 copies, got {0}")]
    UnsupportedOrder(usize),
    #[error("a gate in a mixture term addresses qubit {qubit}, but the mixture has {order} copies")]
    GateOutOfRange { qubit: usize, order: usize },
}

/// One replacement in a mixture: a signed weight and the gate sequence (in
/// time order, on local copy qubits 0..order) that stands in for the
/// averaged rotation. An empty sequence is the identity replacement.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureTerm {
    pub weight: f64,
    pub gates: Vec<CliffordGate>,
}

/// A signed mixture of Clifford replacements for one averaged rotation
/// channel, with its sampling data: probabilities |w|/gamma and signs.
#[derive(Clone, Debug)]
pub struct CliffordMixture {
    order: usize,
    terms: Vec<MixtureTerm>,
    gamma: f64,
    is_convex: bool,
    cdf: Vec<f64>,
}

impl CliffordMixture {
    /// Clamp float-noise negatives to zero, prune exact zeros, and freeze
    /// the sampling table. Weights must sum to 1 (trace preservation).
    fn assemble(order: usize, raw: Vec<(f64, Vec<CliffordGate>)>) -> Self {
        let is_convex = raw.iter().all(|(w, _)| *w >= -CONVEXITY_TOL);
        let mut terms: Vec<MixtureTerm> = raw
            .into_iter()
            .map(|(w, gates)| MixtureTerm {
                weight: if (-CONVEXITY_TOL..0.0).contains(&w) { 0.0 } else { w },
                gates,
            })
            .filter(|t| t.weight != 0.0)
            .collect();
        let total: f64 = terms.iter().map(|t| t.weight).sum();
        debug_assert!((total - 1.0).abs() <= 1e-12, "weights sum to {total}");
        let gamma: f64 = terms.iter().map(|t| t.weight.abs()).sum();
        let mut cdf = Vec::with_capacity(terms.len());
        let mut acc = 0.0;
        for t in &mut terms {
            acc += t.weight.abs() / gamma;
            cdf.push(acc);
        }
        if let Some(last) = cdf.last_mut() {
            *last = 1.0;
        }
        CliffordMixture { order, terms, gamma, is_convex, cdf }
    }

    /// Number of synchronized rotation copies the mixture replaces.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn terms(&self) -> &[MixtureTerm] {
        &self.terms
    }

    /// 1-norm of the weights; 1 exactly when the mixture is convex.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn is_convex(&self) -> bool {
        self.is_convex
    }

    pub fn total_weight(&self) -> f64 {
        self.terms.iter().map(|t| t.weight).sum()
    }

    /// Sampling probability |w_j| / gamma.
    pub fn probability(&self, j: usize) -> f64 {
        self.terms[j].weight.abs() / self.gamma
    }

    /// Sign carried by term j when sampled by magnitude.
    pub fn sign(&self, j: usize) -> f64 {
        self.terms[j].weight.signum()
    }

    /// Map a uniform draw in [0, 1) to a term index.
    pub fn sample_index(&self, u: f64) -> usize {
        self.cdf.partition_point(|&edge| edge <= u).min(self.terms.len() - 1)
    }

    /// (weight, gates) pairs, the form [`reconstruct_dense_channel`] takes.
    pub fn weighted_gate_terms(&self) -> Vec<(f64, Vec<CliffordGate>)> {
        self.terms.iter().map(|t| (t.weight, t.gates.clone())).collect()
    }

    /// Human-readable dump: gate labels, weights, gamma, convexity.
    pub fn to_debug_json(&self) -> serde_json::Value {
        json!({
            "order": self.order,
            "gamma": self.gamma,
            "is_convex": self.is_convex,
            "terms": self.terms.iter().map(|t| {
                json!({
                    "weight": t.weight,
                    "gates": t.gates.iter().map(term_label).collect::<Vec<_>>(),
                })
            }).collect::<Vec<_>>(),
        })
    }
}

fn term_label(gate: &CliffordGate) -> String {
    match gate.control {
        Some(c) => format!("{}@{},{}", gate.kind.label(), c, gate.target),
        None => format!("{}@{}", gate.kind.label(), gate.target),
    }
}

fn single(kind: GateKind, copy: usize) -> CliffordGate {
    CliffordGate::single(kind, copy)
}

/// Mixture replacing one averaged Z-rotation.
///
/// Weights: identity (1+r1)/2, Z (1-r1)/2, S +s1/2, S^dagger -s1/2. The
/// sine weight rides on the forward phase gate: a point mass at pi/2, where
/// the rotation is the phase gate up to global phase, puts its whole sine
/// weight there. Convex exactly when the law is even (s1 = 0).
pub fn one_fold(dist: &AngleDistribution) -> Result<CliffordMixture, ChannelError> {
    let (r1, s1) = dist.moment(1)?;
    let raw = vec![
        ((1.0 + r1) / 2.0, vec![]),
        ((1.0 - r1) / 2.0, vec![single(GateKind::Z, 0)]),
        (s1 / 2.0, vec![single(GateKind::S, 0)]),
        (-s1 / 2.0, vec![single(GateKind::Sdg, 0)]),
    ];
    Ok(CliffordMixture::assemble(1, raw))
}

/// Mixture replacing a synchronized pair of averaged Z-rotations (local
/// copies 0 and 1).
///
/// Even laws get the four-term mixture {1, Z(x)Z, S(x)S, Sdg(x)Sdg}; general
/// laws get the twelve-term one with eight s2/8 cross terms. Convex iff all
/// weights are nonnegative, which for even laws is (1 + r2)/2 >= |r1|.
pub fn two_fold(dist: &AngleDistribution) -> Result<CliffordMixture, ChannelError> {
    let (r1, s1) = dist.moment(1)?;
    let (r2, s2) = dist.moment(2)?;
    let pair = |kind: GateKind| vec![single(kind, 0), single(kind, 1)];
    let mut raw = vec![
        ((1.0 + r2 + 2.0 * r1) / 4.0, vec![]),
        ((1.0 + r2 - 2.0 * r1) / 4.0, pair(GateKind::Z)),
    ];
    if s1.abs() <= EVEN_TOL && s2.abs() <= EVEN_TOL {
        raw.push(((1.0 - r2) / 4.0, pair(GateKind::S)));
        raw.push(((1.0 - r2) / 4.0, pair(GateKind::Sdg)));
    } else {
        raw.push(((1.0 - r2 + 2.0 * s1) / 4.0, pair(GateKind::S)));
        raw.push(((1.0 - r2 - 2.0 * s1) / 4.0, pair(GateKind::Sdg)));
        let cross = |a: Option<GateKind>, b: Option<GateKind>| {
            let mut gates = Vec::new();
            if let Some(kind) = a {
                gates.push(single(kind, 0));
            }
            if let Some(kind) = b {
                gates.push(single(kind, 1));
            }
            gates
        };
        use GateKind::{Sdg, S, Z};
        for (sign, a, b) in [
            (1.0, Some(S), None),
            (1.0, None, Some(S)),
            (1.0, Some(Z), Some(Sdg)),
            (1.0, Some(Sdg), Some(Z)),
            (-1.0, Some(Sdg), None),
            (-1.0, None, Some(Sdg)),
            (-1.0, Some(Z), Some(S)),
            (-1.0, Some(S), Some(Z)),
        ] {
            raw.push((sign * s2 / 8.0, cross(a, b)));
        }
    }
    Ok(CliffordMixture::assemble(2, raw))
}

/// Whether the even-law pair channel is a true convex mixture:
/// (1 + r2)/2 >= |r1|.
///
/// Evaluated through the same floating-point expressions as the two-fold
/// weights so the verdict agrees with `two_fold(dist).is_convex()` bit for
/// bit on even laws. Only meaningful after any symmetry center has been
/// extracted.
pub fn check_convexity_condition(dist: &AngleDistribution) -> Result<bool, ChannelError> {
    let (r1, _) = dist.moment(1)?;
    let (r2, _) = dist.moment(2)?;
    Ok((1.0 + r2 + 2.0 * r1) / 4.0 >= -CONVEXITY_TOL
        && (1.0 + r2 - 2.0 * r1) / 4.0 >= -CONVEXITY_TOL)
}

/// Replacement gate for each multi-index digit of the N-fold expansion.
/// Digit 2 pairs with the reversed-sine factor, hence the inverse phase
/// gate; digit 3 with the forward sine and the phase gate.
pub const N_FOLD_GATES: [GateKind; 4] = [GateKind::I, GateKind::Z, GateKind::Sdg, GateKind::S];

/// The 4^N-term expansion of an N-fold averaged rotation channel over
/// products of {1, Z, Sdg, S}, with the sufficient (not necessary)
/// convexity verdict "all coefficients nonnegative".
#[derive(Clone, Debug)]
pub struct NFoldDecomposition {
    pub coefficients: Vec<(Vec<u8>, f64)>,
    pub sufficiently_convex: bool,
}

impl NFoldDecomposition {
    pub fn order(&self) -> usize {
        self.coefficients.first().map_or(0, |(idx, _)| idx.len())
    }

    /// Gate sequence for one multi-index (identity digits omitted).
    pub fn gates_for(index: &[u8]) -> Vec<CliffordGate> {
        index
            .iter()
            .enumerate()
            .filter(|(_, &digit)| digit != 0)
            .map(|(copy, &digit)| single(N_FOLD_GATES[digit as usize], copy))
            .collect()
    }

    /// (weight, gates) pairs, the form [`reconstruct_dense_channel`] takes.
    pub fn weighted_gate_terms(&self) -> Vec<(f64, Vec<CliffordGate>)> {
        self.coefficients
            .iter()
            .map(|(idx, w)| (*w, Self::gates_for(idx)))
            .collect()
    }

    /// Coefficient of one multi-index, if present.
    pub fn coefficient(&self, index: &[u8]) -> Option<f64> {
        self.coefficients
            .iter()
            .find(|(idx, _)| idx == index)
            .map(|(_, w)| *w)
    }
}

/// Expand the N-fold channel of a law into all 4^N ordered multi-indices.
///
/// The coefficient of a multi-index depends only on how many times each
/// digit occurs, so the law is integrated once per count pattern and the
/// table is fanned out to ordered indices.
pub fn n_fold_coefficients(
    dist: &AngleDistribution,
    n_fold: usize,
) -> Result<NFoldDecomposition, ChannelError> {
    let table = dist.lambda_expectations(n_fold)?;
    let mut coefficients = Vec::with_capacity(1usize << (2 * n_fold));
    let mut index = vec![0u8; n_fold];
    loop {
        let mut counts = [0usize; 4];
        for &digit in &index {
            counts[digit as usize] += 1;
        }
        // Digit order (I, Z, Sdg, S) maps to count slots (m0, m1, m2, m3).
        coefficients.push((index.clone(), table[&counts]));
        let mut pos = 0;
        loop {
            if pos == n_fold {
                let sufficiently_convex =
                    coefficients.iter().all(|(_, w)| *w >= -CONVEXITY_TOL);
                return Ok(NFoldDecomposition { coefficients, sufficiently_convex });
            }
            if index[pos] < 3 {
                index[pos] += 1;
                break;
            }
            index[pos] = 0;
            pos += 1;
        }
    }
}

/// A channel on `order` qubits held as its dense superoperator, for exact
/// comparison of decompositions in tests.
#[derive(Clone, Debug)]
pub struct DenseChannel {
    order: usize,
    sup: CMatrix,
}

impl DenseChannel {
    pub(crate) fn from_superoperator(order: usize, sup: CMatrix) -> Self {
        DenseChannel { order, sup }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Hilbert-space dimension 2^order.
    pub fn dim(&self) -> usize {
        1 << self.order
    }

    /// Apply to a density operator given as a flat row-major dim x dim
    /// matrix.
    pub fn apply_to(&self, rho: &[Complex64]) -> Vec<Complex64> {
        let d = self.dim();
        assert_eq!(rho.len(), d * d);
        // Superoperators act on column-stacked matrices.
        let mut vec_in = vec![Complex64::ZERO; d * d];
        for i in 0..d {
            for j in 0..d {
                vec_in[j * d + i] = rho[i * d + j];
            }
        }
        let mut vec_out = vec![Complex64::ZERO; d * d];
        for (row, out) in vec_out.iter_mut().enumerate() {
            for (col, v) in vec_in.iter().enumerate() {
                *out += self.sup.get(row, col) * v;
            }
        }
        let mut out = vec![Complex64::ZERO; d * d];
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = vec_out[j * d + i];
            }
        }
        out
    }

    /// Largest entrywise deviation between the two superoperators.
    pub fn max_abs_diff(&self, other: &DenseChannel) -> f64 {
        assert_eq!(self.order, other.order);
        self.sup.max_abs_diff(&other.sup)
    }
}

/// Sum of weight * (U rho U^dagger) over (weight, gate sequence) terms, as a
/// dense superoperator on `order` qubits.
pub fn reconstruct_dense_channel(
    terms: &[(f64, Vec<CliffordGate>)],
    order: usize,
) -> Result<DenseChannel, ChannelError> {
    if !(1..=3).contains(&order) {
        return Err(ChannelError::UnsupportedOrder(order));
    }
    for (_, gates) in terms {
        for gate in gates {
            for qubit in [Some(gate.target), gate.control].into_iter().flatten() {
                if qubit >= order {
                    return Err(ChannelError::GateOutOfRange { qubit, order });
                }
            }
        }
    }
    let dim = 1 << order;
    let mut sup = CMatrix::zeros(dim * dim);
    for (weight, gates) in terms {
        let u = unitary_from_gates(gates, order);
        sup.add_scaled(Complex64::new(*weight, 0.0), &superoperator(&u));
    }
    Ok(DenseChannel { order, sup })
}
