//! Monte Carlo estimation over Clifford approximants.
//!
//! Each rotation (or synchronized rotation pair on a doubled circuit) is
//! replaced by a Clifford term drawn from its mixture; the resulting
//! Clifford circuit is evaluated on the stabilizer engine and the values
//! are aggregated with quasiprobability reweighting: a draw contributes
//! gamma_total * sign * <O>, so the sample mean is unbiased for the exact
//! weighted enumeration. Shift-rule combinations evaluate all their shifted
//! variants on one shared draw per sample, cancelling the common factors so
//! the error bar tracks the combination rather than the single-term noise.
//! Sample counts come from a Hoeffding-style bound; error bars from batch
//! means. RNG streams are derived per sample index from the master seed, so
//! reports are bit-exact regardless of thread count.

use crate::channel::{one_fold, two_fold, ChannelError, CliffordMixture, MixtureTerm};
use crate::circuit::{CircuitError, Observable, ParamCircuit, ShiftSign};
use crate::dist::{AngleDistribution, DistError};
use crate::gate::CliffordGate;
use crate::stabilizer::StabilizerTableau;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Full enumeration refuses more assignments than this.
pub const ENUMERATION_CAP: u64 = 1 << 20;

/// Batch count for batch-means standard errors.
pub const BATCH_COUNT: u64 = 100;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("epsilon must be positive, got {0}")]
    BadEpsilon(f64),
    #[error("delta must lie strictly between 0 and 1, got {0}")]
    BadDelta(f64),
    #[error("need at least one rotation site")]
    NoSites,
    #[error("norm bound must be positive and finite, got {0}")]
    BadNormBound(f64),
    #[error("gamma must be at least 1, got {0}")]
    BadGamma(f64),
    #[error("circuit must be canonicalized to Z")]
    NotCanonical,
    #[error("mixture for parameter {k} has order {got}, expected {want}")]
    OrderMismatch { k: usize, got: usize, want: usize },
    #[error("expected one mixture per parameter: {got} mixtures for {want} parameters")]
    MixtureCount { got: usize, want: usize },
    #[error("parameter {k} has {sites} rotation sites, order {order} needs exactly {order}")]
    SiteCount { k: usize, sites: usize, order: usize },
    #[error("paired sites of parameter {k} must be adjacent with nothing between them")]
    NonAdjacentPair { k: usize },
    #[error("rotation references distribution {dist}, but only {count} are given")]
    MissingDistribution { dist: usize, count: usize },
    #[error("enumeration of {assignments} assignments exceeds the cap {cap}")]
    EnumerationTooLarge { assignments: u128, cap: u64 },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// How many approximants to draw for a target accuracy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub epsilon: f64,
    pub delta: f64,
    /// Parameter count entering the concentration bound.
    pub m: usize,
    pub norm_bound: f64,
    pub gamma_total: f64,
    pub k: u64,
    pub mode: PlanMode,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanMode {
    Convex,
    Quasiprobability,
}

/// K = ceil((2/eps^2) ln(2/delta) gamma M norm^2): with that many draws the
/// estimate misses by more than eps with probability at most delta.
pub fn plan_samples(
    epsilon: f64,
    delta: f64,
    m: usize,
    norm_bound: f64,
    gamma_total: f64,
) -> Result<SamplePlan, EstimatorError> {
    if !(epsilon > 0.0) {
        return Err(EstimatorError::BadEpsilon(epsilon));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(EstimatorError::BadDelta(delta));
    }
    if m == 0 {
        return Err(EstimatorError::NoSites);
    }
    if !(norm_bound > 0.0 && norm_bound.is_finite()) {
        return Err(EstimatorError::BadNormBound(norm_bound));
    }
    if !(gamma_total >= 1.0) {
        return Err(EstimatorError::BadGamma(gamma_total));
    }
    let raw = (2.0 / (epsilon * epsilon))
        * (2.0 / delta).ln()
        * gamma_total
        * m as f64
        * norm_bound
        * norm_bound;
    let k = raw.ceil().max(1.0) as u64;
    let mode = if gamma_total > 1.0 { PlanMode::Quasiprobability } else { PlanMode::Convex };
    Ok(SamplePlan { epsilon, delta, m, norm_bound, gamma_total, k, mode })
}

/// One estimate with its provenance; bit-exact reproducible from the seed
/// except for the wall time.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EstimateReport {
    pub quantity: String,
    pub estimate: f64,
    pub k_used: u64,
    pub stderr: f64,
    pub gamma_total: f64,
    pub seed: u64,
    pub wall_time_s: f64,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based per-sample stream: identical for a given (master seed,
/// index) no matter which thread runs it.
pub fn derive_rng(master_seed: u64, sample_index: u64) -> ChaCha8Rng {
    let mut state = master_seed ^ sample_index.wrapping_mul(0xA076_1D64_78BD_642F);
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// A decorrelated master seed for a sub-estimate.
fn child_seed(master_seed: u64, stream: u64) -> u64 {
    let mut state = master_seed ^ stream.wrapping_mul(0xD6E8_FEB8_6659_FD93);
    splitmix64(&mut state)
}

/// The rotation sites each parameter owns, as (layer index, qubit) in time
/// order, validated against the replacement order: order 1 needs a lone
/// site, order 2 an adjacent pair with no gates between.
fn site_table(
    circuit: &ParamCircuit,
    order: usize,
) -> Result<Vec<Vec<(usize, usize)>>, EstimatorError> {
    if !circuit.is_canonical() {
        return Err(EstimatorError::NotCanonical);
    }
    let mut table: Vec<Vec<(usize, usize)>> = vec![Vec::new(); circuit.m()];
    for (idx, layer) in circuit.layers().iter().enumerate() {
        let site = &layer.rotation;
        table[site.param].push((idx, site.qubit));
    }
    for (k, sites) in table.iter().enumerate() {
        if sites.len() != order {
            return Err(EstimatorError::SiteCount { k, sites: sites.len(), order });
        }
        if order == 2 {
            let adjacent = sites[1].0 == sites[0].0 + 1
                && circuit.layers()[sites[1].0].fixed.is_empty();
            if !adjacent {
                return Err(EstimatorError::NonAdjacentPair { k });
            }
        }
    }
    Ok(table)
}

/// One replacement mixture per parameter, derived from the angle laws the
/// rotation sites reference.
pub fn param_mixtures(
    circuit: &ParamCircuit,
    dists: &[AngleDistribution],
    order: usize,
) -> Result<Vec<CliffordMixture>, EstimatorError> {
    let mut dist_of = vec![usize::MAX; circuit.m()];
    for layer in circuit.layers() {
        let site = &layer.rotation;
        if site.dist >= dists.len() {
            return Err(EstimatorError::MissingDistribution {
                dist: site.dist,
                count: dists.len(),
            });
        }
        dist_of[site.param] = site.dist;
    }
    dist_of
        .iter()
        .map(|&d| {
            let dist = &dists[d];
            Ok(match order {
                1 => one_fold(dist)?,
                _ => two_fold(dist)?,
            })
        })
        .collect()
}

/// Product of the per-parameter quasiprobability factors.
pub fn gamma_total(mixtures: &[CliffordMixture]) -> f64 {
    mixtures.iter().map(|m| m.gamma()).product()
}

fn check_mixtures(
    circuit: &ParamCircuit,
    mixtures: &[CliffordMixture],
    order: usize,
) -> Result<(), EstimatorError> {
    if mixtures.len() != circuit.m() {
        return Err(EstimatorError::MixtureCount { got: mixtures.len(), want: circuit.m() });
    }
    for (k, mixture) in mixtures.iter().enumerate() {
        if mixture.order() != order {
            return Err(EstimatorError::OrderMismatch { k, got: mixture.order(), want: order });
        }
    }
    Ok(())
}

/// Remap a replacement term's local qubits (0..order) onto the qubits of
/// the sites it replaces.
fn remap_term(term: &MixtureTerm, qubits: &[usize]) -> Vec<CliffordGate> {
    term.gates
        .iter()
        .map(|g| CliffordGate {
            kind: g.kind,
            target: qubits[g.target],
            control: g.control.map(|c| qubits[c]),
        })
        .collect()
}

/// Splice chosen replacement terms into the circuit's gate stream. For a
/// pair the joint term is emitted at the second site; the pair is adjacent
/// so nothing runs between the replaced rotations.
fn assemble_gates(
    circuit: &ParamCircuit,
    sites: &[Vec<(usize, usize)>],
    mixtures: &[CliffordMixture],
    choice: &[usize],
) -> Vec<CliffordGate> {
    let mut gates = Vec::new();
    for (idx, layer) in circuit.layers().iter().enumerate() {
        gates.extend_from_slice(&layer.fixed.gates);
        let k = layer.rotation.param;
        let k_sites = &sites[k];
        if idx == k_sites.last().unwrap().0 {
            let qubits: Vec<usize> = k_sites.iter().map(|&(_, q)| q).collect();
            gates.extend(remap_term(&mixtures[k].terms()[choice[k]], &qubits));
        }
    }
    gates.extend_from_slice(&circuit.tail().gates);
    gates
}

/// Draw one Clifford approximant: every rotation (or pair) independently
/// replaced by a term of its mixture, with the product of term signs.
pub fn draw_approximant<R: Rng + ?Sized>(
    circuit: &ParamCircuit,
    order: usize,
    mixtures: &[CliffordMixture],
    rng: &mut R,
) -> Result<(Vec<CliffordGate>, f64), EstimatorError> {
    check_mixtures(circuit, mixtures, order)?;
    let sites = site_table(circuit, order)?;
    Ok(draw_prepared(circuit, &sites, mixtures, rng))
}

/// One independent term choice per mixture, with the product of term signs.
fn draw_choice<R: Rng + ?Sized>(
    mixtures: &[CliffordMixture],
    rng: &mut R,
) -> (Vec<usize>, f64) {
    let mut sign = 1.0;
    let choice: Vec<usize> = mixtures
        .iter()
        .map(|m| {
            let j = m.sample_index(rng.random());
            sign *= m.sign(j);
            j
        })
        .collect();
    (choice, sign)
}

fn draw_prepared<R: Rng + ?Sized>(
    circuit: &ParamCircuit,
    sites: &[Vec<(usize, usize)>],
    mixtures: &[CliffordMixture],
    rng: &mut R,
) -> (Vec<CliffordGate>, f64) {
    let (choice, sign) = draw_choice(mixtures, rng);
    (assemble_gates(circuit, sites, mixtures, &choice), sign)
}

fn batch_mean_stderr(values: &[f64]) -> (f64, f64) {
    let k = values.len();
    let mean = values.iter().sum::<f64>() / k as f64;
    let b = (BATCH_COUNT as usize).min(k);
    if b < 2 {
        return (mean, 0.0);
    }
    let mut sums = vec![0.0; b];
    let mut counts = vec![0u64; b];
    for (i, v) in values.iter().enumerate() {
        sums[i % b] += v;
        counts[i % b] += 1;
    }
    let batch_means: Vec<f64> =
        sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect();
    let grand = batch_means.iter().sum::<f64>() / b as f64;
    let var =
        batch_means.iter().map(|m| (m - grand) * (m - grand)).sum::<f64>() / (b - 1) as f64;
    (mean, (var / b as f64).sqrt())
}

/// Core sampling loop: K independent approximants, evaluated in parallel,
/// deterministically aggregated.
fn run_samples(
    circuit: &ParamCircuit,
    observable: &Observable,
    mixtures: &[CliffordMixture],
    order: usize,
    k_samples: u64,
    master_seed: u64,
) -> Result<(f64, f64, f64), EstimatorError> {
    check_mixtures(circuit, mixtures, order)?;
    let sites = site_table(circuit, order)?;
    let gamma = gamma_total(mixtures);
    let n = circuit.n();
    let values: Vec<f64> = (0..k_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = derive_rng(master_seed, i);
            let (gates, sign) = draw_prepared(circuit, &sites, mixtures, &mut rng);
            let tableau = StabilizerTableau::run_circuit(&gates, n);
            gamma * sign * observable.expectation(&tableau)
        })
        .collect();
    let (mean, stderr) = batch_mean_stderr(&values);
    Ok((mean, stderr, gamma))
}

fn finish_report(
    quantity: String,
    mean: f64,
    stderr: f64,
    gamma: f64,
    k_used: u64,
    seed: u64,
    started: std::time::Instant,
) -> EstimateReport {
    EstimateReport {
        quantity,
        estimate: mean,
        k_used,
        stderr,
        gamma_total: gamma,
        seed,
        wall_time_s: started.elapsed().as_secs_f64(),
    }
}

fn sign_label(sign: ShiftSign) -> char {
    match sign {
        ShiftSign::Plus => '+',
        ShiftSign::Minus => '-',
    }
}

/// Estimate the mean cost E[C], or with a shift the mean of
/// C(theta +- pi/2 e_k).
pub fn estimate_first_order(
    circuit: &ParamCircuit,
    observable: &Observable,
    dists: &[AngleDistribution],
    shift: Option<(usize, ShiftSign)>,
    plan: &SamplePlan,
    master_seed: u64,
) -> Result<EstimateReport, EstimatorError> {
    let started = std::time::Instant::now();
    let (working, quantity) = match shift {
        None => (circuit.clone(), "mean_cost".to_string()),
        Some((k, sign)) => (
            circuit.apply_parameter_shift(k, sign)?,
            format!("shifted_cost[parameter={k},{}]", sign_label(sign)),
        ),
    };
    let mixtures = param_mixtures(&working, dists, 1)?;
    let (mean, stderr, gamma) =
        run_samples(&working, observable, &mixtures, 1, plan.k, master_seed)?;
    Ok(finish_report(quantity, mean, stderr, gamma, plan.k, master_seed, started))
}

/// Estimate E[C^2], or with shifts the mean of
/// C(theta + a1 pi/2 e_k) * C(theta + a2 pi/2 e_k), via the doubled
/// circuit and the order-2 mixtures.
pub fn estimate_second_order(
    circuit: &ParamCircuit,
    observable: &Observable,
    dists: &[AngleDistribution],
    shifts: Option<(usize, ShiftSign, ShiftSign)>,
    plan: &SamplePlan,
    master_seed: u64,
) -> Result<EstimateReport, EstimatorError> {
    let started = std::time::Instant::now();
    let (shift_a, shift_b, quantity) = match shifts {
        None => (None, None, "mean_squared_cost".to_string()),
        Some((k, a, b)) => (
            Some((k, a)),
            Some((k, b)),
            format!("shifted_product[parameter={k},{}{}]", sign_label(a), sign_label(b)),
        ),
    };
    let doubled = circuit.double_circuit(shift_a, shift_b)?;
    let doubled_obs = observable.doubled_with_n(circuit.n());
    let mixtures = param_mixtures(&doubled, dists, 2)?;
    let (mean, stderr, gamma) =
        run_samples(&doubled, &doubled_obs, &mixtures, 2, plan.k, master_seed)?;
    Ok(finish_report(quantity, mean, stderr, gamma, plan.k, master_seed, started))
}

/// Estimate E[(dC/dtheta_k)^2] = (E[C+C+] - 2 E[C+C-] + E[C-C-]) / 4 by
/// the shift rule. The quarter-turn shifts enter the doubled circuits as
/// fixed gates, so the three shifted variants share one mixture set; each
/// sample draws a single term assignment and evaluates all three variants
/// on it. Every variant keeps its marginal law, so the combination stays
/// unbiased, while the shared draw cancels the common factors inside each
/// sample and the batch-means error bar applies to the combined value.
/// Structurally dead parameters therefore give exactly 0 with zero spread.
pub fn estimate_squared_gradient(
    circuit: &ParamCircuit,
    observable: &Observable,
    dists: &[AngleDistribution],
    k: usize,
    plan: &SamplePlan,
    master_seed: u64,
) -> Result<EstimateReport, EstimatorError> {
    let started = std::time::Instant::now();
    use ShiftSign::{Minus, Plus};
    let variants = [(Plus, Plus), (Plus, Minus), (Minus, Minus)]
        .map(|(a, b)| circuit.double_circuit(Some((k, a)), Some((k, b))));
    let mut doubled = Vec::with_capacity(3);
    for variant in variants {
        doubled.push(variant?);
    }
    let doubled_obs = observable.doubled_with_n(circuit.n());
    // The variants differ only in fixed gates: one site table and one
    // mixture set serve all three.
    let mixtures = param_mixtures(&doubled[0], dists, 2)?;
    check_mixtures(&doubled[0], &mixtures, 2)?;
    let sites = site_table(&doubled[0], 2)?;
    let gamma = gamma_total(&mixtures);
    let n2 = doubled[0].n();
    let values: Vec<f64> = (0..plan.k)
        .into_par_iter()
        .map(|i| {
            let mut rng = derive_rng(master_seed, i);
            let (choice, sign) = draw_choice(&mixtures, &mut rng);
            let mut vals = [0.0; 3];
            for (t, variant) in doubled.iter().enumerate() {
                let gates = assemble_gates(variant, &sites, &mixtures, &choice);
                let tableau = StabilizerTableau::run_circuit(&gates, n2);
                vals[t] = gamma * sign * doubled_obs.expectation(&tableau);
            }
            (vals[0] - 2.0 * vals[1] + vals[2]) / 4.0
        })
        .collect();
    let (mean, stderr) = batch_mean_stderr(&values);
    Ok(finish_report(
        format!("squared_gradient[parameter={k}]"),
        mean,
        stderr,
        gamma,
        3 * plan.k,
        master_seed,
        started,
    ))
}

/// Estimate Var[dC/dtheta_k] = E[(dC)^2] - E[dC]^2: the squared gradient
/// from its shift-rule estimator and E[dC] from the two first-order
/// shifted estimates. Standard errors propagate through the combination;
/// the raw signed value is reported without clamping at 0.
pub fn estimate_gradient_variance(
    circuit: &ParamCircuit,
    observable: &Observable,
    dists: &[AngleDistribution],
    k: usize,
    plan: &SamplePlan,
    master_seed: u64,
) -> Result<EstimateReport, EstimatorError> {
    let started = std::time::Instant::now();
    use ShiftSign::{Minus, Plus};
    let second = estimate_squared_gradient(
        circuit,
        observable,
        dists,
        k,
        plan,
        child_seed(master_seed, 0),
    )?;
    let gp = estimate_first_order(
        circuit,
        observable,
        dists,
        Some((k, Plus)),
        plan,
        child_seed(master_seed, 1),
    )?;
    let gm = estimate_first_order(
        circuit,
        observable,
        dists,
        Some((k, Minus)),
        plan,
        child_seed(master_seed, 2),
    )?;
    let grad = (gp.estimate - gm.estimate) / 2.0;
    let grad_var = (gp.stderr * gp.stderr + gm.stderr * gm.stderr) / 4.0;
    let estimate = second.estimate - grad * grad;
    let stderr =
        (second.stderr * second.stderr + 4.0 * grad * grad * grad_var).sqrt();
    Ok(EstimateReport {
        quantity: format!("gradient_variance[parameter={k}]"),
        estimate,
        k_used: 5 * plan.k,
        stderr,
        gamma_total: second.gamma_total,
        seed: master_seed,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

/// Which exact weighted enumeration to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExactSpec {
    FirstOrder(Option<(usize, ShiftSign)>),
    SecondOrder(Option<(usize, ShiftSign, ShiftSign)>),
}

/// Sampling-free ground truth: the weighted sum over every assignment of
/// mixture terms. The sampling estimators are unbiased for exactly this
/// value.
pub fn enumerate_exact(
    circuit: &ParamCircuit,
    observable: &Observable,
    dists: &[AngleDistribution],
    spec: ExactSpec,
) -> Result<f64, EstimatorError> {
    let (working, obs, order) = match spec {
        ExactSpec::FirstOrder(shift) => {
            let working = match shift {
                None => circuit.clone(),
                Some((k, sign)) => circuit.apply_parameter_shift(k, sign)?,
            };
            (working, observable.clone(), 1)
        }
        ExactSpec::SecondOrder(shifts) => {
            let (sa, sb) = match shifts {
                None => (None, None),
                Some((k, a, b)) => (Some((k, a)), Some((k, b))),
            };
            (
                circuit.double_circuit(sa, sb)?,
                observable.doubled_with_n(circuit.n()),
                2,
            )
        }
    };
    let mixtures = param_mixtures(&working, dists, order)?;
    let sites = site_table(&working, order)?;
    let mut assignments: u128 = 1;
    for mixture in &mixtures {
        assignments = assignments.saturating_mul(mixture.terms().len() as u128);
    }
    if assignments > ENUMERATION_CAP as u128 {
        return Err(EstimatorError::EnumerationTooLarge {
            assignments,
            cap: ENUMERATION_CAP,
        });
    }
    let m = mixtures.len();
    let n = working.n();
    let mut choice = vec![0usize; m];
    let mut total = 0.0;
    loop {
        let weight: f64 = choice
            .iter()
            .enumerate()
            .map(|(k, &j)| mixtures[k].terms()[j].weight)
            .product();
        if weight != 0.0 {
            let gates = assemble_gates(&working, &sites, &mixtures, &choice);
            let tableau = StabilizerTableau::run_circuit(&gates, n);
            total += weight * obs.expectation(&tableau);
        }
        let mut k = 0;
        loop {
            if k == m {
                return Ok(total);
            }
            choice[k] += 1;
            if choice[k] < mixtures[k].terms().len() {
                break;
            }
            choice[k] = 0;
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{FixedLayer, Layer, RotationSite};
    use crate::gate::{GateKind, PauliAxis};
    use crate::pauli::{Pauli, PauliString};
    use std::f64::consts::{FRAC_PI_3, PI};

    fn z_rotation_circuit() -> ParamCircuit {
        ParamCircuit::new(
            1,
            vec![Layer {
                fixed: FixedLayer::empty(),
                rotation: RotationSite { qubit: 0, axis: PauliAxis::Z, param: 0, dist: 0 },
            }],
            FixedLayer::empty(),
        )
        .unwrap()
    }

    /// H R_Z(theta) H: cost of Z is cos(theta).
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
    fn plan_matches_closed_form() {
        let plan = plan_samples(0.1, 0.05, 10, 1.0, 1.0).unwrap();
        assert_eq!(plan.k, 7378);
        assert_eq!(plan.mode, PlanMode::Convex);
        let doubled_gamma = plan_samples(0.1, 0.05, 10, 1.0, 2.0).unwrap();
        assert_eq!(doubled_gamma.k, 2 * plan.k);
        assert_eq!(doubled_gamma.mode, PlanMode::Quasiprobability);
        let halved_eps = plan_samples(0.05, 0.05, 10, 1.0, 1.0).unwrap();
        assert_eq!(halved_eps.k, 4 * plan.k);
    }

    #[test]
    fn plan_rejects_bad_domains() {
        assert!(matches!(plan_samples(0.0, 0.5, 1, 1.0, 1.0), Err(EstimatorError::BadEpsilon(_))));
        assert!(matches!(plan_samples(0.1, 1.0, 1, 1.0, 1.0), Err(EstimatorError::BadDelta(_))));
        assert!(matches!(plan_samples(0.1, 0.5, 0, 1.0, 1.0), Err(EstimatorError::NoSites)));
        assert!(matches!(
            plan_samples(0.1, 0.5, 1, 0.0, 1.0),
            Err(EstimatorError::BadNormBound(_))
        ));
        assert!(matches!(plan_samples(0.1, 0.5, 1, 1.0, 0.5), Err(EstimatorError::BadGamma(_))));
    }

    #[test]
    fn derived_rngs_are_deterministic_and_distinct() {
        let a: u64 = derive_rng(42, 7).random();
        let b: u64 = derive_rng(42, 7).random();
        let c: u64 = derive_rng(42, 8).random();
        let d: u64 = derive_rng(43, 7).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn uniform_draws_split_between_identity_and_z() {
        let circuit = z_rotation_circuit();
        let dists = vec![AngleDistribution::uniform()];
        let mixtures = param_mixtures(&circuit, &dists, 1).unwrap();
        let mut z_count = 0;
        let draws = 2000;
        for i in 0..draws {
            let mut rng = derive_rng(11, i);
            let (gates, sign) = draw_approximant(&circuit, 1, &mixtures, &mut rng).unwrap();
            assert_eq!(sign, 1.0);
            match gates.as_slice() {
                [] => {}
                [g] => {
                    assert_eq!(g.kind, GateKind::Z);
                    z_count += 1;
                }
                other => panic!("unexpected replacement {other:?}"),
            }
        }
        assert!((800..1200).contains(&z_count), "Z drawn {z_count}/{draws}");
    }

    #[test]
    fn dirac_zero_draws_are_deterministic_identity() {
        let circuit = conjugated_rotation();
        let dists = vec![AngleDistribution::dirac(0.0)];
        let mixtures = param_mixtures(&circuit, &dists, 1).unwrap();
        for i in 0..20 {
            let mut rng = derive_rng(5, i);
            let (gates, sign) = draw_approximant(&circuit, 1, &mixtures, &mut rng).unwrap();
            assert_eq!(sign, 1.0);
            // Only the two fixed Hadamards survive; the rotation is gone.
            assert_eq!(gates.len(), 2);
            assert!(gates.iter().all(|g| g.kind == GateKind::H));
        }
    }

    #[test]
    fn dirac_pair_second_order_signs_follow_the_negative_branch() {
        let circuit = z_rotation_circuit().double_circuit(None, None).unwrap();
        let dists = vec![AngleDistribution::dirac_pair(FRAC_PI_3)];
        let mixtures = param_mixtures(&circuit, &dists, 2).unwrap();
        assert!((mixtures[0].gamma() - 1.25).abs() < 1e-12);
        let mut negative = 0;
        let draws = 4000;
        for i in 0..draws {
            let mut rng = derive_rng(3, i);
            let (_, sign) = draw_approximant(&circuit, 2, &mixtures, &mut rng).unwrap();
            if sign < 0.0 {
                negative += 1;
            }
        }
        // The lone negative branch has sampling probability (1/8)/(5/4).
        let frac = negative as f64 / draws as f64;
        assert!((frac - 0.1).abs() < 0.02, "negative fraction {frac}");
    }

    #[test]
    fn trivial_first_order_estimate_is_exact() {
        // Z rotations fix |0>, so every approximant gives <Z> = 1.
        let circuit = z_rotation_circuit();
        let dists = vec![AngleDistribution::uniform()];
        let plan = plan_samples(0.2, 0.1, 1, 1.0, 1.0).unwrap();
        let report =
            estimate_first_order(&circuit, &z_observable(), &dists, None, &plan, 99).unwrap();
        assert_eq!(report.estimate, 1.0);
        assert_eq!(report.stderr, 0.0);
        assert_eq!(report.k_used, plan.k);
    }

    #[test]
    fn two_atom_mixture_cost_averages_to_zero() {
        let circuit = conjugated_rotation();
        let dists =
            vec![AngleDistribution::dirac_mixture(vec![(0.0, 0.5), (PI, 0.5)]).unwrap()];
        let exact =
            enumerate_exact(&circuit, &z_observable(), &dists, ExactSpec::FirstOrder(None))
                .unwrap();
        assert!(exact.abs() < 1e-12);
        let plan = plan_samples(0.1, 0.05, 1, 1.0, 1.0).unwrap();
        let report =
            estimate_first_order(&circuit, &z_observable(), &dists, None, &plan, 4).unwrap();
        assert!(report.estimate.abs() < 4.0 * report.stderr.max(1e-3));
    }

    #[test]
    fn enumeration_matches_hand_sum_for_one_uniform_site() {
        // f(I) = cos 0 contribution? No: enumeration averages the two
        // replacements of H R_Z H: identity gives <Z> = 1, Z gives -1.
        let circuit = conjugated_rotation();
        let dists = vec![AngleDistribution::uniform()];
        let exact =
            enumerate_exact(&circuit, &z_observable(), &dists, ExactSpec::FirstOrder(None))
                .unwrap();
        assert!(exact.abs() < 1e-15);
    }

    #[test]
    fn sampled_estimate_is_unbiased_against_enumeration() {
        // Two-parameter circuit with a nontrivial exact value.
        let circuit = ParamCircuit::new(
            2,
            vec![
                Layer {
                    fixed: FixedLayer::new(vec![CliffordGate::single(GateKind::H, 0)]),
                    rotation: RotationSite { qubit: 0, axis: PauliAxis::Z, param: 0, dist: 0 },
                },
                Layer {
                    fixed: FixedLayer::new(vec![
                        CliffordGate::two(GateKind::Cnot, 0, 1),
                        CliffordGate::single(GateKind::H, 1),
                    ]),
                    rotation: RotationSite { qubit: 1, axis: PauliAxis::Z, param: 1, dist: 1 },
                },
            ],
            FixedLayer::new(vec![CliffordGate::single(GateKind::H, 1)]),
        )
        .unwrap();
        let obs = Observable::zero_projector(2, vec![0, 1]).unwrap();
        let dists = vec![
            AngleDistribution::dirac_pair(FRAC_PI_3),
            AngleDistribution::dirac_mixture(vec![(0.0, 0.25), (PI, 0.75)]).unwrap(),
        ];
        let exact =
            enumerate_exact(&circuit, &obs, &dists, ExactSpec::FirstOrder(None)).unwrap();
        let plan = plan_samples(0.05, 0.05, 2, 1.0, 1.0).unwrap();
        let report = estimate_first_order(&circuit, &obs, &dists, None, &plan, 12).unwrap();
        assert!(
            (report.estimate - exact).abs() < 4.0 * report.stderr.max(1e-3),
            "estimate {} vs exact {exact} (stderr {})",
            report.estimate,
            report.stderr
        );
    }

    #[test]
    fn second_order_dirac_zero_is_deterministic() {
        let circuit = conjugated_rotation();
        let dists = vec![AngleDistribution::dirac(0.0)];
        let plan = plan_samples(0.5, 0.3, 1, 1.0, 1.0).unwrap();
        let report =
            estimate_second_order(&circuit, &z_observable(), &dists, None, &plan, 8).unwrap();
        // C(0) = 1, so E[C^2] = 1 with no spread.
        assert_eq!(report.estimate, 1.0);
        assert_eq!(report.stderr, 0.0);
    }

    #[test]
    fn second_order_uniform_matches_analytic_half() {
        let circuit = conjugated_rotation();
        let dists = vec![AngleDistribution::uniform()];
        let exact =
            enumerate_exact(&circuit, &z_observable(), &dists, ExactSpec::SecondOrder(None))
                .unwrap();
        assert!((exact - 0.5).abs() < 1e-12, "E[cos^2] = {exact}");
        let plan = plan_samples(0.05, 0.05, 1, 1.0, 1.0).unwrap();
        let report =
            estimate_second_order(&circuit, &z_observable(), &dists, None, &plan, 21).unwrap();
        assert!((report.estimate - 0.5).abs() < 4.0 * report.stderr.max(1e-3));
    }

    #[test]
    fn squared_gradient_of_uniform_cosine_is_one_half() {
        // C = cos(theta): E[(dC)^2] = E[sin^2] = 1/2 under the uniform law.
        let circuit = conjugated_rotation();
        let dists = vec![AngleDistribution::uniform()];
        let exact = {
            use ShiftSign::{Minus, Plus};
            let term = |a, b| {
                enumerate_exact(
                    &circuit,
                    &z_observable(),
                    &dists,
                    ExactSpec::SecondOrder(Some((0, a, b))),
                )
                .unwrap()
            };
            (term(Plus, Plus) - 2.0 * term(Plus, Minus) + term(Minus, Minus)) / 4.0
        };
        assert!((exact - 0.5).abs() < 1e-12, "E[sin^2] = {exact}");
        let plan = plan_samples(0.05, 0.05, 1, 1.0, 1.0).unwrap();
        let report =
            estimate_squared_gradient(&circuit, &z_observable(), &dists, 0, &plan, 17).unwrap();
        assert!(
            (report.estimate - 0.5).abs() < 4.0 * report.stderr.max(2e-3),
            "estimate {} (stderr {})",
            report.estimate,
            report.stderr
        );
        assert_eq!(report.k_used, 3 * plan.k);
    }

    #[test]
    fn squared_gradient_of_structurally_dead_parameter_is_exactly_zero() {
        // A bare Z rotation acts on |0> by a phase, so dC/dtheta vanishes
        // identically. The shared draw makes the three shifted variants
        // coincide sample by sample, giving 0 with zero spread rather than
        // sampling noise around 0.
        let circuit = z_rotation_circuit();
        let dists = vec![AngleDistribution::uniform()];
        let plan = plan_samples(0.1, 0.1, 1, 1.0, 1.0).unwrap();
        let report =
            estimate_squared_gradient(&circuit, &z_observable(), &dists, 0, &plan, 5).unwrap();
        assert_eq!(report.estimate, 0.0);
        assert_eq!(report.stderr, 0.0);
    }

    #[test]
    fn squared_gradient_is_unbiased_on_the_quasiprobability_path() {
        let circuit = ParamCircuit::new(
            2,
            vec![
                Layer {
                    fixed: FixedLayer::new(vec![CliffordGate::single(GateKind::H, 0)]),
                    rotation: RotationSite { qubit: 0, axis: PauliAxis::Z, param: 0, dist: 0 },
                },
                Layer {
                    fixed: FixedLayer::new(vec![
                        CliffordGate::two(GateKind::Cnot, 0, 1),
                        CliffordGate::single(GateKind::H, 1),
                    ]),
                    rotation: RotationSite { qubit: 1, axis: PauliAxis::Z, param: 1, dist: 1 },
                },
            ],
            FixedLayer::new(vec![CliffordGate::single(GateKind::H, 1)]),
        )
        .unwrap();
        let obs = Observable::zero_projector(2, vec![0, 1]).unwrap();
        let dists = vec![
            AngleDistribution::dirac_pair(FRAC_PI_3),
            AngleDistribution::uniform(),
        ];
        use ShiftSign::{Minus, Plus};
        let term = |a, b| {
            enumerate_exact(&circuit, &obs, &dists, ExactSpec::SecondOrder(Some((0, a, b))))
                .unwrap()
        };
        let exact = (term(Plus, Plus) - 2.0 * term(Plus, Minus) + term(Minus, Minus)) / 4.0;
        let plan = plan_samples(0.05, 0.05, 2, 1.0, 1.25).unwrap();
        let report = estimate_squared_gradient(&circuit, &obs, &dists, 0, &plan, 23).unwrap();
        assert!(
            (report.estimate - exact).abs() < 4.0 * report.stderr.max(1e-3),
            "estimate {} vs exact {exact} (stderr {})",
            report.estimate,
            report.stderr
        );
    }

    #[test]
    fn gradient_variance_of_deterministic_circuit_is_zero() {
        let circuit = conjugated_rotation();
        let dists = vec![AngleDistribution::dirac(0.0)];
        let plan = plan_samples(0.5, 0.3, 1, 1.0, 1.0).unwrap();
        let report =
            estimate_gradient_variance(&circuit, &z_observable(), &dists, 0, &plan, 2).unwrap();
        assert!(report.estimate.abs() < 1e-12);
        assert_eq!(report.k_used, 5 * plan.k);
    }

    #[test]
    fn gradient_variance_of_uniform_cosine_is_one_half() {
        // C = cos(theta): Var[dC] = E[sin^2] = 1/2 under the uniform law.
        let circuit = conjugated_rotation();
        let dists = vec![AngleDistribution::uniform()];
        let plan = plan_samples(0.05, 0.05, 1, 1.0, 1.0).unwrap();
        let report =
            estimate_gradient_variance(&circuit, &z_observable(), &dists, 0, &plan, 31).unwrap();
        assert!(
            (report.estimate - 0.5).abs() < 4.0 * report.stderr.max(2e-3),
            "variance {} (stderr {})",
            report.estimate,
            report.stderr
        );
    }

    #[test]
    fn reports_reproduce_bit_exactly() {
        let circuit = conjugated_rotation();
        let dists = vec![AngleDistribution::uniform()];
        let plan = plan_samples(0.2, 0.1, 1, 1.0, 1.0).unwrap();
        let a = estimate_first_order(&circuit, &z_observable(), &dists, None, &plan, 77).unwrap();
        let b = estimate_first_order(&circuit, &z_observable(), &dists, None, &plan, 77).unwrap();
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        // 21 uniform order-2 sites: 4^21 > 2^20 assignments.
        let layers: Vec<Layer> = (0..21)
            .map(|k| Layer {
                fixed: FixedLayer::empty(),
                rotation: RotationSite { qubit: 0, axis: PauliAxis::Z, param: k, dist: 0 },
            })
            .collect();
        let circuit = ParamCircuit::new(1, layers, FixedLayer::empty()).unwrap();
        let dists = vec![AngleDistribution::uniform()];
        let err = enumerate_exact(
            &circuit,
            &z_observable(),
            &dists,
            ExactSpec::SecondOrder(None),
        );
        assert!(matches!(err, Err(EstimatorError::EnumerationTooLarge { .. })));
    }

    #[test]
    fn order_mismatch_is_reported() {
        let circuit = z_rotation_circuit();
        let dists = vec![AngleDistribution::uniform()];
        let mixtures = param_mixtures(&circuit, &dists, 2).unwrap();
        let mut rng = derive_rng(0, 0);
        assert!(matches!(
            draw_approximant(&circuit, 1, &mixtures, &mut rng),
            Err(EstimatorError::OrderMismatch { .. })
        ));
    }
}
