//! Clifford-ensemble decomposition and stabilizer sampling for the cost and
//! gradient statistics of randomly initialized variational quantum circuits.
//!
//! A layered ansatz of fixed Clifford gates and single-qubit rotations, with
//! each rotation angle drawn independently from a known law, induces averaged
//! (t-fold) channels that are exact signed mixtures of Clifford unitary
//! channels. Sampling those mixtures and evaluating each sample with a
//! polynomial-time stabilizer simulator estimates first- and second-order
//! quantities (mean cost, mean gradient, mean squared cost, gradient
//! variance) at qubit counts far beyond dense simulation.
//!
//! The pipeline:
//!
//! 1. [`circuit`]: rewrite the ansatz so every rotation is about Z
//!    ([`ParamCircuit::canonicalize_to_z`]), factor Clifford symmetry centers
//!    out of the angle laws ([`ParamCircuit::extract_symmetry_center`]), and
//!    insert parameter-shift Cliffords or double the circuit for second-order
//!    work.
//! 2. [`channel`]: turn each recentered law into a [`CliffordMixture`] via
//!    [`one_fold`] / [`two_fold`]; nonconvex mixtures carry a quasiprobability
//!    factor gamma.
//! 3. [`estimator`]: draw Clifford approximants, evaluate them on the
//!    [`stabilizer`] engine, and aggregate gamma-and-sign-weighted values into
//!    an [`EstimateReport`], with sample counts from [`plan_samples`].
//! 4. [`dense`]: brute-force statevector ground truth for verification at
//!    small qubit counts.

pub mod channel;
pub mod circuit;
pub mod dense;
pub mod dist;
pub mod estimator;
pub mod gate;
pub mod pauli;
pub mod schema;
pub mod stabilizer;

mod linalg;
mod quad;

pub use channel::{
    check_convexity_condition, n_fold_coefficients, one_fold, reconstruct_dense_channel,
    two_fold, ChannelError, CliffordMixture, DenseChannel, MixtureTerm, NFoldDecomposition,
};
pub use circuit::{
    CircuitError, FixedLayer, Layer, Observable, ObservableKind, ParamCircuit, RotationSite,
    ShiftSign,
};
pub use dense::{
    circuit_channel, evaluate_cost, evaluate_quantity, mc_average, quadrature_average,
    run_circuit, DenseError, DenseQuantity, DenseState,
};
pub use dist::{AngleDistribution, AngleLaw, DistError};
pub use estimator::{
    derive_rng, draw_approximant, enumerate_exact, estimate_first_order,
    estimate_gradient_variance, estimate_second_order, estimate_squared_gradient,
    gamma_total, param_mixtures,
    plan_samples, EstimateReport, EstimatorError, ExactSpec, PlanMode, SamplePlan,
};
pub use gate::{CliffordGate, GateKind, PauliAxis};
pub use pauli::{Pauli, PauliString};
pub use schema::{circuit_from_json, circuit_to_json, SchemaError};
pub use stabilizer::StabilizerTableau;
