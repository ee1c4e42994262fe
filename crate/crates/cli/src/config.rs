//! Experiment configuration: a single JSON document per run, parsed strictly
//! (unknown fields are errors) and validated before any work starts. The
//! command line only selects the config path, output directory, thread count,
//! and an optional seed override; everything that affects the numbers lives
//! in the document so a run can be archived and reproduced from it.

use cliffvar::{circuit_from_json, AngleDistribution, PauliString};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot parse config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

/// Angle law of every rotation in a templated circuit.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "dist", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistSpec {
    Uniform,
    Gaussian { mean: f64, var: f64 },
    Dirac { atoms: Vec<(f64, f64)> },
}

impl DistSpec {
    pub fn to_distribution(&self) -> Result<AngleDistribution, ConfigError> {
        match self {
            DistSpec::Uniform => Ok(AngleDistribution::uniform()),
            DistSpec::Gaussian { mean, var } => AngleDistribution::gaussian(*mean, *var)
                .map_err(|e| invalid(format!("gaussian law: {e}"))),
            DistSpec::Dirac { atoms } => AngleDistribution::dirac_mixture(atoms.clone())
                .map_err(|e| invalid(format!("dirac law: {e}"))),
        }
    }
}

/// Cost observable of a templated experiment. `ZeroProjector` expands to
/// |0..0><0..0| on all n qubits; `RandomPauliSum` draws unit-coefficient
/// non-identity strings from the architecture's random stream.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableSpec {
    ZeroProjector,
    PauliSum { terms: Vec<(f64, String)> },
    RandomPauliSum { count: usize },
}

impl ObservableSpec {
    fn validate(&self, n_values: &[usize]) -> Result<(), ConfigError> {
        match self {
            ObservableSpec::ZeroProjector => Ok(()),
            ObservableSpec::PauliSum { terms } => {
                if terms.is_empty() {
                    return Err(invalid("pauli_sum needs at least one term"));
                }
                for (coeff, text) in terms {
                    if !coeff.is_finite() {
                        return Err(invalid(format!("pauli_sum coefficient {coeff}")));
                    }
                    let string = PauliString::parse(text)
                        .map_err(|e| invalid(format!("pauli_sum term {text:?}: {e}")))?;
                    for &n in n_values {
                        if string.len() != n {
                            return Err(invalid(format!(
                                "pauli_sum term {text:?} has {} qubits, circuit has {n}",
                                string.len()
                            )));
                        }
                    }
                }
                Ok(())
            }
            ObservableSpec::RandomPauliSum { count } => {
                if *count == 0 {
                    return Err(invalid("random_pauli_sum count must be at least 1"));
                }
                Ok(())
            }
        }
    }
}

/// Rotation axis policy of a template: drawn per site or pinned.
#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
pub enum AxisPolicy {
    #[serde(rename = "random")]
    Random,
    X,
    Y,
    Z,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum EntanglerSpec {
    /// Brick pattern: even layers pair (0,1)(2,3).., odd layers (1,2)(3,4)..
    CzBricks,
    None,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ThinningSpec {
    /// Every layer rotates every qubit.
    None,
    /// Layer l keeps m_l ~ Uniform{0..n} rotations on random distinct qubits.
    UniformPerLayer,
}

fn default_entangler() -> EntanglerSpec {
    EntanglerSpec::CzBricks
}

fn default_axes() -> AxisPolicy {
    AxisPolicy::Random
}

fn default_thinning() -> ThinningSpec {
    ThinningSpec::None
}

/// Shape of the randomly drawn circuits: rotation layers alternated with
/// entangling layers.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateSpec {
    pub layers: usize,
    #[serde(default = "default_entangler")]
    pub entangler: EntanglerSpec,
    #[serde(default = "default_axes")]
    pub axes: AxisPolicy,
    #[serde(default = "default_thinning")]
    pub thinning: ThinningSpec,
}

/// Dense Monte Carlo reference columns: how many angle draws to average.
#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DenseReference {
    pub draws: usize,
}

/// Where a bias study takes its ground-truth value from.
#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TruthSpec {
    /// Exact weighted enumeration over all mixture assignments.
    Enumerate,
    /// Dense Monte Carlo over the angle laws.
    DenseMc { draws: usize },
}

/// What a single estimate targets.
#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum QuantitySpec {
    MeanCost,
    MeanSquaredCost,
    Gradient { parameter: usize },
    SquaredGradient { parameter: usize },
    GradientVariance { parameter: usize },
}

impl QuantitySpec {
    pub fn parameter(&self) -> Option<usize> {
        match self {
            QuantitySpec::MeanCost | QuantitySpec::MeanSquaredCost => None,
            QuantitySpec::Gradient { parameter }
            | QuantitySpec::SquaredGradient { parameter }
            | QuantitySpec::GradientVariance { parameter } => Some(*parameter),
        }
    }
}

/// Sample budget: a pinned draw count, or an (epsilon, delta) accuracy
/// target handed to the concentration-bound planner.
#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum BudgetSpec {
    Fixed(FixedBudget),
    Accuracy(AccuracyBudget),
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FixedBudget {
    pub k: u64,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AccuracyBudget {
    pub epsilon: f64,
    pub delta: f64,
}

/// Mean squared gradient versus qubit count over random architectures.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct VarianceVsNConfig {
    pub experiment: String,
    pub seed: u64,
    pub template: TemplateSpec,
    pub n: Vec<usize>,
    pub dist: DistSpec,
    pub observable: ObservableSpec,
    #[serde(default)]
    pub parameter: usize,
    pub k: u64,
    pub architectures: u64,
    #[serde(default)]
    pub dense_reference: Option<DenseReference>,
}

/// Squared bias (and variance) of the squared-gradient estimator versus
/// sample count, against a ground-truth value.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BiasVsKConfig {
    pub experiment: String,
    pub seed: u64,
    pub template: TemplateSpec,
    pub n: usize,
    pub dist: DistSpec,
    pub observable: ObservableSpec,
    #[serde(default)]
    pub parameter: usize,
    pub k_grid: Vec<u64>,
    #[serde(default = "default_batch")]
    pub batch: u64,
    pub architectures: u64,
    pub truth: TruthSpec,
}

/// Variance of the squared-gradient estimator versus sample count; no truth
/// value needed, so any qubit count works.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct VarVsKConfig {
    pub experiment: String,
    pub seed: u64,
    pub template: TemplateSpec,
    pub n: usize,
    pub dist: DistSpec,
    pub observable: ObservableSpec,
    #[serde(default)]
    pub parameter: usize,
    pub k_grid: Vec<u64>,
    #[serde(default = "default_batch")]
    pub batch: u64,
    pub architectures: u64,
}

fn default_batch() -> u64 {
    100
}

/// Per-parameter gradient variances and the mean cost for a set of randomly
/// drawn (optionally thinned) architectures.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureScanConfig {
    pub experiment: String,
    pub seed: u64,
    pub template: TemplateSpec,
    pub n: usize,
    pub dist: DistSpec,
    pub observable: ObservableSpec,
    pub k: u64,
    pub architectures: u64,
    #[serde(default)]
    pub dense_reference: Option<DenseReference>,
}

/// One estimate of one quantity on an explicit circuit document.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SingleEstimateConfig {
    pub experiment: String,
    pub seed: u64,
    pub circuit: serde_json::Value,
    pub quantity: QuantitySpec,
    pub budget: BudgetSpec,
}

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum ExperimentConfig {
    VarianceVsN(VarianceVsNConfig),
    BiasVsK(BiasVsKConfig),
    VarVsK(VarVsKConfig),
    ArchitectureScan(ArchitectureScanConfig),
    SingleEstimate(SingleEstimateConfig),
}

#[derive(Deserialize)]
struct TagOnly {
    experiment: String,
}

impl ExperimentConfig {
    /// Parse and validate a config document.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let tag: TagOnly = serde_json::from_str(text)
            .map_err(|_| invalid("config needs an \"experiment\" field"))?;
        let config = match tag.experiment.as_str() {
            "variance_vs_n" => {
                ExperimentConfig::VarianceVsN(serde_json::from_str(text)?)
            }
            "bias_vs_k" => ExperimentConfig::BiasVsK(serde_json::from_str(text)?),
            "var_vs_k" => ExperimentConfig::VarVsK(serde_json::from_str(text)?),
            "architecture_scan" => {
                ExperimentConfig::ArchitectureScan(serde_json::from_str(text)?)
            }
            "single_estimate" => {
                ExperimentConfig::SingleEstimate(serde_json::from_str(text)?)
            }
            other => {
                return Err(invalid(format!(
                    "unknown experiment {other:?}, expected one of variance_vs_n, \
                     bias_vs_k, var_vs_k, architecture_scan, single_estimate"
                )))
            }
        };
        config.validate()?;
        Ok(config)
    }

    /// Read, parse, and validate a config file.
    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        ExperimentConfig::parse(&std::fs::read_to_string(path)?)
    }

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentConfig::VarianceVsN(_) => "variance_vs_n",
            ExperimentConfig::BiasVsK(_) => "bias_vs_k",
            ExperimentConfig::VarVsK(_) => "var_vs_k",
            ExperimentConfig::ArchitectureScan(_) => "architecture_scan",
            ExperimentConfig::SingleEstimate(_) => "single_estimate",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            ExperimentConfig::VarianceVsN(c) => c.seed,
            ExperimentConfig::BiasVsK(c) => c.seed,
            ExperimentConfig::VarVsK(c) => c.seed,
            ExperimentConfig::ArchitectureScan(c) => c.seed,
            ExperimentConfig::SingleEstimate(c) => c.seed,
        }
    }

    /// Replace the master seed (the --seed override).
    pub fn set_seed(&mut self, seed: u64) {
        match self {
            ExperimentConfig::VarianceVsN(c) => c.seed = seed,
            ExperimentConfig::BiasVsK(c) => c.seed = seed,
            ExperimentConfig::VarVsK(c) => c.seed = seed,
            ExperimentConfig::ArchitectureScan(c) => c.seed = seed,
            ExperimentConfig::SingleEstimate(c) => c.seed = seed,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self {
            ExperimentConfig::VarianceVsN(c) => c.validate(),
            ExperimentConfig::BiasVsK(c) => c.validate(),
            ExperimentConfig::VarVsK(c) => c.validate(),
            ExperimentConfig::ArchitectureScan(c) => c.validate(),
            ExperimentConfig::SingleEstimate(c) => c.validate(),
        }
    }
}

/// Dense statevector references cap out where the oracle does.
pub const DENSE_CAP: usize = 14;

fn check_tag(got: &str, want: &str) -> Result<(), ConfigError> {
    if got == want {
        Ok(())
    } else {
        Err(invalid(format!("experiment field {got:?} does not match {want:?}")))
    }
}

/// A gradient study needs a stable parameter index across architectures, so
/// the template must keep every rotation.
fn check_gradient_template(
    template: &TemplateSpec,
    parameter: usize,
    n_values: &[usize],
) -> Result<(), ConfigError> {
    if template.layers == 0 {
        return Err(invalid("gradient studies need at least one layer"));
    }
    if template.thinning != ThinningSpec::None {
        return Err(invalid(
            "gradient studies need thinning \"none\": thinned layers do not \
             keep a stable parameter count",
        ));
    }
    for &n in n_values {
        let m = template.layers * n;
        if parameter >= m {
            return Err(invalid(format!(
                "parameter {parameter} out of range: {} layers on {n} qubits \
                 give {m} parameters",
                template.layers
            )));
        }
    }
    Ok(())
}

fn check_counts(pairs: &[(&str, u64)]) -> Result<(), ConfigError> {
    for (name, value) in pairs {
        if *value == 0 {
            return Err(invalid(format!("{name} must be at least 1")));
        }
    }
    Ok(())
}

fn check_n_values(n_values: &[usize]) -> Result<(), ConfigError> {
    if n_values.is_empty() {
        return Err(invalid("n list must not be empty"));
    }
    if n_values.iter().any(|&n| n == 0) {
        return Err(invalid("qubit counts must be at least 1"));
    }
    Ok(())
}

fn check_k_grid(grid: &[u64]) -> Result<(), ConfigError> {
    if grid.is_empty() {
        return Err(invalid("k_grid must not be empty"));
    }
    if grid.iter().any(|&k| k == 0) {
        return Err(invalid("k_grid entries must be at least 1"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("k_grid must be strictly increasing"));
    }
    Ok(())
}

impl VarianceVsNConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        check_tag(&self.experiment, "variance_vs_n")?;
        check_n_values(&self.n)?;
        check_counts(&[("k", self.k), ("architectures", self.architectures)])?;
        check_gradient_template(&self.template, self.parameter, &self.n)?;
        self.dist.to_distribution()?;
        self.observable.validate(&self.n)?;
        if let Some(reference) = &self.dense_reference {
            check_counts(&[("dense_reference.draws", reference.draws as u64)])?;
            if let Some(&n) = self.n.iter().find(|&&n| n > DENSE_CAP) {
                return Err(invalid(format!(
                    "dense_reference caps at {DENSE_CAP} qubits, config lists n = {n}"
                )));
            }
        }
        Ok(())
    }
}

fn validate_vs_k(
    template: &TemplateSpec,
    n: usize,
    parameter: usize,
    k_grid: &[u64],
    batch: u64,
    architectures: u64,
    dist: &DistSpec,
    observable: &ObservableSpec,
) -> Result<(), ConfigError> {
    check_n_values(&[n])?;
    check_k_grid(k_grid)?;
    check_counts(&[("batch", batch), ("architectures", architectures)])?;
    check_gradient_template(template, parameter, &[n])?;
    dist.to_distribution()?;
    observable.validate(&[n])
}

impl BiasVsKConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        check_tag(&self.experiment, "bias_vs_k")?;
        validate_vs_k(
            &self.template,
            self.n,
            self.parameter,
            &self.k_grid,
            self.batch,
            self.architectures,
            &self.dist,
            &self.observable,
        )?;
        if self.n > DENSE_CAP {
            return Err(invalid(format!(
                "bias needs a ground truth, which caps at {DENSE_CAP} qubits; \
                 use var_vs_k beyond that"
            )));
        }
        if let TruthSpec::DenseMc { draws } = self.truth {
            check_counts(&[("truth.draws", draws as u64)])?;
        }
        Ok(())
    }
}

impl VarVsKConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        check_tag(&self.experiment, "var_vs_k")?;
        validate_vs_k(
            &self.template,
            self.n,
            self.parameter,
            &self.k_grid,
            self.batch,
            self.architectures,
            &self.dist,
            &self.observable,
        )
    }
}

impl ArchitectureScanConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        check_tag(&self.experiment, "architecture_scan")?;
        check_n_values(&[self.n])?;
        check_counts(&[("k", self.k), ("architectures", self.architectures)])?;
        self.dist.to_distribution()?;
        self.observable.validate(&[self.n])?;
        if let Some(reference) = &self.dense_reference {
            check_counts(&[("dense_reference.draws", reference.draws as u64)])?;
            if self.n > DENSE_CAP {
                return Err(invalid(format!(
                    "dense_reference caps at {DENSE_CAP} qubits, config has n = {}",
                    self.n
                )));
            }
        }
        Ok(())
    }
}

impl SingleEstimateConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        check_tag(&self.experiment, "single_estimate")?;
        let text = serde_json::to_string(&self.circuit)?;
        let (circuit, _, _) = circuit_from_json(&text)
            .map_err(|e| invalid(format!("circuit document: {e}")))?;
        if let Some(parameter) = self.quantity.parameter() {
            if parameter >= circuit.m() {
                return Err(invalid(format!(
                    "parameter {parameter} out of range for {} parameters",
                    circuit.m()
                )));
            }
        }
        match self.budget {
            BudgetSpec::Fixed(FixedBudget { k }) => check_counts(&[("budget.k", k)])?,
            BudgetSpec::Accuracy(AccuracyBudget { epsilon, delta }) => {
                if !(epsilon > 0.0 && epsilon.is_finite()) {
                    return Err(invalid(format!("budget.epsilon {epsilon}")));
                }
                if !(delta > 0.0 && delta < 1.0) {
                    return Err(invalid(format!("budget.delta {delta}")));
                }
            }
        }
        Ok(())
    }
}
