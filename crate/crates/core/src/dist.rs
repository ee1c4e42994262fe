//! Rotation-angle laws and the trigonometric moments the channel
//! decompositions consume.
//!
//! A law exposes r_t = E[cos t*theta] and s_t = E[sin t*theta]; the one- and
//! two-fold mixtures need only t = 1, 2, while N-fold coefficients integrate
//! products of half-angle factors (see [`AngleDistribution::lambda_expectations`]).
//! A law may declare a symmetry center in {0, pi/2, pi, 3*pi/2}; recentering
//! by that angle makes it even about zero so the convex decompositions apply.

use crate::quad::{panelled_adaptive_simpson, QuadError};
use rand::Rng;
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use thiserror::Error;

/// Absolute tolerance for the adaptive quadrature behind N-fold coefficients.
/// Two orders below the 1e-8 channel-equality tolerance used downstream.
pub const QUADRATURE_TOL: f64 = 1e-10;

/// Dirac weights must sum to one within this.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Half-width of the Gaussian integration window, in standard deviations.
/// The excluded tail mass is far below every tolerance in use.
const GAUSSIAN_WINDOW_SIGMAS: f64 = 12.0;

#[derive(Debug, Error, PartialEq)]
pub enum DistError {
    #[error("Dirac mixture needs at least one atom")]
    EmptyMixture,
    #[error("Dirac weight {0} is negative")]
    NegativeWeight(f64),
    #[error("Dirac weights sum to {0}, expected 1")]
    WeightSum(f64),
    #[error("variance {0} is negative")]
    NegativeVariance(f64),
    #[error("tabulated moments need equal-length nonempty r and s with entries in [-1, 1]")]
    InvalidTabulated,
    #[error("moment order {t} exceeds the tabulated range {max}")]
    MomentOrderOutOfRange { t: u32, max: usize },
    #[error("symmetry center {0} is not a multiple of pi/2")]
    InvalidCenter(f64),
    #[error("N-fold coefficients need N >= 1")]
    InvalidFold,
    #[error("tabulated laws carry too little information for N-fold coefficients")]
    TabulatedUnsupported,
    #[error("cannot draw samples from a tabulated law")]
    CannotSample,
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// The underlying angle law.
#[derive(Clone, Debug, PartialEq)]
pub enum AngleLaw {
    /// Uniform on [0, 2*pi).
    Uniform,
    /// Gaussian with the given mean and variance (angles taken mod 2*pi).
    Gaussian { mean: f64, var: f64 },
    /// Finite mixture of point masses: (angle, weight) pairs.
    DiracMixture(Vec<(f64, f64)>),
    /// A law known only through its first T trigonometric moments.
    TabulatedMoments { r: Vec<f64>, s: Vec<f64> },
}

/// An angle law plus an optional declared symmetry center.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleDistribution {
    law: AngleLaw,
    center: Option<f64>,
}

impl AngleDistribution {
    pub fn uniform() -> Self {
        AngleDistribution { law: AngleLaw::Uniform, center: None }
    }

    pub fn gaussian(mean: f64, var: f64) -> Result<Self, DistError> {
        if !(var >= 0.0) {
            return Err(DistError::NegativeVariance(var));
        }
        Ok(AngleDistribution { law: AngleLaw::Gaussian { mean, var }, center: None })
    }

    /// A single point mass.
    pub fn dirac(angle: f64) -> Self {
        AngleDistribution { law: AngleLaw::DiracMixture(vec![(angle, 1.0)]), center: None }
    }

    /// The even pair {(+angle, 1/2), (-angle, 1/2)}.
    pub fn dirac_pair(angle: f64) -> Self {
        AngleDistribution {
            law: AngleLaw::DiracMixture(vec![(angle, 0.5), (-angle, 0.5)]),
            center: None,
        }
    }

    pub fn dirac_mixture(atoms: Vec<(f64, f64)>) -> Result<Self, DistError> {
        if atoms.is_empty() {
            return Err(DistError::EmptyMixture);
        }
        let mut sum = 0.0;
        for &(_, w) in &atoms {
            if w < 0.0 {
                return Err(DistError::NegativeWeight(w));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(DistError::WeightSum(sum));
        }
        Ok(AngleDistribution { law: AngleLaw::DiracMixture(atoms), center: None })
    }

    pub fn tabulated(r: Vec<f64>, s: Vec<f64>) -> Result<Self, DistError> {
        let ok = !r.is_empty()
            && r.len() == s.len()
            && r.iter().chain(s.iter()).all(|m| m.abs() <= 1.0 + 1e-12);
        if !ok {
            return Err(DistError::InvalidTabulated);
        }
        Ok(AngleDistribution { law: AngleLaw::TabulatedMoments { r, s }, center: None })
    }

    /// Declare a symmetry center; must be a Clifford angle k*pi/2.
    pub fn with_center(mut self, center: f64) -> Result<Self, DistError> {
        quarter_of(center)?;
        self.center = Some(center);
        Ok(self)
    }

    pub fn law(&self) -> &AngleLaw {
        &self.law
    }

    pub fn center(&self) -> Option<f64> {
        self.center
    }

    /// Highest moment order available; None means unlimited.
    pub fn moment_order(&self) -> Option<usize> {
        match &self.law {
            AngleLaw::TabulatedMoments { r, .. } => Some(r.len()),
            _ => None,
        }
    }

    /// Draw one angle. Tabulated laws carry moments only, not a sampling
    /// rule.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64, DistError> {
        match &self.law {
            AngleLaw::Uniform => Ok(rng.random_range(0.0..TAU)),
            AngleLaw::Gaussian { mean, var } => {
                if *var == 0.0 {
                    return Ok(*mean);
                }
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                Ok(mean + var.sqrt() * z)
            }
            AngleLaw::DiracMixture(atoms) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for &(angle, weight) in atoms {
                    acc += weight;
                    if u < acc {
                        return Ok(angle);
                    }
                }
                Ok(atoms.last().expect("mixtures are nonempty").0)
            }
            AngleLaw::TabulatedMoments { .. } => Err(DistError::CannotSample),
        }
    }

    /// (E[cos t*theta], E[sin t*theta]). t = 0 returns (1, 0).
    pub fn moment(&self, t: u32) -> Result<(f64, f64), DistError> {
        if t == 0 {
            return Ok((1.0, 0.0));
        }
        match &self.law {
            AngleLaw::Uniform => Ok((0.0, 0.0)),
            AngleLaw::Gaussian { mean, var } => {
                let damp = (-0.5 * (t as f64).powi(2) * var).exp();
                let phase = t as f64 * mean;
                Ok((damp * phase.cos(), damp * phase.sin()))
            }
            AngleLaw::DiracMixture(atoms) => {
                let (mut r, mut s) = (0.0, 0.0);
                for &(a, w) in atoms {
                    r += w * (t as f64 * a).cos();
                    s += w * (t as f64 * a).sin();
                }
                Ok((r, s))
            }
            AngleLaw::TabulatedMoments { r, s } => {
                let idx = t as usize - 1;
                if idx >= r.len() {
                    return Err(DistError::MomentOrderOutOfRange { t, max: r.len() });
                }
                Ok((r[idx], s[idx]))
            }
        }
    }

    /// The law of theta - c, for a Clifford angle c.
    ///
    /// Tabulated moments rotate by exact quarter turns so no floating-point
    /// noise enters; a declared center shifts along.
    pub fn recenter(&self, c: f64) -> Result<AngleDistribution, DistError> {
        let quarter = quarter_of(c)?;
        let law = match &self.law {
            AngleLaw::Uniform => AngleLaw::Uniform,
            AngleLaw::Gaussian { mean, var } => AngleLaw::Gaussian { mean: mean - c, var: *var },
            AngleLaw::DiracMixture(atoms) => AngleLaw::DiracMixture(
                atoms.iter().map(|&(a, w)| ((a - c).rem_euclid(TAU), w)).collect(),
            ),
            AngleLaw::TabulatedMoments { r, s } => {
                let (mut nr, mut ns) = (Vec::with_capacity(r.len()), Vec::with_capacity(s.len()));
                for t in 1..=r.len() {
                    // e^{it(theta - c)} = e^{it theta} * (cos tc - i sin tc)
                    let (ct, st) = quarter_trig((t * quarter) % 4);
                    nr.push(r[t - 1] * ct + s[t - 1] * st);
                    ns.push(s[t - 1] * ct - r[t - 1] * st);
                }
                AngleLaw::TabulatedMoments { r: nr, s: ns }
            }
        };
        let center = self.center.map(|old| (old - c).rem_euclid(TAU));
        Ok(AngleDistribution { law, center })
    }

    /// Expectations of the N-fold half-angle coefficients, keyed by exponent
    /// counts (m0, m1, m2, m3) with m0+m1+m2+m3 = N:
    ///
    /// lambda(theta) = (1/2^N) (1+cos)^m0 (1-cos)^m1 (-sin)^m2 (sin)^m3
    ///
    /// Dirac mixtures are exact; Uniform and Gaussian integrate adaptively to
    /// [`QUADRATURE_TOL`]. Tabulated laws are rejected: N-fold coefficients
    /// are not functions of finitely many trigonometric moments alone.
    pub fn lambda_expectations(
        &self,
        n_fold: usize,
    ) -> Result<BTreeMap<[usize; 4], f64>, DistError> {
        if n_fold == 0 {
            return Err(DistError::InvalidFold);
        }
        let mut out = BTreeMap::new();
        for counts in exponent_counts(n_fold) {
            let value = match &self.law {
                AngleLaw::DiracMixture(atoms) => atoms
                    .iter()
                    .map(|&(a, w)| w * lambda_factor(a, counts))
                    .sum::<f64>(),
                // 11 panels: no boundary grid shares the integrand's pi/2
                // reflection symmetries, which would let the top-level
                // Simpson test accept a wrong estimate.
                AngleLaw::Uniform => panelled_adaptive_simpson(
                    |theta| lambda_factor(theta, counts) / TAU,
                    0.0,
                    TAU,
                    11,
                    QUADRATURE_TOL,
                )?,
                AngleLaw::Gaussian { mean, var } => {
                    if *var == 0.0 {
                        lambda_factor(*mean, counts)
                    } else {
                        let sigma = var.sqrt();
                        let norm = 1.0 / (sigma * TAU.sqrt());
                        let half = GAUSSIAN_WINDOW_SIGMAS * sigma;
                        panelled_adaptive_simpson(
                            |theta| {
                                let z = (theta - mean) / sigma;
                                lambda_factor(theta, counts) * norm * (-0.5 * z * z).exp()
                            },
                            mean - half,
                            mean + half,
                            16,
                            QUADRATURE_TOL,
                        )?
                    }
                }
                AngleLaw::TabulatedMoments { .. } => return Err(DistError::TabulatedUnsupported),
            };
            out.insert(counts, value);
        }
        Ok(out)
    }
}

/// lambda_I(theta) for one exponent-count pattern.
fn lambda_factor(theta: f64, [m0, m1, m2, m3]: [usize; 4]) -> f64 {
    let n = m0 + m1 + m2 + m3;
    let (c, s) = (theta.cos(), theta.sin());
    (1.0 + c).powi(m0 as i32)
        * (1.0 - c).powi(m1 as i32)
        * (-s).powi(m2 as i32)
        * s.powi(m3 as i32)
        / (2f64).powi(n as i32)
}

/// All (m0, m1, m2, m3) with sum n.
fn exponent_counts(n: usize) -> Vec<[usize; 4]> {
    let mut out = Vec::new();
    for m0 in 0..=n {
        for m1 in 0..=n - m0 {
            for m2 in 0..=n - m0 - m1 {
                out.push([m0, m1, m2, n - m0 - m1 - m2]);
            }
        }
    }
    out
}

/// Quarter-turn index of a Clifford angle (0 -> 0, pi/2 -> 1, ...).
fn quarter_of(c: f64) -> Result<usize, DistError> {
    let q = c / FRAC_PI_2;
    let rounded = q.round();
    if (q - rounded).abs() > 1e-9 {
        return Err(DistError::InvalidCenter(c));
    }
    Ok((rounded as i64).rem_euclid(4) as usize)
}

/// (cos, sin) of quarter * pi/2, exactly.
fn quarter_trig(quarter: usize) -> (f64, f64) {
    match quarter {
        0 => (1.0, 0.0),
        1 => (0.0, 1.0),
        2 => (-1.0, 0.0),
        _ => (0.0, -1.0),
    }
}

/// The set of admissible symmetry centers.
pub const SYMMETRY_CENTERS: [f64; 4] = [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2];
