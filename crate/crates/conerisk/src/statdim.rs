//! Monte Carlo estimation of the statistical dimension
//! `delta(T) = E ||Pi_T(Z)||^2` of a cone, with deterministic per-replicate
//! random streams, plus the closed forms used as oracles (harmonic numbers,
//! products).

use crate::error::{Error, Result};
use crate::numerics::{sqnorm, Matrix, RandomStream};
use crate::sets::{project, project_cone_with_equality, ConstraintSet};
use num_rational::Ratio;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Replicates are processed in fixed-size chunks whose partial sums are
/// combined in chunk order, so results do not depend on the worker count.
const CHUNK: usize = 4096;

/// A Monte Carlo statistical-dimension estimate.
#[derive(Clone, Debug)]
pub struct StatDimEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
    pub noise_tag: String,
}

impl StatDimEstimate {
    /// An exact value dressed up as an estimate (zero standard error).
    pub fn exact(value: f64) -> Self {
        StatDimEstimate {
            value,
            std_error: 0.0,
            samples: 0,
            seed: 0,
            noise_tag: "exact".into(),
        }
    }
}

/// Noise distribution for the generalized statistical dimension. All
/// variants have zero mean and finite second moment.
///
/// Strict-gap statements (low-noise limit strictly below the tangent-cone
/// bound) additionally need the noise to put mass in the interior of the
/// relevant tangent cones. That holds for the built-in continuous models
/// but is not checked for user tables; it is the caller's responsibility.
#[derive(Clone, Debug)]
pub enum NoiseModel {
    /// Independent standard normals.
    Gaussian,
    /// Independent uniforms on [-sqrt(3), sqrt(3)] (unit variance).
    ScaledUniform,
    /// Discrete distribution over fixed vectors with the given weights.
    UserTable { atoms: Vec<(Vec<f64>, f64)> },
}

impl NoiseModel {
    pub fn tag(&self) -> &'static str {
        match self {
            NoiseModel::Gaussian => "gaussian",
            NoiseModel::ScaledUniform => "scaled-uniform",
            NoiseModel::UserTable { .. } => "user-table",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(NoiseModel::Gaussian),
            "scaled-uniform" | "uniform" => Ok(NoiseModel::ScaledUniform),
            other => Err(Error::Parse(format!("unknown noise model {other:?}"))),
        }
    }

    /// Check the zero-mean/weight invariants against an ambient dimension.
    pub fn validate(&self, dim: usize) -> Result<()> {
        if let NoiseModel::UserTable { atoms } = self {
            if atoms.is_empty() {
                return Err(Error::InvalidInput("user table has no atoms".into()));
            }
            let mut wsum = 0.0;
            let mut mean = vec![0.0; dim];
            for (v, w) in atoms {
                if v.len() != dim {
                    return Err(Error::InvalidInput(
                        "user table atom dimension mismatch".into(),
                    ));
                }
                if !w.is_finite() || *w < 0.0 {
                    return Err(Error::InvalidInput("user table weights must be >= 0".into()));
                }
                wsum += w;
                for (m, x) in mean.iter_mut().zip(v) {
                    *m += w * x;
                }
            }
            if (wsum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "user table weights sum to {wsum}, expected 1"
                )));
            }
            if mean.iter().any(|m| m.abs() > 1e-9) {
                return Err(Error::InvalidInput("user table noise must have zero mean".into()));
            }
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        match self {
            NoiseModel::Gaussian => (0..n).map(|_| rng.sample(StandardNormal)).collect(),
            NoiseModel::ScaledUniform => {
                let h = 3f64.sqrt();
                (0..n).map(|_| rng.random_range(-h..h)).collect()
            }
            NoiseModel::UserTable { atoms } => {
                let u: f64 = rng.random_range(0.0..1.0);
                let mut acc = 0.0;
                for (v, w) in atoms {
                    acc += w;
                    if u < acc {
                        return v.clone();
                    }
                }
                atoms.last().unwrap().0.clone()
            }
        }
    }
}

/// The cone whose statistical dimension is being estimated: either a cone
/// constraint set, or a face `{u : A u <= 0, <v, u> = 0}` of a polyhedral
/// cone.
#[derive(Clone, Debug)]
pub enum ConeTarget {
    Set(ConstraintSet),
    Face { ineq: Matrix, normal: Vec<f64> },
}

impl ConeTarget {
    pub fn dim(&self) -> usize {
        match self {
            ConeTarget::Set(s) => s.dim(),
            ConeTarget::Face { ineq, .. } => ineq.cols(),
        }
    }

    fn check_is_cone(&self) -> Result<()> {
        match self {
            ConeTarget::Set(s) if !s.is_cone() => Err(Error::InvalidInput(format!(
                "{} is not a cone; statistical dimension needs a cone",
                s.label()
            ))),
            ConeTarget::Face { ineq, normal } if ineq.cols() != normal.len() => Err(
                Error::InvalidInput("face normal dimension mismatch".into()),
            ),
            _ => Ok(()),
        }
    }

    pub fn project(&self, z: &[f64]) -> Result<Vec<f64>> {
        match self {
            ConeTarget::Set(s) => Ok(project(s, z)?.point),
            ConeTarget::Face { ineq, normal } => {
                Ok(project_cone_with_equality(ineq, normal, z)?.point)
            }
        }
    }
}

/// Monte Carlo estimate of `E ||Pi(Z)||^2` over `samples` replicates.
/// Deterministic for a fixed seed, independent of the rayon worker count.
pub fn mc_statdim(
    target: &ConeTarget,
    noise: &NoiseModel,
    samples: usize,
    seed: u64,
) -> Result<StatDimEstimate> {
    target.check_is_cone()?;
    if samples < 100 {
        return Err(Error::InvalidInput("need at least 100 samples".into()));
    }
    let n = target.dim();
    noise.validate(n)?;

    let nchunks = samples.div_ceil(CHUNK);
    let partials: Result<Vec<(f64, f64)>> = (0..nchunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = samples.min(lo + CHUNK);
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for i in lo..hi {
                let mut rng = RandomStream::new(seed, i as u64).rng();
                let z = noise.sample(&mut rng, n);
                let p = target.project(&z).map_err(|e| {
                    Error::Numerical(format!("projection failed at replicate {i}: {e}"))
                })?;
                let q = sqnorm(&p);
                sum += q;
                sumsq += q * q;
            }
            Ok((sum, sumsq))
        })
        .collect();
    let partials = partials?;
    let (sum, sumsq) = partials
        .iter()
        .fold((0.0, 0.0), |(s, s2), (ps, ps2)| (s + ps, s2 + ps2));

    let nf = samples as f64;
    let mean = sum / nf;
    let var = ((sumsq - sum * sum / nf) / (nf - 1.0)).max(0.0);
    Ok(StatDimEstimate {
        value: mean,
        std_error: (var / nf).sqrt(),
        samples,
        seed,
        noise_tag: noise.tag().into(),
    })
}

/// Statistical dimension of the monotone cone in `R^m`: the harmonic number
/// `H_m`.
pub fn statdim_monotone_closed(m: usize) -> f64 {
    (1..=m).map(|j| 1.0 / j as f64).sum()
}

/// `H_m` in exact rational arithmetic.
pub fn harmonic_exact(m: usize) -> Ratio<i64> {
    (1..=m as i64).map(|j| Ratio::new(1, j)).sum()
}

/// Statistical dimension of a product cone: the sum of the parts.
pub fn statdim_product(parts: &[f64]) -> f64 {
    parts.iter().sum()
}
