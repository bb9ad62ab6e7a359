//! Theoretical risk limits: the low-noise limit for polyhedra (statistical
//! dimension of the tangent-cone face cut out by the residual hyperplane),
//! its closed forms for the orthant and for isotonic regression via the
//! finest mean-preserving partition, the unit-ball low-noise limits, the
//! tangent-cone upper bound, and high-noise limits via core cones.

use crate::error::{Error, Result};
use crate::geometry::{block_monotone_embedding, core_cone, tangent_cone, CoreCone};
use crate::numerics::{norm, sub, Matrix};
use crate::sets::{project, ConstraintSet};
use crate::statdim::{
    harmonic_exact, mc_statdim, statdim_monotone_closed, ConeTarget, NoiseModel, StatDimEstimate,
};
use num_rational::Ratio;

/// How a reported number was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exactness {
    ClosedForm,
    MonteCarlo,
    Asymptotic,
}

impl Exactness {
    pub fn tag(&self) -> &'static str {
        match self {
            Exactness::ClosedForm => "closed-form",
            Exactness::MonteCarlo => "monte-carlo",
            Exactness::Asymptotic => "asymptotic",
        }
    }
}

/// A limit value with its provenance.
#[derive(Clone, Debug)]
pub struct LimitValue {
    pub value: f64,
    pub std_error: f64,
    pub exactness: Exactness,
}

impl LimitValue {
    pub fn exact(value: f64) -> Self {
        LimitValue {
            value,
            std_error: 0.0,
            exactness: Exactness::ClosedForm,
        }
    }

    pub fn from_estimate(est: &StatDimEstimate) -> Self {
        LimitValue {
            value: est.value,
            std_error: est.std_error,
            exactness: Exactness::MonteCarlo,
        }
    }
}

/// One constant piece of the isotonic fit together with the finest
/// mean-preserving sub-partition of the data over it. Ranges are half-open
/// `[start, end)`.
#[derive(Clone, Debug)]
pub struct LevelBlock {
    pub range: (usize, usize),
    pub mu: f64,
    pub sub_blocks: Vec<(usize, usize)>,
}

/// Level blocks of the isotonic fit of a vector with per-level sub-blocks.
#[derive(Clone, Debug)]
pub struct BlockPartition {
    pub levels: Vec<LevelBlock>,
}

impl BlockPartition {
    /// Sub-block counts `m_1, ..., m_K`.
    pub fn sub_block_counts(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.sub_blocks.len()).collect()
    }

    /// Table-style rendering, e.g. `[(0,-2),(1,-3)],[(2),(2)]`.
    pub fn render(&self, theta: &[f64]) -> String {
        let fmt_num = |x: f64| {
            if x.fract() == 0.0 && x.abs() < 1e15 {
                format!("{}", x as i64)
            } else {
                format!("{x}")
            }
        };
        self.levels
            .iter()
            .map(|lvl| {
                let subs: Vec<String> = lvl
                    .sub_blocks
                    .iter()
                    .map(|&(s, e)| {
                        let vals: Vec<String> =
                            theta[s..e].iter().map(|&v| fmt_num(v)).collect();
                        format!("({})", vals.join(","))
                    })
                    .collect();
                format!("[{}]", subs.join(","))
            })
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Check the structural invariants against the vector that produced the
    /// partition.
    pub fn validate(&self, theta: &[f64]) -> Result<()> {
        let n = theta.len();
        let mut cursor = 0usize;
        let mut prev_mu = f64::NEG_INFINITY;
        for lvl in &self.levels {
            if lvl.range.0 != cursor || lvl.range.1 <= lvl.range.0 {
                return Err(Error::Numerical("level blocks do not tile the index set".into()));
            }
            if lvl.mu <= prev_mu {
                return Err(Error::Numerical("level values not strictly increasing".into()));
            }
            prev_mu = lvl.mu;
            let mut sub_cursor = lvl.range.0;
            for &(s, e) in &lvl.sub_blocks {
                if s != sub_cursor || e <= s || e > lvl.range.1 {
                    return Err(Error::Numerical("sub-blocks do not tile their level".into()));
                }
                let len = (e - s) as f64;
                let mean = theta[s..e].iter().sum::<f64>() / len;
                if (mean - lvl.mu).abs() > 1e-8 * lvl.mu.abs().max(1.0) * len {
                    return Err(Error::Numerical("sub-block mean differs from level value".into()));
                }
                sub_cursor = e;
            }
            if sub_cursor != lvl.range.1 {
                return Err(Error::Numerical("sub-blocks do not reach the level end".into()));
            }
            cursor = lvl.range.1;
        }
        if cursor != n {
            return Err(Error::Numerical("levels do not reach the vector end".into()));
        }
        Ok(())
    }
}

const PARTITION_TOL: f64 = 1e-9;

/// The finest partition of each constant piece of the isotonic fit into
/// contiguous sub-blocks over which the data mean equals the fitted value.
///
/// Level blocks come from the isotonic fit; sub-blocks from a greedy prefix
/// scan that closes a sub-block as soon as its running mean hits the level
/// value. The greedy construction produces the unique finest partition.
pub fn isotonic_partition(theta: &[f64]) -> Result<BlockPartition> {
    if theta.is_empty() {
        return Err(Error::InvalidInput("empty vector".into()));
    }
    let fit = crate::sets::project_monotone(theta).point;
    let mut levels = Vec::new();
    let mut start = 0usize;
    while start < theta.len() {
        let mut end = start + 1;
        while end < theta.len()
            && (fit[end] - fit[start]).abs() <= PARTITION_TOL * fit[start].abs().max(1.0)
        {
            end += 1;
        }
        let len = (end - start) as f64;
        let mu = theta[start..end].iter().sum::<f64>() / len;
        let mut sub_blocks = Vec::new();
        let mut s = start;
        let mut acc = 0.0;
        for i in start..end {
            acc += theta[i];
            let l = (i + 1 - s) as f64;
            if (acc - l * mu).abs() <= PARTITION_TOL * mu.abs().max(1.0) * l {
                sub_blocks.push((s, i + 1));
                s = i + 1;
                acc = 0.0;
            }
        }
        if s != end {
            return Err(Error::Numerical(format!(
                "accumulated rounding kept the final sub-block of level [{start},{end}) from \
                 closing; try exact-rational inputs"
            )));
        }
        levels.push(LevelBlock {
            range: (start, end),
            mu,
            sub_blocks,
        });
        start = end;
    }
    Ok(BlockPartition { levels })
}

/// Exact-rational variant of [`isotonic_partition`] for integer inputs; used
/// by the Table-1 reproduction where the limits must come out as exact
/// rationals.
pub fn isotonic_partition_exact(theta: &[i64]) -> BlockPartition {
    assert!(!theta.is_empty(), "empty vector");
    let y: Vec<Ratio<i64>> = theta.iter().map(|&v| Ratio::from_integer(v)).collect();
    // Exact PAVA over rationals: pool while the previous block mean exceeds
    // the next.
    let mut blocks: Vec<(Ratio<i64>, i64)> = Vec::new();
    for &yi in &y {
        blocks.push((yi, 1));
        while blocks.len() >= 2 {
            let (s2, l2) = blocks[blocks.len() - 1];
            let (s1, l1) = blocks[blocks.len() - 2];
            if s1 / l1 > s2 / l2 {
                blocks.pop();
                let top = blocks.last_mut().unwrap();
                top.0 = s1 + s2;
                top.1 = l1 + l2;
            } else {
                break;
            }
        }
    }
    let mut fit: Vec<Ratio<i64>> = Vec::with_capacity(y.len());
    for (s, l) in &blocks {
        for _ in 0..*l {
            fit.push(s / l);
        }
    }
    let mut levels = Vec::new();
    let mut start = 0usize;
    while start < y.len() {
        let mut end = start + 1;
        while end < y.len() && fit[end] == fit[start] {
            end += 1;
        }
        let mu = fit[start];
        let mut sub_blocks = Vec::new();
        let mut s = start;
        let mut acc = Ratio::from_integer(0);
        for i in start..end {
            acc += y[i];
            if acc == mu * Ratio::from_integer((i + 1 - s) as i64) {
                sub_blocks.push((s, i + 1));
                s = i + 1;
                acc = Ratio::from_integer(0);
            }
        }
        debug_assert_eq!(s, end, "exact arithmetic must close the level block");
        levels.push(LevelBlock {
            range: (start, end),
            mu: *mu.numer() as f64 / *mu.denom() as f64,
            sub_blocks,
        });
        start = end;
    }
    BlockPartition { levels }
}

/// Exact low-noise limit for the given partition when every level is in the
/// equal-sub-block-size special case: `sum_k H_{m_k}` as a rational.
/// Returns `None` if some level has unequal sub-block sizes.
pub fn partition_limit_exact(p: &BlockPartition) -> Option<Ratio<i64>> {
    let mut total = Ratio::from_integer(0);
    for lvl in &p.levels {
        let sizes: Vec<usize> = lvl.sub_blocks.iter().map(|&(s, e)| e - s).collect();
        if sizes.windows(2).any(|w| w[0] != w[1]) {
            return None;
        }
        total += harmonic_exact(sizes.len());
    }
    Some(total)
}

/// H-representation `{u : A u <= b}` of the polyhedral variants.
fn h_rep(set: &ConstraintSet) -> Option<(Matrix, Vec<f64>)> {
    match set {
        ConstraintSet::Polyhedron { a, b } => Some((a.clone(), b.clone())),
        _ => set.cone_h_rep().map(|a| {
            let m = a.rows();
            (a, vec![0.0; m])
        }),
    }
}

/// Low-noise limit of the normalized risks for a polyhedral constraint set:
/// the statistical dimension of the tangent cone at the projection of
/// `theta`, intersected with the hyperplane orthogonal to the projection
/// residual. Monte Carlo, Gaussian noise.
pub fn low_sigma_limit_polyhedral(
    set: &ConstraintSet,
    theta: &[f64],
    samples: usize,
    seed: u64,
) -> Result<StatDimEstimate> {
    let (a, b) = h_rep(set).ok_or_else(|| {
        Error::InvalidInput(format!(
            "{} has no plain H-representation; use the family-specific limit",
            set.label()
        ))
    })?;
    let pi = project(set, theta)?.point;
    let t = tangent_cone(&a, &b, &pi)?;
    let v = sub(theta, &pi);
    mc_statdim(
        &ConeTarget::Face {
            ineq: t.a_active,
            normal: v,
        },
        &NoiseModel::Gaussian,
        samples,
        seed,
    )
}

/// Closed-form low-noise limit for the nonnegative orthant:
/// `n_0 / 2 + n_+`.
pub fn low_sigma_limit_orthant(theta: &[f64]) -> f64 {
    let n_plus = theta.iter().filter(|&&v| v > 0.0).count() as f64;
    let n_zero = theta.iter().filter(|&&v| v == 0.0).count() as f64;
    n_zero / 2.0 + n_plus
}

/// Low-noise limit for isotonic regression: per level block, the harmonic
/// number when the sub-block sizes are equal, otherwise a Monte Carlo
/// estimate of the block monotone cone through its low-dimensional
/// embedding; summed over levels.
pub fn low_sigma_limit_isotonic(
    theta: &[f64],
    samples: usize,
    seed: u64,
) -> Result<LimitValue> {
    let partition = isotonic_partition(theta)?;
    let mut value = 0.0;
    let mut var = 0.0;
    let mut any_mc = false;
    for (k, lvl) in partition.levels.iter().enumerate() {
        let sizes: Vec<usize> = lvl.sub_blocks.iter().map(|&(s, e)| e - s).collect();
        if sizes.windows(2).all(|w| w[0] == w[1]) {
            value += statdim_monotone_closed(sizes.len());
        } else {
            let emb = block_monotone_embedding(&sizes)?;
            let est = mc_statdim(
                &ConeTarget::Set(emb),
                &NoiseModel::Gaussian,
                samples,
                seed.wrapping_add(k as u64),
            )?;
            value += est.value;
            var += est.std_error * est.std_error;
            any_mc = true;
        }
    }
    Ok(LimitValue {
        value,
        std_error: var.sqrt(),
        exactness: if any_mc {
            Exactness::MonteCarlo
        } else {
            Exactness::ClosedForm
        },
    })
}

/// Low-noise limits for the unit ball with `||theta|| > 1`: the normalized
/// misspecified risk tends to `(n-1)/||theta||^2` and the normalized excess
/// risk to `(n-1)/||theta||`.
pub fn ball_limits(theta: &[f64]) -> Result<(f64, f64)> {
    let r = norm(theta);
    if r <= 1.0 {
        return Err(Error::InvalidInput(format!(
            "||theta|| = {r} <= 1: well-specified; the common limit is the tangent-cone value"
        )));
    }
    let n = theta.len() as f64;
    Ok(((n - 1.0) / (r * r), (n - 1.0) / r))
}

/// The tangent-cone upper bound on both normalized risks:
/// `delta(T_C(Pi_C(theta)))`. Closed forms for the orthant, monotone cone,
/// ball, and parabola epigraph; Monte Carlo for general polyhedral variants.
pub fn bellec_bound(
    set: &ConstraintSet,
    theta: &[f64],
    samples: usize,
    seed: u64,
) -> Result<LimitValue> {
    let n = set.dim() as f64;
    match set {
        ConstraintSet::Orthant { .. } => {
            let n_plus = theta.iter().filter(|&&v| v > 0.0).count() as f64;
            Ok(LimitValue::exact(n_plus + (n - n_plus) / 2.0))
        }
        ConstraintSet::MonotoneCone { .. } => {
            let partition = isotonic_partition(theta)?;
            let value = partition
                .levels
                .iter()
                .map(|l| statdim_monotone_closed(l.range.1 - l.range.0))
                .sum();
            Ok(LimitValue::exact(value))
        }
        ConstraintSet::Ball { .. } => {
            if norm(theta) >= 1.0 {
                Ok(LimitValue::exact(n - 0.5))
            } else {
                Ok(LimitValue::exact(n))
            }
        }
        ConstraintSet::ParabolaEpigraph => {
            let interior =
                theta[1] > theta[0] * theta[0] + 1e-9 * norm(theta).max(1.0);
            Ok(LimitValue::exact(if interior { n } else { n - 0.5 }))
        }
        ConstraintSet::PolyhedralCone { .. } | ConstraintSet::Polyhedron { .. } => {
            let (a, b) = h_rep(set).unwrap();
            let pi = project(set, theta)?.point;
            let t = tangent_cone(&a, &b, &pi)?;
            if t.a_active.rows() == 0 {
                return Ok(LimitValue::exact(n));
            }
            let est = mc_statdim(
                &ConeTarget::Set(ConstraintSet::polyhedral_cone(t.a_active)?),
                &NoiseModel::Gaussian,
                samples,
                seed,
            )?;
            Ok(LimitValue::from_estimate(&est))
        }
        ConstraintSet::BlockMonotoneCone { .. } => Err(Error::InvalidInput(
            "tangent-cone bound not implemented for block monotone constraint sets".into(),
        )),
    }
}

/// High-noise limit of the normalized risks.
#[derive(Clone, Debug)]
pub enum HighSigmaLimit {
    /// `delta(K_C)`, with a flag recording whether the boundedness condition
    /// backing the limit is actually verified for this set.
    Known {
        value: f64,
        std_error: f64,
        exactness: Exactness,
        condition_verified: bool,
    },
    /// No characterization; `reference` is the core-cone value reported for
    /// comparison.
    Unknown { reference: f64, note: String },
}

/// High-noise limit: the statistical dimension of the core cone where that
/// is justified (orthant, bounded sets), the candidate core-cone value with
/// `condition_verified = false` for other cones, and `Unknown` for the
/// parabola epigraph whose simulated high-noise risk exceeds the core-cone
/// value.
pub fn high_sigma_limit(
    set: &ConstraintSet,
    samples: usize,
    seed: u64,
) -> Result<HighSigmaLimit> {
    match set {
        ConstraintSet::Orthant { dim } => Ok(HighSigmaLimit::Known {
            value: *dim as f64 / 2.0,
            std_error: 0.0,
            exactness: Exactness::ClosedForm,
            condition_verified: true,
        }),
        ConstraintSet::Ball { .. } => Ok(HighSigmaLimit::Known {
            value: 0.0,
            std_error: 0.0,
            exactness: Exactness::ClosedForm,
            condition_verified: true,
        }),
        ConstraintSet::MonotoneCone { dim } => Ok(HighSigmaLimit::Known {
            value: statdim_monotone_closed(*dim),
            std_error: 0.0,
            exactness: Exactness::ClosedForm,
            condition_verified: false,
        }),
        ConstraintSet::BlockMonotoneCone { sizes } => {
            let emb = block_monotone_embedding(sizes)?;
            let est = mc_statdim(&ConeTarget::Set(emb), &NoiseModel::Gaussian, samples, seed)?;
            Ok(HighSigmaLimit::Known {
                value: est.value,
                std_error: est.std_error,
                exactness: Exactness::MonteCarlo,
                condition_verified: false,
            })
        }
        ConstraintSet::PolyhedralCone { .. } => {
            let est = mc_statdim(
                &ConeTarget::Set(set.clone()),
                &NoiseModel::Gaussian,
                samples,
                seed,
            )?;
            Ok(HighSigmaLimit::Known {
                value: est.value,
                std_error: est.std_error,
                exactness: Exactness::MonteCarlo,
                condition_verified: false,
            })
        }
        ConstraintSet::Polyhedron { .. } => match core_cone(set)? {
            CoreCone::Zero => Ok(HighSigmaLimit::Known {
                value: 0.0,
                std_error: 0.0,
                exactness: Exactness::ClosedForm,
                condition_verified: true,
            }),
            CoreCone::Set(cone) => {
                let est =
                    mc_statdim(&ConeTarget::Set(cone), &NoiseModel::Gaussian, samples, seed)?;
                Ok(HighSigmaLimit::Known {
                    value: est.value,
                    std_error: est.std_error,
                    exactness: Exactness::MonteCarlo,
                    condition_verified: false,
                })
            }
        },
        ConstraintSet::ParabolaEpigraph => Ok(HighSigmaLimit::Unknown {
            reference: 0.5,
            note: "no high-noise characterization; the core-cone value 1/2 is shown for \
                   comparison and simulation exceeds it"
                .into(),
        }),
    }
}

/// Everything the `limits` subcommand reports for one (set, theta) pair.
#[derive(Clone, Debug)]
pub struct LimitReport {
    pub low_sigma_m: Option<LimitValue>,
    pub low_sigma_e: Option<LimitValue>,
    pub bellec: Option<LimitValue>,
    pub high_sigma: HighSigmaLimit,
    pub partition: Option<BlockPartition>,
    pub notes: Vec<String>,
}

/// Assemble the limit report for a constraint set and mean vector.
pub fn limit_report(
    set: &ConstraintSet,
    theta: &[f64],
    samples: usize,
    seed: u64,
) -> Result<LimitReport> {
    if theta.len() != set.dim() {
        return Err(Error::InvalidInput(format!(
            "theta has dimension {} but the set {} has dimension {}",
            theta.len(),
            set.label(),
            set.dim()
        )));
    }
    let mut notes = Vec::new();
    let mut partition = None;

    let (low_m, low_e) = match set {
        ConstraintSet::Orthant { .. } => {
            let v = LimitValue::exact(low_sigma_limit_orthant(theta));
            (Some(v.clone()), Some(v))
        }
        ConstraintSet::MonotoneCone { .. } => {
            partition = Some(isotonic_partition(theta)?);
            let v = low_sigma_limit_isotonic(theta, samples, seed)?;
            (Some(v.clone()), Some(v))
        }
        ConstraintSet::PolyhedralCone { .. } | ConstraintSet::Polyhedron { .. } => {
            let est = low_sigma_limit_polyhedral(set, theta, samples, seed)?;
            let v = LimitValue::from_estimate(&est);
            (Some(v.clone()), Some(v))
        }
        ConstraintSet::Ball { .. } => match ball_limits(theta) {
            Ok((m, e)) => (
                Some(LimitValue {
                    value: m,
                    std_error: 0.0,
                    exactness: Exactness::ClosedForm,
                }),
                Some(LimitValue {
                    value: e,
                    std_error: 0.0,
                    exactness: Exactness::ClosedForm,
                }),
            ),
            Err(_) => {
                notes.push(
                    "theta is inside the ball (well-specified): both low-noise limits equal \
                     the tangent-cone value"
                        .into(),
                );
                let b = bellec_bound(set, theta, samples, seed)?;
                (Some(b.clone()), Some(b))
            }
        },
        ConstraintSet::BlockMonotoneCone { .. } => {
            notes.push("low-noise limit not implemented for this constraint set".into());
            (None, None)
        }
        ConstraintSet::ParabolaEpigraph => {
            notes.push(
                "no low-noise theory for this non-polyhedral set beyond the unit ball".into(),
            );
            (None, None)
        }
    };

    let bellec = match bellec_bound(set, theta, samples, seed.wrapping_add(1)) {
        Ok(v) => Some(v),
        Err(e) => {
            notes.push(format!("tangent-cone bound unavailable: {e}"));
            None
        }
    };
    let high_sigma = high_sigma_limit(set, samples, seed.wrapping_add(2))?;

    Ok(LimitReport {
        low_sigma_m: low_m,
        low_sigma_e: low_e,
        bellec,
        high_sigma,
        partition,
        notes,
    })
}
