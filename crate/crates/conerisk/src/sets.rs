//! Constraint sets and their Euclidean projection operators.
//!
//! Each set family gets an exact (or finitely terminating) projection:
//! componentwise clamping for the orthant, radial scaling for the ball,
//! pool-adjacent-violators for the monotone and block monotone cones, polar
//! decomposition via NNLS for polyhedral cones, Dykstra's algorithm for
//! general polyhedra, and a safeguarded cubic solve for the parabola
//! epigraph.

use crate::error::{Error, Result};
use crate::numerics::{dot, norm, nnls_impl, sqnorm, sub, Matrix};
use std::path::Path;

/// Default relative membership tolerance.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

const DYKSTRA_MAX_SWEEPS: usize = 100_000;

/// A closed convex constraint set.
///
/// Polyhedral representations reject rows that are pairwise proportional (or
/// zero) at construction; use the constructor functions to build validated
/// values.
#[derive(Clone, Debug)]
pub enum ConstraintSet {
    /// Nonnegative orthant in `R^n`.
    Orthant { dim: usize },
    /// Closed unit Euclidean ball in `R^n`.
    Ball { dim: usize },
    /// Nondecreasing vectors in `R^n`.
    MonotoneCone { dim: usize },
    /// Nondecreasing vectors constant on the given contiguous blocks.
    BlockMonotoneCone { sizes: Vec<usize> },
    /// `{u : A u <= 0}`.
    PolyhedralCone { a: Matrix },
    /// `{u : A u <= b}`; assumed nonempty by the caller.
    Polyhedron { a: Matrix, b: Vec<f64> },
    /// `{u in R^2 : u_2 >= u_1^2}`.
    ParabolaEpigraph,
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInput("dimension must be >= 1".into()));
    }
    Ok(())
}

/// Rows (optionally extended by offsets, for polyhedra) must be nonzero and
/// pairwise non-proportional. With `b = None` this is the cone assumption
/// that no two rows of `A` are scalar multiples; with offsets the assumption
/// applies to the pairs `(a_j, b_j)`, so a box with both `x <= 1` and
/// `-x <= 0` is fine.
fn check_rows(a: &Matrix, b: Option<&[f64]>) -> Result<()> {
    let extended = |i: usize| -> Vec<f64> {
        let mut r = a.row(i).to_vec();
        if let Some(b) = b {
            r.push(b[i]);
        }
        r
    };
    for i in 0..a.rows() {
        if norm(a.row(i)) == 0.0 {
            return Err(Error::InvalidInput(format!("row {i} is zero")));
        }
        let ri = extended(i);
        let ni = norm(&ri);
        for j in 0..i {
            let rj = extended(j);
            let nj = norm(&rj);
            // |<ri, rj>| == |ri||rj| exactly when proportional.
            if (dot(&ri, &rj).abs() - ni * nj).abs() <= 1e-12 * ni * nj {
                return Err(Error::InvalidInput(format!(
                    "constraints {j} and {i} are scalar multiples of each other"
                )));
            }
        }
    }
    Ok(())
}

impl ConstraintSet {
    pub fn orthant(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(ConstraintSet::Orthant { dim })
    }

    pub fn ball(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(ConstraintSet::Ball { dim })
    }

    pub fn monotone(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(ConstraintSet::MonotoneCone { dim })
    }

    pub fn block_monotone(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::InvalidInput(
                "block sizes must be nonempty and each >= 1".into(),
            ));
        }
        Ok(ConstraintSet::BlockMonotoneCone { sizes })
    }

    pub fn polyhedral_cone(a: Matrix) -> Result<Self> {
        if a.cols() == 0 {
            return Err(Error::InvalidInput("cone needs an ambient dimension".into()));
        }
        check_rows(&a, None)?;
        Ok(ConstraintSet::PolyhedralCone { a })
    }

    pub fn polyhedron(a: Matrix, b: Vec<f64>) -> Result<Self> {
        if a.rows() != b.len() {
            return Err(Error::InvalidInput(
                "polyhedron offset length must match the constraint count".into(),
            ));
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("offsets must be finite".into()));
        }
        check_rows(&a, Some(&b))?;
        Ok(ConstraintSet::Polyhedron { a, b })
    }

    pub fn parabola_epigraph() -> Self {
        ConstraintSet::ParabolaEpigraph
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        match self {
            ConstraintSet::Orthant { dim }
            | ConstraintSet::Ball { dim }
            | ConstraintSet::MonotoneCone { dim } => *dim,
            ConstraintSet::BlockMonotoneCone { sizes } => sizes.iter().sum(),
            ConstraintSet::PolyhedralCone { a } => a.cols(),
            ConstraintSet::Polyhedron { a, .. } => a.cols(),
            ConstraintSet::ParabolaEpigraph => 2,
        }
    }

    /// Whether the set is a cone with apex at the origin.
    pub fn is_cone(&self) -> bool {
        matches!(
            self,
            ConstraintSet::Orthant { .. }
                | ConstraintSet::MonotoneCone { .. }
                | ConstraintSet::BlockMonotoneCone { .. }
                | ConstraintSet::PolyhedralCone { .. }
        )
    }

    /// An H-representation `{u : A u <= 0}` for cone variants that admit one
    /// with pairwise non-proportional rows. The block monotone cone does not
    /// (its equality constraints would need both signs of a row).
    pub fn cone_h_rep(&self) -> Option<Matrix> {
        match self {
            ConstraintSet::Orthant { dim } => {
                let mut a = Matrix::zeros(*dim, *dim);
                for i in 0..*dim {
                    a.set(i, i, -1.0);
                }
                Some(a)
            }
            ConstraintSet::MonotoneCone { dim } => Some(monotone_h_rep(*dim)),
            ConstraintSet::PolyhedralCone { a } => Some(a.clone()),
            _ => None,
        }
    }

    /// Short description used in diagnostics.
    pub fn label(&self) -> String {
        match self {
            ConstraintSet::Orthant { dim } => format!("orthant:n={dim}"),
            ConstraintSet::Ball { dim } => format!("ball:n={dim}"),
            ConstraintSet::MonotoneCone { dim } => format!("monotone:n={dim}"),
            ConstraintSet::BlockMonotoneCone { sizes } => {
                let s: Vec<String> = sizes.iter().map(|v| v.to_string()).collect();
                format!("blockmonotone:sizes={}", s.join(","))
            }
            ConstraintSet::PolyhedralCone { a } => {
                format!("cone:{}x{}", a.rows(), a.cols())
            }
            ConstraintSet::Polyhedron { a, .. } => {
                format!("polyhedron:{}x{}", a.rows(), a.cols())
            }
            ConstraintSet::ParabolaEpigraph => "parabola".into(),
        }
    }

    /// Parse the CLI set specification, e.g. `orthant:n=3`, `ball:n=3`,
    /// `monotone:n=6`, `blockmonotone:sizes=2,3,2`, `cone:A=rows.csv`,
    /// `polyhedron:A=a.csv,b=b.csv`, `parabola`. File paths are resolved
    /// relative to `base`.
    pub fn parse_spec(spec: &str, base: &Path) -> Result<Self> {
        let (kind, rest) = match spec.split_once(':') {
            Some((k, r)) => (k.trim(), r.trim()),
            None => (spec.trim(), ""),
        };
        let get_field = |key: &str| -> Result<&str> {
            for part in rest.split(',') {
                if let Some((k, v)) = part.split_once('=') {
                    if k.trim() == key {
                        return Ok(v.trim());
                    }
                }
            }
            Err(Error::Parse(format!(
                "set spec {spec:?} is missing field {key}="
            )))
        };
        let parse_n = || -> Result<usize> {
            get_field("n")?
                .parse()
                .map_err(|_| Error::Parse(format!("bad n in set spec {spec:?}")))
        };
        match kind {
            "orthant" => ConstraintSet::orthant(parse_n()?),
            "ball" => ConstraintSet::ball(parse_n()?),
            "monotone" => ConstraintSet::monotone(parse_n()?),
            "blockmonotone" => {
                // sizes=2,3,2 consumes everything after `sizes=`.
                let rest = rest
                    .strip_prefix("sizes=")
                    .ok_or_else(|| Error::Parse(format!("expected sizes= in {spec:?}")))?;
                let sizes: Result<Vec<usize>> = rest
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse()
                            .map_err(|_| Error::Parse(format!("bad size {t:?} in {spec:?}")))
                    })
                    .collect();
                ConstraintSet::block_monotone(sizes?)
            }
            "cone" => {
                let a = crate::numerics::read_matrix_csv(&base.join(get_field("A")?))?;
                ConstraintSet::polyhedral_cone(a)
            }
            "polyhedron" => {
                let a = crate::numerics::read_matrix_csv(&base.join(get_field("A")?))?;
                let b = crate::numerics::read_vector_csv(&base.join(get_field("b")?))?;
                ConstraintSet::polyhedron(a, b)
            }
            "parabola" => Ok(ConstraintSet::parabola_epigraph()),
            other => Err(Error::Parse(format!("unknown set kind {other:?}"))),
        }
    }
}

/// `A` for the monotone cone: rows `e_i - e_{i+1}`.
pub fn monotone_h_rep(n: usize) -> Matrix {
    let mut a = Matrix::zeros(n.saturating_sub(1), n);
    for i in 0..n.saturating_sub(1) {
        a.set(i, i, 1.0);
        a.set(i, i + 1, -1.0);
    }
    a
}

/// Outcome of a projection: the projected point, the residual `x - point`,
/// and convergence metadata for iterative operators.
#[derive(Clone, Debug)]
pub struct ProjectionResult {
    pub point: Vec<f64>,
    pub residual: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl ProjectionResult {
    fn new(x: &[f64], point: Vec<f64>, iterations: usize, converged: bool) -> Self {
        let residual = sub(x, &point);
        ProjectionResult {
            point,
            residual,
            iterations,
            converged,
        }
    }
}

/// Componentwise maximum with zero.
pub fn project_orthant(x: &[f64]) -> ProjectionResult {
    let point = x.iter().map(|v| v.max(0.0)).collect();
    ProjectionResult::new(x, point, 0, true)
}

/// Radial scaling onto the unit ball.
pub fn project_ball(x: &[f64]) -> ProjectionResult {
    let r = norm(x);
    let point = if r <= 1.0 {
        x.to_vec()
    } else {
        x.iter().map(|v| v / r).collect()
    };
    ProjectionResult::new(x, point, 0, true)
}

/// Weighted pool-adjacent-violators: the nondecreasing minimizer of
/// `sum_j w_j (x_j - y_j)^2`. Exact ties between adjacent fitted values are
/// left unpooled (pooling them would be a no-op).
fn pava(y: &[f64], w: &[f64]) -> Vec<f64> {
    debug_assert_eq!(y.len(), w.len());
    // (weighted sum, weight, length) per pooled block.
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(y.len());
    for (&yi, &wi) in y.iter().zip(w) {
        blocks.push((yi * wi, wi, 1));
        while blocks.len() >= 2 {
            let last = blocks[blocks.len() - 1];
            let prev = blocks[blocks.len() - 2];
            if prev.0 / prev.1 > last.0 / last.1 {
                blocks.pop();
                let top = blocks.last_mut().unwrap();
                top.0 += last.0;
                top.1 += last.1;
                top.2 += last.2;
            } else {
                break;
            }
        }
    }
    let mut out = Vec::with_capacity(y.len());
    for (s, wsum, len) in blocks {
        let v = s / wsum;
        out.extend(std::iter::repeat_n(v, len));
    }
    out
}

/// Isotonic least squares: projection onto the monotone cone.
pub fn project_monotone(x: &[f64]) -> ProjectionResult {
    let w = vec![1.0; x.len()];
    let point = pava(x, &w);
    ProjectionResult::new(x, point, 0, true)
}

/// Weighted isotonic regression with strictly positive weights.
pub fn project_weighted_monotone(y: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    if y.len() != w.len() {
        return Err(Error::InvalidInput(
            "weighted isotonic regression needs matching lengths".into(),
        ));
    }
    if !w.iter().all(|&wi| wi.is_finite() && wi > 0.0) {
        return Err(Error::InvalidInput("weights must be positive".into()));
    }
    Ok(pava(y, w))
}

/// Projection onto the block monotone cone: pool each block to its mean,
/// run weighted isotonic regression on the block means with the block sizes
/// as weights, then expand back.
pub fn project_block_monotone(x: &[f64], sizes: &[usize]) -> Result<ProjectionResult> {
    let n: usize = sizes.iter().sum();
    if n != x.len() {
        return Err(Error::InvalidInput(format!(
            "block sizes sum to {n} but the vector has length {}",
            x.len()
        )));
    }
    let mut means = Vec::with_capacity(sizes.len());
    let mut weights = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for &s in sizes {
        let blk = &x[start..start + s];
        means.push(blk.iter().sum::<f64>() / s as f64);
        weights.push(s as f64);
        start += s;
    }
    let fitted = pava(&means, &weights);
    let mut point = Vec::with_capacity(x.len());
    for (&v, &s) in fitted.iter().zip(sizes) {
        point.extend(std::iter::repeat_n(v, s));
    }
    Ok(ProjectionResult::new(x, point, 0, true))
}

/// Projection onto the polyhedral cone `{u : A u <= 0}` through the Moreau
/// decomposition: the polar cone is generated by the rows of `A`, so the
/// polar projection is an NNLS fit and the cone projection is its residual.
pub fn project_polyhedral_cone(a: &Matrix, x: &[f64]) -> Result<ProjectionResult> {
    if a.cols() != x.len() {
        return Err(Error::InvalidInput(
            "cone projection dimension mismatch".into(),
        ));
    }
    if a.rows() == 0 {
        return Ok(ProjectionResult::new(x, x.to_vec(), 0, true));
    }
    let g = a.transpose();
    let (lambda, pivots) = nnls_impl(&g, x)?;
    let polar_part = g.matvec(&lambda);
    let point = sub(x, &polar_part);
    Ok(ProjectionResult::new(x, point, pivots, true))
}

/// Projection onto `{u : A_ineq u <= 0, A_eq u = 0}`. Equalities are handled
/// by stacking both signs of each row into the polar generator list.
pub fn project_cone_with_equalities(
    a_ineq: &Matrix,
    a_eq: &Matrix,
    x: &[f64],
) -> Result<ProjectionResult> {
    if a_eq.rows() == 0 {
        return project_polyhedral_cone(a_ineq, x);
    }
    if a_ineq.cols() != a_eq.cols() {
        return Err(Error::InvalidInput(
            "inequality/equality column mismatch".into(),
        ));
    }
    let n = a_ineq.cols();
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(a_ineq.rows() + 2 * a_eq.rows());
    for i in 0..a_ineq.rows() {
        rows.push(a_ineq.row(i).to_vec());
    }
    for i in 0..a_eq.rows() {
        let r = a_eq.row(i).to_vec();
        rows.push(r.iter().map(|v| -v).collect());
        rows.push(r);
    }
    let stacked = if rows.is_empty() {
        Matrix::empty(n)
    } else {
        Matrix::from_rows(&rows)?
    };
    project_polyhedral_cone(&stacked, x)
}

/// Projection onto the face set `{u : A u <= 0, <v, u> = 0}` of a polyhedral
/// cone. A zero `v` degenerates to the plain cone projection.
pub fn project_cone_with_equality(a: &Matrix, v: &[f64], x: &[f64]) -> Result<ProjectionResult> {
    if norm(v) == 0.0 {
        return project_polyhedral_cone(a, x);
    }
    let eq = Matrix::from_rows(&[v.to_vec()])?;
    project_cone_with_equalities(a, &eq, x)
}

/// Dykstra's alternating projections onto the halfspaces of
/// `{u : A u <= b}`. Plain alternating projections would only find a
/// feasible point; Dykstra's correction terms recover the projection.
pub fn project_polyhedron(a: &Matrix, b: &[f64], x: &[f64]) -> Result<ProjectionResult> {
    if a.rows() != b.len() || a.cols() != x.len() {
        return Err(Error::InvalidInput(
            "polyhedron projection dimension mismatch".into(),
        ));
    }
    let m = a.rows();
    let n = a.cols();
    if m == 0 {
        return Ok(ProjectionResult::new(x, x.to_vec(), 0, true));
    }
    let feas_tol = 1e-8 * norm(x).max(1.0);
    let max_violation = |u: &[f64]| -> f64 {
        (0..m)
            .map(|j| dot(a.row(j), u) - b[j])
            .fold(f64::NEG_INFINITY, f64::max)
    };
    if max_violation(x) <= 0.0 {
        return Ok(ProjectionResult::new(x, x.to_vec(), 0, true));
    }

    let row_sq: Vec<f64> = (0..m).map(|j| sqnorm(a.row(j))).collect();
    let mut cur = x.to_vec();
    let mut corrections = vec![vec![0.0; n]; m];
    for sweep in 1..=DYKSTRA_MAX_SWEEPS {
        let prev = cur.clone();
        for j in 0..m {
            // y = cur + p_j, project onto halfspace j, update correction.
            let mut y = cur.clone();
            for (yi, pi) in y.iter_mut().zip(&corrections[j]) {
                *yi += pi;
            }
            let excess = (dot(a.row(j), &y) - b[j]).max(0.0) / row_sq[j];
            let mut z = y.clone();
            if excess > 0.0 {
                for (zi, ai) in z.iter_mut().zip(a.row(j)) {
                    *zi -= excess * ai;
                }
            }
            for ((pi, yi), zi) in corrections[j].iter_mut().zip(&y).zip(&z) {
                *pi = yi - zi;
            }
            cur = z;
        }
        let step = cur
            .iter()
            .zip(&prev)
            .map(|(c, p)| (c - p).abs())
            .fold(0.0, f64::max);
        if step < 1e-10 && max_violation(&cur) < feas_tol {
            return Ok(ProjectionResult::new(x, cur, sweep, true));
        }
    }
    Ok(ProjectionResult::new(x, cur, DYKSTRA_MAX_SWEEPS, false))
}

/// Projection onto `{u in R^2 : u_2 >= u_1^2}`. Points below the parabola
/// project to `(t, t^2)` where `t` is a real root of
/// `2t^3 + (1 - 2 x_2) t - x_1 = 0`; when several roots exist the one closest
/// to `x` wins.
pub fn project_parabola_epigraph(x: &[f64]) -> Result<ProjectionResult> {
    if x.len() != 2 {
        return Err(Error::InvalidInput(
            "the parabola epigraph lives in R^2".into(),
        ));
    }
    let (x1, x2) = (x[0], x[1]);
    if x2 >= x1 * x1 {
        return Ok(ProjectionResult::new(x, x.to_vec(), 0, true));
    }
    let p = 1.0 - 2.0 * x2;
    let f = |t: f64| 2.0 * t * t * t + p * t - x1;
    let fp = |t: f64| 6.0 * t * t + p;
    let bound = 1.0 + x1.abs() + x2.abs().sqrt();

    // Monotonicity intervals of the cubic; up to three sign changes.
    let mut knots = vec![-bound];
    if p < 0.0 {
        let tc = (-p / 6.0).sqrt();
        if tc < bound {
            knots.push(-tc);
            knots.push(tc);
        }
    }
    knots.push(bound);

    let mut iterations = 0usize;
    let mut roots: Vec<f64> = Vec::new();
    for pair in knots.windows(2) {
        let (mut lo, mut hi) = (pair[0], pair[1]);
        let (flo, fhi) = (f(lo), f(hi));
        if flo == 0.0 {
            roots.push(lo);
            continue;
        }
        if fhi == 0.0 {
            roots.push(hi);
            continue;
        }
        if flo.signum() == fhi.signum() {
            continue;
        }
        // Safeguarded Newton within the bracket, bisection as fallback.
        let mut t = 0.5 * (lo + hi);
        for _ in 0..200 {
            iterations += 1;
            let ft = f(t);
            if ft.abs() <= 1e-14 * (1.0 + x1.abs() + p.abs() * t.abs()) {
                break;
            }
            if ft.signum() == flo.signum() {
                lo = t;
            } else {
                hi = t;
            }
            let d = fp(t);
            let newton = if d != 0.0 { t - ft / d } else { f64::NAN };
            t = if newton.is_finite() && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo < 1e-15 * bound {
                break;
            }
        }
        roots.push(t);
    }
    if roots.is_empty() {
        return Err(Error::Numerical(
            "parabola projection found no stationary point".into(),
        ));
    }
    let dist2 = |t: f64| {
        let dx = t - x1;
        let dy = t * t - x2;
        dx * dx + dy * dy
    };
    let t = roots
        .into_iter()
        .min_by(|a, b| dist2(*a).total_cmp(&dist2(*b)))
        .unwrap();
    Ok(ProjectionResult::new(x, vec![t, t * t], iterations, true))
}

/// Dispatch to the variant-specific projection.
pub fn project(set: &ConstraintSet, x: &[f64]) -> Result<ProjectionResult> {
    if x.len() != set.dim() {
        return Err(Error::InvalidInput(format!(
            "point has dimension {} but the set {} has dimension {}",
            x.len(),
            set.label(),
            set.dim()
        )));
    }
    match set {
        ConstraintSet::Orthant { .. } => Ok(project_orthant(x)),
        ConstraintSet::Ball { .. } => Ok(project_ball(x)),
        ConstraintSet::MonotoneCone { .. } => Ok(project_monotone(x)),
        ConstraintSet::BlockMonotoneCone { sizes } => project_block_monotone(x, sizes),
        ConstraintSet::PolyhedralCone { a } => project_polyhedral_cone(a, x),
        ConstraintSet::Polyhedron { a, b } => project_polyhedron(a, b, x),
        ConstraintSet::ParabolaEpigraph => project_parabola_epigraph(x),
    }
}

/// Whether all defining constraints hold within `tol * max(1, ||x||)`.
pub fn membership(set: &ConstraintSet, x: &[f64], tol: f64) -> bool {
    if x.len() != set.dim() {
        return false;
    }
    let slack = tol * norm(x).max(1.0);
    match set {
        ConstraintSet::Orthant { .. } => x.iter().all(|&v| v >= -slack),
        ConstraintSet::Ball { .. } => norm(x) <= 1.0 + slack,
        ConstraintSet::MonotoneCone { .. } => x.windows(2).all(|w| w[0] <= w[1] + slack),
        ConstraintSet::BlockMonotoneCone { sizes } => {
            let mut start = 0;
            let mut prev: Option<f64> = None;
            for &s in sizes {
                let blk = &x[start..start + s];
                if blk.iter().any(|&v| (v - blk[0]).abs() > slack) {
                    return false;
                }
                if let Some(p) = prev {
                    if p > blk[0] + slack {
                        return false;
                    }
                }
                prev = Some(blk[0]);
                start += s;
            }
            true
        }
        ConstraintSet::PolyhedralCone { a } => {
            (0..a.rows()).all(|j| dot(a.row(j), x) <= slack)
        }
        ConstraintSet::Polyhedron { a, b } => {
            (0..a.rows()).all(|j| dot(a.row(j), x) <= b[j] + slack)
        }
        ConstraintSet::ParabolaEpigraph => x[1] >= x[0] * x[0] - slack,
    }
}
