//! Conic geometry of polyhedra: tangent cones at a base point, the largest
//! face of a polyhedral cone inside a residual hyperplane, conic generator
//! filtering, the block-monotone isometric embedding, and core cones.

use crate::error::{Error, Result};
use crate::numerics::{dot, norm, rowspace_membership, Matrix};
use crate::sets::ConstraintSet;

const ACTIVE_TOL: f64 = 1e-9;

/// Tangent cone of a polyhedron at a feasible point, as the active rows.
#[derive(Clone, Debug)]
pub struct TangentConeRep {
    /// Rows of the active constraints; the cone is `{u : A_active u <= 0}`.
    pub a_active: Matrix,
    pub base_point: Vec<f64>,
    pub active_indices: Vec<usize>,
}

/// The face `{u : A_J u = 0, A_{J^c} u <= 0}` of a polyhedral cone carved
/// out by the hyperplane orthogonal to the projection residual, with `J`
/// minimal.
#[derive(Clone, Debug)]
pub struct FaceRep {
    pub equality_indices: Vec<usize>,
    pub inequality_indices: Vec<usize>,
    /// The residual `y - Pi_K(y)`; zero when `y` is already in the cone.
    pub normal: Vec<f64>,
}

impl FaceRep {
    pub fn indices_summary(&self) -> String {
        format!(
            "J={:?} Jc={:?}",
            self.equality_indices, self.inequality_indices
        )
    }
}

/// Conic generators `x_1, ..., x_p` of a cone.
#[derive(Clone, Debug)]
pub struct GeneratorSet {
    pub generators: Vec<Vec<f64>>,
}

/// Active-constraint tangent cone of `{u : A u <= b}` at `theta0`.
///
/// A constraint counts as active when `|<a_j, theta0> - b_j|` is within
/// `1e-9 * max(1, |b_j|)`; near-active constraints are therefore included.
pub fn tangent_cone(a: &Matrix, b: &[f64], theta0: &[f64]) -> Result<TangentConeRep> {
    if a.rows() != b.len() || a.cols() != theta0.len() {
        return Err(Error::InvalidInput("tangent_cone dimension mismatch".into()));
    }
    let feas_slack = ACTIVE_TOL * norm(theta0).max(1.0);
    let mut active = Vec::new();
    for j in 0..a.rows() {
        let val = dot(a.row(j), theta0);
        if val > b[j] + feas_slack {
            return Err(Error::InvalidInput(format!(
                "base point infeasible: constraint {j} violated by {:.3e}",
                val - b[j]
            )));
        }
        if (val - b[j]).abs() <= ACTIVE_TOL * b[j].abs().max(1.0) {
            active.push(j);
        }
    }
    Ok(TangentConeRep {
        a_active: a.select_rows(&active),
        base_point: theta0.to_vec(),
        active_indices: active,
    })
}

/// The largest face of `K = {u : A u <= 0}` lying in the hyperplane
/// orthogonal to `v = y - Pi_K(y)`.
///
/// `J_y` starts from the support of the NNLS multipliers that express `v`
/// in terms of rows of `A`, then is pruned greedily (descending index) while
/// `v` stays in the row space of the remainder. The minimal subset is unique,
/// so the pruning order does not matter.
pub fn residual_face(a: &Matrix, y: &[f64]) -> Result<FaceRep> {
    if a.cols() != y.len() {
        return Err(Error::InvalidInput("residual_face dimension mismatch".into()));
    }
    let m = a.rows();
    if m == 0 {
        return Ok(FaceRep {
            equality_indices: Vec::new(),
            inequality_indices: Vec::new(),
            normal: vec![0.0; y.len()],
        });
    }
    let g = a.transpose();
    let lambda = crate::numerics::nnls(&g, y)?;
    let v = g.matvec(&lambda);
    if norm(&v) <= 1e-12 * norm(y).max(1.0) {
        return Ok(FaceRep {
            equality_indices: Vec::new(),
            inequality_indices: (0..m).collect(),
            normal: vec![0.0; y.len()],
        });
    }
    let mut j: Vec<usize> = (0..m).filter(|&i| lambda[i] > 0.0).collect();
    let mut idx = j.len();
    while idx > 0 {
        idx -= 1;
        let mut trial = j.clone();
        trial.remove(idx);
        if rowspace_membership(&v, &a.select_rows(&trial), ACTIVE_TOL) {
            j = trial;
        }
    }
    let inequality: Vec<usize> = (0..m).filter(|i| !j.contains(i)).collect();
    Ok(FaceRep {
        equality_indices: j,
        inequality_indices: inequality,
        normal: v,
    })
}

/// Keep the generators lying in the hyperplane `v^perp`.
///
/// Requires the optimality side condition `<v, g> <= 0` (up to tolerance) for
/// every generator; a generator strictly on the positive side means the
/// caller's `v` is not a projection residual for this cone.
pub fn generators_in_hyperplane(g: &GeneratorSet, v: &[f64]) -> Result<GeneratorSet> {
    let vnorm = norm(v);
    if vnorm == 0.0 {
        return Ok(g.clone());
    }
    let mut kept = Vec::new();
    for (i, gen) in g.generators.iter().enumerate() {
        let tol = ACTIVE_TOL * (norm(gen) * vnorm).max(1.0);
        let ip = dot(gen, v);
        if ip > tol {
            return Err(Error::InvalidInput(format!(
                "generator {i} violates <v, g> <= 0 by {ip:.3e}"
            )));
        }
        if ip.abs() <= tol {
            kept.push(gen.clone());
        }
    }
    Ok(GeneratorSet { generators: kept })
}

/// Conic generators of the monotone cone in `R^n`: the all-minus-ones and
/// all-ones vectors plus the indicators of the proper suffixes.
pub fn monotone_generators(n: usize) -> GeneratorSet {
    let mut generators = Vec::with_capacity(n + 1);
    generators.push(vec![-1.0; n]);
    generators.push(vec![1.0; n]);
    for start in 1..n {
        let mut g = vec![0.0; n];
        for gi in g.iter_mut().skip(start) {
            *gi = 1.0;
        }
        generators.push(g);
    }
    GeneratorSet { generators }
}

/// The cone in `R^m` isometric to the block monotone cone with the given
/// block sizes: `{v : v_1/sqrt(s_1) <= ... <= v_m/sqrt(s_m)}`.
pub fn block_monotone_embedding(sizes: &[usize]) -> Result<ConstraintSet> {
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(Error::InvalidInput("sizes must be nonempty and positive".into()));
    }
    let m = sizes.len();
    if m == 1 {
        return ConstraintSet::polyhedral_cone(Matrix::empty(1));
    }
    let mut a = Matrix::zeros(m - 1, m);
    for j in 0..m - 1 {
        a.set(j, j, 1.0 / (sizes[j] as f64).sqrt());
        a.set(j, j + 1, -1.0 / (sizes[j + 1] as f64).sqrt());
    }
    ConstraintSet::polyhedral_cone(a)
}

/// Core cone of a constraint set: the intersection of all tangent cones.
#[derive(Clone, Debug)]
pub enum CoreCone {
    /// The trivial cone `{0}` (bounded sets).
    Zero,
    Set(ConstraintSet),
}

/// Computes the core cone for the families with a closed form: cones are
/// their own core cone, bounded sets collapse to `{0}`, and a polyhedron
/// yields its recession cone `{u : A u <= 0}` (which is `{0}` exactly when
/// the polyhedron is bounded). The parabola epigraph is rejected here; its
/// high-noise behavior is handled separately.
pub fn core_cone(set: &ConstraintSet) -> Result<CoreCone> {
    match set {
        ConstraintSet::Orthant { .. }
        | ConstraintSet::MonotoneCone { .. }
        | ConstraintSet::BlockMonotoneCone { .. }
        | ConstraintSet::PolyhedralCone { .. } => Ok(CoreCone::Set(set.clone())),
        ConstraintSet::Ball { .. } => Ok(CoreCone::Zero),
        ConstraintSet::Polyhedron { a, .. } => {
            if recession_cone_trivial(a)? {
                Ok(CoreCone::Zero)
            } else {
                Ok(CoreCone::Set(ConstraintSet::polyhedral_cone(a.clone())?))
            }
        }
        ConstraintSet::ParabolaEpigraph => Err(Error::InvalidInput(
            "core cone not computable for this set".into(),
        )),
    }
}

/// Whether `{u : A u <= 0} = {0}`, i.e. the rows of `A` positively span the
/// space. Tested by fitting every signed basis vector into the polar cone.
fn recession_cone_trivial(a: &Matrix) -> Result<bool> {
    let n = a.cols();
    let g = a.transpose();
    for i in 0..n {
        for sign in [1.0, -1.0] {
            let mut e = vec![0.0; n];
            e[i] = sign;
            let lambda = crate::numerics::nnls(&g, &e)?;
            let fit = g.matvec(&lambda);
            if norm(&crate::numerics::sub(&e, &fit)) > 1e-9 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Convenience wrapper: the residual face data for a cone set with an
/// H-representation.
pub fn residual_face_of(set: &ConstraintSet, y: &[f64]) -> Result<FaceRep> {
    let a = set.cone_h_rep().ok_or_else(|| {
        Error::InvalidInput(format!(
            "{} has no single-inequality H-representation",
            set.label()
        ))
    })?;
    residual_face(&a, y)
}
