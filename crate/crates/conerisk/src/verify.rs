//! The acceptance suite behind `conerisk verify` and the `acceptance`
//! integration test: ten numbered checks with pinned tolerances. Every
//! number in a report line comes from seeded Monte Carlo or closed forms, so
//! reports are byte-identical across runs and worker counts.

use crate::error::Result;
use crate::geometry::{block_monotone_embedding, residual_face, tangent_cone};
use crate::limits::{
    ball_limits, isotonic_partition_exact, low_sigma_limit_polyhedral, partition_limit_exact,
};
use crate::numerics::{
    dot, fmt_g17, norm, qr_positive_diag, rowspace_membership, sqnorm, sub, Matrix, RandomStream,
};
use crate::risklab::{
    simulate_risks, table1_report, write_curve_csv, per_sample_chain_check, Scenario,
    TABLE1_THETAS,
};
use crate::sets::{
    monotone_h_rep, project, project_cone_with_equalities, project_monotone,
    project_polyhedral_cone, project_polyhedron, project_weighted_monotone, ConstraintSet,
};
use crate::statdim::{mc_statdim, statdim_monotone_closed, ConeTarget, NoiseModel};
use num_rational::Ratio;
use std::fmt::Write as _;
use std::time::Instant;

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub samples: usize,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            samples: 100_000,
            seed: 1_234_567,
        }
    }
}

type Check = fn(&VerifyConfig) -> Result<CheckResult>;

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        CheckResult {
            name,
            passed,
            detail,
        }
    }
}

/// Run all acceptance checks. Check failures are reported, not raised;
/// internal errors also turn into failed checks.
pub fn run_all(cfg: &VerifyConfig) -> Vec<CheckResult> {
    let checks: Vec<(&'static str, Check)> = vec![
        ("c01-table1-analytic", c01_table1_analytic),
        ("c02-table1-simulated", c02_table1_simulated),
        ("c03-orthant-endpoints", c03_orthant_endpoints),
        ("c04-ball-limits", c04_ball_limits),
        ("c05-statdim-oracles", c05_statdim_oracles),
        ("c06-projection-equivalence", c06_projection_equivalence),
        ("c07-property-suites", c07_property_suites),
        ("c08-jump-gap", c08_jump_gap),
        ("c09-epigraph-high-noise", c09_epigraph_high_noise),
        ("c10-determinism", c10_determinism),
    ];
    checks
        .into_iter()
        .map(|(name, f)| match f(cfg) {
            Ok(res) => res,
            Err(e) => CheckResult::new(name, false, format!("error: {e}")),
        })
        .collect()
}

/// One line per check plus a summary line.
pub fn render_report(checks: &[CheckResult]) -> String {
    let mut out = String::new();
    for c in checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(out, "{status} {}: {}", c.name, c.detail);
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    let _ = writeln!(out, "{passed}/{} checks passed", checks.len());
    out
}

pub fn all_passed(checks: &[CheckResult]) -> bool {
    checks.iter().all(|c| c.passed)
}

const TABLE1_LIMITS: [(i64, i64); 6] = [(49, 20), (11, 6), (1, 1), (43, 12), (3, 1), (2, 1)];

pub fn c01_table1_analytic(_cfg: &VerifyConfig) -> Result<CheckResult> {
    let start = Instant::now();
    let mut got = Vec::new();
    let mut ok = true;
    for (theta, (num, den)) in TABLE1_THETAS.iter().zip(TABLE1_LIMITS) {
        let p = isotonic_partition_exact(theta);
        let limit = partition_limit_exact(&p)
            .ok_or_else(|| crate::Error::Numerical("unequal sub-block sizes".into()))?;
        ok &= limit == Ratio::new(num, den);
        got.push(format!("{}/{}", limit.numer(), limit.denom()));
    }
    let within_budget = start.elapsed().as_secs_f64() < 1.0;
    ok &= within_budget;
    Ok(CheckResult::new(
        "c01-table1-analytic",
        ok,
        format!(
            "limits [{}] expected [49/20 11/6 1/1 43/12 3/1 2/1] runtime_ok={}",
            got.join(" "),
            within_budget
        ),
    ))
}

pub fn c02_table1_simulated(cfg: &VerifyConfig) -> Result<CheckResult> {
    let start = Instant::now();
    let rows = table1_report(cfg.samples, cfg.seed)?;
    let mut ok = true;
    let mut detail = String::new();
    for row in &rows {
        let analytic = *row.limit.numer() as f64 / *row.limit.denom() as f64;
        let tol = 3.0 * row.simulated_se + 0.01;
        let pass = (row.simulated - analytic).abs() <= tol;
        ok &= pass;
        let _ = write!(
            detail,
            "{:?}: sim={} tol={} pass={}; ",
            row.theta,
            fmt_g17(row.simulated),
            fmt_g17(tol),
            pass
        );
    }
    let within_budget = start.elapsed().as_secs_f64() < 60.0;
    ok &= within_budget;
    let _ = write!(detail, "runtime_ok={within_budget}");
    Ok(CheckResult::new("c02-table1-simulated", ok, detail))
}

pub fn c03_orthant_endpoints(cfg: &VerifyConfig) -> Result<CheckResult> {
    let mut ok = true;
    let mut detail = String::new();
    for (i, eps) in [0.01, 0.1, 1.0].into_iter().enumerate() {
        let s = Scenario::new(
            ConstraintSet::orthant(3)?,
            vec![1.0, 1.0, -eps],
            NoiseModel::Gaussian,
            vec![1e-3 * eps, 1e3],
            cfg.samples,
            cfg.seed.wrapping_add(300 + i as u64),
        )?;
        let pts = simulate_risks(&s)?;
        let low_pass = (pts[0].m_norm - 2.0).abs() <= 3.0 * pts[0].m_se + 0.01;
        let high_pass = (pts[1].m_norm - 1.5).abs() <= 3.0 * pts[1].m_se + 0.01;
        ok &= low_pass && high_pass;
        let _ = write!(
            detail,
            "eps={eps}: m_low={} m_high={} pass={}; ",
            fmt_g17(pts[0].m_norm),
            fmt_g17(pts[1].m_norm),
            low_pass && high_pass
        );
    }
    Ok(CheckResult::new("c03-orthant-endpoints", ok, detail))
}

pub fn c04_ball_limits(cfg: &VerifyConfig) -> Result<CheckResult> {
    let mut ok = true;
    let mut detail = String::new();
    for (i, eps) in [0.01, 0.1, 1.0].into_iter().enumerate() {
        let theta = vec![1.0 + eps, 0.0, 0.0];
        let (m_limit, e_limit) = ball_limits(&theta)?;
        let s = Scenario::new(
            ConstraintSet::ball(3)?,
            theta,
            NoiseModel::Gaussian,
            vec![1e-4 * eps, 1e3],
            cfg.samples,
            cfg.seed.wrapping_add(400 + i as u64),
        )?;
        let pts = simulate_risks(&s)?;
        let low = &pts[0];
        let high = &pts[1];
        let m_pass = (low.m_norm - m_limit).abs() <= 3.0 * low.m_se + 0.01;
        let e_pass = (low.e_norm - e_limit).abs() <= 3.0 * low.e_se + 0.01;
        let high_pass = low_high_zero(high);
        let mut sep_pass = true;
        if eps == 1.0 {
            let comb = (low.m_se.powi(2) + low.e_se.powi(2)).sqrt();
            sep_pass = low.e_norm - low.m_norm > 3.0 * comb;
        }
        ok &= m_pass && e_pass && high_pass && sep_pass;
        let _ = write!(
            detail,
            "eps={eps}: m={} (limit {}) e={} (limit {}) high_m={} pass={}; ",
            fmt_g17(low.m_norm),
            fmt_g17(m_limit),
            fmt_g17(low.e_norm),
            fmt_g17(e_limit),
            fmt_g17(high.m_norm),
            m_pass && e_pass && high_pass && sep_pass
        );
    }
    Ok(CheckResult::new("c04-ball-limits", ok, detail))
}

fn low_high_zero(p: &crate::risklab::RiskCurvePoint) -> bool {
    p.m_norm.abs() <= 3.0 * p.m_se + 0.01 && p.e_norm.abs() <= 3.0 * p.e_se + 0.01
}

pub fn c05_statdim_oracles(cfg: &VerifyConfig) -> Result<CheckResult> {
    let mut ok = true;
    let mut detail = String::new();

    // Monotone cones m = 1..8 against harmonic numbers.
    for m in 1..=8usize {
        let est = mc_statdim(
            &ConeTarget::Set(ConstraintSet::monotone(m)?),
            &NoiseModel::Gaussian,
            cfg.samples,
            cfg.seed.wrapping_add(500 + m as u64),
        )?;
        let pass = (est.value - statdim_monotone_closed(m)).abs() <= 3.0 * est.std_error;
        ok &= pass;
        if !pass {
            let _ = write!(detail, "S^{m} off: {}; ", fmt_g17(est.value));
        }
    }
    let _ = write!(detail, "S^m vs H_m m=1..8 done; ");

    // Halfspace in R^3.
    let hs = ConstraintSet::polyhedral_cone(Matrix::from_rows(&[vec![1.0, 0.0, 0.0]])?)?;
    let est = mc_statdim(
        &ConeTarget::Set(hs),
        &NoiseModel::Gaussian,
        cfg.samples,
        cfg.seed.wrapping_add(510),
    )?;
    let pass = (est.value - 2.5).abs() <= 3.0 * est.std_error;
    ok &= pass;
    let _ = write!(detail, "halfspace={} pass={pass}; ", fmt_g17(est.value));

    // S_{1,18,1}: direct vs embedding, and near 2.
    let direct = mc_statdim(
        &ConeTarget::Set(ConstraintSet::block_monotone(vec![1, 18, 1])?),
        &NoiseModel::Gaussian,
        cfg.samples,
        cfg.seed.wrapping_add(511),
    )?;
    let embedded = mc_statdim(
        &ConeTarget::Set(block_monotone_embedding(&[1, 18, 1])?),
        &NoiseModel::Gaussian,
        cfg.samples,
        cfg.seed.wrapping_add(512),
    )?;
    let comb = (direct.std_error.powi(2) + embedded.std_error.powi(2)).sqrt();
    let pass = (direct.value - embedded.value).abs() <= 3.0 * comb
        && (direct.value - 2.0).abs() <= 0.1;
    ok &= pass;
    let _ = write!(
        detail,
        "S_1_18_1 direct={} embedded={} pass={pass}; ",
        fmt_g17(direct.value),
        fmt_g17(embedded.value)
    );

    // Embedding of S_{n-2,1,1} for n = 400: near 7/4.
    let skew = mc_statdim(
        &ConeTarget::Set(block_monotone_embedding(&[398, 1, 1])?),
        &NoiseModel::Gaussian,
        cfg.samples,
        cfg.seed.wrapping_add(513),
    )?;
    let pass = (skew.value - 1.75).abs() <= 0.1;
    ok &= pass;
    let _ = write!(detail, "S_398_1_1={} pass={pass}; ", fmt_g17(skew.value));

    // Any two-block monotone cone is a halfspace in disguise: 1.5.
    let two = mc_statdim(
        &ConeTarget::Set(ConstraintSet::block_monotone(vec![3, 5])?),
        &NoiseModel::Gaussian,
        cfg.samples,
        cfg.seed.wrapping_add(514),
    )?;
    let pass = (two.value - 1.5).abs() <= 3.0 * two.std_error;
    ok &= pass;
    let _ = write!(detail, "S_3_5={} pass={pass}", fmt_g17(two.value));

    Ok(CheckResult::new("c05-statdim-oracles", ok, detail))
}

pub fn c06_projection_equivalence(cfg: &VerifyConfig) -> Result<CheckResult> {
    let mut ok = true;
    let mut worst_three_way = 0.0f64;
    // PAVA vs polar NNLS vs Dykstra on the monotone cone, n cycling 2..8.
    for rep in 0..100u64 {
        let n = 2 + (rep as usize % 7);
        let x = RandomStream::new(cfg.seed.wrapping_add(600), rep).standard_normal(n);
        let a = monotone_h_rep(n);
        let pava = project_monotone(&x).point;
        let polar = project_polyhedral_cone(&a, &x)?.point;
        let dykstra = project_polyhedron(&a, &vec![0.0; n - 1], &x)?.point;
        for i in 0..n {
            worst_three_way = worst_three_way
                .max((pava[i] - polar[i]).abs())
                .max((pava[i] - dykstra[i]).abs())
                .max((polar[i] - dykstra[i]).abs());
        }
    }
    ok &= worst_three_way < 1e-6;

    // Weighted PAVA vs a refining grid search on 3-block instances.
    let mut worst_grid = 0.0f64;
    for rep in 0..20u64 {
        let y = RandomStream::new(cfg.seed.wrapping_add(601), rep).standard_normal(3);
        let w: Vec<f64> = RandomStream::new(cfg.seed.wrapping_add(602), rep)
            .standard_normal(3)
            .iter()
            .map(|v| v.abs() + 0.5)
            .collect();
        let fit = project_weighted_monotone(&y, &w)?;
        let oracle = grid_search_weighted_isotonic(&y, &w);
        for i in 0..3 {
            worst_grid = worst_grid.max((fit[i] - oracle[i]).abs());
        }
    }
    ok &= worst_grid < 1e-3;

    Ok(CheckResult::new(
        "c06-projection-equivalence",
        ok,
        format!(
            "three-way max dev={} (tol 1e-6); weighted-vs-grid max dev={} (tol 1e-3)",
            fmt_g17(worst_three_way),
            fmt_g17(worst_grid)
        ),
    ))
}

/// Brute-force oracle: multi-resolution grid search for the weighted
/// isotonic fit in R^3, refined until the cell size is below 1e-5.
fn grid_search_weighted_isotonic(y: &[f64], w: &[f64]) -> Vec<f64> {
    let objective = |x: &[f64; 3]| -> f64 {
        (0..3).map(|i| w[i] * (x[i] - y[i]).powi(2)).sum()
    };
    let lo0 = y.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi0 = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut lo = [lo0; 3];
    let mut hi = [hi0.max(lo0 + 1e-9); 3];
    let mut best = [lo0; 3];
    let mut best_obj = f64::INFINITY;
    let steps = 40usize;
    loop {
        let cell: Vec<f64> = (0..3).map(|i| (hi[i] - lo[i]) / steps as f64).collect();
        for i0 in 0..=steps {
            let x0 = lo[0] + i0 as f64 * cell[0];
            for i1 in 0..=steps {
                let x1 = lo[1] + i1 as f64 * cell[1];
                if x1 < x0 {
                    continue;
                }
                for i2 in 0..=steps {
                    let x2 = lo[2] + i2 as f64 * cell[2];
                    if x2 < x1 {
                        continue;
                    }
                    let cand = [x0, x1, x2];
                    let obj = objective(&cand);
                    if obj < best_obj {
                        best_obj = obj;
                        best = cand;
                    }
                }
            }
        }
        let max_cell = cell.iter().cloned().fold(0.0, f64::max);
        if max_cell < 1e-5 {
            return best.to_vec();
        }
        for i in 0..3 {
            lo[i] = best[i] - 2.0 * cell[i];
            hi[i] = best[i] + 2.0 * cell[i];
        }
    }
}

pub fn c07_property_suites(cfg: &VerifyConfig) -> Result<CheckResult> {
    let mut ok = true;
    let mut detail = String::new();

    // Optimality conditions: <z - p, x - p> <= tol for z in C; cones also
    // satisfy <p, x - p> = 0.
    let fixtures: Vec<ConstraintSet> = vec![
        ConstraintSet::orthant(4)?,
        ConstraintSet::ball(3)?,
        ConstraintSet::monotone(5)?,
        ConstraintSet::block_monotone(vec![2, 3])?,
        ConstraintSet::polyhedral_cone(Matrix::from_rows(&[
            vec![1.0, 0.4, -0.2],
            vec![-0.3, 1.0, 0.5],
        ])?)?,
        ConstraintSet::parabola_epigraph(),
    ];
    let mut opt_worst = 0.0f64;
    let mut cone_worst = 0.0f64;
    for (si, set) in fixtures.iter().enumerate() {
        let n = set.dim();
        for rep in 0..100u64 {
            let x = RandomStream::new(cfg.seed.wrapping_add(700 + si as u64), rep)
                .standard_normal(n);
            let p = project(set, &x)?;
            for zrep in 0..3u64 {
                let w = RandomStream::new(cfg.seed.wrapping_add(710 + si as u64), rep * 10 + zrep)
                    .standard_normal(n);
                let z = project(set, &w)?.point;
                opt_worst = opt_worst.max(dot(&sub(&z, &p.point), &p.residual));
            }
            if set.is_cone() {
                cone_worst = cone_worst.max(dot(&p.point, &p.residual).abs());
            }
        }
    }
    ok &= opt_worst <= 1e-8 && cone_worst <= 1e-8;
    let _ = write!(
        detail,
        "optimality max={} cone max={}; ",
        fmt_g17(opt_worst),
        fmt_g17(cone_worst)
    );

    // Per-sample chain with zero violations on three scenario shapes.
    let mut chain_violations = 0usize;
    for (i, (set, theta, sigma)) in [
        (
            ConstraintSet::monotone(6)?,
            vec![0.0, -2.0, 1.0, -3.0, 2.0, 2.0],
            1.0,
        ),
        (ConstraintSet::ball(3)?, vec![2.0, 0.0, 0.0], 10.0),
        (ConstraintSet::orthant(3)?, vec![0.5, 1.0, 2.0], 1e-6),
    ]
    .into_iter()
    .enumerate()
    {
        let s = Scenario::new(
            set,
            theta,
            NoiseModel::Gaussian,
            vec![sigma],
            1000,
            cfg.seed.wrapping_add(720 + i as u64),
        )?;
        chain_violations += per_sample_chain_check(&s)?;
    }
    ok &= chain_violations == 0;
    let _ = write!(detail, "chain violations={chain_violations}; ");

    // Moreau identity on a polyhedral cone.
    let a = monotone_h_rep(5);
    let g = a.transpose();
    let mut moreau_worst = 0.0f64;
    for rep in 0..100u64 {
        let x = RandomStream::new(cfg.seed.wrapping_add(730), rep).standard_normal(5);
        let p = project_polyhedral_cone(&a, &x)?;
        let gap = (sqnorm(&x) - sqnorm(&p.point) - sqnorm(&p.residual)).abs()
            / sqnorm(&x).max(1.0);
        moreau_worst = moreau_worst.max(gap);
        let lam = crate::numerics::nnls(&g, &p.residual)?;
        let misfit = norm(&sub(&p.residual, &g.matvec(&lam)));
        moreau_worst = moreau_worst.max(misfit);
    }
    ok &= moreau_worst <= 1e-8;
    let _ = write!(detail, "moreau max={}; ", fmt_g17(moreau_worst));

    // Near-point hyperplane property: projections of points within radius
    // 1e-4 ||theta*|| of theta* stay in the hyperplane orthogonal to theta*.
    let cones = [Matrix::from_rows(&[vec![-1.0, 0.0, 0.0], vec![0.0, -1.0, 0.0], vec![0.0, 0.0, -1.0]])?,
        monotone_h_rep(5),
        Matrix::from_rows(&[vec![1.0, 0.4, -0.2, 0.1], vec![-0.3, 1.0, 0.5, -0.6]])?];
    let mut key_worst = 0.0f64;
    for (ci, a) in cones.iter().enumerate() {
        let n = a.cols();
        let coeffs: Vec<f64> = RandomStream::new(cfg.seed.wrapping_add(740 + ci as u64), 0)
            .standard_normal(a.rows())
            .iter()
            .map(|z| z.abs() + 0.2)
            .collect();
        let theta = a.transpose().matvec(&coeffs);
        let r = 1e-4 * norm(&theta);
        for rep in 0..100u64 {
            let dir = RandomStream::new(cfg.seed.wrapping_add(750 + ci as u64), rep)
                .standard_normal(n);
            let u: Vec<f64> = theta
                .iter()
                .zip(&dir)
                .map(|(t, d)| t + r * d / norm(&dir))
                .collect();
            let p = project_polyhedral_cone(a, &u)?;
            key_worst = key_worst.max(dot(&p.point, &theta).abs());
        }
    }
    ok &= key_worst <= 1e-8;
    let _ = write!(detail, "near-point-hyperplane max={}; ", fmt_g17(key_worst));

    // Largest-face representation: correctness both ways plus minimality.
    let mut face_ok = true;
    for (ci, a) in cones.iter().enumerate() {
        let n = a.cols();
        for rep in 0..200u64 {
            let y = RandomStream::new(cfg.seed.wrapping_add(760 + ci as u64), rep)
                .standard_normal(n);
            let f = residual_face(a, &y)?;
            let aj = a.select_rows(&f.equality_indices);
            face_ok &= rowspace_membership(&f.normal, &aj, 1e-9);
            if norm(&f.normal) > 1e-10 {
                for drop in 0..f.equality_indices.len() {
                    let mut trial = f.equality_indices.clone();
                    trial.remove(drop);
                    face_ok &= !rowspace_membership(&f.normal, &a.select_rows(&trial), 1e-9);
                }
            }
            // A point of K cap v-perp satisfies the face equalities; a point
            // of the face satisfies K and the hyperplane.
            let z = RandomStream::new(cfg.seed.wrapping_add(770 + ci as u64), rep)
                .standard_normal(n);
            let in_face = if f.equality_indices.is_empty() {
                project_polyhedral_cone(a, &z)?.point
            } else {
                project_cone_with_equalities(&a.select_rows(&f.inequality_indices), &aj, &z)?
                    .point
            };
            face_ok &= dot(&f.normal, &in_face).abs() <= 1e-7 * norm(&in_face).max(1.0);
            face_ok &= (0..a.rows()).all(|j| dot(a.row(j), &in_face) <= 1e-7);
            if norm(&f.normal) > 1e-10 {
                let eq = Matrix::from_rows(std::slice::from_ref(&f.normal))?;
                let in_cap = project_cone_with_equalities(a, &eq, &z)?.point;
                for &j in &f.equality_indices {
                    face_ok &= dot(a.row(j), &in_cap).abs() <= 1e-7 * norm(&in_cap).max(1.0);
                }
            }
        }
    }
    ok &= face_ok;
    let _ = write!(detail, "face-rep ok={face_ok}; ");

    // Bidiagonal pattern: the bottom-right entry of R is 1/sqrt(n).
    let mut qr_worst = 0.0f64;
    for n in 1..=10usize {
        let mut a = Matrix::zeros(n, n);
        for i in 0..n {
            a.set(i, i, 1.0);
            if i > 0 {
                a.set(i, i - 1, -1.0);
            }
        }
        let (_, r) = qr_positive_diag(&a)?;
        qr_worst = qr_worst.max((r.get(n - 1, n - 1) - 1.0 / (n as f64).sqrt()).abs());
    }
    ok &= qr_worst <= 1e-10;
    let _ = write!(detail, "qr r_nn max dev={}; ", fmt_g17(qr_worst));

    // Boundedness-gap: ||Pi_{F_C(theta0)}(x)||^2 >= ||Pi_{K_C}(x)||^2 - tol.
    let mut gap_worst = f64::NEG_INFINITY;
    let gap_sets = [ConstraintSet::orthant(3)?,
        ConstraintSet::ball(3)?,
        ConstraintSet::monotone(4)?];
    for (si, set) in gap_sets.iter().enumerate() {
        let n = set.dim();
        let w = RandomStream::new(cfg.seed.wrapping_add(780 + si as u64), 0).standard_normal(n);
        let theta0 = project(set, &w)?.point;
        let kc = crate::geometry::core_cone(set)?;
        for rep in 0..100u64 {
            let x = RandomStream::new(cfg.seed.wrapping_add(790 + si as u64), rep)
                .standard_normal(n);
            let shifted: Vec<f64> = x.iter().zip(&theta0).map(|(a, b)| a + b).collect();
            let pf = sub(&project(set, &shifted)?.point, &theta0);
            let pk = match &kc {
                crate::geometry::CoreCone::Zero => vec![0.0; n],
                crate::geometry::CoreCone::Set(c) => project(c, &x)?.point,
            };
            gap_worst = gap_worst.max(sqnorm(&pk) - sqnorm(&pf));
        }
    }
    ok &= gap_worst <= 1e-8;
    let _ = write!(detail, "bounded-gap max={}", fmt_g17(gap_worst));

    Ok(CheckResult::new("c07-property-suites", ok, detail))
}

pub fn c08_jump_gap(cfg: &VerifyConfig) -> Result<CheckResult> {
    let orthant = ConstraintSet::orthant(3)?;
    let neg_i3 = orthant.cone_h_rep().unwrap();
    let mut ok = true;
    let mut detail = String::new();
    for (i, theta) in [
        vec![1.0, 1.0, -1.0],
        vec![0.0, -1.0, -1.0],
        vec![-1.0, -1.0, -1.0],
    ]
    .into_iter()
    .enumerate()
    {
        let low = low_sigma_limit_polyhedral(&orthant, &theta, cfg.samples, cfg.seed.wrapping_add(800 + i as u64))?;
        // Monte Carlo estimate of the full tangent-cone bound.
        let pi = project(&orthant, &theta)?.point;
        let t = tangent_cone(&neg_i3, &[0.0, 0.0, 0.0], &pi)?;
        let bound = mc_statdim(
            &ConeTarget::Set(ConstraintSet::polyhedral_cone(t.a_active)?),
            &NoiseModel::Gaussian,
            cfg.samples,
            cfg.seed.wrapping_add(810 + i as u64),
        )?;
        let comb = (low.std_error.powi(2) + bound.std_error.powi(2)).sqrt();
        let pass = low.value < bound.value - 3.0 * comb;
        ok &= pass;
        let _ = write!(
            detail,
            "theta={theta:?}: low={} bound={} pass={pass}; ",
            fmt_g17(low.value),
            fmt_g17(bound.value)
        );
    }
    Ok(CheckResult::new("c08-jump-gap", ok, detail))
}

pub fn c09_epigraph_high_noise(cfg: &VerifyConfig) -> Result<CheckResult> {
    // The excess of the normalized risk over the core-cone value 1/2 at
    // sigma = 1e3 is below 1e-2, so this check needs a larger replicate
    // count than the others to resolve it at 3 standard errors.
    let s = Scenario::new(
        ConstraintSet::parabola_epigraph(),
        vec![0.0, -1.0],
        NoiseModel::Gaussian,
        vec![1e3],
        cfg.samples.max(1_500_000),
        cfg.seed.wrapping_add(900),
    )?;
    let pts = simulate_risks(&s)?;
    let p = &pts[0];
    let pass = p.m_norm > 0.5 + 3.0 * p.m_se;
    Ok(CheckResult::new(
        "c09-epigraph-high-noise",
        pass,
        format!(
            "m_norm={} se={} exceeds core-cone value 0.5",
            fmt_g17(p.m_norm),
            fmt_g17(p.m_se)
        ),
    ))
}

/// A small representative workload whose rendered output exercises the
/// Monte Carlo plumbing end to end.
fn determinism_workload(seed: u64) -> Result<String> {
    let mut out = String::new();
    for theta in TABLE1_THETAS.iter() {
        let p = isotonic_partition_exact(theta);
        let limit = partition_limit_exact(&p).unwrap();
        let _ = write!(out, "{}/{} ", limit.numer(), limit.denom());
    }
    let _ = writeln!(out);
    let est = mc_statdim(
        &ConeTarget::Set(ConstraintSet::monotone(6)?),
        &NoiseModel::Gaussian,
        20_000,
        seed,
    )?;
    let _ = writeln!(out, "{},{},{},{}", fmt_g17(est.value), fmt_g17(est.std_error), est.samples, est.seed);
    let s = Scenario::new(
        ConstraintSet::orthant(3)?,
        vec![1.0, 1.0, -0.5],
        NoiseModel::Gaussian,
        (0..9).map(|i| 10f64.powf(-2.0 + 0.5 * i as f64)).collect(),
        20_000,
        seed.wrapping_add(1),
    )?;
    let pts = simulate_risks(&s)?;
    let mut buf = Vec::new();
    write_curve_csv(&pts, s.samples, s.seed, &mut buf)?;
    out.push_str(&String::from_utf8(buf).expect("csv is utf-8"));
    Ok(out)
}

pub fn c10_determinism(cfg: &VerifyConfig) -> Result<CheckResult> {
    let first = determinism_workload(cfg.seed)?;
    let second = determinism_workload(cfg.seed)?;
    let repeat_ok = first == second;

    let pool1 = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|e| crate::Error::Numerical(format!("pool: {e}")))?;
    let pool8 = rayon::ThreadPoolBuilder::new()
        .num_threads(8)
        .build()
        .map_err(|e| crate::Error::Numerical(format!("pool: {e}")))?;
    let serial = pool1.install(|| determinism_workload(cfg.seed))?;
    let parallel = pool8.install(|| determinism_workload(cfg.seed))?;
    let worker_ok = serial == parallel && serial == first;

    Ok(CheckResult::new(
        "c10-determinism",
        repeat_ok && worker_ok,
        format!("repeat_identical={repeat_ok} workers_identical={worker_ok}"),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_renders_one_line_per_check() {
        let checks = vec![
            CheckResult::new("a", true, "fine".into()),
            CheckResult::new("b", false, "broken".into()),
        ];
        let text = render_report(&checks);
        assert!(text.contains("PASS a: fine"));
        assert!(text.contains("FAIL b: broken"));
        assert!(text.ends_with("1/2 checks passed\n"));
        assert!(!all_passed(&checks));
    }

    #[test]
    fn grid_oracle_matches_exact_on_feasible_input() {
        let y = [1.0, 2.0, 3.0];
        let w = [1.0, 1.0, 1.0];
        let got = grid_search_weighted_isotonic(&y, &w);
        for (g, e) in got.iter().zip(y) {
            assert!((g - e).abs() < 1e-4);
        }
    }

    #[test]
    fn fast_checks_pass_at_small_samples() {
        let cfg = VerifyConfig {
            samples: 2000,
            seed: 77,
        };
        for f in [
            c01_table1_analytic,
            c06_projection_equivalence,
            c07_property_suites,
            c10_determinism,
        ] {
            let res = f(&cfg).unwrap();
            assert!(res.passed, "{}: {}", res.name, res.detail);
        }
    }
}
