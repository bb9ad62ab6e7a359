//! Dense linear-algebra and optimization kernels shared by the rest of the
//! crate: Householder QR with a positive-diagonal convention, least squares,
//! Lawson–Hanson nonnegative least squares, and reproducible per-replicate
//! random streams.
//!
//! Everything here is desk-scale dense arithmetic over `f64`; there is no
//! sparse or blocked code on purpose.

use crate::error::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::fmt;
use std::path::Path;

/// Dense row-major matrix of finite `f64` entries.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Build from row-major data. Rejects shape mismatches and non-finite
    /// entries.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "matrix data length {} does not match {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "matrix entries must be finite".into(),
            ));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Build from a list of equally long rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput(
                "cannot build a matrix from zero rows without a column count".into(),
            ));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidInput("ragged rows".into()));
        }
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        Matrix::new(rows.len(), cols, data)
    }

    /// A matrix with no rows but a known column count; represents an empty
    /// constraint list (the whole space).
    pub fn empty(cols: usize) -> Self {
        Matrix {
            rows: 0,
            cols,
            data: Vec::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1))
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// `A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `A^T x`.
    pub fn tr_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "tr_matvec dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            let xi = x[i];
            if xi != 0.0 {
                for (o, a) in out.iter_mut().zip(self.row(i)) {
                    *o += xi * a;
                }
            }
        }
        out
    }

    /// New matrix keeping the given rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    /// New matrix keeping the given columns, in the given order.
    pub fn select_cols(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.rows);
        for i in 0..self.rows {
            for &j in idx {
                data.push(self.get(i, j));
            }
        }
        Matrix {
            rows: self.rows,
            cols: idx.len(),
            data,
        }
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sqnorm(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    sqnorm(a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], c: f64) -> Vec<f64> {
    a.iter().map(|x| c * x).collect()
}

/// Householder reflectors that reduce `r` to upper-triangular form in place.
/// Each returned vector is the (normalized) reflector for one column.
fn householder_reduce(r: &mut Matrix) -> Vec<Vec<f64>> {
    let m = r.rows;
    let n = r.cols;
    let steps = n.min(m.saturating_sub(1) + usize::from(m > n));
    let mut reflectors = Vec::with_capacity(steps);
    for k in 0..steps.min(n) {
        // Reflector mapping r[k.., k] onto a multiple of e1.
        let mut v: Vec<f64> = (k..m).map(|i| r.get(i, k)).collect();
        let xnorm = norm(&v);
        if xnorm == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        let alpha = if v[0] >= 0.0 { -xnorm } else { xnorm };
        v[0] -= alpha;
        let vnorm = norm(&v);
        if vnorm == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        for x in v.iter_mut() {
            *x /= vnorm;
        }
        // Apply H = I - 2vv^T to the trailing block.
        for j in k..n {
            let mut proj = 0.0;
            for (t, vi) in v.iter().enumerate() {
                proj += vi * r.get(k + t, j);
            }
            proj *= 2.0;
            for (t, vi) in v.iter().enumerate() {
                let cur = r.get(k + t, j);
                r.set(k + t, j, cur - proj * vi);
            }
        }
        reflectors.push(v);
    }
    reflectors
}

fn apply_reflectors_to_vec(reflectors: &[Vec<f64>], b: &mut [f64]) {
    for (k, v) in reflectors.iter().enumerate() {
        if v.is_empty() {
            continue;
        }
        let mut proj = 0.0;
        for (t, vi) in v.iter().enumerate() {
            proj += vi * b[k + t];
        }
        proj *= 2.0;
        for (t, vi) in v.iter().enumerate() {
            b[k + t] -= proj * vi;
        }
    }
}

/// QR factorization of a square full-rank matrix with the convention that
/// all diagonal entries of `R` are strictly positive, which makes the
/// factorization unique.
///
/// Returns `(Q, R)` with `A = Q R`, `Q` orthogonal. Rank deficiency (diagonal
/// ratio beyond 1e12) is reported as a singular-matrix error.
pub fn qr_positive_diag(a: &Matrix) -> Result<(Matrix, Matrix)> {
    if a.rows != a.cols {
        return Err(Error::InvalidInput(format!(
            "qr_positive_diag requires a square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    let n = a.rows;
    let mut r = a.clone();
    let reflectors = householder_reduce(&mut r);
    // Accumulate Q = H_0 H_1 ... H_{s-1} by applying reflectors to I in
    // reverse order.
    let mut q = Matrix::identity(n);
    for (k, v) in reflectors.iter().enumerate().rev() {
        if v.is_empty() {
            continue;
        }
        for j in 0..n {
            let mut proj = 0.0;
            for (t, vi) in v.iter().enumerate() {
                proj += vi * q.get(k + t, j);
            }
            proj *= 2.0;
            for (t, vi) in v.iter().enumerate() {
                let cur = q.get(k + t, j);
                q.set(k + t, j, cur - proj * vi);
            }
        }
    }
    // Zero out rounding noise below the diagonal, then force diag(R) > 0.
    for i in 0..n {
        for j in 0..i {
            r.set(i, j, 0.0);
        }
    }
    let max_diag = (0..n).map(|i| r.get(i, i).abs()).fold(0.0, f64::max);
    for i in 0..n {
        let d = r.get(i, i);
        if d.abs() <= 1e-12 * max_diag.max(1e-300) || max_diag / d.abs() > 1e12 {
            return Err(Error::SingularMatrix(format!(
                "rank-deficient input (|R[{i},{i}]| = {:.3e})",
                d.abs()
            )));
        }
        if d < 0.0 {
            for j in 0..n {
                let cur = r.get(i, j);
                r.set(i, j, -cur);
            }
            for t in 0..n {
                let cur = q.get(t, i);
                q.set(t, i, -cur);
            }
        }
    }
    Ok((q, r))
}

/// Least squares solution of `min ||A z - b||` for `A` with full column rank
/// and at least as many rows as columns.
pub fn least_squares(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = (a.rows, a.cols);
    if b.len() != m {
        return Err(Error::InvalidInput(
            "least_squares dimension mismatch".into(),
        ));
    }
    if m < n {
        return Err(Error::InvalidInput(
            "least_squares requires rows >= cols".into(),
        ));
    }
    let mut r = a.clone();
    let reflectors = householder_reduce(&mut r);
    let mut rhs = b.to_vec();
    apply_reflectors_to_vec(&reflectors, &mut rhs);
    let max_diag = (0..n).map(|i| r.get(i, i).abs()).fold(0.0, f64::max);
    let mut z = vec![0.0; n];
    for i in (0..n).rev() {
        let d = r.get(i, i);
        if d.abs() <= 1e-13 * max_diag.max(1e-300) {
            return Err(Error::SingularMatrix(
                "rank-deficient least squares system".into(),
            ));
        }
        let mut s = rhs[i];
        for j in (i + 1)..n {
            s -= r.get(i, j) * z[j];
        }
        z[i] = s / d;
    }
    Ok(z)
}

/// Lawson–Hanson active-set solver for `min ||x - G lambda||, lambda >= 0`.
///
/// Dual feasibility is checked at a relative tolerance of 1e-10; the pivot
/// budget is `10 * k * n` as a hard cap before a solver error is raised.
pub fn nnls(g: &Matrix, x: &[f64]) -> Result<Vec<f64>> {
    Ok(nnls_impl(g, x)?.0)
}

/// As [`nnls`], also returning the number of active-set pivots used.
pub(crate) fn nnls_impl(g: &Matrix, x: &[f64]) -> Result<(Vec<f64>, usize)> {
    let n = g.rows;
    let k = g.cols;
    if x.len() != n {
        return Err(Error::InvalidInput("nnls dimension mismatch".into()));
    }
    if k == 0 {
        return Ok((Vec::new(), 0));
    }
    let grad0 = g.tr_matvec(x);
    let tol = 1e-10 * grad0.iter().fold(1.0f64, |m, v| m.max(v.abs()));

    let mut lambda = vec![0.0f64; k];
    let mut passive = vec![false; k];
    let mut residual = x.to_vec();
    let mut pivots = 0usize;
    let cap = 10 * k * n.max(1);

    loop {
        // Most-violating dual coordinate among the zero set.
        let w = g.tr_matvec(&residual);
        let mut best: Option<(usize, f64)> = None;
        for j in 0..k {
            if !passive[j] && w[j] > tol
                && best.is_none_or(|(_, bw)| w[j] > bw) {
                    best = Some((j, w[j]));
                }
        }
        let Some((enter, _)) = best else {
            return Ok((lambda, pivots));
        };
        passive[enter] = true;
        pivots += 1;

        loop {
            if pivots > cap {
                return Err(Error::Solver(format!(
                    "nnls exceeded {cap} active-set pivots"
                )));
            }
            let pset: Vec<usize> = (0..k).filter(|&j| passive[j]).collect();
            let gp = g.select_cols(&pset);
            let z = least_squares(&gp, x).map_err(|e| {
                Error::Solver(format!("nnls passive-set solve failed: {e}"))
            })?;
            if z.iter().all(|&v| v > 0.0) {
                for (t, &j) in pset.iter().enumerate() {
                    lambda[j] = z[t];
                }
                break;
            }
            // Step back along the segment to the feasibility boundary.
            let mut alpha = f64::INFINITY;
            for (t, &j) in pset.iter().enumerate() {
                if z[t] <= 0.0 {
                    let denom = lambda[j] - z[t];
                    if denom > 0.0 {
                        alpha = alpha.min(lambda[j] / denom);
                    } else {
                        alpha = 0.0;
                    }
                }
            }
            for (t, &j) in pset.iter().enumerate() {
                lambda[j] += alpha * (z[t] - lambda[j]);
            }
            for &j in &pset {
                if lambda[j] <= 1e-14 * grad0[j].abs().max(1.0) {
                    lambda[j] = 0.0;
                    passive[j] = false;
                }
            }
            pivots += 1;
        }

        let fit = g.matvec(&lambda);
        residual = sub(x, &fit);
    }
}

/// Whether `v` lies in the row space of `rows`, judged by the least-squares
/// residual against `tol * max(1, ||v||)`.
pub fn rowspace_membership(v: &[f64], rows: &Matrix, tol: f64) -> bool {
    assert_eq!(v.len(), rows.cols(), "rowspace_membership dimension mismatch");
    // Orthonormalize the rows (modified Gram-Schmidt, dropping dependent
    // rows), then measure what remains of v outside the span.
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for r in 0..rows.rows() {
        let mut w = rows.row(r).to_vec();
        let wnorm0 = norm(&w).max(1.0);
        for q in &basis {
            let c = dot(&w, q);
            for (wi, qi) in w.iter_mut().zip(q) {
                *wi -= c * qi;
            }
        }
        let wnorm = norm(&w);
        if wnorm > 1e-12 * wnorm0 {
            for wi in w.iter_mut() {
                *wi /= wnorm;
            }
            basis.push(w);
        }
    }
    let mut resid = v.to_vec();
    for q in &basis {
        let c = dot(&resid, q);
        for (ri, qi) in resid.iter_mut().zip(q) {
            *ri -= c * qi;
        }
    }
    norm(&resid) < tol * norm(v).max(1.0)
}

/// Seed pair identifying one reproducible noise stream.
///
/// Replicate `i` of a run always reads from `RandomStream::new(seed, i)`, so
/// results are independent of how replicates are scheduled across workers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomStream {
    pub master_seed: u64,
    pub replicate: u64,
}

impl RandomStream {
    pub fn new(master_seed: u64, replicate: u64) -> Self {
        RandomStream {
            master_seed,
            replicate,
        }
    }

    /// The ChaCha stream for this replicate. Same (seed, replicate) always
    /// yields the same generator state.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.replicate.wrapping_add(1));
        rng
    }

    pub fn standard_normal(&self, n: usize) -> Vec<f64> {
        let mut rng = self.rng();
        (0..n).map(|_| rng.sample(StandardNormal)).collect()
    }
}

/// `n` independent standard normal variates, deterministic per stream.
pub fn gaussian_draw(stream: RandomStream, n: usize) -> Vec<f64> {
    stream.standard_normal(n)
}

fn parse_float(tok: &str, where_: &str) -> Result<f64> {
    let v: f64 = tok
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad number {tok:?} in {where_}")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("non-finite number in {where_}")));
    }
    Ok(v)
}

/// Parse an inline comma-separated vector such as `1,-2,0.5`.
pub fn parse_vector_inline(s: &str) -> Result<Vec<f64>> {
    let vals: Result<Vec<f64>> = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| parse_float(t, "vector"))
        .collect();
    let vals = vals?;
    if vals.is_empty() {
        return Err(Error::Parse("empty vector".into()));
    }
    Ok(vals)
}

/// Read a vector from a CSV file: entries separated by commas and/or
/// newlines, no header.
pub fn read_vector_csv(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        for tok in line.split(',') {
            if tok.trim().is_empty() {
                continue;
            }
            out.push(parse_float(tok, &path.display().to_string())?);
        }
    }
    if out.is_empty() {
        return Err(Error::Parse(format!("{}: empty vector", path.display())));
    }
    Ok(out)
}

/// Read a matrix from a CSV file, one row per line, no header.
pub fn read_matrix_csv(path: &Path) -> Result<Matrix> {
    let text = std::fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Result<Vec<f64>> = line
            .split(',')
            .map(|t| parse_float(t, &path.display().to_string()))
            .collect();
        rows.push(row?);
    }
    if rows.is_empty() {
        return Err(Error::Parse(format!("{}: empty matrix", path.display())));
    }
    Matrix::from_rows(&rows)
}

/// Round-trip-safe float formatting: 17 significant digits.
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
        assert_eq!(a.rows(), b.rows());
        assert_eq!(a.cols(), b.cols());
        let mut m = 0.0f64;
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                m = m.max((a.get(i, j) - b.get(i, j)).abs());
            }
        }
        m
    }

    fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut s = 0.0;
                for t in 0..a.cols() {
                    s += a.get(i, t) * b.get(t, j);
                }
                out.set(i, j, s);
            }
        }
        out
    }

    #[test]
    fn qr_identity() {
        let a = Matrix::identity(3);
        let (q, r) = qr_positive_diag(&a).unwrap();
        assert!(max_abs_diff(&q, &Matrix::identity(3)) < 1e-14);
        assert!(max_abs_diff(&r, &Matrix::identity(3)) < 1e-14);
    }

    #[test]
    fn qr_bidiagonal_bottom_right() {
        // Lower-bidiagonal pattern, n = 2: the last diagonal entry of R is
        // 1/sqrt(2).
        let a = Matrix::from_rows(&[vec![1.0, 0.0], vec![-1.0, 1.0]]).unwrap();
        let (q, r) = qr_positive_diag(&a).unwrap();
        assert!((r.get(1, 1) - 1.0 / 2.0f64.sqrt()).abs() < 1e-12);
        assert!(max_abs_diff(&matmul(&q, &r), &a) < 1e-12);
    }

    #[test]
    fn qr_random_reconstruction() {
        let z = RandomStream::new(11, 0).standard_normal(16);
        let mut a = Matrix::new(4, 4, z).unwrap();
        for i in 0..4 {
            // Diagonal boost keeps the test matrix well conditioned.
            a.set(i, i, a.get(i, i) + 5.0);
        }
        let (q, r) = qr_positive_diag(&a).unwrap();
        assert!(max_abs_diff(&matmul(&q, &r), &a) < 1e-10);
        let qtq = matmul(&q.transpose(), &q);
        assert!(max_abs_diff(&qtq, &Matrix::identity(4)) < 1e-10);
        for i in 0..4 {
            assert!(r.get(i, i) > 0.0);
            for j in 0..i {
                assert!(r.get(i, j).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn qr_rejects_singular() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(
            qr_positive_diag(&a),
            Err(Error::SingularMatrix(_))
        ));
    }

    #[test]
    fn nnls_clamps_negative_part() {
        let g = Matrix::identity(2);
        let lam = nnls(&g, &[1.0, -1.0]).unwrap();
        assert!((lam[0] - 1.0).abs() < 1e-12);
        assert!(lam[1].abs() < 1e-12);
    }

    #[test]
    fn nnls_interior_solution() {
        let g = Matrix::identity(2);
        let lam = nnls(&g, &[2.0, 3.0]).unwrap();
        assert!((lam[0] - 2.0).abs() < 1e-12);
        assert!((lam[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn nnls_matches_grid_search() {
        // Columns (1,0) and (1,1), target (0,1); compare against brute-force
        // minimization over [0,2]^2 at step 1e-3.
        let g = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let x = [0.0, 1.0];
        let lam = nnls(&g, &x).unwrap();

        let objective = |l0: f64, l1: f64| {
            let r0 = x[0] - (l0 + l1);
            let r1 = x[1] - l1;
            r0 * r0 + r1 * r1
        };
        let mut best = (0.0, 0.0, f64::INFINITY);
        let steps = 2001;
        for i in 0..steps {
            for j in 0..steps {
                let l0 = i as f64 * 1e-3;
                let l1 = j as f64 * 1e-3;
                let obj = objective(l0, l1);
                if obj < best.2 {
                    best = (l0, l1, obj);
                }
            }
        }
        assert!((lam[0] - best.0).abs() < 2e-3, "{lam:?} vs {best:?}");
        assert!((lam[1] - best.1).abs() < 2e-3);
        assert!(objective(lam[0], lam[1]) <= best.2 + 1e-9);
    }

    #[test]
    fn nnls_kkt_residual() {
        // KKT: positive multipliers have zero gradient, zero multipliers have
        // gradient on the correct side.
        let stream = RandomStream::new(3, 5);
        let data = stream.standard_normal(5 * 4);
        let g = Matrix::new(5, 4, data).unwrap();
        let x = RandomStream::new(3, 6).standard_normal(5);
        let lam = nnls(&g, &x).unwrap();
        let fit = g.matvec(&lam);
        let grad = g.tr_matvec(&sub(&x, &fit));
        for j in 0..4 {
            assert!(lam[j] >= 0.0);
            if lam[j] > 0.0 {
                assert!(grad[j].abs() < 1e-9, "grad[{j}] = {}", grad[j]);
            } else {
                assert!(grad[j] <= 1e-9);
            }
        }
        // Objective never beats lambda = 0 or the clamped unconstrained fit.
        let obj = |l: &[f64]| sqnorm(&sub(&x, &g.matvec(l)));
        assert!(obj(&lam) <= obj(&[0.0; 4]) + 1e-12);
        let unconstrained = least_squares(&g, &x).unwrap();
        let clamped: Vec<f64> = unconstrained.iter().map(|v| v.max(0.0)).collect();
        assert!(obj(&lam) <= obj(&clamped) + 1e-12);
    }

    #[test]
    fn rowspace_examples() {
        let rows = Matrix::from_rows(&[vec![0.0, -1.0]]).unwrap();
        assert!(rowspace_membership(&[0.0, -1.0], &rows, 1e-9));
        let rows = Matrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        assert!(!rowspace_membership(&[1.0, 1.0], &rows, 1e-9));
        let rows = Matrix::identity(3);
        assert!(rowspace_membership(&[1.0, 2.0, 3.0], &rows, 1e-9));
    }

    #[test]
    fn gaussian_streams_deterministic_and_separated() {
        let a = gaussian_draw(RandomStream::new(99, 7), 8);
        let b = gaussian_draw(RandomStream::new(99, 7), 8);
        assert_eq!(a, b);
        let c = gaussian_draw(RandomStream::new(99, 8), 8);
        assert_ne!(a, c);
    }

    #[test]
    fn gaussian_moments() {
        let n = 100_000usize;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for i in 0..n {
            let z = gaussian_draw(RandomStream::new(2024, i as u64), 1)[0];
            sum += z;
            sumsq += z * z;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        std::fs::write(&p, "1,2.5\n-3,4e-2\n").unwrap();
        let m = read_matrix_csv(&p).unwrap();
        assert_eq!(m.rows(), 2);
        assert_eq!(m.cols(), 2);
        assert_eq!(m.get(1, 1), 4e-2);
        let v = read_vector_csv(&p).unwrap();
        assert_eq!(v, vec![1.0, 2.5, -3.0, 4e-2]);
    }

    #[test]
    fn g17_round_trips() {
        for &x in &[0.1, 2.45, 1.0 / 3.0, -1.2345678901234567e-7] {
            let s = fmt_g17(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, x, "{s}");
        }
    }
}
