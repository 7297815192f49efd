//! Scatter matrices and discriminative subspace selection.
//!
//! The subspace step minimizes `tr(U' S_w U)` subject to `U' S_t U = I`.
//! Stationarity gives the symmetric-definite pencil `S_w U = S_t U L`, solved
//! here by factoring `S_t = L L'`, diagonalizing `L^-1 S_w L^-T` and mapping
//! the eigenvectors back through `L^-T`. That keeps the problem symmetric and
//! makes `U' S_t U = I` hold by construction.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::par;

/// Relative pivot threshold below which the Cholesky factorization is
/// considered to have failed.
const PIVOT_RTOL: f64 = 1e-12;

/// Relative tolerance on `S_t = S_w + S_b` before [`compute_scatter`] errors.
const IDENTITY_RTOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterTriple {
    pub s_t: Matrix,
    pub s_w: Matrix,
    pub s_b: Matrix,
    pub mean: Vec<f64>,
    /// `||S_t - S_w - S_b||_F`.
    pub identity_residual: f64,
}

/// Total, within- and between-cluster scatter for assignment `a` and centroids `c`.
///
/// `c` must be the weighted means for `a` (as returned by
/// [`update_centroids`](crate::mstep::update_centroids)); otherwise the
/// decomposition does not hold and an error is returned. Soft assignments are
/// fine.
pub fn compute_scatter(x: &Matrix, a: &Matrix, c: &Matrix) -> Result<ScatterTriple> {
    let (n, d) = x.shape();
    let k = c.rows();
    if a.shape() != (n, k) {
        return Err(Error::dims(
            "compute_scatter",
            format!("assignment {n}x{k}"),
            format!("{}x{}", a.rows(), a.cols()),
        ));
    }
    if c.cols() != d {
        return Err(Error::dims("compute_scatter", format!("{d} centroid columns"), c.cols()));
    }

    let mut mean = vec![0.0; d];
    for row in x.row_iter() {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    if n > 0 {
        for m in mean.iter_mut() {
            *m /= n as f64;
        }
    }

    let mut s_t = Matrix::zeros(d, d);
    let mut diff = vec![0.0; d];
    for row in x.row_iter() {
        for ((t, &v), &m) in diff.iter_mut().zip(row).zip(&mean) {
            *t = v - m;
        }
        add_outer(&mut s_t, &diff, 1.0);
    }

    // One partial matrix per cluster, then summed in cluster order.
    let partials = par::map_indices(k, |j| {
        let cj = c.row(j);
        let mut part = Matrix::zeros(d, d);
        let mut diff = vec![0.0; d];
        let mut mass = 0.0;
        for (i, row) in x.row_iter().enumerate() {
            let w = a[(i, j)];
            if w == 0.0 {
                continue;
            }
            mass += w;
            for ((t, &v), &m) in diff.iter_mut().zip(row).zip(cj) {
                *t = v - m;
            }
            add_outer(&mut part, &diff, w);
        }
        (part, mass)
    });
    let mut s_w = Matrix::zeros(d, d);
    let mut s_b = Matrix::zeros(d, d);
    for (j, (part, mass)) in partials.into_iter().enumerate() {
        for (acc, v) in s_w.as_mut_slice().iter_mut().zip(part.as_slice()) {
            *acc += v;
        }
        if mass != 0.0 {
            for ((t, &cv), &m) in diff.iter_mut().zip(c.row(j)).zip(&mean) {
                *t = cv - m;
            }
            add_outer(&mut s_b, &diff, mass);
        }
    }

    let identity_residual = s_t.sub(&s_w)?.sub(&s_b)?.frobenius_norm();
    if identity_residual > IDENTITY_RTOL * s_t.frobenius_norm().max(1.0) {
        return Err(Error::ScatterIdentity {
            residual: identity_residual,
        });
    }
    Ok(ScatterTriple {
        s_t,
        s_w,
        s_b,
        mean,
        identity_residual,
    })
}

fn add_outer(m: &mut Matrix, v: &[f64], w: f64) {
    let d = v.len();
    for p in 0..d {
        let wp = w * v[p];
        for q in p..d {
            let val = wp * v[q];
            m[(p, q)] += val;
            if q != p {
                m[(q, p)] += val;
            }
        }
    }
}

/// Ridge added to `S_t` when it is numerically singular.
///
/// The first attempt uses `initial`; on failure the ridge restarts at
/// `start * tr(S_t) / d` and grows by `factor` until it exceeds
/// `max * tr(S_t) / d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RidgePolicy {
    pub initial: f64,
    pub start: f64,
    pub max: f64,
    pub factor: f64,
}

impl Default for RidgePolicy {
    fn default() -> Self {
        RidgePolicy {
            initial: 0.0,
            start: 1e-10,
            max: 1e-4,
            factor: 10.0,
        }
    }
}

/// All generalized eigenpairs of `(S_w, S_t)`, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedEigen {
    pub values: Vec<f64>,
    /// `d x d`, one eigenvector per column, `S_t`-orthonormal.
    pub vectors: Matrix,
    /// Ridge that made `S_t` factorizable (0 when none was needed).
    pub ridge: f64,
}

impl GeneralizedEigen {
    /// Leading `p` eigenpairs.
    pub fn truncate(&self, p: usize) -> Projection {
        let d = self.vectors.rows();
        let cols: Vec<usize> = (0..p.min(d)).collect();
        let mut u = Matrix::zeros(d, cols.len());
        for r in 0..d {
            for (c, &src) in cols.iter().enumerate() {
                u[(r, c)] = self.vectors[(r, src)];
            }
        }
        Projection {
            u,
            eigenvalues: self.values[..cols.len()].to_vec(),
        }
    }

    /// Number of directions with non-null between-cluster eigenvalue,
    /// i.e. `1 - lambda > threshold`.
    pub fn discriminative_rank(&self, threshold: f64) -> usize {
        self.values.iter().filter(|&&l| 1.0 - l > threshold).count()
    }
}

/// Learned `d x p` projection with its generalized eigenvalues (ascending).
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub u: Matrix,
    pub eigenvalues: Vec<f64>,
}

impl Projection {
    pub fn dim(&self) -> usize {
        self.u.cols()
    }

    /// Rows of `x` mapped to `x U`.
    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        x.matmul(&self.u)
    }
}

/// Solves `S_w U = S_t U Lambda` for every eigenpair.
pub fn generalized_eigen(s_w: &Matrix, s_t: &Matrix, ridge: &RidgePolicy) -> Result<GeneralizedEigen> {
    let d = s_t.rows();
    if s_t.shape() != (d, d) || s_w.shape() != (d, d) {
        return Err(Error::dims(
            "generalized_eigen",
            format!("square {d}x{d} pair"),
            format!("{:?} and {:?}", s_w.shape(), s_t.shape()),
        ));
    }
    let (l, used_ridge) = factor_with_ridge(s_t, ridge)?;

    // M = L^-1 S_w L^-T, symmetrized against rounding.
    let y = forward_solve_columns(&l, s_w);
    let m = forward_solve_columns(&l, &y.transpose());
    let mut sym = DMatrix::<f64>::zeros(d, d);
    for p in 0..d {
        for q in 0..d {
            sym[(p, q)] = 0.5 * (m[(p, q)] + m[(q, p)]);
        }
    }
    let eig = sym.symmetric_eigen();

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));

    let mut v = Matrix::zeros(d, d);
    for (c, &src) in order.iter().enumerate() {
        for r in 0..d {
            v[(r, c)] = eig.eigenvectors[(r, src)];
        }
    }
    let mut u = backward_solve_transposed(&l, &v);
    let mut values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();

    if used_ridge > 0.0 {
        // The factor belongs to S_t + ridge I: renormalize against S_t itself.
        for c in 0..d {
            let col = u.column(c);
            let st_norm = quad_form(s_t, &col);
            let sw_norm = quad_form(s_w, &col);
            if st_norm > 0.0 {
                let s = st_norm.sqrt();
                for r in 0..d {
                    u[(r, c)] /= s;
                }
                values[c] = sw_norm / st_norm;
            }
        }
    }
    canonicalize_signs(&mut u);
    Ok(GeneralizedEigen {
        values,
        vectors: u,
        ridge: used_ridge,
    })
}

/// The `p` smallest generalized eigenpairs of `(S_w, S_t)`.
pub fn solve_projection(s_w: &Matrix, s_t: &Matrix, p: usize, ridge: &RidgePolicy) -> Result<Projection> {
    if p == 0 || p > s_t.rows() {
        return Err(Error::InvalidConfig(format!(
            "projection dimension {p} outside 1..={}",
            s_t.rows()
        )));
    }
    Ok(generalized_eigen(s_w, s_t, ridge)?.truncate(p))
}

/// `min(d, k - 1)`: the rank of the between-cluster scatter in non-degenerate cases.
pub fn projection_dim(k: usize, d: usize) -> Result<usize> {
    if k < 2 {
        return Err(Error::TooFewPrototypes(k));
    }
    Ok(d.min(k - 1))
}

fn factor_with_ridge(s_t: &Matrix, policy: &RidgePolicy) -> Result<(Matrix, f64)> {
    let d = s_t.rows();
    let trace = s_t.trace();
    let scale = if d == 0 { 0.0 } else { trace / d as f64 };
    let mut ridge = policy.initial;
    let mut min_pivot;
    loop {
        match cholesky(s_t, ridge) {
            Ok(l) => return Ok((l, ridge)),
            Err(p) => min_pivot = p,
        }
        ridge = if ridge < policy.start * scale {
            policy.start * scale
        } else {
            ridge * policy.factor
        };
        if !(ridge > 0.0) || ridge > policy.max * scale * (1.0 + 1e-12) {
            return Err(Error::Factorization {
                ridge: ridge.min(policy.max * scale),
                trace,
                min_pivot,
            });
        }
    }
}

/// Lower-triangular `L` with `L L' = A + ridge I`, or the offending pivot.
fn cholesky(a: &Matrix, ridge: f64) -> std::result::Result<Matrix, f64> {
    let d = a.rows();
    let max_diag = (0..d).map(|i| a[(i, i)] + ridge).fold(0.0, f64::max);
    let floor = PIVOT_RTOL * max_diag;
    let mut l = Matrix::zeros(d, d);
    for j in 0..d {
        let mut pivot = a[(j, j)] + ridge;
        for m in 0..j {
            pivot -= l[(j, m)] * l[(j, m)];
        }
        if !(pivot > floor) || !pivot.is_finite() {
            return Err(pivot);
        }
        let ljj = pivot.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..d {
            let mut s = a[(i, j)];
            for m in 0..j {
                s -= l[(i, m)] * l[(j, m)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves `L X = B` column by column.
fn forward_solve_columns(l: &Matrix, b: &Matrix) -> Matrix {
    let d = l.rows();
    let mut x = Matrix::zeros(d, b.cols());
    for c in 0..b.cols() {
        for i in 0..d {
            let mut s = b[(i, c)];
            for m in 0..i {
                s -= l[(i, m)] * x[(m, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    x
}

/// Solves `L' X = B` column by column.
fn backward_solve_transposed(l: &Matrix, b: &Matrix) -> Matrix {
    let d = l.rows();
    let mut x = Matrix::zeros(d, b.cols());
    for c in 0..b.cols() {
        for i in (0..d).rev() {
            let mut s = b[(i, c)];
            for m in (i + 1)..d {
                s -= l[(m, i)] * x[(m, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    x
}

fn quad_form(a: &Matrix, v: &[f64]) -> f64 {
    let mut s = 0.0;
    for p in 0..v.len() {
        let mut row = 0.0;
        for q in 0..v.len() {
            row += a[(p, q)] * v[q];
        }
        s += v[p] * row;
    }
    s
}

/// Flips each column so its largest-magnitude entry (first on ties) is positive.
fn canonicalize_signs(u: &mut Matrix) {
    for c in 0..u.cols() {
        let mut best = 0;
        for r in 1..u.rows() {
            if u[(r, c)].abs() > u[(best, c)].abs() {
                best = r;
            }
        }
        if u.rows() > 0 && u[(best, c)] < 0.0 {
            for r in 0..u.rows() {
                u[(r, c)] = -u[(r, c)];
            }
        }
    }
}
