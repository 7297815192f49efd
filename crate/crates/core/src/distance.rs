//! Squared Euclidean distances and the clustering objective.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::par;

/// Entries below this are exact zeros in the entropy term.
pub const ENTROPY_ZERO: f64 = 1e-300;

/// `D[i, j] = ||x_i - c_j||^2`, summed as explicit squared differences.
pub fn pairwise_sq_dist(x: &Matrix, c: &Matrix) -> Result<Matrix> {
    if x.cols() != c.cols() {
        return Err(Error::dims(
            "pairwise_sq_dist",
            format!("{} columns", x.cols()),
            c.cols(),
        ));
    }
    let k = c.rows();
    let mut d = Matrix::zeros(x.rows(), k);
    par::for_each_row_mut(d.as_mut_slice(), k, |i, out| {
        let xi = x.row(i);
        for (j, slot) in out.iter_mut().enumerate() {
            *slot = sq_dist(xi, c.row(j));
        }
    });
    Ok(d)
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&u, &v)| {
            let t = u - v;
            t * t
        })
        .sum()
}

/// `<A, D>`, plus `<A, log A> - <A, 1>` when `entropy` is set.
///
/// Zero entries of `A` contribute nothing, so `D` may carry `+inf` where `A`
/// vanishes. Accumulation is row-major.
pub fn clustering_objective(a: &Matrix, d: &Matrix, entropy: bool) -> Result<f64> {
    if a.shape() != d.shape() {
        return Err(Error::dims(
            "clustering_objective",
            format!("{:?}", a.shape()),
            format!("{:?}", d.shape()),
        ));
    }
    let mut linear = 0.0;
    let mut neg_entropy = 0.0;
    let mut mass = 0.0;
    for i in 0..a.rows() {
        for (j, (&aij, &dij)) in a.row(i).iter().zip(d.row(i)).enumerate() {
            if !(aij >= 0.0) || !aij.is_finite() {
                return Err(Error::InvalidAssignment { row: i, col: j });
            }
            if aij == 0.0 {
                continue;
            }
            linear += aij * dij;
            if entropy {
                mass += aij;
                if aij >= ENTROPY_ZERO {
                    neg_entropy += aij * aij.ln();
                }
            }
        }
    }
    Ok(if entropy {
        linear + neg_entropy - mass
    } else {
        linear
    })
}
