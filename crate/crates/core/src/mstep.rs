//! Centroid update. The same closed form is optimal whether distances are
//! measured in the original space or after a linear projection, so this step
//! never sees the projection.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::par;

/// Column masses below this are treated as empty clusters.
pub const EMPTY_MASS: f64 = 1e-12;

/// `C_j = sum_i A_ij x_i / sum_i A_ij`; clusters with (near) zero mass keep `prev_c`.
pub fn update_centroids(x: &Matrix, a: &Matrix, prev_c: &Matrix) -> Result<Matrix> {
    if a.rows() != x.rows() {
        return Err(Error::dims("update_centroids", format!("{} rows in A", x.rows()), a.rows()));
    }
    if prev_c.shape() != (a.cols(), x.cols()) {
        return Err(Error::dims(
            "update_centroids",
            format!("previous centroids {}x{}", a.cols(), x.cols()),
            format!("{}x{}", prev_c.rows(), prev_c.cols()),
        ));
    }
    let d = x.cols();
    let mut c = Matrix::zeros(a.cols(), d);
    par::for_each_row_mut(c.as_mut_slice(), d, |j, out| {
        let mut mass = 0.0;
        for i in 0..x.rows() {
            let w = a[(i, j)];
            if w == 0.0 {
                continue;
            }
            mass += w;
            for (o, &v) in out.iter_mut().zip(x.row(i)) {
                *o += w * v;
            }
        }
        if mass < EMPTY_MASS {
            out.copy_from_slice(prev_c.row(j));
        } else {
            for o in out.iter_mut() {
                *o /= mass;
            }
        }
    });
    Ok(c)
}
