//! E-step solvers.
//!
//! Four variants share the same inputs: a distance matrix `D` (`n x k`) and a
//! supervision mask `Z`. The unconstrained solvers are row-separable. The
//! ratio-constrained ones couple all rows through a single budget on the total
//! mass assigned to `O` prototypes:
//!
//! - hard: contract each row to its cheapest `O` and cheapest non-`O`
//!   prototype, then pick the `budget` rows with the smallest penalty
//!   `d_o - d_others` ([`hard_assign_ratio`]);
//! - soft: KL projection of `exp(-D)` onto the intersection of the masked
//!   simplex and the ratio hyperplane by alternating closed-form projections
//!   ([`soft_assign_ratio`]).

mod bregman;
mod ratio;

pub use bregman::{
    bregman_project_ratio, bregman_project_simplex, soft_assign_ratio, BregmanOptions,
    BregmanOutcome,
};
pub use ratio::{contract_o_groups, hard_assign_ratio, ContractedDistances, RatioBudget};

use crate::error::{Error, Result};
use crate::matrix::{AssignmentMatrix, Matrix};
use crate::par;
use crate::tags::SupervisionMask;

/// One-hot assignment to the nearest allowed prototype; ties go to the lowest index.
pub fn hard_assign(d: &Matrix, z: &SupervisionMask) -> Result<AssignmentMatrix> {
    z.check_shape("hard_assign", d.rows(), d.cols())?;
    let choices = par::map_indices(d.rows(), |i| nearest_allowed(d.row(i), z.row(i)));
    let choices = choices
        .into_iter()
        .enumerate()
        .map(|(i, c)| c.ok_or(Error::EmptyMaskRow { row: i }))
        .collect::<Result<Vec<_>>>()?;
    Ok(AssignmentMatrix::one_hot(&choices, d.cols()))
}

pub(crate) fn nearest_allowed(d: &[f64], allowed: &[bool]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (j, (&dj, &ok)) in d.iter().zip(allowed).enumerate() {
        if ok && best.is_none_or(|b| dj < d[b]) {
            best = Some(j);
        }
    }
    best
}

/// Masked softmax of `-D`, shifted by each row's smallest allowed distance.
pub fn soft_assign(d: &Matrix, z: &SupervisionMask) -> Result<AssignmentMatrix> {
    z.check_shape("soft_assign", d.rows(), d.cols())?;
    if let Some(row) = (0..z.rows()).find(|&i| !z.row(i).contains(&true)) {
        return Err(Error::EmptyMaskRow { row });
    }
    let k = d.cols();
    let mut a = Matrix::zeros(d.rows(), k);
    par::for_each_row_mut(a.as_mut_slice(), k, |i, out| {
        let (di, zi) = (d.row(i), z.row(i));
        let shift = row_min_allowed(di, zi);
        for j in 0..k {
            out[j] = if zi[j] { (shift - di[j]).exp() } else { 0.0 };
        }
        let s: f64 = out.iter().sum();
        for v in out.iter_mut() {
            *v /= s;
        }
    });
    Ok(AssignmentMatrix::from_matrix_unchecked(a))
}

pub(crate) fn row_min_allowed(d: &[f64], allowed: &[bool]) -> f64 {
    d.iter()
        .zip(allowed)
        .filter(|(_, &ok)| ok)
        .map(|(&v, _)| v)
        .fold(f64::INFINITY, f64::min)
}
