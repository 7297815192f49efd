use crate::error::{Error, Result};
use crate::matrix::{AssignmentMatrix, Matrix};
use crate::par;
use crate::tags::{SupervisionMask, TagMap};

use super::ratio::RatioBudget;
use super::row_min_allowed;

/// Floor applied to allowed kernel entries so no allowed cell starts at zero.
const KERNEL_FLOOR: f64 = 1e-300;
/// Largest log-scale change per cycle before the root is bracketed.
const MAX_LOG_STEP: f64 = 16.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BregmanOptions {
    /// Maximum number of (ratio, simplex) projection cycles.
    pub max_iters: usize,
    /// Stop once both residuals are at or below this value.
    pub tol: f64,
    /// Pick each cycle's `O` scale by a safeguarded Newton step instead of
    /// the plain ratio projection (see [`soft_assign_ratio`]).
    pub accelerate: bool,
}

impl Default for BregmanOptions {
    fn default() -> Self {
        BregmanOptions {
            max_iters: 100,
            tol: 1e-9,
            accelerate: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BregmanOutcome {
    pub assignment: AssignmentMatrix,
    /// Projection cycles performed.
    pub iterations: usize,
    /// `max_i |sum_j A_ij - 1|`.
    pub row_residual: f64,
    /// `|O mass - budget| / n`.
    pub ratio_residual: f64,
    /// Ratio residual after each cycle.
    pub ratio_history: Vec<f64>,
    pub converged: bool,
}

/// KL projection onto the masked simplex: zero forbidden cells, renormalize rows.
pub fn bregman_project_simplex(a: &Matrix, z: &SupervisionMask) -> Result<AssignmentMatrix> {
    z.check_shape("bregman_project_simplex", a.rows(), a.cols())?;
    check_nonnegative(a)?;
    if let Some(row) = (0..a.rows()).find(|&i| allowed_mass(a.row(i), z.row(i)) <= 0.0) {
        return Err(Error::ZeroAllowedMass { row });
    }
    let mut out = a.clone();
    par::for_each_row_mut(out.as_mut_slice(), a.cols(), |i, row| {
        let zi = z.row(i);
        let s = allowed_mass(row, zi);
        for (v, &ok) in row.iter_mut().zip(zi) {
            *v = if ok { *v / s } else { 0.0 };
        }
    });
    Ok(AssignmentMatrix::from_matrix_unchecked(out))
}

/// KL projection onto the ratio hyperplane: zero forbidden cells and rescale
/// the allowed `O` block so it carries exactly `budget` mass.
pub fn bregman_project_ratio(
    a: &Matrix,
    z: &SupervisionMask,
    phi: &TagMap,
    budget: &RatioBudget,
) -> Result<Matrix> {
    z.check_shape("bregman_project_ratio", a.rows(), a.cols())?;
    check_prototypes(phi, a.cols())?;
    check_nonnegative(a)?;
    let mass = o_mass(a, z, phi);
    let scale = if mass > 0.0 {
        budget.budget as f64 / mass
    } else if budget.budget == 0 {
        0.0
    } else {
        return Err(Error::ZeroOBlockMass {
            budget: budget.budget,
        });
    };
    Ok(scale_o_block(a, z, phi, scale))
}

/// Zeroes forbidden cells and multiplies allowed `O` cells by `scale`.
fn scale_o_block(a: &Matrix, z: &SupervisionMask, phi: &TagMap, scale: f64) -> Matrix {
    let mut out = a.clone();
    par::for_each_row_mut(out.as_mut_slice(), a.cols(), |i, row| {
        let zi = z.row(i);
        for (j, v) in row.iter_mut().enumerate() {
            *v = if !zi[j] {
                0.0
            } else if phi.is_o(j) {
                *v * scale
            } else {
                *v
            };
        }
    });
    out
}

/// Soft E-step under the ratio constraint.
///
/// Starts from the masked kernel `exp(-D)` (shifted per row, which the
/// simplex projection makes irrelevant). Each cycle rescales the allowed `O`
/// block and then projects onto the simplex, so every iterate is
/// `simplex(K with O block times beta)` for a cumulative scale `beta`.
///
/// With `accelerate` off the rescale is the ratio projection itself
/// (`beta *= budget / O mass`). That fixed-point iteration contracts at
/// roughly `1 - gap / max_O` where `gap` is the distance from the budget to
/// the nearest feasibility bound, so budgets a few rows from a bound need
/// hundreds of cycles. With `accelerate` on, `log beta` takes a Newton step
/// on the O mass (whose derivative is `sum_i p_i (1 - p_i)` for row O-shares
/// `p_i`), falling back to bisection whenever the step would leave the
/// bracket known to contain the root.
///
/// Budgets exactly on a bound have zeros on allowed cells that neither scheme
/// reaches in finitely many steps, so those two cases use their closed form.
pub fn soft_assign_ratio(
    d: &Matrix,
    z: &SupervisionMask,
    phi: &TagMap,
    budget: &RatioBudget,
    opts: &BregmanOptions,
) -> Result<BregmanOutcome> {
    let n = d.rows();
    z.check_shape("soft_assign_ratio", n, d.cols())?;
    check_prototypes(phi, d.cols())?;
    if budget.n != n {
        return Err(Error::dims("soft_assign_ratio", format!("budget over {n} rows"), budget.n));
    }
    if let Some(row) = (0..n).find(|&i| !z.row(i).contains(&true)) {
        return Err(Error::EmptyMaskRow { row });
    }
    budget.check_feasible(z, phi)?;
    let (forced_o, forced_other) = super::ratio::forced_rows(z, phi);

    let kernel = masked_kernel(d, z);
    if budget.budget == forced_o || budget.budget == n - forced_other {
        let all_o = budget.budget != forced_o;
        let restricted = restrict_groups(&kernel, z, phi, all_o);
        let assignment = bregman_project_simplex(&restricted, z)?;
        return Ok(finish(assignment, z, phi, budget, 1, vec![], opts.tol));
    }

    let mut a = bregman_project_simplex(&kernel, z)?;
    let mut history = Vec::new();
    let mut iterations = 0;
    // Bracket on the cumulative log scale relative to the kernel.
    let (mut log_scale, mut lo, mut hi) = (0.0, f64::NEG_INFINITY, f64::INFINITY);
    let target = budget.budget as f64;
    for _ in 0..opts.max_iters {
        let scaled = if opts.accelerate {
            let (mass, slope) = o_share(&a, z, phi);
            if mass < target {
                lo = log_scale;
            } else {
                hi = log_scale;
            }
            let step = newton_log_step(target - mass, slope, log_scale, lo, hi);
            log_scale += step;
            scale_o_block(&a, z, phi, step.exp())
        } else {
            bregman_project_ratio(&a, z, phi, budget)?
        };
        a = bregman_project_simplex(&scaled, z)?;
        iterations += 1;
        let ratio_res = ratio_residual(&a, z, phi, budget);
        history.push(ratio_res);
        if a.row_sum_residual() <= opts.tol && ratio_res <= opts.tol {
            break;
        }
    }
    Ok(finish(a, z, phi, budget, iterations, history, opts.tol))
}

fn finish(
    assignment: AssignmentMatrix,
    z: &SupervisionMask,
    phi: &TagMap,
    budget: &RatioBudget,
    iterations: usize,
    mut ratio_history: Vec<f64>,
    tol: f64,
) -> BregmanOutcome {
    let row_residual = assignment.row_sum_residual();
    let ratio_residual = ratio_residual(&assignment, z, phi, budget);
    if ratio_history.is_empty() {
        ratio_history.push(ratio_residual);
    }
    BregmanOutcome {
        converged: row_residual <= tol && ratio_residual <= tol,
        assignment,
        iterations,
        row_residual,
        ratio_residual,
        ratio_history,
    }
}

/// Allowed cells get `max(exp(min_allowed(D_i) - D_ij), floor)`, others 0.
fn masked_kernel(d: &Matrix, z: &SupervisionMask) -> Matrix {
    let mut k = Matrix::zeros(d.rows(), d.cols());
    par::for_each_row_mut(k.as_mut_slice(), d.cols(), |i, out| {
        let (di, zi) = (d.row(i), z.row(i));
        let shift = row_min_allowed(di, zi);
        for j in 0..out.len() {
            out[j] = if zi[j] {
                (shift - di[j]).exp().max(KERNEL_FLOOR)
            } else {
                0.0
            };
        }
    });
    k
}

/// Boundary budgets: every row that can leave `O` does (`all_o == false`), or
/// every row that can be `O` is (`all_o == true`).
fn restrict_groups(kernel: &Matrix, z: &SupervisionMask, phi: &TagMap, all_o: bool) -> Matrix {
    let mut out = kernel.clone();
    par::for_each_row_mut(out.as_mut_slice(), kernel.cols(), |i, row| {
        let zi = z.row(i);
        let can_move = (0..row.len()).any(|j| zi[j] && phi.is_o(j) == all_o);
        if !can_move {
            return;
        }
        for (j, v) in row.iter_mut().enumerate() {
            if phi.is_o(j) != all_o {
                *v = 0.0;
            }
        }
    });
    out
}

/// Allowed `O` mass of a row-stochastic `a` and its derivative with respect
/// to the log of an `O` scale, `sum_i p_i (1 - p_i)`.
fn o_share(a: &Matrix, z: &SupervisionMask, phi: &TagMap) -> (f64, f64) {
    let mut mass = 0.0;
    let mut slope = 0.0;
    for i in 0..a.rows() {
        let (ai, zi) = (a.row(i), z.row(i));
        let p: f64 = phi.o_prototypes().iter().filter(|&&j| zi[j]).map(|&j| ai[j]).sum();
        mass += p;
        slope += p * (1.0 - p);
    }
    (mass, slope)
}

fn newton_log_step(gap: f64, slope: f64, at: f64, lo: f64, hi: f64) -> f64 {
    if gap == 0.0 {
        return 0.0;
    }
    let newton = gap / slope;
    let candidate = at + newton.clamp(-MAX_LOG_STEP, MAX_LOG_STEP);
    if newton.is_finite() && candidate > lo && candidate < hi {
        return candidate - at;
    }
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi) - at,
        _ => MAX_LOG_STEP.copysign(gap),
    }
}

fn ratio_residual(a: &Matrix, z: &SupervisionMask, phi: &TagMap, budget: &RatioBudget) -> f64 {
    if budget.n == 0 {
        return 0.0;
    }
    (o_mass(a, z, phi) - budget.budget as f64).abs() / budget.n as f64
}

/// Allowed mass on `O` prototypes, accumulated row-major.
pub(crate) fn o_mass(a: &Matrix, z: &SupervisionMask, phi: &TagMap) -> f64 {
    let mut mass = 0.0;
    for i in 0..a.rows() {
        let (ai, zi) = (a.row(i), z.row(i));
        for &j in phi.o_prototypes() {
            if zi[j] {
                mass += ai[j];
            }
        }
    }
    mass
}

fn allowed_mass(row: &[f64], allowed: &[bool]) -> f64 {
    row.iter()
        .zip(allowed)
        .filter(|(_, &ok)| ok)
        .map(|(&v, _)| v)
        .sum()
}

fn check_nonnegative(a: &Matrix) -> Result<()> {
    for i in 0..a.rows() {
        if let Some(j) = a.row(i).iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidAssignment { row: i, col: j });
        }
    }
    Ok(())
}

fn check_prototypes(phi: &TagMap, k: usize) -> Result<()> {
    if phi.num_prototypes() != k {
        return Err(Error::dims("tag map", format!("{k} prototypes"), phi.num_prototypes()));
    }
    Ok(())
}
