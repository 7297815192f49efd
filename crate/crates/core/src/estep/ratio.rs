use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::matrix::{AssignmentMatrix, Matrix};
use crate::par;
use crate::tags::{SupervisionMask, TagMap};

/// Number of rows that must be assigned to `O` prototypes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioBudget {
    /// Requested share of `O` rows.
    pub ratio: f64,
    /// `round(n * ratio)`, halves rounded away from zero.
    pub budget: usize,
    pub n: usize,
}

impl RatioBudget {
    pub fn from_ratio(n: usize, ratio: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&ratio) {
            return Err(Error::RatioOutOfRange(ratio));
        }
        let budget = ((n as f64) * ratio).round() as usize;
        Ok(RatioBudget {
            ratio,
            budget: budget.min(n),
            n,
        })
    }

    pub fn from_count(n: usize, budget: usize) -> Result<Self> {
        if budget > n {
            return Err(Error::InvalidConfig(format!(
                "budget {budget} exceeds the {n} available rows"
            )));
        }
        let ratio = if n == 0 { 0.0 } else { budget as f64 / n as f64 };
        Ok(RatioBudget { ratio, budget, n })
    }

    /// Checks `forced_o <= budget <= n - forced_other` for the mask.
    pub fn check_feasible(&self, z: &SupervisionMask, phi: &TagMap) -> Result<()> {
        let (forced_o, forced_other) = forced_rows(z, phi);
        if forced_o > self.budget || self.budget + forced_other > self.n {
            return Err(Error::InfeasibleBudget {
                budget: self.budget,
                n: self.n,
                forced_o,
                forced_other,
            });
        }
        Ok(())
    }
}

/// Rows whose mask only allows `O` prototypes, and rows allowing none.
pub(crate) fn forced_rows(z: &SupervisionMask, phi: &TagMap) -> (usize, usize) {
    let mut forced_o = 0;
    let mut forced_other = 0;
    for i in 0..z.rows() {
        let row = z.row(i);
        let has_o = (0..row.len()).any(|j| row[j] && phi.is_o(j));
        let has_other = (0..row.len()).any(|j| row[j] && !phi.is_o(j));
        match (has_o, has_other) {
            (true, false) => forced_o += 1,
            (false, true) => forced_other += 1,
            _ => {}
        }
    }
    (forced_o, forced_other)
}

/// Per-row cheapest allowed `O` and non-`O` prototypes.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractedDistances {
    pub d_o: Vec<f64>,
    pub d_others: Vec<f64>,
    pub argmin_o: Vec<Option<usize>>,
    pub argmin_others: Vec<Option<usize>>,
}

impl ContractedDistances {
    /// Penalty `d_o - d_others`: `-inf` when the row must be `O`,
    /// `+inf` when it cannot be.
    pub fn penalties(&self) -> Vec<f64> {
        self.d_o
            .iter()
            .zip(&self.d_others)
            .map(|(&o, &other)| match (o.is_finite(), other.is_finite()) {
                (true, true) => o - other,
                (_, false) => f64::NEG_INFINITY,
                (false, true) => f64::INFINITY,
            })
            .collect()
    }
}

/// Collapses the `O` and non-`O` prototype groups to their cheapest allowed member.
pub fn contract_o_groups(
    d: &Matrix,
    z: &SupervisionMask,
    phi: &TagMap,
) -> Result<ContractedDistances> {
    z.check_shape("contract_o_groups", d.rows(), d.cols())?;
    if phi.num_prototypes() != d.cols() {
        return Err(Error::dims(
            "contract_o_groups",
            format!("{} prototypes", d.cols()),
            phi.num_prototypes(),
        ));
    }
    let per_row = par::map_indices(d.rows(), |i| {
        let (di, zi) = (d.row(i), z.row(i));
        let mut o: Option<usize> = None;
        let mut other: Option<usize> = None;
        for j in 0..di.len() {
            if !zi[j] {
                continue;
            }
            let slot = if phi.is_o(j) { &mut o } else { &mut other };
            if slot.is_none_or(|b| di[j] < di[b]) {
                *slot = Some(j);
            }
        }
        (o, other)
    });
    let n = d.rows();
    let mut out = ContractedDistances {
        d_o: Vec::with_capacity(n),
        d_others: Vec::with_capacity(n),
        argmin_o: Vec::with_capacity(n),
        argmin_others: Vec::with_capacity(n),
    };
    for (i, (o, other)) in per_row.into_iter().enumerate() {
        if o.is_none() && other.is_none() {
            return Err(Error::EmptyMaskRow { row: i });
        }
        out.d_o.push(o.map_or(f64::INFINITY, |j| d[(i, j)]));
        out.d_others.push(other.map_or(f64::INFINITY, |j| d[(i, j)]));
        out.argmin_o.push(o);
        out.argmin_others.push(other);
    }
    Ok(out)
}

/// Hard E-step with exactly `budget.budget` rows on `O` prototypes.
///
/// Rows are ranked by `d_o - d_others` (forced rows carry `-inf`/`+inf`),
/// ties broken by row index, and the first `budget` rows go to their nearest
/// allowed `O` prototype. Everything else goes to its nearest allowed non-`O`
/// prototype. Cost is one contraction pass plus a sort of `n` keys.
pub fn hard_assign_ratio(
    d: &Matrix,
    z: &SupervisionMask,
    phi: &TagMap,
    budget: &RatioBudget,
) -> Result<AssignmentMatrix> {
    let n = d.rows();
    if budget.n != n {
        return Err(Error::dims("hard_assign_ratio", format!("budget over {n} rows"), budget.n));
    }
    let contracted = contract_o_groups(d, z, phi)?;
    budget.check_feasible(z, phi)?;

    let penalties = contracted.penalties();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| match penalties[a].total_cmp(&penalties[b]) {
        Ordering::Equal => a.cmp(&b),
        ord => ord,
    });

    let mut choices = vec![0usize; n];
    for (rank, &i) in order.iter().enumerate() {
        let pick = if rank < budget.budget {
            contracted.argmin_o[i]
        } else {
            contracted.argmin_others[i]
        };
        // Feasibility guarantees the forced rows land on the side they can use.
        choices[i] = pick.expect("feasible budget selects an available group");
    }
    Ok(AssignmentMatrix::one_hot(&choices, d.cols()))
}
