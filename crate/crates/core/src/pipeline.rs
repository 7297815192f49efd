//! End-to-end fit, prediction and linear-model export.
//!
//! [`fit`] runs alternate convex search over the assignment `A`, the
//! centroids `C` and (optionally) the projection `U`, in that order, for a
//! fixed number of rounds. Distances in the E-step are measured after
//! projection; the M-step works in the original space.

use crate::distance::{clustering_objective, pairwise_sq_dist};
use crate::error::{Error, Result};
use crate::estep::{
    hard_assign, hard_assign_ratio, soft_assign, soft_assign_ratio, BregmanOptions, RatioBudget,
};
use crate::init::init_prototypes;
use crate::matrix::{AssignmentMatrix, Matrix};
use crate::mstep::update_centroids;
use crate::par;
use crate::subspace::{compute_scatter, generalized_eigen, projection_dim, Projection, RidgePolicy};
use crate::tags::{Label, SupervisionMask, TagMap};

/// Between-cluster eigenvalues at or below this count as null directions.
const NULL_DIRECTION: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Hard,
    Soft,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub variant: Variant,
    /// Expected share of `O` rows, if the ratio constraint is used.
    pub ratio: Option<f64>,
    /// Prototypes given to `O` when the tag map is built from names.
    pub o_prototypes: usize,
    pub acs_iters: usize,
    pub use_subspace: bool,
    pub bregman: BregmanOptions,
    pub ridge: RidgePolicy,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            variant: Variant::Hard,
            ratio: None,
            o_prototypes: 10,
            acs_iters: 10,
            use_subspace: true,
            bregman: BregmanOptions::default(),
            ridge: RidgePolicy::default(),
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(r) = self.ratio {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::RatioOutOfRange(r));
            }
        }
        if self.o_prototypes == 0 {
            return Err(Error::InvalidConfig("o_prototypes must be at least 1".into()));
        }
        if self.bregman.max_iters == 0 || !(self.bregman.tol > 0.0) {
            return Err(Error::InvalidConfig(
                "Bregman iterations and tolerance must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Per-round diagnostics recorded by [`fit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    /// Clustering objective at the end of the round (entropic for soft fits).
    pub objective: f64,
    pub row_sum_residual: f64,
    pub ratio_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub centroids: Matrix,
    /// `None` means the identity (no subspace selection).
    pub projection: Option<Projection>,
    pub tag_map: TagMap,
    pub trace: Vec<TraceRow>,
}

impl Model {
    pub fn input_dim(&self) -> usize {
        self.centroids.cols()
    }

    /// Rows of `x` in the space where distances are measured.
    pub fn project(&self, x: &Matrix) -> Result<Matrix> {
        match &self.projection {
            Some(p) => p.apply(x),
            None => Ok(x.clone()),
        }
    }

    /// Linear scorer in the input space equivalent to nearest-prototype search:
    /// weights `U U' C_j`, bias `-||U' C_j||^2 / 2`.
    pub fn linear_model(&self) -> Result<LinearModel> {
        let Some(p) = &self.projection else {
            return Ok(to_linear_model(&self.centroids));
        };
        let projected = p.apply(&self.centroids)?;
        let weights = projected.matmul(&p.u.transpose())?;
        let bias = projected.row_iter().map(half_neg_sq_norm).collect();
        Ok(LinearModel { weights, bias })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutput {
    pub model: Model,
    /// Assignment from the last E-step (`None` when no round ran).
    pub assignment: Option<AssignmentMatrix>,
}

/// Supervision mask for partial labels; see [`SupervisionMask::from_labels`].
pub fn build_supervision_mask(labels: &[Label], phi: &TagMap) -> Result<SupervisionMask> {
    SupervisionMask::from_labels(labels, phi)
}

/// Fits prototypes (and a projection) to `x` under the label mask and the
/// optional `O` ratio. Fully deterministic.
pub fn fit(x: &Matrix, labels: &[Label], phi: &TagMap, cfg: &FitConfig) -> Result<FitOutput> {
    cfg.validate()?;
    let (n, d) = x.shape();
    if labels.len() != n {
        return Err(Error::dims("fit", format!("{n} labels"), labels.len()));
    }
    if !x.is_finite() {
        return Err(Error::InvalidConfig("feature matrix holds non-finite values".into()));
    }
    let z = build_supervision_mask(labels, phi)?;
    let budget = match cfg.ratio {
        Some(r) => {
            let b = RatioBudget::from_ratio(n, r)?;
            b.check_feasible(&z, phi)?;
            Some(b)
        }
        None => None,
    };
    let k = phi.num_prototypes();
    let max_dim = if cfg.use_subspace {
        projection_dim(k, d)?
    } else {
        d
    };

    let mut centroids = init_prototypes(x, labels, phi)?;
    let mut projection = cfg.use_subspace.then(|| Projection {
        u: Matrix::basis_columns(d, max_dim),
        eigenvalues: Vec::new(),
    });
    let mut learned = false;
    let mut assignment = None;
    let mut trace = Vec::with_capacity(cfg.acs_iters);
    let soft = cfg.variant == Variant::Soft;

    for iter in 1..=cfg.acs_iters {
        let dist = projected_distances(x, &centroids, projection.as_ref())?;
        let (a, row_sum_residual, ratio_residual) = e_step(&dist, &z, phi, budget.as_ref(), cfg)?;
        centroids = update_centroids(x, &a, &centroids)?;
        if cfg.use_subspace {
            let scatter = compute_scatter(x, &a, &centroids)?;
            let eig = generalized_eigen(&scatter.s_w, &scatter.s_t, &cfg.ridge)?;
            let p = max_dim.min(eig.discriminative_rank(NULL_DIRECTION)).max(1);
            projection = Some(eig.truncate(p));
            learned = true;
        }
        let dist = projected_distances(x, &centroids, projection.as_ref())?;
        trace.push(TraceRow {
            iter,
            objective: clustering_objective(&a, &dist, soft)?,
            row_sum_residual,
            ratio_residual,
        });
        assignment = Some(a);
    }

    Ok(FitOutput {
        model: Model {
            centroids,
            // The basis-column start is only a bootstrap for the first E-step.
            projection: if learned { projection } else { None },
            tag_map: phi.clone(),
            trace,
        },
        assignment,
    })
}

fn projected_distances(x: &Matrix, c: &Matrix, projection: Option<&Projection>) -> Result<Matrix> {
    match projection {
        Some(p) => pairwise_sq_dist(&p.apply(x)?, &p.apply(c)?),
        None => pairwise_sq_dist(x, c),
    }
}

fn e_step(
    dist: &Matrix,
    z: &SupervisionMask,
    phi: &TagMap,
    budget: Option<&RatioBudget>,
    cfg: &FitConfig,
) -> Result<(AssignmentMatrix, f64, f64)> {
    Ok(match (cfg.variant, budget) {
        (Variant::Hard, None) => (hard_assign(dist, z)?, 0.0, 0.0),
        (Variant::Hard, Some(b)) => (hard_assign_ratio(dist, z, phi, b)?, 0.0, 0.0),
        (Variant::Soft, None) => {
            let a = soft_assign(dist, z)?;
            let r = a.row_sum_residual();
            (a, r, 0.0)
        }
        (Variant::Soft, Some(b)) => {
            let out = soft_assign_ratio(dist, z, phi, b, &cfg.bregman)?;
            (out.assignment, out.row_residual, out.ratio_residual)
        }
    })
}

/// Tag of the nearest prototype (in projected space) for each row of `xq`.
/// Ties go to the lowest prototype index; no mask or ratio applies here.
pub fn predict(xq: &Matrix, model: &Model) -> Result<Vec<usize>> {
    if xq.cols() != model.input_dim() {
        return Err(Error::dims("predict", format!("{} columns", model.input_dim()), xq.cols()));
    }
    let xp = model.project(xq)?;
    let cp = model.project(&model.centroids)?;
    Ok(par::map_indices(xp.rows(), |i| {
        let xi = xp.row(i);
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for j in 0..cp.rows() {
            let dj = crate::distance::sq_dist(xi, cp.row(j));
            if dj < best_d {
                best = j;
                best_d = dj;
            }
        }
        model.tag_map.tag_of(best)
    }))
}

/// Affine scores `W x + b`, one per prototype.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    /// `k x d`.
    pub weights: Matrix,
    pub bias: Vec<f64>,
}

impl LinearModel {
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .row_iter()
            .zip(&self.bias)
            .map(|(w, b)| w.iter().zip(x).map(|(u, v)| u * v).sum::<f64>() + b)
            .collect()
    }

    /// Highest-scoring prototype; ties go to the lowest index.
    pub fn best(&self, x: &[f64]) -> usize {
        let s = self.scores(x);
        let mut best = 0;
        for j in 1..s.len() {
            if s[j] > s[best] {
                best = j;
            }
        }
        best
    }
}

/// Prototype distances as a linear model: `argmax_j (C x + b)_j` equals
/// `argmin_j ||x - C_j||^2` because `-||x||^2 / 2` is shared by every score.
pub fn to_linear_model(c: &Matrix) -> LinearModel {
    LinearModel {
        weights: c.clone(),
        bias: c.row_iter().map(half_neg_sq_norm).collect(),
    }
}

fn half_neg_sq_norm(row: &[f64]) -> f64 {
    -0.5 * row.iter().map(|v| v * v).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_blobs() -> (Matrix, TagMap) {
        let x = Matrix::from_rows(&[[-10.1], [-10.0], [-9.9], [9.9], [10.0], [10.1]]);
        (x, TagMap::io_scheme(&["I-X"], 1).unwrap())
    }

    fn no_subspace() -> FitConfig {
        FitConfig {
            use_subspace: false,
            ..FitConfig::default()
        }
    }

    #[test]
    fn separated_blobs_fully_labeled() {
        let (x, phi) = two_blobs();
        let labels = [Some(0), Some(0), Some(0), Some(1), Some(1), Some(1)];
        let out = fit(&x, &labels, &phi, &FitConfig { acs_iters: 1, ..no_subspace() }).unwrap();
        let c = &out.model.centroids;
        assert!((c[(0, 0)] + 10.0).abs() < 1e-12 && (c[(1, 0)] - 10.0).abs() < 1e-12);
        assert_eq!(out.assignment.unwrap().argmax_rows(), vec![0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn ratio_matching_natural_split() {
        let (x, phi) = two_blobs();
        let labels = [Some(0), None, None, None, Some(1), None];
        let cfg = FitConfig {
            ratio: Some(0.5),
            ..no_subspace()
        };
        let out = fit(&x, &labels, &phi, &cfg).unwrap();
        assert_eq!(out.assignment.unwrap().argmax_rows(), vec![0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn zero_rounds_keep_initialization() {
        let (x, phi) = two_blobs();
        let labels = [Some(0), None, None, None, Some(1), None];
        let out = fit(&x, &labels, &phi, &FitConfig { acs_iters: 0, ..FitConfig::default() }).unwrap();
        assert_eq!(out.model.centroids, Matrix::from_rows(&[[-10.1], [10.0]]));
        assert!(out.model.trace.is_empty() && out.model.projection.is_none());
        assert!(out.assignment.is_none());
    }

    #[test]
    fn infeasible_ratio_reported_up_front() {
        let (x, phi) = two_blobs();
        let labels = [Some(0), Some(0), Some(0), Some(0), Some(1), None];
        let err = fit(&x, &labels, &phi, &FitConfig { ratio: Some(0.3), ..no_subspace() }).unwrap_err();
        assert!(matches!(err, Error::InfeasibleBudget { forced_o: 4, .. }));
        let err = fit(&x, &labels, &phi, &FitConfig { ratio: Some(1.5), ..no_subspace() }).unwrap_err();
        assert_eq!(err, Error::RatioOutOfRange(1.5));
    }

    #[test]
    fn predict_nearest_prototype() {
        let model = Model {
            centroids: Matrix::from_rows(&[[0.0], [10.0]]),
            projection: None,
            tag_map: TagMap::io_scheme(&["I-X"], 1).unwrap(),
            trace: vec![],
        };
        assert_eq!(predict(&Matrix::from_rows(&[[3.0]]), &model).unwrap(), vec![0]);
        assert!(predict(&Matrix::zeros(1, 2), &model).is_err());
    }

    #[test]
    fn predict_tie_prefers_lower_prototype() {
        // Prototype 2 is O, prototype 5 is I-X, both at distance 1 from x = 0.
        let phi = TagMap::new(vec!["O".into(), "I-X".into()], vec![1, 1, 0, 1, 1, 1]).unwrap();
        let centroids = Matrix::from_rows(&[[9.0], [9.0], [-1.0], [9.0], [9.0], [1.0]]);
        let model = Model {
            centroids,
            projection: None,
            tag_map: phi,
            trace: vec![],
        };
        assert_eq!(predict(&Matrix::from_rows(&[[0.0]]), &model).unwrap(), vec![0]);
    }

    #[test]
    fn projection_can_flip_prediction() {
        let phi = TagMap::io_scheme(&["I-X"], 1).unwrap();
        let centroids = Matrix::from_rows(&[[0.0, 0.0], [3.0, 1.0]]);
        let x = Matrix::from_rows(&[[0.0, 1.0]]);
        let mut model = Model {
            centroids,
            projection: None,
            tag_map: phi,
            trace: vec![],
        };
        // Full space: d = 1 vs 9; axis 0 only: d = 0 vs 9; axis 1 only: 1 vs 0.
        assert_eq!(predict(&x, &model).unwrap(), vec![0]);
        model.projection = Some(Projection {
            u: Matrix::from_rows(&[[0.0], [1.0]]),
            eigenvalues: vec![0.0],
        });
        assert_eq!(predict(&x, &model).unwrap(), vec![1]);
    }

    #[test]
    fn linear_model_bias() {
        let lm = to_linear_model(&Matrix::from_rows(&[[1.0, 1.0]]));
        assert_eq!(lm.bias, vec![-1.0]);
        let lm = to_linear_model(&Matrix::zeros(3, 2));
        assert_eq!(lm.bias, vec![0.0; 3]);
        assert_eq!(lm.scores(&[4.0, 5.0]), vec![0.0; 3]);
    }
}
