//! Weakly-supervised constrained k-means for few-shot sequence tagging.
//!
//! The crate clusters dense embeddings into tag prototypes while honouring
//! partial labels (a supervision mask), an optional constraint on the share of
//! points assigned to the `O` tag, and a learned discriminative subspace.
//! Training is deterministic: initialization uses Ward agglomeration over the
//! labeled rows and every step is a batch update with fixed reduction order.
//!
//! Module map:
//!
//! - [`matrix`], [`tags`], [`distance`]: containers, tag map, supervision mask,
//!   distances and the clustering objective.
//! - [`estep`]: masked hard/soft assignment and their ratio-constrained variants.
//! - [`mstep`]: centroid update.
//! - [`subspace`]: scatter matrices and the generalized eigenproblem.
//! - [`init`]: Ward linkage and prototype initialization.
//! - [`pipeline`]: the alternating fit loop, prediction and linear export.
//! - [`eval`]: mention-level precision/recall/F1 under the IO scheme.
//!
//! With the default `parallel` feature the row-wise kernels run on rayon;
//! every reduction still happens in a fixed index order, so results are
//! bit-identical to the sequential build.

pub mod distance;
pub mod error;
pub mod estep;
pub mod eval;
pub mod init;
pub mod matrix;
pub mod mstep;
mod par;
pub mod pipeline;
pub mod subspace;
pub mod tags;

pub use crate::distance::{clustering_objective, pairwise_sq_dist};
pub use crate::error::{Error, Result};
pub use crate::estep::{
    bregman_project_ratio, bregman_project_simplex, contract_o_groups, hard_assign,
    hard_assign_ratio, soft_assign, soft_assign_ratio, BregmanOptions, BregmanOutcome,
    ContractedDistances, RatioBudget,
};
pub use crate::eval::{mention_f1, mentions, Mention, MentionScores, TaggedSequence};
pub use crate::init::{init_prototypes, ward_clusters, Dendrogram, Merge, WardClustering};
pub use crate::matrix::{AssignmentMatrix, Matrix};
pub use crate::mstep::update_centroids;
pub use crate::pipeline::{
    build_supervision_mask, fit, predict, to_linear_model, FitConfig, FitOutput, LinearModel,
    Model, TraceRow, Variant,
};
pub use crate::subspace::{
    compute_scatter, generalized_eigen, projection_dim, solve_projection, GeneralizedEigen,
    Projection, RidgePolicy, ScatterTriple,
};
pub use crate::tags::{Label, SupervisionMask, TagMap, O_TAG};
