//! Deterministic prototype initialization.
//!
//! Tags with one prototype start at the mean of their labeled rows. Tags with
//! several prototypes run greedy Ward agglomeration over their labeled rows
//! and cut the tree at the required cluster count. No random numbers are
//! drawn anywhere.

use crate::distance::sq_dist;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::tags::{Label, TagMap};

/// One agglomeration step. Clusters are identified by their smallest member row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub cluster_a: usize,
    pub cluster_b: usize,
    pub ward_cost: f64,
    pub new_size: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dendrogram {
    pub merges: Vec<Merge>,
    pub leaf_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WardClustering {
    /// `target x d`, ordered by each cluster's smallest member index.
    pub centroids: Matrix,
    /// Per input row, the index of its cluster in `centroids`.
    pub labels: Vec<usize>,
    pub dendrogram: Dendrogram,
}

/// Ward merge cost `|a| |b| / (|a| + |b|) * ||mean_a - mean_b||^2`.
pub fn ward_cost(size_a: usize, mean_a: &[f64], size_b: usize, mean_b: &[f64]) -> f64 {
    let (na, nb) = (size_a as f64, size_b as f64);
    na * nb / (na + nb) * sq_dist(mean_a, mean_b)
}

struct Cluster {
    members: Vec<usize>,
    mean: Vec<f64>,
}

fn mean_of(points: &Matrix, members: &[usize]) -> Vec<f64> {
    let mut mean = vec![0.0; points.cols()];
    for &i in members {
        for (m, &v) in mean.iter_mut().zip(points.row(i)) {
            *m += v;
        }
    }
    let n = members.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

/// Greedy Ward agglomeration of the rows of `points` down to `target` clusters.
///
/// Every step evaluates all pairs and merges the cheapest; ties go to the
/// lexicographically smallest `(min member of a, min member of b)`. Means are
/// recomputed from the members in ascending row order after each merge.
pub fn ward_clusters(points: &Matrix, target: usize) -> Result<WardClustering> {
    let m = points.rows();
    if target == 0 || target > m {
        return Err(Error::WardTarget { target, points: m });
    }
    // Kept sorted by smallest member, so pair order below is lexicographic.
    let mut clusters: Vec<Cluster> = (0..m)
        .map(|i| Cluster {
            members: vec![i],
            mean: points.row(i).to_vec(),
        })
        .collect();
    let mut dendrogram = Dendrogram {
        merges: Vec::with_capacity(m - target),
        leaf_count: m,
    };

    while clusters.len() > target {
        let mut best: Option<(usize, usize, f64)> = None;
        for a in 0..clusters.len() {
            for b in (a + 1)..clusters.len() {
                let (ca, cb) = (&clusters[a], &clusters[b]);
                let cost = ward_cost(ca.members.len(), &ca.mean, cb.members.len(), &cb.mean);
                if best.is_none_or(|(_, _, c)| cost < c) {
                    best = Some((a, b, cost));
                }
            }
        }
        let (a, b, cost) = best.expect("at least two clusters remain");
        let absorbed = clusters.remove(b);
        let keep = &mut clusters[a];
        dendrogram.merges.push(Merge {
            cluster_a: keep.members[0],
            cluster_b: absorbed.members[0],
            ward_cost: cost,
            new_size: keep.members.len() + absorbed.members.len(),
        });
        keep.members.extend(absorbed.members);
        keep.members.sort_unstable();
        keep.mean = mean_of(points, &keep.members);
    }

    let mut labels = vec![0; m];
    let mut centroids = Matrix::zeros(clusters.len(), points.cols());
    for (c, cluster) in clusters.iter().enumerate() {
        centroids.row_mut(c).copy_from_slice(&cluster.mean);
        for &i in &cluster.members {
            labels[i] = c;
        }
    }
    Ok(WardClustering {
        centroids,
        labels,
        dendrogram,
    })
}

/// Initial `k x d` prototypes from the labeled rows of `x`.
///
/// Prototypes of tag `t` receive the Ward centroids in ascending prototype
/// index order. Unlabeled rows are ignored.
pub fn init_prototypes(x: &Matrix, labels: &[Label], phi: &TagMap) -> Result<Matrix> {
    if labels.len() != x.rows() {
        return Err(Error::dims("init_prototypes", format!("{} labels", x.rows()), labels.len()));
    }
    let mut rows_by_tag = vec![Vec::new(); phi.num_tags()];
    for (i, label) in labels.iter().enumerate() {
        if let Some(t) = *label {
            rows_by_tag
                .get_mut(t)
                .ok_or(Error::InvalidLabel { row: i, label: t })?
                .push(i);
        }
    }
    let mut c = Matrix::zeros(phi.num_prototypes(), x.cols());
    for (t, rows) in rows_by_tag.iter().enumerate() {
        let protos = phi.prototypes_of(t);
        if rows.len() < protos.len() {
            return Err(Error::InsufficientLabels {
                tag: phi.tag_name(t).to_string(),
                needed: protos.len(),
                found: rows.len(),
            });
        }
        let members = x.select_rows(rows);
        let centroids = if protos.len() == 1 {
            Matrix::new(1, x.cols(), mean_of(&members, &(0..rows.len()).collect::<Vec<_>>()))?
        } else {
            ward_clusters(&members, protos.len())?.centroids
        };
        for (r, &j) in protos.iter().enumerate() {
            c.row_mut(j).copy_from_slice(centroids.row(r));
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_points_two_clusters() {
        let p = Matrix::from_rows(&[[0.0], [1.0], [10.0]]);
        let w = ward_clusters(&p, 2).unwrap();
        assert_eq!(w.centroids, Matrix::from_rows(&[[0.5], [10.0]]));
        assert_eq!(w.labels, vec![0, 0, 1]);
        assert_eq!(
            w.dendrogram.merges,
            vec![Merge {
                cluster_a: 0,
                cluster_b: 1,
                ward_cost: 0.5,
                new_size: 2
            }]
        );
    }

    #[test]
    fn target_extremes() {
        let p = Matrix::from_rows(&[[0.0, 1.0], [4.0, 1.0], [2.0, 7.0]]);
        let w = ward_clusters(&p, 3).unwrap();
        assert_eq!(w.centroids, p);
        assert!(w.dendrogram.merges.is_empty());

        let w = ward_clusters(&p, 1).unwrap();
        assert_eq!(w.centroids, Matrix::from_rows(&[[2.0, 3.0]]));
        assert_eq!(w.dendrogram.merges.len(), 2);
        assert_eq!(w.dendrogram.merges.last().unwrap().new_size, 3);
    }

    #[test]
    fn bad_targets() {
        let p = Matrix::zeros(2, 1);
        assert_eq!(ward_clusters(&p, 3), Err(Error::WardTarget { target: 3, points: 2 }));
        assert!(ward_clusters(&p, 0).is_err());
    }

    #[test]
    fn equal_costs_merge_lowest_pair() {
        let p = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]);
        let w = ward_clusters(&p, 3).unwrap();
        assert_eq!((w.dendrogram.merges[0].cluster_a, w.dendrogram.merges[0].cluster_b), (0, 1));
    }

    fn phi() -> TagMap {
        TagMap::with_counts(vec!["O".into(), "I-LOC".into()], &[2, 1]).unwrap()
    }

    #[test]
    fn prototypes_per_tag() {
        let x = Matrix::from_rows(&[[0.0], [5.0], [1.0], [7.0], [10.0], [99.0]]);
        let labels = [Some(0), Some(1), Some(0), Some(1), Some(0), None];
        let c = init_prototypes(&x, &labels, &phi()).unwrap();
        assert_eq!(c, Matrix::from_rows(&[[0.5], [10.0], [6.0]]));
    }

    #[test]
    fn exact_label_count_uses_rows_directly() {
        let x = Matrix::from_rows(&[[3.0], [1.0], [2.0]]);
        let labels = [Some(0), Some(0), Some(1)];
        let c = init_prototypes(&x, &labels, &phi()).unwrap();
        assert_eq!(c, Matrix::from_rows(&[[3.0], [1.0], [2.0]]));
    }

    #[test]
    fn missing_labels_named() {
        let x = Matrix::from_rows(&[[3.0], [1.0]]);
        let labels = [Some(0), Some(1)];
        assert_eq!(
            init_prototypes(&x, &labels, &phi()),
            Err(Error::InsufficientLabels {
                tag: "O".into(),
                needed: 2,
                found: 1
            })
        );
    }
}
