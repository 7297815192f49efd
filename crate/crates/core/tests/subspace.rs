mod common;

use common::matrix;
use proptest::prelude::*;
use protoclust::{
    compute_scatter, generalized_eigen, solve_projection, update_centroids, Matrix, RidgePolicy,
};

fn soft_weights(n: usize, k: usize) -> impl Strategy<Value = Matrix> {
    matrix(n, k, 0.01, 1.0).prop_map(|mut m| {
        for i in 0..m.rows() {
            let r = m.row_mut(i);
            let s: f64 = r.iter().sum();
            r.iter_mut().for_each(|v| *v /= s);
        }
        m
    })
}

/// Scatter triple from random data, soft weights and optimal centroids.
fn scatter_case() -> impl Strategy<Value = (Matrix, Matrix, Matrix)> {
    (2..60usize, 1..6usize, 1..7usize).prop_flat_map(|(n, k, d)| (matrix(n, d, -4.0, 4.0), soft_weights(n, k)))
        .prop_map(|(x, a)| {
            let c = update_centroids(&x, &a, &Matrix::zeros(a.cols(), x.cols())).unwrap();
            (x, a, c)
        })
}

fn s_orthonormalize(v: &Matrix, s: &Matrix) -> Matrix {
    let (d, p) = v.shape();
    let mut v = v.clone();
    let inner = |a: &[f64], b: &[f64]| {
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                acc += a[i] * s[(i, j)] * b[j];
            }
        }
        acc
    };
    for _ in 0..2 {
        for j in 0..p {
            for i in 0..j {
                let proj = inner(&v.column(i), &v.column(j));
                for r in 0..d {
                    let vi = v[(r, i)];
                    v[(r, j)] -= proj * vi;
                }
            }
            let norm = inner(&v.column(j), &v.column(j)).sqrt();
            for r in 0..d {
                v[(r, j)] /= norm;
            }
        }
    }
    v
}

fn quad_trace(u: &Matrix, s: &Matrix) -> f64 {
    u.transpose().matmul(s).unwrap().matmul(u).unwrap().trace()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scatter_traces_add_up((x, a, c) in scatter_case()) {
        let s = compute_scatter(&x, &a, &c).unwrap();
        let (t, w, b) = (s.s_t.trace(), s.s_w.trace(), s.s_b.trace());
        prop_assert!((t - w - b).abs() <= 1e-8 * t.abs().max(1e-300));
        prop_assert!(s.s_t.sub(&s.s_w).unwrap().sub(&s.s_b).unwrap().frobenius_norm() <= 1e-8 * s.s_t.frobenius_norm());
    }

    #[test]
    fn eigenvalues_in_unit_interval_and_complementary((x, a, c) in scatter_case()) {
        let s = compute_scatter(&x, &a, &c).unwrap();
        let ridge = RidgePolicy::default();
        let w = generalized_eigen(&s.s_w, &s.s_t, &ridge).unwrap();
        prop_assume!(w.ridge == 0.0);
        let b = generalized_eigen(&s.s_b, &s.s_t, &ridge).unwrap();
        let d = w.values.len();
        for i in 0..d {
            prop_assert!(w.values[i] >= -1e-8 && w.values[i] <= 1.0 + 1e-8);
            prop_assert!((b.values[d - 1 - i] - (1.0 - w.values[i])).abs() <= 1e-8);
        }
    }

    #[test]
    fn projection_minimizes_dispersion(
        (x, a, c) in scatter_case(),
        p_pick in any::<prop::sample::Index>(),
        trials in prop::collection::vec(matrix(6, 6, -1.0, 1.0), 100),
    ) {
        let s = compute_scatter(&x, &a, &c).unwrap();
        let d = x.cols();
        let p = 1 + p_pick.index(d);
        let eig = generalized_eigen(&s.s_w, &s.s_t, &RidgePolicy::default()).unwrap();
        prop_assume!(eig.ridge == 0.0);
        let proj = eig.truncate(p);
        let best = quad_trace(&proj.u, &s.s_w);
        let expected: f64 = proj.eigenvalues.iter().sum();
        prop_assert!((best - expected).abs() <= 1e-8 * expected.abs().max(1.0));
        for t in &trials {
            let v = s_orthonormalize(&Matrix::from_rows(&(0..d).map(|i| t.row(i)[..p].to_vec()).collect::<Vec<_>>()), &s.s_t);
            prop_assume!(v.is_finite());
            prop_assert!(quad_trace(&v, &s.s_w) >= best - 1e-9 * best.abs().max(1.0));
        }
    }

    #[test]
    fn signs_are_canonical((x, a, c) in scatter_case()) {
        let s = compute_scatter(&x, &a, &c).unwrap();
        let e = generalized_eigen(&s.s_w, &s.s_t, &RidgePolicy::default()).unwrap();
        for j in 0..e.vectors.cols() {
            let col = e.vectors.column(j);
            let big = col.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
            prop_assert!(big > 0.0);
        }
    }
}

#[test]
fn same_input_same_bits() {
    let x = Matrix::from_rows(&[[0.0, 1.0, 2.0], [1.0, 0.5, -1.0], [3.0, 3.0, 0.0], [-2.0, 1.0, 1.0], [0.5, 0.5, 0.5]]);
    let a = Matrix::from_rows(&[[0.7, 0.3], [0.2, 0.8], [0.5, 0.5], [0.9, 0.1], [0.4, 0.6]]);
    let c = update_centroids(&x, &a, &Matrix::zeros(2, 3)).unwrap();
    let s = compute_scatter(&x, &a, &c).unwrap();
    let first = solve_projection(&s.s_w, &s.s_t, 1, &RidgePolicy::default()).unwrap();
    let second = solve_projection(&s.s_w, &s.s_t, 1, &RidgePolicy::default()).unwrap();
    assert_eq!(first, second);
}
