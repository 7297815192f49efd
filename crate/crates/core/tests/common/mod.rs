#![allow(dead_code)]

use proptest::prelude::*;
use protoclust::{Matrix, SupervisionMask, TagMap};

pub fn matrix(rows: usize, cols: usize, lo: f64, hi: f64) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(lo..hi, rows * cols).prop_map(move |v| Matrix::new(rows, cols, v).unwrap())
}

/// Random mask whose rows each allow at least one prototype.
pub fn mask(rows: usize, cols: usize) -> impl Strategy<Value = SupervisionMask> {
    (prop::collection::vec(any::<bool>(), rows * cols), prop::collection::vec(0..cols, rows)).prop_map(
        move |(mut bits, fallback)| {
            for (i, &j) in fallback.iter().enumerate() {
                if !bits[i * cols..(i + 1) * cols].contains(&true) {
                    bits[i * cols + j] = true;
                }
            }
            SupervisionMask::new(rows, cols, bits).unwrap()
        },
    )
}

/// Tag map with `n_o` O prototypes at random positions among `k`, the rest
/// split over up to `k - n_o` entity tags.
pub fn tag_map(k: usize, n_o: usize) -> impl Strategy<Value = TagMap> {
    (Just(k), Just(n_o), Just((0..k).collect::<Vec<_>>()).prop_shuffle(), prop::collection::vec(0..k, k))
        .prop_map(|(k, n_o, order, picks)| {
            let n_tags = 1 + picks[0] % (k - n_o);
            let mut proto_tag = vec![0; k];
            for (pos, &j) in order[n_o..].iter().enumerate() {
                proto_tag[j] = if pos < n_tags { pos + 1 } else { 1 + picks[pos] % n_tags };
            }
            let tags = std::iter::once("O".to_owned())
                .chain((1..=n_tags).map(|t| format!("I-{t}")))
                .collect();
            TagMap::new(tags, proto_tag).unwrap()
        })
}

/// `(must be O, cannot be O)` row counts.
pub fn forced(z: &SupervisionMask, phi: &TagMap) -> (usize, usize) {
    let mut must = 0;
    let mut cannot = 0;
    for i in 0..z.rows() {
        let allowed: Vec<usize> = (0..z.cols()).filter(|&j| z.allowed(i, j)).collect();
        must += usize::from(allowed.iter().all(|&j| phi.is_o(j)));
        cannot += usize::from(!allowed.iter().any(|&j| phi.is_o(j)));
    }
    (must, cannot)
}

pub fn o_mass(a: &Matrix, phi: &TagMap) -> f64 {
    (0..a.rows())
        .map(|i| phi.o_prototypes().iter().map(|&j| a[(i, j)]).sum::<f64>())
        .sum()
}

pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
