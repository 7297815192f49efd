//! Seeded synthetic corpora standing in for encoder embeddings.
//!
//! Everything is drawn from one SplitMix64 stream (Steele, Lea and Flood,
//! 2014) seeded with `seed`, in this order:
//!
//! 1. Gold tags. Row counts are fixed first: `n = n_per_tag * tags`,
//!    `n_O = round(o_fraction * n)`, and the remaining rows are shared
//!    evenly by the entity tags, the lowest tag indices taking one extra row
//!    each while a remainder is left. The list of tags in index order is then
//!    shuffled with Fisher-Yates (`i` from `n - 1` down to 1, swap with
//!    `bounded(i + 1)`).
//! 2. Features, row by row and column by column: `mean + noise_std * g`
//!    where `g` is the sum of twelve `uniform()` draws minus 6 (an
//!    Irwin-Hall approximation to a standard normal that only needs exact
//!    IEEE additions, so every platform produces the same bits).
//! 3. Labeled rows: a partial Fisher-Yates over `0..n` (`i` from 0 up,
//!    swap with `i + bounded(n - i)`) picks `round(label_fraction * n)`
//!    rows, which keep their gold tag.
//!
//! `uniform()` is `(next >> 11) * 2^-53` and `bounded(m)` is the high 64
//! bits of `next * m`. `round` rounds halves away from zero. Rows are cut
//! into sentences of `sentence_len` consecutive rows, the last one possibly
//! shorter.

use serde::Deserialize;

use protoclust::{Label, Matrix, O_TAG};

use crate::error::{FormatError, Result};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_per_tag: usize,
    pub dim: usize,
    /// Tag names, `O` first. Defaults to `O, I-T1, I-T2, ...` sized by
    /// `tag_means`.
    #[serde(default)]
    pub tags: Option<Vec<String>>,
    /// One mean vector per tag, in tag order.
    pub tag_means: Vec<Vec<f64>>,
    pub noise_std: f64,
    pub o_fraction: f64,
    pub label_fraction: f64,
    #[serde(default = "default_sentence_len")]
    pub sentence_len: usize,
}

fn default_sentence_len() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub tags: Vec<String>,
    pub x: Matrix,
    pub labels: Vec<Label>,
    pub gold: Vec<usize>,
    pub sentence_lengths: Vec<usize>,
}

impl SynthConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| FormatError::Config(e.to_string()))
    }

    pub fn tag_names(&self) -> Vec<String> {
        match &self.tags {
            Some(t) => t.clone(),
            None => std::iter::once(O_TAG.to_owned())
                .chain((1..self.tag_means.len()).map(|i| format!("I-T{i}")))
                .collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(FormatError::Config(m));
        let tags = self.tag_names();
        if tags.len() < 2 {
            return bad("need O and at least one entity tag".into());
        }
        if tags.len() != self.tag_means.len() {
            return bad(format!("{} tags but {} mean vectors", tags.len(), self.tag_means.len()));
        }
        if tags[0] != O_TAG {
            return bad(format!("first tag must be {O_TAG}"));
        }
        if let Some(m) = self.tag_means.iter().find(|m| m.len() != self.dim) {
            return bad(format!("mean vector of length {} for dim {}", m.len(), self.dim));
        }
        if self.tag_means.iter().flatten().any(|v| !v.is_finite()) {
            return bad("tag means must be finite".into());
        }
        if !(self.noise_std > 0.0 && self.noise_std.is_finite()) {
            return bad(format!("noise_std must be positive, got {}", self.noise_std));
        }
        for (name, f) in [("o_fraction", self.o_fraction), ("label_fraction", self.label_fraction)] {
            if !(0.0..=1.0).contains(&f) {
                return bad(format!("{name} must lie in [0, 1], got {f}"));
            }
        }
        if self.sentence_len == 0 {
            return bad("sentence_len must be positive".into());
        }
        Ok(())
    }

    /// Gold row count per tag.
    pub fn tag_counts(&self) -> Vec<usize> {
        let t = self.tag_means.len();
        let n = self.n_per_tag * t;
        let n_o = round_count(self.o_fraction, n);
        let rest = n - n_o;
        let (share, extra) = (rest / (t - 1), rest % (t - 1));
        std::iter::once(n_o)
            .chain((0..t - 1).map(|i| share + usize::from(i < extra)))
            .collect()
    }
}

/// `round(f * n)` with halves away from zero, clamped to `[0, n]`.
fn round_count(f: f64, n: usize) -> usize {
    ((f * n as f64).round() as usize).min(n)
}

/// SplitMix64 generator.
#[derive(Debug, Clone)]
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn bounded(&mut self, m: usize) -> usize {
        ((u128::from(self.next_u64()) * m as u128) >> 64) as usize
    }

    pub fn gaussian(&mut self) -> f64 {
        let mut s = 0.0;
        for _ in 0..12 {
            s += self.uniform();
        }
        s - 6.0
    }
}

pub fn gen_synth(cfg: &SynthConfig) -> Result<SynthData> {
    cfg.validate()?;
    let mut rng = SplitMix64::new(cfg.seed);

    let mut gold: Vec<usize> = cfg
        .tag_counts()
        .iter()
        .enumerate()
        .flat_map(|(t, &c)| std::iter::repeat_n(t, c))
        .collect();
    let n = gold.len();
    for i in (1..n).rev() {
        let j = rng.bounded(i + 1);
        gold.swap(i, j);
    }

    let mut data = Vec::with_capacity(n * cfg.dim);
    for &t in &gold {
        for &m in &cfg.tag_means[t] {
            data.push(m + cfg.noise_std * rng.gaussian());
        }
    }
    let x = Matrix::new(n, cfg.dim, data)?;

    let keep = round_count(cfg.label_fraction, n);
    let mut order: Vec<usize> = (0..n).collect();
    for i in 0..keep {
        let j = i + rng.bounded(n - i);
        order.swap(i, j);
    }
    let mut labels = vec![None; n];
    for &i in &order[..keep] {
        labels[i] = Some(gold[i]);
    }

    let sentence_lengths = (0..n)
        .step_by(cfg.sentence_len)
        .map(|s| cfg.sentence_len.min(n - s))
        .collect();
    Ok(SynthData {
        tags: cfg.tag_names(),
        x,
        labels,
        gold,
        sentence_lengths,
    })
}
