//! Exact-match mention scoring under the IO scheme.
//!
//! A mention is a maximal run of identical non-`O` tags inside one sequence.

use crate::error::{Error, Result};

/// Tag index of `O` in every tag inventory.
const O: usize = 0;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TaggedSequence {
    pub tokens: Vec<String>,
    pub tags: Vec<usize>,
}

impl TaggedSequence {
    /// Sequence without token strings, only tags.
    pub fn from_tags(tags: Vec<usize>) -> Self {
        TaggedSequence {
            tokens: Vec::new(),
            tags,
        }
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }
}

/// Inclusive token span `[start, end]` with its tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mention {
    pub start: usize,
    pub end: usize,
    pub tag: usize,
}

pub fn mentions(tags: &[usize]) -> Vec<Mention> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < tags.len() {
        if tags[i] == O {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < tags.len() && tags[i + 1] == tags[start] {
            i += 1;
        }
        out.push(Mention {
            start,
            end: i,
            tag: tags[start],
        });
        i += 1;
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MentionScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matched: usize,
    pub gold: usize,
    pub predicted: usize,
}

/// Micro-averaged exact-match precision, recall and F1.
///
/// With no mention on either side all three scores are 1; otherwise an empty
/// denominator yields 0.
pub fn mention_f1(gold: &[TaggedSequence], pred: &[TaggedSequence]) -> Result<MentionScores> {
    if gold.len() != pred.len() {
        return Err(Error::dims("mention_f1", format!("{} sequences", gold.len()), pred.len()));
    }
    let (mut matched, mut n_gold, mut n_pred) = (0, 0, 0);
    for (s, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.len() != p.len() {
            return Err(Error::dims(
                "mention_f1",
                format!("sequence {s} with {} tags", g.len()),
                p.len(),
            ));
        }
        let gm = mentions(&g.tags);
        let pm = mentions(&p.tags);
        n_gold += gm.len();
        n_pred += pm.len();
        // Both lists are sorted by start and non-overlapping.
        matched += pm.iter().filter(|m| gm.binary_search(m).is_ok()).count();
    }
    let (precision, recall) = if n_gold == 0 && n_pred == 0 {
        (1.0, 1.0)
    } else {
        (ratio(matched, n_pred), ratio(matched, n_gold))
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(MentionScores {
        precision,
        recall,
        f1,
        matched,
        gold: n_gold,
        predicted: n_pred,
    })
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}
