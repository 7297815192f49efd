//! Tag map (prototype -> tag) and the supervision mask built from partial labels.

use crate::error::{Error, Result};

/// Name of the outside tag. It always sits at tag index 0.
pub const O_TAG: &str = "O";

/// A per-row label: `Some(tag_index)` for annotated rows, `None` for unlabeled.
pub type Label = Option<usize>;

/// Maps each prototype to a tag and keeps the inverse lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TagMap {
    tags: Vec<String>,
    proto_tag: Vec<usize>,
    by_tag: Vec<Vec<usize>>,
    is_o: Vec<bool>,
}

impl TagMap {
    pub fn new(tags: Vec<String>, proto_tag: Vec<usize>) -> Result<Self> {
        if tags.first().map(String::as_str) != Some(O_TAG) {
            return Err(Error::InvalidTagMap(format!(
                "tag 0 must be {O_TAG:?}, got {:?}",
                tags.first()
            )));
        }
        for (i, t) in tags.iter().enumerate() {
            if t.is_empty() || t.chars().any(char::is_whitespace) {
                return Err(Error::InvalidTagMap(format!("bad tag name {t:?}")));
            }
            if tags[..i].contains(t) {
                return Err(Error::InvalidTagMap(format!("duplicate tag {t:?}")));
            }
        }
        let mut by_tag = vec![Vec::new(); tags.len()];
        for (j, &t) in proto_tag.iter().enumerate() {
            if t >= tags.len() {
                return Err(Error::InvalidTagMap(format!(
                    "prototype {j} maps to unknown tag index {t}"
                )));
            }
            by_tag[t].push(j);
        }
        if let Some(t) = by_tag.iter().position(Vec::is_empty) {
            return Err(Error::InvalidTagMap(format!(
                "tag {:?} owns no prototype",
                tags[t]
            )));
        }
        let is_o = proto_tag.iter().map(|&t| t == 0).collect();
        Ok(TagMap {
            tags,
            proto_tag,
            by_tag,
            is_o,
        })
    }

    /// Contiguous prototype blocks: tag `t` owns `counts[t]` consecutive indices.
    pub fn with_counts(tags: Vec<String>, counts: &[usize]) -> Result<Self> {
        if tags.len() != counts.len() {
            return Err(Error::InvalidTagMap(format!(
                "{} tags but {} prototype counts",
                tags.len(),
                counts.len()
            )));
        }
        let proto_tag = counts
            .iter()
            .enumerate()
            .flat_map(|(t, &c)| std::iter::repeat_n(t, c))
            .collect();
        TagMap::new(tags, proto_tag)
    }

    /// `O` with `o_prototypes` prototypes followed by one prototype per entity tag.
    pub fn io_scheme<S: AsRef<str>>(entity_tags: &[S], o_prototypes: usize) -> Result<Self> {
        let mut tags = vec![O_TAG.to_string()];
        tags.extend(entity_tags.iter().map(|s| s.as_ref().to_string()));
        let mut counts = vec![1; tags.len()];
        counts[0] = o_prototypes;
        TagMap::with_counts(tags, &counts)
    }

    pub fn tags(&self) -> &[String] {
        &self.tags
    }

    pub fn num_tags(&self) -> usize {
        self.tags.len()
    }

    /// Total number of prototypes `k`.
    pub fn num_prototypes(&self) -> usize {
        self.proto_tag.len()
    }

    pub fn tag_name(&self, t: usize) -> &str {
        &self.tags[t]
    }

    pub fn tag_index(&self, name: &str) -> Option<usize> {
        self.tags.iter().position(|t| t == name)
    }

    /// The tag owning prototype `j`.
    pub fn tag_of(&self, j: usize) -> usize {
        self.proto_tag[j]
    }

    pub fn proto_tags(&self) -> &[usize] {
        &self.proto_tag
    }

    /// Ascending prototype indices owned by tag `t`.
    pub fn prototypes_of(&self, t: usize) -> &[usize] {
        &self.by_tag[t]
    }

    pub fn o_prototypes(&self) -> &[usize] {
        &self.by_tag[0]
    }

    #[inline]
    pub fn is_o(&self, j: usize) -> bool {
        self.is_o[j]
    }
}

/// Binary `n x k` matrix of allowed prototypes per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupervisionMask {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl SupervisionMask {
    pub fn new(rows: usize, cols: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != rows * cols {
            return Err(Error::dims(
                "SupervisionMask::new",
                rows * cols,
                bits.len(),
            ));
        }
        let mask = SupervisionMask { rows, cols, bits };
        if let Some(row) = (0..rows).find(|&i| !mask.row(i).contains(&true)) {
            return Err(Error::EmptyMaskRow { row });
        }
        Ok(mask)
    }

    pub fn all_ones(rows: usize, cols: usize) -> Self {
        SupervisionMask {
            rows,
            cols,
            bits: vec![true; rows * cols],
        }
    }

    /// Labeled rows may only use their tag's prototypes; unlabeled rows are free.
    pub fn from_labels(labels: &[Label], phi: &TagMap) -> Result<Self> {
        let k = phi.num_prototypes();
        let mut bits = vec![false; labels.len() * k];
        for (i, label) in labels.iter().enumerate() {
            let row = &mut bits[i * k..(i + 1) * k];
            match *label {
                None => row.fill(true),
                Some(t) if t < phi.num_tags() => {
                    for &j in phi.prototypes_of(t) {
                        row[j] = true;
                    }
                }
                Some(t) => return Err(Error::InvalidLabel { row: i, label: t }),
            }
        }
        Ok(SupervisionMask {
            rows: labels.len(),
            cols: k,
            bits,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn allowed(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[bool] {
        &self.bits[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_count(&self, i: usize) -> usize {
        self.row(i).iter().filter(|&&b| b).count()
    }

    pub(crate) fn check_shape(&self, op: &'static str, rows: usize, cols: usize) -> Result<()> {
        if (self.rows, self.cols) != (rows, cols) {
            return Err(Error::dims(
                op,
                format!("mask {rows}x{cols}"),
                format!("{}x{}", self.rows, self.cols),
            ));
        }
        Ok(())
    }
}
