//! Text files for tag inventories and per-row labels.
//!
//! A tags file lists one tag name per line, `O` first. A labels file has one
//! line per row holding a tag name or `-` for an unlabeled row; blank lines
//! separate sentences.

use std::fs;
use std::path::Path;

use protoclust::{Label, TagMap, TaggedSequence};

use crate::error::{FormatError, Result};

pub const UNLABELED: &str = "-";

/// Rows of a labels file together with its sentence segmentation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabelFile {
    pub labels: Vec<Label>,
    /// Lengths of the blank-line separated blocks, in order; they sum to
    /// `labels.len()`.
    pub sentence_lengths: Vec<usize>,
}

impl LabelFile {
    /// One sentence spanning every row.
    pub fn single(labels: Vec<Label>) -> Self {
        let sentence_lengths = if labels.is_empty() { vec![] } else { vec![labels.len()] };
        LabelFile { labels, sentence_lengths }
    }

    /// Splits into tagged sentences; every row must carry a label.
    pub fn sequences(&self) -> Result<Vec<TaggedSequence>> {
        let mut out = Vec::with_capacity(self.sentence_lengths.len());
        let mut start = 0;
        for &len in &self.sentence_lengths {
            let mut tags = Vec::with_capacity(len);
            for (i, l) in self.labels[start..start + len].iter().enumerate() {
                tags.push(l.ok_or_else(|| FormatError::Syntax {
                    line: self.line_of(start + i),
                    message: "unlabeled row where a tag is required".into(),
                })?);
            }
            out.push(TaggedSequence::from_tags(tags));
            start += len;
        }
        Ok(out)
    }

    /// Re-segments the rows to match `lengths` (which must cover them exactly).
    pub fn with_segmentation(mut self, lengths: &[usize]) -> Result<Self> {
        let total: usize = lengths.iter().sum();
        if total != self.labels.len() {
            return Err(FormatError::Config(format!(
                "segmentation covers {total} rows but the file has {}",
                self.labels.len()
            )));
        }
        self.sentence_lengths = lengths.to_vec();
        Ok(self)
    }

    /// 1-based line of row `i` in the written file.
    fn line_of(&self, row: usize) -> usize {
        let mut seen = 0;
        for (s, &len) in self.sentence_lengths.iter().enumerate() {
            if row < seen + len {
                return row + s + 1;
            }
            seen += len;
        }
        row + self.sentence_lengths.len() + 1
    }
}

pub fn read_tags(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(FormatError::io(path))?;
    Ok(parse_tags(&text))
}

pub fn parse_tags(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect()
}

pub fn write_tags(path: impl AsRef<Path>, tags: &[String]) -> Result<()> {
    let path = path.as_ref();
    let mut text = String::new();
    for t in tags {
        text.push_str(t);
        text.push('\n');
    }
    fs::write(path, text).map_err(FormatError::io(path))
}

pub fn read_labels(path: impl AsRef<Path>, tag_map: &TagMap) -> Result<LabelFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(FormatError::io(path))?;
    parse_labels(&text, tag_map)
}

pub fn parse_labels(text: &str, tag_map: &TagMap) -> Result<LabelFile> {
    let mut file = LabelFile::default();
    let mut current = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            if current > 0 {
                file.sentence_lengths.push(current);
                current = 0;
            }
            continue;
        }
        let label = if line == UNLABELED {
            None
        } else {
            Some(tag_map.tag_index(line).ok_or_else(|| FormatError::UnknownTag {
                line: idx + 1,
                name: line.to_owned(),
            })?)
        };
        file.labels.push(label);
        current += 1;
    }
    if current > 0 {
        file.sentence_lengths.push(current);
    }
    Ok(file)
}

pub fn write_labels(path: impl AsRef<Path>, file: &LabelFile, tag_map: &TagMap) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_labels(file, tag_map)).map_err(FormatError::io(path))
}

pub fn format_labels(file: &LabelFile, tag_map: &TagMap) -> String {
    let mut text = String::new();
    let mut start = 0;
    for (s, &len) in file.sentence_lengths.iter().enumerate() {
        if s > 0 {
            text.push('\n');
        }
        for l in &file.labels[start..start + len] {
            text.push_str(l.map_or(UNLABELED, |t| tag_map.tag_name(t)));
            text.push('\n');
        }
        start += len;
    }
    text
}
