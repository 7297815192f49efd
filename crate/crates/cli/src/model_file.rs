//! Model and linear-export files.
//!
//! A model file is a sequence of sections, each introduced by an ASCII line:
//!
//! ```text
//! MODEL v1
//! SECTION centroids
//! <DMAT k x d>
//! SECTION projection        (omitted when no subspace was learned)
//! <DMAT d x p>
//! SECTION eigenvalues       (present exactly when projection is)
//! <DMAT 1 x p>
//! SECTION tags
//! <one tag name per line, index order>
//! SECTION tagmap
//! <one `index<TAB>tagname` line per prototype>
//! SECTION trace
//! iter,objective,row_sum_residual,ratio_residual
//! <one CSV row per round>
//! END
//! ```
//!
//! Trace values are written in Rust's shortest round-trip decimal form, so
//! reading a model back yields bit-identical numbers.
//!
//! A linear-export file is a `k x d` weight DMAT immediately followed by a
//! `1 x k` bias DMAT.

use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use protoclust::{LinearModel, Matrix, Model, Projection, TagMap, TraceRow};

use crate::dmat::{read_dmat_from, write_dmat_to};
use crate::error::{FormatError, Result};

const MODEL_MAGIC: &str = "MODEL v1";
pub const TRACE_HEADER: &str = "iter,objective,row_sum_residual,ratio_residual";

pub fn write_model(path: impl AsRef<Path>, model: &Model) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_model(model)?).map_err(FormatError::io(path))
}

pub fn read_model(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(FormatError::io(path))?;
    decode_model(&bytes)
}

pub fn encode_model(model: &Model) -> Result<Vec<u8>> {
    let mut w = Vec::new();
    writeln!(w, "{MODEL_MAGIC}")?;
    writeln!(w, "SECTION centroids")?;
    write_dmat_to(&mut w, &model.centroids)?;
    if let Some(p) = &model.projection {
        writeln!(w, "SECTION projection")?;
        write_dmat_to(&mut w, &p.u)?;
        writeln!(w, "SECTION eigenvalues")?;
        write_dmat_to(&mut w, &Matrix::new(1, p.eigenvalues.len(), p.eigenvalues.clone())?)?;
    }
    let phi = &model.tag_map;
    writeln!(w, "SECTION tags")?;
    for t in phi.tags() {
        writeln!(w, "{t}")?;
    }
    writeln!(w, "SECTION tagmap")?;
    for (j, &t) in phi.proto_tags().iter().enumerate() {
        writeln!(w, "{j}\t{}", phi.tag_name(t))?;
    }
    writeln!(w, "SECTION trace")?;
    w.write_all(format_trace(&model.trace).as_bytes())?;
    writeln!(w, "END")?;
    Ok(w)
}

/// The trace as CSV text, header included.
pub fn format_trace(trace: &[TraceRow]) -> String {
    let mut s = format!("{TRACE_HEADER}\n");
    for r in trace {
        s.push_str(&format!(
            "{},{:?},{:?},{:?}\n",
            r.iter, r.objective, r.row_sum_residual, r.ratio_residual
        ));
    }
    s
}

/// Line-oriented cursor over the model bytes that tracks line numbers for
/// error messages.
struct Cursor<'a> {
    rest: &'a [u8],
    line: usize,
}

impl<'a> Cursor<'a> {
    fn next_line(&mut self) -> Result<&'a str> {
        self.line += 1;
        let end = self.rest.iter().position(|&b| b == b'\n').ok_or_else(|| self.err("unexpected end of file"))?;
        let (line, rest) = self.rest.split_at(end);
        self.rest = &rest[1..];
        std::str::from_utf8(line).map_err(|_| self.err("line is not UTF-8"))
    }

    fn expect(&mut self, want: &str) -> Result<()> {
        let got = self.next_line()?;
        if got != want {
            return Err(self.err(&format!("expected `{want}`, found `{got}`")));
        }
        Ok(())
    }

    fn matrix(&mut self) -> Result<Matrix> {
        let mut r = self.rest;
        let m = read_dmat_from(&mut r)?;
        self.rest = r;
        // The DMAT header counts as one line; the binary payload does not.
        self.line += 1;
        Ok(m)
    }

    /// Text lines up to (not including) the next `SECTION` or `END` line.
    fn lines_until_section(&mut self) -> Result<Vec<&'a str>> {
        let mut out = Vec::new();
        loop {
            let peek = self.rest.split(|&b| b == b'\n').next().unwrap_or_default();
            if peek.starts_with(b"SECTION ") || peek == b"END" {
                return Ok(out);
            }
            out.push(self.next_line()?);
        }
    }

    fn err(&self, message: &str) -> FormatError {
        FormatError::Syntax {
            line: self.line,
            message: message.to_owned(),
        }
    }
}

pub fn decode_model(bytes: &[u8]) -> Result<Model> {
    let mut cur = Cursor { rest: bytes, line: 0 };
    cur.expect(MODEL_MAGIC)?;
    cur.expect("SECTION centroids")?;
    let centroids = cur.matrix()?;

    let mut section = cur.next_line()?;
    let mut projection = None;
    if section == "SECTION projection" {
        let u = cur.matrix()?;
        cur.expect("SECTION eigenvalues")?;
        let ev = cur.matrix()?;
        if ev.rows() != 1 || ev.cols() != u.cols() || u.rows() != centroids.cols() {
            return Err(cur.err("projection shape does not match centroids"));
        }
        projection = Some(Projection {
            u,
            eigenvalues: ev.into_vec(),
        });
        section = cur.next_line()?;
    }
    if section != "SECTION tags" {
        return Err(cur.err(&format!("expected `SECTION tags`, found `{section}`")));
    }
    let tags: Vec<String> = cur.lines_until_section()?.into_iter().map(str::to_owned).collect();

    cur.expect("SECTION tagmap")?;
    let first_tagmap_line = cur.line + 1;
    let mut proto_tag = Vec::new();
    for (offset, line) in cur.lines_until_section()?.into_iter().enumerate() {
        let bad = |m: &str| FormatError::Syntax {
            line: first_tagmap_line + offset,
            message: m.to_owned(),
        };
        let (idx, name) = line.split_once('\t').ok_or_else(|| bad("expected `index<TAB>tagname`"))?;
        if idx.parse::<usize>().ok() != Some(offset) {
            return Err(bad("prototype indices must run 0, 1, 2, ... in order"));
        }
        let t = tags.iter().position(|t| t == name).ok_or_else(|| FormatError::UnknownTag {
            line: first_tagmap_line + offset,
            name: name.to_owned(),
        })?;
        proto_tag.push(t);
    }
    let tag_map = TagMap::new(tags, proto_tag)?;
    if tag_map.num_prototypes() != centroids.rows() {
        return Err(cur.err("tag map and centroid count disagree"));
    }

    cur.expect("SECTION trace")?;
    cur.expect(TRACE_HEADER)?;
    let first_trace_line = cur.line + 1;
    let trace = cur
        .lines_until_section()?
        .into_iter()
        .enumerate()
        .map(|(offset, line)| parse_trace_row(line, first_trace_line + offset))
        .collect::<Result<Vec<_>>>()?;
    cur.expect("END")?;
    if !cur.rest.is_empty() {
        return Err(FormatError::TrailingData { extra: cur.rest.len() });
    }
    Ok(Model {
        centroids,
        projection,
        tag_map,
        trace,
    })
}

fn parse_trace_row(line: &str, lineno: usize) -> Result<TraceRow> {
    let bad = || FormatError::Syntax {
        line: lineno,
        message: format!("malformed trace row `{line}`"),
    };
    let f: Vec<&str> = line.split(',').collect();
    if f.len() != 4 {
        return Err(bad());
    }
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
    Ok(TraceRow {
        iter: f[0].parse().map_err(|_| bad())?,
        objective: num(f[1])?,
        row_sum_residual: num(f[2])?,
        ratio_residual: num(f[3])?,
    })
}

pub fn write_linear(path: impl AsRef<Path>, lm: &LinearModel) -> Result<()> {
    let path = path.as_ref();
    let mut w = Vec::new();
    write_dmat_to(&mut w, &lm.weights)?;
    write_dmat_to(&mut w, &Matrix::new(1, lm.bias.len(), lm.bias.clone())?)?;
    fs::write(path, w).map_err(FormatError::io(path))
}

pub fn read_linear(path: impl AsRef<Path>) -> Result<LinearModel> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(FormatError::io(path))?;
    let mut r: &[u8] = &bytes;
    let weights = read_dmat_from(&mut r)?;
    let bias = read_dmat_from(&mut r)?;
    if bias.rows() != 1 || bias.cols() != weights.rows() {
        return Err(FormatError::Config(format!(
            "bias has shape {:?}, expected (1, {})",
            bias.shape(),
            weights.rows()
        )));
    }
    if !r.fill_buf()?.is_empty() {
        return Err(FormatError::TrailingData { extra: r.len() });
    }
    Ok(LinearModel {
        weights,
        bias: bias.into_vec(),
    })
}
