//! `DMAT` dense matrix files.
//!
//! An ASCII header line `DMAT <rows> <cols>\n` followed by `rows * cols`
//! little-endian binary64 values in row-major order, with no padding.
//! Several matrices may be concatenated in one stream (the model and
//! linear-export files do this), so the stream readers consume exactly one
//! matrix and leave the rest untouched.

use std::fs;
use std::io::{BufRead, Read, Write};
use std::path::Path;

use protoclust::Matrix;

use crate::error::{FormatError, Result};

const MAGIC: &str = "DMAT";
/// Longest header we are willing to scan before calling it garbage.
const MAX_HEADER: usize = 64;

pub fn write_dmat(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::with_capacity(16 + 8 * m.as_slice().len());
    write_dmat_to(&mut buf, m)?;
    fs::write(path, buf).map_err(FormatError::io(path))
}

/// Reads a file holding exactly one matrix.
pub fn read_dmat(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(FormatError::io(path))?;
    let mut rest = bytes.as_slice();
    let m = read_dmat_from(&mut rest)?;
    if !rest.is_empty() {
        return Err(FormatError::TrailingData { extra: rest.len() });
    }
    Ok(m)
}

pub fn write_dmat_to<W: Write>(w: &mut W, m: &Matrix) -> Result<()> {
    check_finite(m.as_slice(), m.cols())?;
    write!(w, "{MAGIC} {} {}\n", m.rows(), m.cols())?;
    for v in m.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_dmat_from<R: BufRead>(r: &mut R) -> Result<Matrix> {
    let (rows, cols) = read_header(r)?;
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| FormatError::BadMagic {
            found: format!("{MAGIC} {rows} {cols}"),
        })?;
    let mut payload = Vec::with_capacity(expected.min(1 << 24));
    let found = r.take(expected as u64).read_to_end(&mut payload)?;
    if found < expected {
        return Err(FormatError::Truncated { expected, found });
    }
    let data: Vec<f64> = payload
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("chunk of 8")))
        .collect();
    check_finite(&data, cols)?;
    Ok(Matrix::new(rows, cols, data)?)
}

fn read_header<R: BufRead>(r: &mut R) -> Result<(usize, usize)> {
    let mut line = Vec::new();
    r.take(MAX_HEADER as u64).read_until(b'\n', &mut line)?;
    let text = String::from_utf8_lossy(&line).into_owned();
    let bad = || FormatError::BadMagic { found: text.clone() };
    let body = text.strip_suffix('\n').ok_or_else(bad)?;
    let mut parts = body.split(' ');
    if parts.next() != Some(MAGIC) {
        return Err(bad());
    }
    let mut dim = || -> Result<usize> {
        let p = parts.next().ok_or_else(bad)?;
        // Plain decimal only: no sign, no padding.
        if p.is_empty() || !p.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        p.parse().map_err(|_| bad())
    };
    let rows = dim()?;
    let cols = dim()?;
    if parts.next().is_some() {
        return Err(bad());
    }
    Ok((rows, cols))
}

fn check_finite(data: &[f64], cols: usize) -> Result<()> {
    match data.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(FormatError::NonFinite {
            row: i / cols,
            col: i % cols,
            value: data[i],
        }),
        None => Ok(()),
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    fn encode(m: &Matrix) -> Vec<u8> {
        let mut buf = Vec::new();
        write_dmat_to(&mut buf, m).unwrap();
        buf
    }

    #[test]
    fn forty_two() {
        let bytes = encode(&Matrix::from_rows(&[[42.0]]));
        let mut expected = b"DMAT 1 1\n".to_vec();
        expected.extend_from_slice(&[0, 0, 0, 0, 0, 0, 0x45, 0x40]);
        assert_eq!(bytes, expected);
    }

    #[test]
    fn short_payload() {
        let mut bytes = b"DMAT 2 2\n".to_vec();
        for v in [1.0f64, 2.0, 3.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let err = read_dmat_from(&mut bytes.as_slice()).unwrap_err();
        assert!(matches!(err, FormatError::Truncated { expected: 32, found: 24 }));
    }

    #[test]
    fn header_variants_rejected() {
        for h in ["DMAX 1 1\n", "DMAT 1\n", "DMAT 1 1 1\n", "DMAT -1 1\n", "DMAT  1 1\n", "DMAT 1 1"] {
            let err = read_dmat_from(&mut h.as_bytes()).unwrap_err();
            assert!(matches!(err, FormatError::BadMagic { .. }), "{h:?}");
        }
    }

    #[test]
    fn non_finite_rejected_both_ways() {
        let m = Matrix::from_rows(&[[1.0, f64::NAN]]);
        assert!(matches!(
            write_dmat_to(&mut Vec::new(), &m),
            Err(FormatError::NonFinite { row: 0, col: 1, .. })
        ));
        let mut bytes = b"DMAT 1 1\n".to_vec();
        bytes.extend_from_slice(&f64::INFINITY.to_le_bytes());
        assert!(matches!(
            read_dmat_from(&mut bytes.as_slice()),
            Err(FormatError::NonFinite { .. })
        ));
    }

    #[test]
    fn empty_matrix() {
        let m = Matrix::zeros(0, 3);
        let bytes = encode(&m);
        assert_eq!(bytes, b"DMAT 0 3\n");
        assert_eq!(read_dmat_from(&mut bytes.as_slice()).unwrap(), m);
    }
}
