//! Matrix Market coordinate files and plain-text vectors.
//!
//! Symmetric matrices are written as `coordinate real symmetric` with the
//! lower triangle in column-major order and 1-based indices. Values use the
//! shortest representation that parses back to the same `f64`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::{DenseMatrix, SparsityPattern, SymmetricSparseMatrix};

pub const SYMMETRIC_HEADER: &str = "%%MatrixMarket matrix coordinate real symmetric";
pub const GENERAL_HEADER: &str = "%%MatrixMarket matrix coordinate real general";

pub fn format_symmetric(q: &SymmetricSparseMatrix) -> String {
    let mut out = String::with_capacity(32 * q.nnz() + 64);
    let _ = writeln!(out, "{SYMMETRIC_HEADER}");
    let _ = writeln!(out, "{} {} {}", q.n(), q.n(), q.nnz());
    write_entries(&mut out, q.pattern(), q.values());
    out
}

/// A lower-triangular matrix stored on `pattern` (for example a Cholesky
/// factor), written as a general coordinate matrix.
pub fn format_lower(pattern: &SparsityPattern, values: &[f64]) -> String {
    let mut out = String::with_capacity(32 * values.len() + 64);
    let _ = writeln!(out, "{GENERAL_HEADER}");
    let _ = writeln!(out, "{} {} {}", pattern.n(), pattern.n(), pattern.nnz());
    write_entries(&mut out, pattern, values);
    out
}

fn write_entries(out: &mut String, pattern: &SparsityPattern, values: &[f64]) {
    for j in 0..pattern.n() {
        for p in pattern.col_range(j) {
            let _ = writeln!(out, "{} {} {:?}", pattern.row_idx()[p] + 1, j + 1, values[p]);
        }
    }
}

/// Reads a `coordinate real symmetric` matrix. Entries given in the upper
/// triangle are mirrored; duplicates are summed.
pub fn parse_symmetric(text: &str) -> Result<SymmetricSparseMatrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or(Error::Parse { line: 1, msg: "empty file".into() })?;
    let fields: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    let expected = ["%%matrixmarket", "matrix", "coordinate", "real", "symmetric"];
    if fields.len() != 5 || fields.iter().zip(expected).any(|(f, e)| f != e) {
        return Err(Error::Parse { line: 1, msg: format!("expected '{SYMMETRIC_HEADER}', got '{header}'") });
    }
    let mut body = lines.filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('%'));
    let (sline, size) = body.next().ok_or(Error::Parse { line: 1, msg: "missing size line".into() })?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|f| f.parse().map_err(|_| Error::Parse { line: sline, msg: format!("bad size field '{f}'") }))
        .collect::<Result<_>>()?;
    let [rows, cols, nnz] = dims[..] else {
        return Err(Error::Parse { line: sline, msg: "size line must be 'rows cols entries'".into() });
    };
    if rows != cols {
        return Err(Error::Parse { line: sline, msg: format!("symmetric matrix must be square, got {rows}x{cols}") });
    }
    let mut triplets = Vec::with_capacity(nnz);
    for (ln, l) in body {
        let f: Vec<&str> = l.split_whitespace().collect();
        let bad = |msg: &str| Error::Parse { line: ln, msg: msg.to_string() };
        if f.len() != 3 {
            return Err(bad("entry lines hold 'row col value'"));
        }
        let i: usize = f[0].parse().map_err(|_| bad("bad row index"))?;
        let j: usize = f[1].parse().map_err(|_| bad("bad column index"))?;
        let v: f64 = f[2].parse().map_err(|_| bad("bad value"))?;
        if i == 0 || j == 0 || i > rows || j > rows {
            return Err(bad("index out of range (indices are 1-based)"));
        }
        triplets.push((i - 1, j - 1, v));
    }
    if triplets.len() != nnz {
        return Err(Error::Parse {
            line: sline,
            msg: format!("size line announces {nnz} entries, found {}", triplets.len()),
        });
    }
    SymmetricSparseMatrix::from_triplets(rows, &triplets)
}

pub fn read_symmetric(path: &Path) -> Result<SymmetricSparseMatrix> {
    parse_symmetric(&std::fs::read_to_string(path)?)
}

pub fn write_symmetric(path: &Path, q: &SymmetricSparseMatrix) -> Result<()> {
    std::fs::write(path, format_symmetric(q))?;
    Ok(())
}

/// One row per line, columns separated by single spaces. `NaN` is written
/// as `NA`.
pub fn format_dense(m: &DenseMatrix) -> String {
    let mut out = String::with_capacity(24 * m.nrows() * m.ncols().max(1));
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                out.push(' ');
            }
            let v = m.get(i, j);
            if v.is_nan() {
                out.push_str("NA");
            } else {
                let _ = write!(out, "{v:?}");
            }
        }
        out.push('\n');
    }
    out
}

pub fn format_vector(x: &[f64]) -> String {
    format_dense(&DenseMatrix::from_col_major(x.len(), 1, x.to_vec()).expect("column vector"))
}

/// Parses whitespace-separated rows; every row must have the same number of
/// fields. `NA` and `NaN` read as `NaN`.
pub fn parse_dense(text: &str) -> Result<DenseMatrix> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('%') {
            continue;
        }
        let row = line
            .split_whitespace()
            .map(|f| match f {
                "NA" | "NaN" | "nan" => Ok(f64::NAN),
                _ => f.parse::<f64>().map_err(|_| Error::Parse { line: i + 1, msg: format!("bad value '{f}'") }),
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse { line: i + 1, msg: "ragged rows".into() });
            }
        }
        rows.push(row);
    }
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    let mut m = DenseMatrix::zeros(nrows, ncols);
    for (i, row) in rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            m.set(i, j, v);
        }
    }
    Ok(m)
}

/// A single-column file as a vector.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    let m = parse_dense(text)?;
    match m.ncols() {
        0 => Ok(Vec::new()),
        1 => Ok(m.col(0).to_vec()),
        c => Err(Error::Parse { line: 1, msg: format!("expected one column, found {c}") }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_round_trip_is_exact() {
        let q = SymmetricSparseMatrix::from_triplets(
            3,
            &[(0, 0, 0.1), (1, 0, -1.0 / 3.0), (1, 1, 2.0), (2, 1, 1e-300), (2, 2, 7e22)],
        )
        .unwrap();
        let back = parse_symmetric(&format_symmetric(&q)).unwrap();
        assert_eq!(back.pattern(), q.pattern());
        assert_eq!(back.values(), q.values());
    }

    #[test]
    fn upper_entries_are_mirrored() {
        let text = format!("{SYMMETRIC_HEADER}\n% comment\n2 2 3\n1 1 4\n1 2 2\n2 2 3\n");
        let q = parse_symmetric(&text).unwrap();
        assert_eq!(q.get(1, 0), 2.0);
    }

    #[test]
    fn malformed_input() {
        assert!(parse_symmetric("%%MatrixMarket matrix coordinate real general\n1 1 1\n1 1 1\n").is_err());
        assert!(parse_symmetric(&format!("{SYMMETRIC_HEADER}\n2 2 2\n1 1 1\n")).is_err());
        assert!(parse_symmetric(&format!("{SYMMETRIC_HEADER}\n2 2 1\n3 1 1\n")).is_err());
        assert!(parse_symmetric(&format!("{SYMMETRIC_HEADER}\n2 3 1\n1 1 1\n")).is_err());
        assert!(parse_symmetric("").is_err());
    }

    #[test]
    fn dense_text_round_trip_with_missing() {
        let m = DenseMatrix::from_col_major(2, 2, vec![1.5, f64::NAN, -2.0, 1e-9]).unwrap();
        let back = parse_dense(&format_dense(&m)).unwrap();
        assert_eq!(back.get(0, 0), 1.5);
        assert!(back.get(1, 0).is_nan());
        assert_eq!(back.get(1, 1), 1e-9);
        assert!(parse_dense("1 2\n3\n").is_err());
        assert_eq!(parse_vector("1\n2\n").unwrap(), vec![1.0, 2.0]);
        assert!(parse_vector("1 2\n").is_err());
    }
}
