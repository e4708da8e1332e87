//! MatrixMarket coordinate format (real or integer, general or symmetric).
//!
//! Values are written with 17 significant digits so that a write followed by
//! a read reproduces every `f64` exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MtxSymmetry {
    General,
    Symmetric,
}

pub fn read_matrix_market<R: Read>(reader: R) -> Result<CsrMatrix> {
    let reader = BufReader::new(reader);
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or(Error::Parse { line: 1, msg: "empty file".into() })?;
    let header = header?;
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(Error::Parse { line: 1, msg: format!("bad header: {header:?}") });
    }
    if tokens[2] != "coordinate" {
        return Err(Error::Parse { line: 1, msg: format!("unsupported format {:?}", tokens[2]) });
    }
    if tokens[3] != "real" && tokens[3] != "integer" && tokens[3] != "double" {
        return Err(Error::Parse { line: 1, msg: format!("unsupported field {:?}", tokens[3]) });
    }
    let symmetry = match tokens[4].as_str() {
        "general" => MtxSymmetry::General,
        "symmetric" => MtxSymmetry::Symmetric,
        other => {
            return Err(Error::Parse { line: 1, msg: format!("unsupported symmetry {other:?}") })
        }
    };

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let parse_usize = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| Error::Parse { line: line_no, msg: format!("{s:?}: {e}") })
        };
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(Error::Parse { line: line_no, msg: "expected 'nrows ncols nnz'".into() });
                }
                let (m, n, nnz) = (parse_usize(fields[0])?, parse_usize(fields[1])?, parse_usize(fields[2])?);
                if symmetry == MtxSymmetry::Symmetric && m != n {
                    return Err(Error::Parse { line: line_no, msg: "symmetric matrix must be square".into() });
                }
                triplets.reserve(nnz * if symmetry == MtxSymmetry::Symmetric { 2 } else { 1 });
                size = Some((m, n, nnz));
            }
            Some((m, n, _)) => {
                if fields.len() != 3 {
                    return Err(Error::Parse { line: line_no, msg: "expected 'row col value'".into() });
                }
                let (i, j) = (parse_usize(fields[0])?, parse_usize(fields[1])?);
                let v: f64 = fields[2]
                    .parse()
                    .map_err(|e| Error::Parse { line: line_no, msg: format!("{:?}: {e}", fields[2]) })?;
                if i == 0 || j == 0 || i > m || j > n {
                    return Err(Error::Parse { line: line_no, msg: format!("entry ({i}, {j}) out of range") });
                }
                triplets.push((i - 1, j - 1, v));
                if symmetry == MtxSymmetry::Symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (m, n, nnz) = size.ok_or(Error::Parse { line: 0, msg: "missing size line".into() })?;
    let stored = match symmetry {
        MtxSymmetry::General => triplets.len(),
        MtxSymmetry::Symmetric => triplets.iter().filter(|t| t.0 >= t.1).count(),
    };
    if stored != nnz {
        return Err(Error::Parse { line: 0, msg: format!("header announces {nnz} entries, found {stored}") });
    }
    let a = CsrMatrix::from_triplets(m, n, &triplets)?;
    Ok(a.with_symmetric_hint(symmetry == MtxSymmetry::Symmetric))
}

pub fn write_matrix_market<W: Write>(a: &CsrMatrix, symmetry: MtxSymmetry, writer: W) -> Result<()> {
    if symmetry == MtxSymmetry::Symmetric && !a.is_symmetric(0.0) {
        return Err(Error::Malformed("writing an unsymmetric matrix as symmetric".into()));
    }
    let mut w = BufWriter::new(writer);
    let kind = match symmetry {
        MtxSymmetry::General => "general",
        MtxSymmetry::Symmetric => "symmetric",
    };
    writeln!(w, "%%MatrixMarket matrix coordinate real {kind}")?;
    let entries: Vec<(usize, usize, f64)> = match symmetry {
        MtxSymmetry::General => a.iter().collect(),
        MtxSymmetry::Symmetric => a.iter().filter(|&(i, j, _)| i >= j).collect(),
    };
    writeln!(w, "{} {} {}", a.nrows(), a.ncols(), entries.len())?;
    for (i, j, v) in entries {
        writeln!(w, "{} {} {:.16e}", i + 1, j + 1, v)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_market_file(path: impl AsRef<Path>) -> Result<CsrMatrix> {
    read_matrix_market(File::open(path)?)
}

pub fn write_matrix_market_file(a: &CsrMatrix, symmetry: MtxSymmetry, path: impl AsRef<Path>) -> Result<()> {
    write_matrix_market(a, symmetry, File::create(path)?)
}
