//! Matrix Market coordinate files.
//!
//! Supported banners: `%%MatrixMarket matrix coordinate <real|integer|pattern>
//! <general|symmetric>`. Indices are 1-based on disk. Pattern entries read as
//! 1.0, integer values are widened to `f64`, symmetric files are expanded by
//! mirroring off-diagonal entries.

use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use drek_core::DualSparseMatrix;

#[derive(Debug, thiserror::Error)]
pub enum MtxError {
    #[error("line 1: missing %%MatrixMarket banner")]
    MissingBanner,
    #[error("line {line}: malformed banner: {reason}")]
    BadBanner { line: usize, reason: String },
    #[error("line {line}: unsupported {what} `{value}`")]
    Unsupported {
        line: usize,
        what: &'static str,
        value: String,
    },
    #[error("line {line}: malformed size line")]
    BadSizeLine { line: usize },
    #[error("line {line}: malformed entry")]
    BadEntry { line: usize },
    #[error("line {line}: entry ({row}, {col}) outside a {rows}x{cols} matrix")]
    OutOfBounds {
        line: usize,
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("line {line}: duplicate entry ({row}, {col})")]
    Duplicate { line: usize, row: usize, col: usize },
    #[error("expected {expected} entries, found {found}")]
    EntryCount { expected: usize, found: usize },
    #[error("missing size line")]
    MissingSize,
    #[error("matrix rejected: {0}")]
    Matrix(#[from] drek_core::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Real,
    Integer,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    General,
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub field: Field,
    pub symmetry: Symmetry,
}

fn parse_banner(line: &str) -> Result<Header, MtxError> {
    let mut words = line.split_whitespace();
    if words.next().map(str::to_ascii_lowercase).as_deref() != Some("%%matrixmarket") {
        return Err(MtxError::MissingBanner);
    }
    let bad = |reason: &str| MtxError::BadBanner {
        line: 1,
        reason: reason.to_string(),
    };
    let object = words.next().ok_or_else(|| bad("missing object"))?;
    if !object.eq_ignore_ascii_case("matrix") {
        return Err(MtxError::Unsupported {
            line: 1,
            what: "object",
            value: object.to_string(),
        });
    }
    let format = words.next().ok_or_else(|| bad("missing format"))?;
    if !format.eq_ignore_ascii_case("coordinate") {
        return Err(MtxError::Unsupported {
            line: 1,
            what: "format",
            value: format.to_string(),
        });
    }
    let field = words.next().ok_or_else(|| bad("missing field"))?;
    let field = match field.to_ascii_lowercase().as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" => Field::Pattern,
        _ => {
            return Err(MtxError::Unsupported {
                line: 1,
                what: "field",
                value: field.to_string(),
            })
        }
    };
    let symmetry = words.next().ok_or_else(|| bad("missing symmetry"))?;
    let symmetry = match symmetry.to_ascii_lowercase().as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        _ => {
            return Err(MtxError::Unsupported {
                line: 1,
                what: "symmetry",
                value: symmetry.to_string(),
            })
        }
    };
    if words.next().is_some() {
        return Err(bad("trailing tokens"));
    }
    Ok(Header { field, symmetry })
}

/// Parses a coordinate file from any reader.
pub fn read_matrix_market<R: BufRead>(reader: R) -> Result<DualSparseMatrix, MtxError> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let header = match lines.next() {
        Some((_, line)) => parse_banner(&line?)?,
        None => return Err(MtxError::MissingBanner),
    };

    let mut size = None;
    let mut triplets = Vec::new();
    let mut seen = HashSet::new();
    let mut entries = 0usize;

    for (line_no, line) in lines {
        let line = line?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('%') {
            continue;
        }
        let Some((rows, cols, _)) = size else {
            let parsed: Vec<usize> = text
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|_| MtxError::BadSizeLine { line: line_no })?;
            match parsed[..] {
                [r, c, z] => size = Some((r, c, z)),
                _ => return Err(MtxError::BadSizeLine { line: line_no }),
            }
            continue;
        };

        let mut words = text.split_whitespace();
        let bad = || MtxError::BadEntry { line: line_no };
        let row: usize = words.next().and_then(|w| w.parse().ok()).ok_or_else(bad)?;
        let col: usize = words.next().and_then(|w| w.parse().ok()).ok_or_else(bad)?;
        let value = match header.field {
            Field::Pattern => 1.0,
            Field::Real => words.next().and_then(|w| w.parse::<f64>().ok()).ok_or_else(bad)?,
            Field::Integer => words.next().and_then(|w| w.parse::<i64>().ok()).ok_or_else(bad)? as f64,
        };
        if words.next().is_some() || !value.is_finite() {
            return Err(bad());
        }
        if row == 0 || col == 0 || row > rows || col > cols {
            return Err(MtxError::OutOfBounds {
                line: line_no,
                row,
                col,
                rows,
                cols,
            });
        }
        // A symmetric file may store either triangle, but not both.
        let key = match header.symmetry {
            Symmetry::General => (row, col),
            Symmetry::Symmetric => (row.max(col), row.min(col)),
        };
        if !seen.insert(key) {
            return Err(MtxError::Duplicate {
                line: line_no,
                row,
                col,
            });
        }
        entries += 1;
        triplets.push((row - 1, col - 1, value));
        if header.symmetry == Symmetry::Symmetric && row != col {
            triplets.push((col - 1, row - 1, value));
        }
    }

    let (rows, cols, nnz) = size.ok_or(MtxError::MissingSize)?;
    if entries != nnz {
        return Err(MtxError::EntryCount {
            expected: nnz,
            found: entries,
        });
    }
    Ok(DualSparseMatrix::from_triplets(rows, cols, &triplets)?)
}

pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<DualSparseMatrix, MtxError> {
    read_matrix_market(BufReader::new(File::open(path)?))
}

/// Writes `real general` coordinates, row-major, with round-trip precision.
pub fn write_matrix_market<W: Write>(mut out: W, a: &DualSparseMatrix) -> io::Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", a.rows(), a.cols(), a.nnz())?;
    for (i, j, v) in a.triplets() {
        writeln!(out, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    out.flush()
}

pub fn save_matrix_market(path: impl AsRef<Path>, a: &DualSparseMatrix) -> io::Result<()> {
    write_matrix_market(BufWriter::new(File::create(path)?), a)
}
