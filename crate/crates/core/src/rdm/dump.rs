//! Plain-text matrix dumps.
//!
//! ```text
//! kind D
//! r 8
//! nelec 4
//! dim 28
//! <dim rows of dim values>
//! ```

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    D,
    Q,
    G,
}

impl MatrixKind {
    /// Expected side length for `r` spin orbitals.
    pub fn dim(self, n_spin: usize) -> usize {
        match self {
            MatrixKind::D | MatrixKind::Q => n_spin * n_spin.saturating_sub(1) / 2,
            MatrixKind::G => n_spin * n_spin,
        }
    }
}

impl fmt::Display for MatrixKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MatrixKind::D => "D",
            MatrixKind::Q => "Q",
            MatrixKind::G => "G",
        };
        f.write_str(s)
    }
}

impl FromStr for MatrixKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "D" => Ok(MatrixKind::D),
            "Q" => Ok(MatrixKind::Q),
            "G" => Ok(MatrixKind::G),
            other => Err(Error::InvalidArgument(format!("unknown matrix kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixDump {
    pub kind: MatrixKind,
    pub n_spin: usize,
    pub n_electrons: usize,
    pub matrix: DMatrix<f64>,
}

pub fn write_matrix_dump<W: Write>(dump: &MatrixDump, mut out: W) -> Result<()> {
    let dim = dump.matrix.nrows();
    writeln!(out, "kind {}", dump.kind)?;
    writeln!(out, "r {}", dump.n_spin)?;
    writeln!(out, "nelec {}", dump.n_electrons)?;
    writeln!(out, "dim {dim}")?;
    for i in 0..dim {
        let row: Vec<String> = (0..dump.matrix.ncols())
            .map(|j| format!("{:.16e}", dump.matrix[(i, j)]))
            .collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn read_matrix_dump<R: BufRead>(input: R) -> Result<MatrixDump> {
    let mut header: Vec<(String, String)> = Vec::new();
    let mut values = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        let line_no = n + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        if header.len() < 4 {
            let mut it = t.split_whitespace();
            let key = it.next().unwrap_or_default().to_string();
            let val = it.next().ok_or_else(|| Error::Parse {
                line: line_no,
                msg: format!("header field '{key}' has no value"),
            })?;
            header.push((key, val.to_string()));
            continue;
        }
        for tok in t.split_whitespace() {
            let v: f64 = tok.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad value '{tok}'"),
            })?;
            values.push(v);
        }
    }
    let field = |name: &str| -> Result<&str> {
        header
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("missing header field '{name}'"),
            })
    };
    let int = |name: &str| -> Result<usize> {
        field(name)?.parse().map_err(|_| Error::Parse {
            line: 0,
            msg: format!("header field '{name}' is not an integer"),
        })
    };
    let kind: MatrixKind = field("kind")?.parse()?;
    let n_spin = int("r")?;
    let n_electrons = int("nelec")?;
    let dim = int("dim")?;
    if dim != kind.dim(n_spin) {
        return Err(Error::Dimension {
            expected: kind.dim(n_spin),
            found: dim,
        });
    }
    if values.len() != dim * dim {
        return Err(Error::Dimension {
            expected: dim * dim,
            found: values.len(),
        });
    }
    Ok(MatrixDump {
        kind,
        n_spin,
        n_electrons,
        matrix: DMatrix::from_row_slice(dim, dim, &values),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bitwise() {
        let m = DMatrix::from_fn(6, 6, |i, j| ((i * 7 + j) as f64).sin() / 3.0);
        let dump = MatrixDump {
            kind: MatrixKind::D,
            n_spin: 4,
            n_electrons: 2,
            matrix: m,
        };
        let mut buf = Vec::new();
        write_matrix_dump(&dump, &mut buf).unwrap();
        let back = read_matrix_dump(buf.as_slice()).unwrap();
        assert_eq!(back, dump);
    }

    #[test]
    fn rejects_wrong_dimension() {
        let text = "kind G\nr 4\nnelec 2\ndim 6\n";
        assert!(matches!(
            read_matrix_dump(text.as_bytes()),
            Err(Error::Dimension { expected: 16, .. })
        ));
        let short = "kind D\nr 2\nnelec 2\ndim 1\n";
        assert!(read_matrix_dump(short.as_bytes()).is_err());
        let bad = "kind D\nr 2\nnelec 2\ndim 1\nx\n";
        assert!(matches!(
            read_matrix_dump(bad.as_bytes()),
            Err(Error::Parse { line: 5, .. })
        ));
    }
}
