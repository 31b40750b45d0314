//! Cayley tables of binary quasigroups: ingestion, validation, and the
//! division maps the rest of the crate leans on.
//!
//! Symbols are 1-based in every external surface (files, reports, display)
//! to match the usual convention for latin squares; internally everything is
//! a 0-based `u8` so that table cells double as array indices.

use serde::Serialize;

use crate::error::{Error, Result};

/// The Cayley table of a binary quasigroup of order `n`.
///
/// Every row and every column is a permutation of the symbol set (the table
/// is a latin square); this is validated on construction, after which the
/// left/right division maps are total and precomputed.
#[derive(Clone, PartialEq, Eq)]
pub struct CayleyTable {
    n: usize,
    /// Row-major cells, `cells[a * n + b] = a * b`, all 0-based.
    cells: Vec<u8>,
    /// `rdiv[a * n + v]` is the unique `w` with `a * w = v`.
    rdiv: Vec<u8>,
    /// `ldiv[b * n + v]` is the unique `u` with `u * b = v`.
    ldiv: Vec<u8>,
}

impl std::fmt::Debug for CayleyTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CayleyTable(order {})", self.n)
    }
}

impl CayleyTable {
    /// Builds a table from 0-based cells, validating the latin property.
    pub fn from_cells(n: usize, cells: Vec<u8>) -> Result<Self> {
        if n == 0 || n > 255 {
            return Err(Error::InvalidParameter(format!(
                "order must be in 1..=255, got {n}"
            )));
        }
        if cells.len() != n * n {
            return Err(Error::InvalidParameter(format!(
                "expected {} cells, got {}",
                n * n,
                cells.len()
            )));
        }
        let mut seen = vec![false; n];
        for a in 0..n {
            seen.fill(false);
            for b in 0..n {
                let v = cells[a * n + b] as usize;
                if v >= n {
                    return Err(Error::SymbolRange {
                        found: v as i64 + 1,
                        n,
                        line: a + 2,
                    });
                }
                if seen[v] {
                    return Err(Error::LatinRow {
                        index: a + 1,
                        symbol: v + 1,
                    });
                }
                seen[v] = true;
            }
        }
        for b in 0..n {
            seen.fill(false);
            for a in 0..n {
                let v = cells[a * n + b] as usize;
                if seen[v] {
                    return Err(Error::LatinColumn {
                        index: b + 1,
                        symbol: v + 1,
                    });
                }
                seen[v] = true;
            }
        }

        let mut rdiv = vec![0u8; n * n];
        let mut ldiv = vec![0u8; n * n];
        for a in 0..n {
            for b in 0..n {
                let v = cells[a * n + b] as usize;
                rdiv[a * n + v] = b as u8;
                ldiv[b * n + v] = a as u8;
            }
        }
        Ok(CayleyTable {
            n,
            cells,
            rdiv,
            ldiv,
        })
    }

    /// Builds a table from 1-based rows as they appear in a table file.
    pub fn from_rows_1based(rows: &[Vec<usize>]) -> Result<Self> {
        let n = rows.len();
        let mut cells = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Parse {
                    line: i + 2,
                    msg: format!("expected {} entries, got {}", n, row.len()),
                });
            }
            for &v in row {
                if v < 1 || v > n {
                    return Err(Error::SymbolRange {
                        found: v as i64,
                        n,
                        line: i + 2,
                    });
                }
                cells.push((v - 1) as u8);
            }
        }
        Self::from_cells(n, cells)
    }

    pub fn order(&self) -> usize {
        self.n
    }

    /// `a * b`, 0-based.
    #[inline]
    pub fn op(&self, a: u8, b: u8) -> u8 {
        self.cells[a as usize * self.n + b as usize]
    }

    /// The unique `w` with `a * w = v`.
    #[inline]
    pub fn right_div(&self, a: u8, v: u8) -> u8 {
        self.rdiv[a as usize * self.n + v as usize]
    }

    /// The unique `u` with `u * b = v`.
    #[inline]
    pub fn left_div(&self, b: u8, v: u8) -> u8 {
        self.ldiv[b as usize * self.n + v as usize]
    }

    #[inline]
    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    /// Row `a` of the table as a slice of 0-based symbols.
    #[inline]
    pub fn row(&self, a: usize) -> &[u8] {
        &self.cells[a * self.n..(a + 1) * self.n]
    }

    /// Canonical text form: order line, then one row per line with single
    /// spaces and a trailing newline. Parsing this form reproduces the same
    /// bytes, so serialized tables are stable cache and report keys.
    pub fn to_canonical_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.n.to_string());
        out.push('\n');
        for a in 0..self.n {
            for b in 0..self.n {
                if b > 0 {
                    out.push(' ');
                }
                out.push_str(&(self.op(a as u8, b as u8) as usize + 1).to_string());
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TableSummary {
    pub order: usize,
    pub rows: Vec<Vec<usize>>,
}

impl From<&CayleyTable> for TableSummary {
    fn from(t: &CayleyTable) -> Self {
        TableSummary {
            order: t.order(),
            rows: (0..t.order())
                .map(|a| t.row(a).iter().map(|&v| v as usize + 1).collect())
                .collect(),
        }
    }
}

/// Parses the table file format.
///
/// Line 1 is the order `n`, followed by `n` lines of `n` whitespace-separated
/// symbols from `1..=n`. Lines starting with `#` are comments; blank lines
/// and trailing whitespace are ignored.
pub fn parse_cayley(text: &str) -> Result<CayleyTable> {
    let mut order: Option<usize> = None;
    let mut rows: Vec<Vec<usize>> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if order.is_none() {
            let n: usize = line.parse().map_err(|_| Error::Parse {
                line: idx + 1,
                msg: format!("expected the order, got {line:?}"),
            })?;
            if n == 0 {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: "order must be positive".into(),
                });
            }
            order = Some(n);
            continue;
        }
        let n = order.unwrap();
        if rows.len() == n {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("unexpected extra row, table has order {n}"),
            });
        }
        let mut row = Vec::with_capacity(n);
        for tok in line.split_whitespace() {
            let v: i64 = tok.parse().map_err(|_| Error::Parse {
                line: idx + 1,
                msg: format!("expected an integer, got {tok:?}"),
            })?;
            if v < 1 || v > n as i64 {
                return Err(Error::SymbolRange {
                    found: v,
                    n,
                    line: idx + 1,
                });
            }
            row.push(v as usize);
        }
        if row.len() != n {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("expected {} entries, got {}", n, row.len()),
            });
        }
        rows.push(row);
    }
    let n = order.ok_or(Error::Parse {
        line: 1,
        msg: "empty input".into(),
    })?;
    if rows.len() != n {
        return Err(Error::Parse {
            line: text.lines().count() + 1,
            msg: format!("expected {} rows, got {}", n, rows.len()),
        });
    }
    CayleyTable::from_rows_1based(&rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_order_two_table() {
        let t = parse_cayley("2\n1 2\n2 1\n").unwrap();
        assert_eq!(t.order(), 2);
        // 1*2 = 2 in 1-based symbols.
        assert_eq!(t.op(0, 1), 1);
    }

    #[test]
    fn parses_trivial_table() {
        let t = parse_cayley("1\n1\n").unwrap();
        assert_eq!(t.order(), 1);
        assert_eq!(t.op(0, 0), 0);
    }

    #[test]
    fn rejects_repeated_symbol_in_row() {
        let err = parse_cayley("2\n1 1\n2 2\n").unwrap_err();
        match err {
            Error::LatinRow { index, symbol } => {
                assert_eq!(index, 1);
                assert_eq!(symbol, 1);
            }
            other => panic!("expected LatinRow, got {other:?}"),
        }
    }

    #[test]
    fn rejects_repeated_symbol_in_column() {
        // Rows are fine, columns are not.
        let err = parse_cayley("2\n1 2\n1 2\n").unwrap_err();
        assert!(matches!(
            err,
            Error::LatinColumn {
                index: 1,
                symbol: 1
            }
        ));
    }

    #[test]
    fn rejects_out_of_range_symbol() {
        let err = parse_cayley("2\n1 3\n2 1\n").unwrap_err();
        assert!(matches!(err, Error::SymbolRange { found: 3, n: 2, .. }));
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let t = parse_cayley("# cyclic group\n\n2\n# rows follow\n1 2\n2 1\n").unwrap();
        assert_eq!(t.order(), 2);
    }

    #[test]
    fn canonical_serialization_round_trips() {
        let text = "3\n1 2 3\n2 3 1\n3 1 2\n";
        let t = parse_cayley(text).unwrap();
        assert_eq!(t.to_canonical_string(), text);
    }

    #[test]
    fn divisions_invert_the_operation() {
        let t = parse_cayley("3\n1 2 3\n2 3 1\n3 1 2\n").unwrap();
        for a in 0..3u8 {
            for b in 0..3u8 {
                let v = t.op(a, b);
                assert_eq!(t.right_div(a, v), b);
                assert_eq!(t.left_div(b, v), a);
            }
        }
    }
}
