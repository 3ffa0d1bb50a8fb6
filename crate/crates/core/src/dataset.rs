//! Immutable discrete datasets and contingency counting.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Column-oriented table of categorical values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    names: Vec<String>,
    arities: Vec<u32>,
    columns: Vec<Vec<u32>>,
    n_rows: usize,
}

impl Dataset {
    /// Builds a dataset whose arities are inferred as `max + 1` per column.
    pub fn from_columns(names: Vec<String>, columns: Vec<Vec<u32>>) -> Result<Self> {
        let arities = columns
            .iter()
            .map(|c| c.iter().copied().max().map_or(1, |m| m + 1))
            .collect();
        Self::with_arities(names, arities, columns)
    }

    /// Builds a dataset with explicit arities. Every value must lie below its arity.
    pub fn with_arities(names: Vec<String>, arities: Vec<u32>, columns: Vec<Vec<u32>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::DimensionMismatch {
                expected: names.len(),
                got: columns.len(),
            });
        }
        if arities.len() != columns.len() {
            return Err(Error::DimensionMismatch {
                expected: columns.len(),
                got: arities.len(),
            });
        }
        let n_rows = columns.first().map_or(0, Vec::len);
        for (i, (col, &arity)) in columns.iter().zip(&arities).enumerate() {
            if col.len() != n_rows {
                return Err(Error::DimensionMismatch {
                    expected: n_rows,
                    got: col.len(),
                });
            }
            if arity == 0 {
                return Err(Error::InvalidArgument(format!("variable {i} has arity 0")));
            }
            if let Some(&v) = col.iter().find(|&&v| v >= arity) {
                return Err(Error::InvalidArgument(format!(
                    "variable {i} has value {v} outside arity {arity}"
                )));
            }
        }
        Ok(Self {
            names,
            arities,
            columns,
            n_rows,
        })
    }

    /// Binary dataset from row-major bit vectors, with variables named `X0..`.
    pub fn from_binary_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        let mut columns = vec![Vec::with_capacity(rows.len()); n];
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            for (col, &b) in columns.iter_mut().zip(row) {
                col.push(u32::from(b));
            }
        }
        Self::with_arities(default_names(n), vec![2; n], columns)
    }

    /// Parses the comma-separated text format: a header line of names followed
    /// by one line of non-negative integers per row.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text
            .split('\n')
            .enumerate()
            .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)));
        let (_, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
        if header.trim().is_empty() {
            return Err(parse_err(1, "empty header"));
        }
        let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
        let n = names.len();
        let mut columns: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut pending_blank = None;
        for (line_no, line) in lines {
            if line.is_empty() {
                pending_blank.get_or_insert(line_no);
                continue;
            }
            if let Some(b) = pending_blank {
                return Err(parse_err(b, "blank line inside data"));
            }
            let mut fields = 0;
            for (j, tok) in line.split(',').enumerate() {
                if j >= n {
                    return Err(parse_err(line_no, format!("ragged row: more than {n} fields")));
                }
                columns[j].push(parse_value(tok, line_no)?);
                fields += 1;
            }
            if fields != n {
                return Err(parse_err(line_no, format!("ragged row: {fields} fields, expected {n}")));
            }
        }
        if columns.first().is_none_or(Vec::is_empty) {
            return Err(parse_err(2, "no data rows"));
        }
        Self::from_columns(names, columns)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_csv(&text)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = self.names.join(",");
        out.push('\n');
        for r in 0..self.n_rows {
            for (j, col) in self.columns.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", col[r]);
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Number of variables.
    pub fn n_vars(&self) -> usize {
        self.columns.len()
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn arities(&self) -> &[u32] {
        &self.arities
    }

    pub fn arity(&self, var: usize) -> u32 {
        self.arities[var]
    }

    pub fn column(&self, var: usize) -> &[u32] {
        &self.columns[var]
    }

    pub fn value(&self, row: usize, var: usize) -> u32 {
        self.columns[var][row]
    }

    /// The first `n_rows` rows, keeping the declared arities.
    pub fn head(&self, n_rows: usize) -> Dataset {
        let n_rows = n_rows.min(self.n_rows);
        Dataset {
            names: self.names.clone(),
            arities: self.arities.clone(),
            columns: self.columns.iter().map(|c| c[..n_rows].to_vec()).collect(),
            n_rows,
        }
    }

    /// Rows `start..end`, keeping the declared arities.
    pub fn slice_rows(&self, start: usize, end: usize) -> Dataset {
        let end = end.min(self.n_rows);
        let start = start.min(end);
        Dataset {
            names: self.names.clone(),
            arities: self.arities.clone(),
            columns: self.columns.iter().map(|c| c[start..end].to_vec()).collect(),
            n_rows: end - start,
        }
    }

    fn check_var(&self, v: usize) -> Result<()> {
        if v >= self.n_vars() {
            return Err(Error::NodeOutOfRange {
                node: v,
                n: self.n_vars(),
            });
        }
        Ok(())
    }

    /// Validates a test triplet against this dataset.
    pub fn check_triplet(&self, x: usize, y: usize, z: &[usize]) -> Result<()> {
        self.check_var(x)?;
        self.check_var(y)?;
        for &w in z {
            self.check_var(w)?;
        }
        if x == y {
            return Err(Error::InvalidPair {
                x,
                y,
                reason: "variables must differ",
            });
        }
        if z.contains(&x) || z.contains(&y) {
            return Err(Error::InvalidPair {
                x,
                y,
                reason: "conditioning set contains a tested variable",
            });
        }
        Ok(())
    }
}

pub(crate) fn default_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("X{i}")).collect()
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_value(tok: &str, line: usize) -> Result<u32> {
    let tok = tok.trim();
    if tok.starts_with('-') {
        return Err(parse_err(line, format!("negative value {tok:?}")));
    }
    match tok.parse::<u32>() {
        Ok(v) if v < u32::MAX => Ok(v),
        Ok(_) => Err(parse_err(line, format!("value {tok:?} too large"))),
        Err(_) => Err(parse_err(line, format!("not a non-negative integer: {tok:?}"))),
    }
}

/// Joint counts of two variables, split by observed assignments of a
/// conditioning set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContingencyCounts {
    pub x_arity: usize,
    pub y_arity: usize,
    /// Conditioning assignment (values of `z` in the order given) to a
    /// row-major `x_arity * y_arity` table.
    pub cells: BTreeMap<Vec<u32>, Vec<u64>>,
}

impl ContingencyCounts {
    pub fn get(&self, key: &[u32], a: usize, b: usize) -> u64 {
        self.cells.get(key).map_or(0, |t| t[a * self.y_arity + b])
    }

    pub fn total(&self) -> u64 {
        self.cells.values().flatten().sum()
    }

    /// Same counts with the roles of the two variables swapped.
    pub fn transposed(&self) -> ContingencyCounts {
        let (xa, ya) = (self.x_arity, self.y_arity);
        let cells = self
            .cells
            .iter()
            .map(|(k, t)| {
                let mut out = vec![0; xa * ya];
                for a in 0..xa {
                    for b in 0..ya {
                        out[b * xa + a] = t[a * ya + b];
                    }
                }
                (k.clone(), out)
            })
            .collect();
        ContingencyCounts {
            x_arity: ya,
            y_arity: xa,
            cells,
        }
    }
}

/// Counts rows by `(x, y)` value within each observed assignment of `z`.
pub fn contingency_counts(d: &Dataset, x: usize, y: usize, z: &[usize]) -> Result<ContingencyCounts> {
    d.check_triplet(x, y, z)?;
    let xa = d.arity(x) as usize;
    let ya = d.arity(y) as usize;
    let xs = d.column(x);
    let ys = d.column(y);
    let zcols: Vec<&[u32]> = z.iter().map(|&w| d.column(w)).collect();

    let mut cells: BTreeMap<Vec<u32>, Vec<u64>> = BTreeMap::new();
    let mut key = vec![0u32; z.len()];
    for r in 0..d.n_rows() {
        for (k, col) in key.iter_mut().zip(&zcols) {
            *k = col[r];
        }
        let cell = xs[r] as usize * ya + ys[r] as usize;
        match cells.get_mut(key.as_slice()) {
            Some(t) => t[cell] += 1,
            None => {
                let mut t = vec![0; xa * ya];
                t[cell] = 1;
                cells.insert(key.clone(), t);
            }
        }
    }
    Ok(ContingencyCounts {
        x_arity: xa,
        y_arity: ya,
        cells,
    })
}
