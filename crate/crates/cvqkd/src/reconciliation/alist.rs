//! Sparse parity-check matrices in the standard alist text format.
//!
//! Layout: first line `n m`, second line the maximum column and row degrees,
//! then n column degrees, m row degrees, n column incidence lines and m row
//! incidence lines with 1-indexed entries. Zero padding up to the maximum
//! degree is accepted, as written by most alist emitters.

use crate::error::{CvqkdError, Result};

/// Binary parity-check matrix stored as row and column incidence lists.
#[derive(Debug, Clone)]
pub struct ParityCheckMatrix {
    /// Codeword length (columns).
    pub n: usize,
    /// Number of checks (rows).
    pub m: usize,
    /// For each check, the sorted variable indices it touches (0-indexed).
    pub rows: Vec<Vec<usize>>,
    /// For each variable, the sorted check indices touching it (0-indexed).
    pub cols: Vec<Vec<usize>>,
}

impl ParityCheckMatrix {
    /// Build from explicit row incidence lists, validating shape.
    pub fn from_rows(n: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        let m = rows.len();
        if n == 0 || m == 0 {
            return Err(CvqkdError::invalid("parity-check matrix must be nonempty"));
        }
        let mut cols = vec![Vec::new(); n];
        let mut sorted_rows = Vec::with_capacity(m);
        for (r, row) in rows.into_iter().enumerate() {
            if row.is_empty() {
                return Err(CvqkdError::invalid(format!("check {r} has no variables")));
            }
            let mut row = row;
            row.sort_unstable();
            row.dedup();
            for &c in &row {
                if c >= n {
                    return Err(CvqkdError::invalid(format!(
                        "check {r} references variable {c} >= n = {n}"
                    )));
                }
                cols[c].push(r);
            }
            sorted_rows.push(row);
        }
        if let Some(c) = cols.iter().position(|col| col.is_empty()) {
            return Err(CvqkdError::invalid(format!(
                "variable {c} appears in no check"
            )));
        }
        Ok(ParityCheckMatrix {
            n,
            m,
            rows: sorted_rows,
            cols,
        })
    }

    /// Number of ones.
    pub fn edge_count(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    /// Design rate `(n - m) / n`; the true rate is higher if rows are
    /// linearly dependent.
    pub fn design_rate(&self) -> f64 {
        (self.n - self.m) as f64 / self.n as f64
    }

    /// Syndrome of a hard-decision word over GF(2).
    pub fn syndrome(&self, bits: &[u8]) -> Result<Vec<u8>> {
        if bits.len() != self.n {
            return Err(CvqkdError::invalid(format!(
                "syndrome: word length {} vs n = {}",
                bits.len(),
                self.n
            )));
        }
        Ok(self
            .rows
            .iter()
            .map(|row| row.iter().fold(0u8, |acc, &c| acc ^ (bits[c] & 1)))
            .collect())
    }

    /// True when `bits` is a codeword.
    pub fn syndrome_is_zero(&self, bits: &[u8]) -> Result<bool> {
        Ok(self.syndrome(bits)?.iter().all(|&s| s == 0))
    }

    /// Parse the alist text format, rejecting malformed counts, degrees,
    /// out-of-range indices, and row/column lists that disagree.
    pub fn parse_alist(text: &str) -> Result<Self> {
        let mut tokens = text.split_whitespace().map(|t| {
            t.parse::<i64>().map_err(|_| {
                CvqkdError::Parse(format!("alist: non-integer token {t:?}"))
            })
        });
        let mut next = |what: &str| -> Result<i64> {
            tokens
                .next()
                .ok_or_else(|| CvqkdError::Parse(format!("alist: truncated before {what}")))?
        };

        let n = next("n")?;
        let m = next("m")?;
        if n <= 0 || m <= 0 {
            return Err(CvqkdError::Parse(format!(
                "alist: dimensions must be positive, got n={n} m={m}"
            )));
        }
        let (n, m) = (n as usize, m as usize);
        let max_col = next("max column degree")?;
        let max_row = next("max row degree")?;
        if max_col <= 0 || max_row <= 0 {
            return Err(CvqkdError::Parse("alist: degrees must be positive".into()));
        }
        let (max_col, max_row) = (max_col as usize, max_row as usize);

        let mut col_deg = Vec::with_capacity(n);
        for i in 0..n {
            let d = next("column degree")?;
            if d <= 0 || d as usize > max_col {
                return Err(CvqkdError::Parse(format!(
                    "alist: column {i} degree {d} outside 1..={max_col}"
                )));
            }
            col_deg.push(d as usize);
        }
        let mut row_deg = Vec::with_capacity(m);
        for i in 0..m {
            let d = next("row degree")?;
            if d <= 0 || d as usize > max_row {
                return Err(CvqkdError::Parse(format!(
                    "alist: row {i} degree {d} outside 1..={max_row}"
                )));
            }
            row_deg.push(d as usize);
        }

        // Incidence lists may be padded with zeros to the max degree. Detect
        // the convention from the total token count.
        let remaining: Vec<i64> = tokens.collect::<Result<Vec<i64>>>()?;
        let unpadded = col_deg.iter().sum::<usize>() + row_deg.iter().sum::<usize>();
        let padded = n * max_col + m * max_row;
        let padded_format = if remaining.len() == padded {
            true
        } else if remaining.len() == unpadded {
            false
        } else {
            return Err(CvqkdError::Parse(format!(
                "alist: {} incidence tokens, expected {unpadded} (unpadded) or {padded} (padded)",
                remaining.len()
            )));
        };

        let mut pos = 0usize;
        let mut take = |count: usize| -> &[i64] {
            let s = &remaining[pos..pos + count];
            pos += count;
            s
        };

        let mut cols = vec![Vec::new(); n];
        for (i, &deg) in col_deg.iter().enumerate() {
            let width = if padded_format { max_col } else { deg };
            let entries = take(width);
            let mut seen = 0usize;
            for &e in entries {
                if e == 0 {
                    continue;
                }
                if e < 0 || e as usize > m {
                    return Err(CvqkdError::Parse(format!(
                        "alist: column {i} entry {e} outside 1..={m}"
                    )));
                }
                cols[i].push(e as usize - 1);
                seen += 1;
            }
            if seen != deg {
                return Err(CvqkdError::Parse(format!(
                    "alist: column {i} lists {seen} entries, degree says {deg}"
                )));
            }
        }
        let mut rows = vec![Vec::new(); m];
        for (i, &deg) in row_deg.iter().enumerate() {
            let width = if padded_format { max_row } else { deg };
            let entries = take(width);
            let mut seen = 0usize;
            for &e in entries {
                if e == 0 {
                    continue;
                }
                if e < 0 || e as usize > n {
                    return Err(CvqkdError::Parse(format!(
                        "alist: row {i} entry {e} outside 1..={n}"
                    )));
                }
                rows[i].push(e as usize - 1);
                seen += 1;
            }
            if seen != deg {
                return Err(CvqkdError::Parse(format!(
                    "alist: row {i} lists {seen} entries, degree says {deg}"
                )));
            }
        }

        // Cross-validate: the two incidence views must describe one matrix.
        let built = ParityCheckMatrix::from_rows(n, rows)?;
        for (c, col) in cols.iter_mut().enumerate() {
            col.sort_unstable();
            if *col != built.cols[c] {
                return Err(CvqkdError::Parse(format!(
                    "alist: column {c} incidence disagrees with row lists"
                )));
            }
        }
        if built.m != m {
            return Err(CvqkdError::Parse("alist: row count mismatch".into()));
        }
        Ok(built)
    }

    /// Serialize to padded alist text.
    pub fn to_alist(&self) -> String {
        let max_col = self.cols.iter().map(Vec::len).max().unwrap_or(0);
        let max_row = self.rows.iter().map(Vec::len).max().unwrap_or(0);
        let mut out = String::new();
        out.push_str(&format!("{} {}\n{} {}\n", self.n, self.m, max_col, max_row));
        let degs: Vec<String> = self.cols.iter().map(|c| c.len().to_string()).collect();
        out.push_str(&degs.join(" "));
        out.push('\n');
        let degs: Vec<String> = self.rows.iter().map(|r| r.len().to_string()).collect();
        out.push_str(&degs.join(" "));
        out.push('\n');
        for col in &self.cols {
            let mut line: Vec<String> = col.iter().map(|&r| (r + 1).to_string()).collect();
            line.resize(max_col, "0".to_string());
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        for row in &self.rows {
            let mut line: Vec<String> = row.iter().map(|&c| (c + 1).to_string()).collect();
            line.resize(max_row, "0".to_string());
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}
