//! Sparse binary parity-check codes, alist interchange and syndromes.

mod construct;
mod decoder;

use std::fmt::Write as _;
use std::io::Read;

use crate::error::{Error, Result};

pub use construct::{expand_ira, peg, DVBS2_GROUP};
pub use decoder::{decode, DecodeResult, Decoder, DEFAULT_MAX_ITER, MESSAGE_CLIP};

/// Parity-check matrix stored in both orientations.
///
/// Edges are numbered in check-major order; `var_edges` lists, per
/// variable, the edge numbers incident to it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LdpcCode {
    n: usize,
    m: usize,
    check_ptr: Vec<usize>,
    check_vars: Vec<usize>,
    var_ptr: Vec<usize>,
    var_edges: Vec<usize>,
}

impl LdpcCode {
    /// Builds a code from its check rows (0-based variable indices).
    pub fn from_checks(n: usize, rows: &[Vec<usize>]) -> Result<Self> {
        let m = rows.len();
        if n == 0 || m == 0 {
            return Err(Error::Inconsistent(format!("empty code: n={n}, m={m}")));
        }
        let mut check_ptr = Vec::with_capacity(m + 1);
        let mut check_vars = Vec::new();
        check_ptr.push(0);
        let mut var_degree = vec![0usize; n];
        for (c, row) in rows.iter().enumerate() {
            if row.is_empty() {
                return Err(Error::Inconsistent(format!("check {c} has degree 0")));
            }
            let mut sorted = row.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::Inconsistent(format!("check {c} repeats a variable")));
            }
            for &v in &sorted {
                if v >= n {
                    return Err(Error::Inconsistent(format!(
                        "check {c} references variable {v} beyond n={n}"
                    )));
                }
                var_degree[v] += 1;
            }
            check_vars.extend_from_slice(&sorted);
            check_ptr.push(check_vars.len());
        }
        if let Some(v) = var_degree.iter().position(|&d| d == 0) {
            return Err(Error::Inconsistent(format!("variable {v} has degree 0")));
        }
        let mut var_ptr = vec![0usize; n + 1];
        for v in 0..n {
            var_ptr[v + 1] = var_ptr[v] + var_degree[v];
        }
        let mut fill = var_ptr.clone();
        let mut var_edges = vec![0usize; check_vars.len()];
        for (e, &v) in check_vars.iter().enumerate() {
            var_edges[fill[v]] = e;
            fill[v] += 1;
        }
        Ok(Self {
            n,
            m,
            check_ptr,
            check_vars,
            var_ptr,
            var_edges,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Nominal rate `(n - m) / n`.
    pub fn rate(&self) -> f64 {
        (self.n as f64 - self.m as f64) / self.n as f64
    }

    pub fn edges(&self) -> usize {
        self.check_vars.len()
    }

    /// Variables in check `c`, ascending.
    pub fn check(&self, c: usize) -> &[usize] {
        &self.check_vars[self.check_ptr[c]..self.check_ptr[c + 1]]
    }

    /// Checks incident to variable `v`, ascending.
    pub fn variable(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.var_edges[self.var_ptr[v]..self.var_ptr[v + 1]]
            .iter()
            .map(move |&e| self.check_ptr.partition_point(|&p| p <= e) - 1)
    }

    pub fn variable_degree(&self, v: usize) -> usize {
        self.var_ptr[v + 1] - self.var_ptr[v]
    }

    pub(crate) fn check_range(&self, c: usize) -> std::ops::Range<usize> {
        self.check_ptr[c]..self.check_ptr[c + 1]
    }

    pub(crate) fn var_edge_list(&self, v: usize) -> &[usize] {
        &self.var_edges[self.var_ptr[v]..self.var_ptr[v + 1]]
    }

    pub(crate) fn edge_var(&self, e: usize) -> usize {
        self.check_vars[e]
    }

    /// XOR of incident bits per check.
    pub fn syndrome(&self, bits: &[u8]) -> Result<Vec<u8>> {
        if bits.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: bits.len(),
            });
        }
        Ok(self.syndrome_unchecked(bits))
    }

    pub(crate) fn syndrome_unchecked(&self, bits: &[u8]) -> Vec<u8> {
        (0..self.m)
            .map(|c| self.check(c).iter().fold(0u8, |acc, &v| acc ^ (bits[v] & 1)))
            .collect()
    }

    /// Parses an alist description. Zero entries in adjacency lists are
    /// treated as padding.
    pub fn from_alist(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let last_line = text.lines().count();
        let mut next = |what: &str| -> Result<(usize, Vec<usize>)> {
            let (no, line) = lines.next().ok_or_else(|| Error::Parse {
                line: last_line + 1,
                msg: format!("unexpected end of input, expected {what}"),
            })?;
            let values = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<usize>().map_err(|_| Error::Parse {
                        line: no,
                        msg: format!("invalid integer '{t}' in {what}"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((no, values))
        };
        let expect = |no: usize, values: &[usize], len: usize, what: &str| -> Result<()> {
            if values.len() == len {
                Ok(())
            } else {
                Err(Error::Parse {
                    line: no,
                    msg: format!("expected {len} values for {what}, found {}", values.len()),
                })
            }
        };

        let (no, dims) = next("dimensions")?;
        expect(no, &dims, 2, "dimensions")?;
        let (n, m) = (dims[0], dims[1]);
        if n == 0 || m == 0 {
            return Err(Error::Parse {
                line: no,
                msg: "dimensions must be positive".into(),
            });
        }
        let (no, maxes) = next("maximum degrees")?;
        expect(no, &maxes, 2, "maximum degrees")?;
        let (no, col_deg) = next("column degrees")?;
        expect(no, &col_deg, n, "column degrees")?;
        let (no, row_deg) = next("row degrees")?;
        expect(no, &row_deg, m, "row degrees")?;

        let mut read_lists = |count: usize, degrees: &[usize], bound: usize, what: &str| {
            let mut lists = Vec::with_capacity(count);
            for (k, &deg) in degrees.iter().enumerate() {
                let (no, values) = next(what)?;
                let entries: Vec<usize> = values.into_iter().filter(|&x| x != 0).collect();
                if entries.len() != deg {
                    return Err(Error::Parse {
                        line: no,
                        msg: format!(
                            "{what} {} lists {} entries but its degree is {deg}",
                            k + 1,
                            entries.len()
                        ),
                    });
                }
                if let Some(&bad) = entries.iter().find(|&&x| x > bound) {
                    return Err(Error::Parse {
                        line: no,
                        msg: format!("index {bad} exceeds {bound} in {what} {}", k + 1),
                    });
                }
                lists.push(entries.into_iter().map(|x| x - 1).collect::<Vec<_>>());
            }
            Ok(lists)
        };
        let cols = read_lists(n, &col_deg, m, "column")?;
        let rows = read_lists(m, &row_deg, n, "row")?;
        if let Some((no, _)) = lines.next() {
            return Err(Error::Parse {
                line: no,
                msg: "trailing content after row lists".into(),
            });
        }

        let max_col = col_deg.iter().copied().max().unwrap_or(0);
        let max_row = row_deg.iter().copied().max().unwrap_or(0);
        if maxes[0] != max_col || maxes[1] != max_row {
            return Err(Error::Inconsistent(format!(
                "declared maximum degrees ({}, {}) differ from actual ({max_col}, {max_row})",
                maxes[0], maxes[1]
            )));
        }
        let code = Self::from_checks(n, &rows)?;
        for (v, list) in cols.iter().enumerate() {
            let mut declared = list.clone();
            declared.sort_unstable();
            let actual: Vec<usize> = code.variable(v).collect();
            if declared != actual {
                return Err(Error::Inconsistent(format!(
                    "column {} lists checks {:?} but rows give {:?}",
                    v + 1,
                    declared.iter().map(|c| c + 1).collect::<Vec<_>>(),
                    actual.iter().map(|c| c + 1).collect::<Vec<_>>()
                )));
            }
        }
        Ok(code)
    }

    /// Reads an alist description from a byte stream.
    pub fn load_alist<R: Read>(mut source: R) -> Result<Self> {
        let mut bytes = Vec::new();
        source.read_to_end(&mut bytes)?;
        let text = String::from_utf8(bytes).map_err(|e| Error::Parse {
            line: 1,
            msg: format!("input is not UTF-8: {e}"),
        })?;
        Self::from_alist(&text)
    }

    /// Serialises to alist without zero padding.
    pub fn to_alist(&self) -> String {
        let col_deg: Vec<usize> = (0..self.n).map(|v| self.variable_degree(v)).collect();
        let row_deg: Vec<usize> = (0..self.m).map(|c| self.check(c).len()).collect();
        let join = |xs: &mut dyn Iterator<Item = usize>| {
            xs.map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
        };
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.n, self.m);
        let _ = writeln!(
            out,
            "{} {}",
            col_deg.iter().max().unwrap(),
            row_deg.iter().max().unwrap()
        );
        let _ = writeln!(out, "{}", join(&mut col_deg.iter().copied()));
        let _ = writeln!(out, "{}", join(&mut row_deg.iter().copied()));
        for v in 0..self.n {
            let _ = writeln!(out, "{}", join(&mut self.variable(v).map(|c| c + 1)));
        }
        for c in 0..self.m {
            let _ = writeln!(out, "{}", join(&mut self.check(c).iter().map(|v| v + 1)));
        }
        out
    }
}
