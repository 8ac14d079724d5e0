//! Code constructors: progressive edge growth for test codes and the
//! DVB-S2 style irregular repeat-accumulate expansion from address tables.

use std::collections::VecDeque;

use super::LdpcCode;
use crate::error::{Error, Result};

/// Information bits per address-table row in DVB-S2.
pub const DVBS2_GROUP: usize = 360;

/// Progressive edge growth with constant variable degree.
///
/// Each new edge joins the least-loaded check among those farthest from
/// the variable in the current graph; ties go to the lowest index, so the
/// result is a pure function of the arguments.
pub fn peg(n: usize, m: usize, var_degree: usize) -> Result<LdpcCode> {
    if n == 0 || m == 0 || var_degree == 0 || var_degree > m {
        return Err(Error::Domain(format!(
            "peg needs n, m > 0 and 0 < degree <= m (n={n}, m={m}, degree={var_degree})"
        )));
    }
    let mut checks: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut vars: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut check_seen = vec![usize::MAX; m];
    let mut var_seen = vec![usize::MAX; n];
    let mut stamp = 0usize;
    let mut queue = VecDeque::new();

    for v in 0..n {
        for k in 0..var_degree {
            let chosen = if k == 0 {
                least_loaded(&checks, |_| true)
            } else {
                stamp += 1;
                // Breadth-first layers of checks reachable from v.
                queue.clear();
                var_seen[v] = stamp;
                let mut reached = 0;
                for &c in &vars[v] {
                    check_seen[c] = stamp;
                    reached += 1;
                    queue.push_back(c);
                }
                loop {
                    let layer: Vec<usize> = queue.drain(..).collect();
                    let mut next = Vec::new();
                    for c in layer {
                        for &u in &checks[c] {
                            if var_seen[u] == stamp {
                                continue;
                            }
                            var_seen[u] = stamp;
                            for &d in &vars[u] {
                                if check_seen[d] != stamp {
                                    next.push(d);
                                }
                            }
                        }
                    }
                    next.sort_unstable();
                    next.dedup();
                    if next.is_empty() || reached + next.len() == m {
                        break;
                    }
                    for &d in &next {
                        check_seen[d] = stamp;
                    }
                    reached += next.len();
                    queue.extend(next);
                }
                least_loaded(&checks, |c| check_seen[c] != stamp)
            };
            let c = chosen.ok_or_else(|| Error::Domain(format!("no check available for variable {v}")))?;
            checks[c].push(v);
            vars[v].push(c);
        }
    }
    LdpcCode::from_checks(n, &checks)
}

fn least_loaded(checks: &[Vec<usize>], allowed: impl Fn(usize) -> bool) -> Option<usize> {
    (0..checks.len())
        .filter(|&c| allowed(c))
        .min_by_key(|&c| (checks[c].len(), c))
}

/// Expands an irregular repeat-accumulate address table into a parity-check
/// matrix, in the DVB-S2 layout.
///
/// Row `g` of `table` lists parity addresses for information bits
/// `group * g .. group * (g + 1)`; bit `group * g + t` joins checks
/// `(x + t * q) mod (n - k)` for each address `x`, with
/// `q = (n - k) / group`. Parity bits form a staircase: check `j` holds
/// parity bits `j` and `j - 1`. Blank lines and `#` comments are ignored.
pub fn expand_ira(n: usize, k: usize, group: usize, table: &str) -> Result<LdpcCode> {
    if k == 0 || k >= n || group == 0 || k % group != 0 || (n - k) % group != 0 {
        return Err(Error::Domain(format!(
            "need 0 < k < n with k and n - k divisible by {group} (n={n}, k={k})"
        )));
    }
    let parity = n - k;
    let q = parity / group;
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); parity];
    let mut groups = 0usize;
    for (no, raw) in table.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if groups == k / group {
            return Err(Error::Parse {
                line: no + 1,
                msg: format!("more than {} address rows", k / group),
            });
        }
        for tok in line.split_whitespace() {
            let x: usize = tok.parse().map_err(|_| Error::Parse {
                line: no + 1,
                msg: format!("invalid address '{tok}'"),
            })?;
            if x >= parity {
                return Err(Error::Parse {
                    line: no + 1,
                    msg: format!("address {x} not below n - k = {parity}"),
                });
            }
            for t in 0..group {
                rows[(x + t * q) % parity].push(groups * group + t);
            }
        }
        groups += 1;
    }
    if groups != k / group {
        return Err(Error::Parse {
            line: table.lines().count() + 1,
            msg: format!("expected {} address rows, found {groups}", k / group),
        });
    }
    for (j, row) in rows.iter_mut().enumerate() {
        if j > 0 {
            row.push(k + j - 1);
        }
        row.push(k + j);
    }
    LdpcCode::from_checks(n, &rows)
}
