//! Line-oriented sparse problem format.
//!
//! ```text
//! "name: example        comment lines start with a double quote
//! 1                     m
//! 1 0 1                 nblocks d k
//! 2                     block sizes
//! E                     constraint kinds (E/I), length m
//! 1                     right-hand sides, length m
//! 0 1 1 1 1.0           con block i j value  (con 0 = cost, block 0 = free part)
//! 0 1 2 2 1.0
//! 1 1 1 1 1.0
//! ```
//!
//! Indices are 1-based and only `i <= j` is stored for matrix blocks (a lower
//! entry is mirrored). Header fields of length zero may be left blank.

use super::{
    BlockStructure, ConicSdpProblem, Constraint, ConstraintKind, Cost, SparseSymmetric,
    SymmetricMatrix,
};
use crate::error::{Error, Result};

const NAME_TAG: &str = "name:";

fn tokens(line: &str) -> impl Iterator<Item = &str> {
    line.split(|c: char| c.is_whitespace() || matches!(c, ',' | '{' | '}' | '(' | ')' | '='))
        .filter(|t| !t.is_empty())
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse().map_err(|_| Error::Parse {
        line,
        message: format!("cannot parse {what} from {tok:?}"),
    })
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    name: Option<String>,
    last_line: usize,
}

impl<'a> Lines<'a> {
    /// Next non-blank, non-comment line with its 1-based number.
    fn next_data(&mut self) -> Option<(usize, &'a str)> {
        for (idx, raw) in self.inner.by_ref() {
            self.last_line = idx + 1;
            let (data, comment) = match raw.find('"') {
                Some(pos) => (&raw[..pos], Some(&raw[pos + 1..])),
                None => (raw, None),
            };
            if let Some(c) = comment {
                if self.name.is_none() {
                    if let Some(rest) = c.trim().strip_prefix(NAME_TAG) {
                        self.name = Some(rest.trim().to_string());
                    }
                }
            }
            if !data.trim().is_empty() {
                return Some((idx + 1, data));
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.next_data().ok_or_else(|| Error::Parse {
            line: self.last_line + 1,
            message: format!("unexpected end of input, expected {what}"),
        })
    }
}

/// Parses a problem from the text format.
pub fn read_problem(text: &str) -> Result<ConicSdpProblem> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        name: None,
        last_line: 0,
    };

    let (ln, l) = lines.expect("constraint count")?;
    let mut it = tokens(l);
    let m: usize = parse_num(it.next().unwrap_or(""), ln, "constraint count")?;

    let (ln, l) = lines.expect("'nblocks d k' line")?;
    let t: Vec<&str> = tokens(l).collect();
    if t.len() != 3 {
        return Err(Error::Parse {
            line: ln,
            message: format!("expected 'nblocks d k', found {} fields", t.len()),
        });
    }
    let nblocks: usize = parse_num(t[0], ln, "block count")?;
    let free_dim: usize = parse_num(t[1], ln, "free dimension")?;
    let factorized: usize = parse_num(t[2], ln, "factorized count")?;
    if factorized > nblocks {
        return Err(Error::InconsistentDimension {
            line: ln,
            message: format!("{factorized} factorized blocks but only {nblocks} blocks"),
        });
    }

    let mut sizes = Vec::with_capacity(nblocks);
    if nblocks > 0 {
        let (ln, l) = lines.expect("block sizes")?;
        for tok in tokens(l) {
            // SDPA marks diagonal blocks with a negative size; we only take PSD blocks.
            let v: i64 = parse_num(tok, ln, "block size")?;
            if v <= 0 {
                return Err(Error::InconsistentDimension {
                    line: ln,
                    message: format!("block size {v} must be positive"),
                });
            }
            sizes.push(v as usize);
        }
        if sizes.len() != nblocks {
            return Err(Error::InconsistentDimension {
                line: ln,
                message: format!("declared {nblocks} blocks but listed {} sizes", sizes.len()),
            });
        }
    }

    let mut kinds = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    if m > 0 {
        let (ln, l) = lines.expect("constraint kinds")?;
        for ch in tokens(l).flat_map(|t| t.chars()) {
            kinds.push(match ch {
                'E' | 'e' => ConstraintKind::Equality,
                'I' | 'i' => ConstraintKind::Inequality,
                other => {
                    return Err(Error::Parse {
                        line: ln,
                        message: format!("unknown constraint kind {other:?}"),
                    })
                }
            });
        }
        if kinds.len() != m {
            return Err(Error::InconsistentDimension {
                line: ln,
                message: format!("declared {m} constraints but {} kinds", kinds.len()),
            });
        }
        let (ln, l) = lines.expect("right-hand side")?;
        for tok in tokens(l) {
            rhs.push(parse_num::<f64>(tok, ln, "right-hand side")?);
        }
        if rhs.len() != m {
            return Err(Error::InconsistentDimension {
                line: ln,
                message: format!("declared {m} constraints but {} right-hand sides", rhs.len()),
            });
        }
    }

    let mut cost_blocks: Vec<SymmetricMatrix> =
        sizes.iter().map(|&n| SymmetricMatrix::zeros(n)).collect();
    let mut cost_free = vec![0.0; free_dim];
    let mut con_entries: Vec<Vec<Vec<(usize, usize, f64)>>> = vec![vec![Vec::new(); nblocks]; m];
    let mut con_free: Vec<Vec<f64>> = vec![vec![0.0; free_dim]; m];

    while let Some((ln, l)) = lines.next_data() {
        let t: Vec<&str> = tokens(l).collect();
        if t.len() != 5 {
            return Err(Error::Parse {
                line: ln,
                message: format!("expected 'con block i j value', found {} fields", t.len()),
            });
        }
        let con: usize = parse_num(t[0], ln, "constraint index")?;
        let block: usize = parse_num(t[1], ln, "block index")?;
        let i: usize = parse_num(t[2], ln, "row index")?;
        let j: usize = parse_num(t[3], ln, "column index")?;
        let v: f64 = parse_num(t[4], ln, "value")?;
        if !v.is_finite() {
            return Err(Error::Parse {
                line: ln,
                message: "non-finite value".into(),
            });
        }
        if con > m {
            return Err(Error::Parse {
                line: ln,
                message: format!("constraint index {con} exceeds m = {m}"),
            });
        }
        if block == 0 {
            if free_dim == 0 {
                return Err(Error::UnknownBlock { line: ln, block });
            }
            if i == 0 || i > free_dim {
                return Err(Error::Parse {
                    line: ln,
                    message: format!("free index {i} outside 1..={free_dim}"),
                });
            }
            if con == 0 {
                cost_free[i - 1] += v;
            } else {
                con_free[con - 1][i - 1] += v;
            }
            continue;
        }
        if block > nblocks {
            return Err(Error::UnknownBlock { line: ln, block });
        }
        let n = sizes[block - 1];
        if i == 0 || j == 0 || i > n || j > n {
            return Err(Error::Parse {
                line: ln,
                message: format!("entry ({i},{j}) outside block {block} of size {n}"),
            });
        }
        let (i, j) = if i <= j { (i - 1, j - 1) } else { (j - 1, i - 1) };
        if con == 0 {
            let c = &mut cost_blocks[block - 1];
            c.set(i, j, c.get(i, j) + v);
        } else {
            con_entries[con - 1][block - 1].push((i, j, v));
        }
    }

    let constraints: Vec<Constraint> = con_entries
        .into_iter()
        .zip(con_free)
        .zip(kinds.into_iter().zip(rhs))
        .map(|((blocks, free), (kind, b))| Constraint {
            blocks: blocks
                .into_iter()
                .zip(&sizes)
                .map(|(e, &n)| SparseSymmetric::new(n, e))
                .collect(),
            free,
            rhs: b,
            kind,
        })
        .collect();

    let structure = BlockStructure {
        psd_sizes: sizes,
        factorized_count: factorized,
        free_dim,
    };
    ConicSdpProblem::new_normalized(
        lines.name.unwrap_or_default(),
        structure,
        Cost {
            blocks: cost_blocks,
            free: cost_free,
        },
        constraints,
    )
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Serializes a problem. Entries are written constraint by constraint, the
/// free part first, then blocks in order, each block by row then column.
pub fn write_problem(problem: &ConicSdpProblem) -> String {
    use std::fmt::Write;
    let s = &problem.structure;
    let mut out = String::new();
    if !problem.name.is_empty() {
        let _ = writeln!(out, "\"{NAME_TAG} {}", problem.name);
    }
    let _ = writeln!(out, "{}", problem.num_constraints());
    let _ = writeln!(out, "{} {} {}", s.num_blocks(), s.free_dim, s.factorized_count);
    let sizes: Vec<String> = s.psd_sizes.iter().map(|n| n.to_string()).collect();
    let _ = writeln!(out, "{}", sizes.join(" "));
    let _ = writeln!(out, "{}", problem.kinds_string());
    let rhs: Vec<String> = problem.constraints.iter().map(|c| num(c.rhs)).collect();
    let _ = writeln!(out, "{}", rhs.join(" "));

    let mut entry = |con: usize, block: usize, i: usize, j: usize, v: f64| {
        let _ = writeln!(out, "{con} {block} {i} {j} {}", num(v));
    };
    for (t, &v) in problem.cost.free.iter().enumerate() {
        if v != 0.0 {
            entry(0, 0, t + 1, t + 1, v);
        }
    }
    for (b, c) in problem.cost.blocks.iter().enumerate() {
        for (i, j, v) in c.upper_entries() {
            entry(0, b + 1, i + 1, j + 1, v);
        }
    }
    for (k, c) in problem.constraints.iter().enumerate() {
        for (t, &v) in c.free.iter().enumerate() {
            if v != 0.0 {
                entry(k + 1, 0, t + 1, t + 1, v);
            }
        }
        for (b, a) in c.blocks.iter().enumerate() {
            for &(i, j, v) in a.entries() {
                entry(k + 1, b + 1, i + 1, j + 1, v);
            }
        }
    }
    out
}
