//! Text format for factored points.
//!
//! ```text
//! Y 1 3 2        factor of factorized block 1, 3 rows, 2 columns
//! 1.0 0.0        one line per row
//! 0.0 1.0
//! 0.0 0.0
//! X 2 2 2        tail block 2 as a full symmetric matrix
//! 1.0 0.5
//! 0.5 1.0
//! x 2            free variables on the next line
//! 0.3 -1.2
//! ```
//!
//! Block numbers are 1-based and count all PSD blocks, as in the problem file.
//! Lines starting with `#` are ignored.

use bmcert::factorization::{FactorizedPoint, PSD_TOL};
use bmcert::linalg::psd_factor;
use bmcert::model::{ConicSdpProblem, SymmetricMatrix};
use bmcert::{Error, Result};
use nalgebra::DMatrix;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn numbers<T: std::str::FromStr>(line: usize, text: &str) -> Result<Vec<T>> {
    text.split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(line, format!("cannot parse number from {t:?}"))))
        .collect()
}

struct Cursor<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
    end_line: usize,
}

impl<'a> Cursor<'a> {
    fn next(&mut self) -> Option<(usize, &'a str)> {
        let item = self.lines.get(self.pos).copied();
        self.pos += 1;
        item
    }

    fn rows(&mut self, count: usize, width: usize, what: &str) -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::with_capacity(count);
        for r in 0..count {
            let (ln, l) = self
                .next()
                .ok_or_else(|| parse_err(self.end_line, format!("missing row {} of {what}", r + 1)))?;
            let row: Vec<f64> = numbers(ln, l)?;
            if row.len() != width {
                return Err(parse_err(ln, format!("expected {width} entries in {what}, found {}", row.len())));
            }
            out.push(row);
        }
        Ok(out)
    }
}

/// Reads a point for `problem`; blocks not listed default to zero.
pub fn read_point(text: &str, problem: &ConicSdpProblem) -> Result<FactorizedPoint> {
    let s = &problem.structure;
    let k = s.factorized_count;
    let mut factors: Vec<Option<DMatrix<f64>>> = vec![None; k];
    let mut tails: Vec<SymmetricMatrix> = s.tail_sizes().iter().map(|&n| SymmetricMatrix::zeros(n)).collect();
    let mut free = vec![0.0; s.free_dim];

    let mut cur = Cursor {
        lines: text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .collect(),
        pos: 0,
        end_line: text.lines().count() + 1,
    };

    while let Some((ln, line)) = cur.next() {
        let mut toks = line.split_whitespace();
        let tag = toks.next().unwrap_or_default();
        let nums: Vec<usize> = numbers(ln, &toks.collect::<Vec<_>>().join(" "))?;
        match tag {
            "Y" | "X" => {
                let [j, rows, cols] = nums[..] else {
                    return Err(parse_err(ln, format!("{tag} header needs block, rows and columns")));
                };
                if j == 0 || j > s.num_blocks() {
                    return Err(Error::UnknownBlock { line: ln, block: j });
                }
                let n = s.psd_sizes[j - 1];
                let data = cur.rows(rows, cols, &format!("block {j}"))?;
                let m = DMatrix::from_fn(rows, cols, |r, c| data[r][c]);
                if tag == "Y" {
                    if j > k {
                        return Err(parse_err(ln, format!("block {j} is not factorized, use an X section")));
                    }
                    if rows != n || cols == 0 {
                        return Err(Error::DimensionMismatch {
                            context: "factor shape",
                            expected: n,
                            found: rows,
                        });
                    }
                    factors[j - 1] = Some(m);
                } else {
                    if rows != n || cols != n {
                        return Err(Error::DimensionMismatch {
                            context: "matrix block size",
                            expected: n,
                            found: if rows != n { rows } else { cols },
                        });
                    }
                    if j <= k {
                        let (y, min) = psd_factor(&m, n);
                        if min < -PSD_TOL * (1.0 + m.norm()) {
                            return Err(Error::NotPsd {
                                block: j - 1,
                                eigenvalue: min,
                            });
                        }
                        factors[j - 1] = Some(y);
                    } else {
                        tails[j - 1 - k] = SymmetricMatrix::from_dense(&m);
                    }
                }
            }
            "x" => {
                let [d] = nums[..] else {
                    return Err(parse_err(ln, "x header needs the free dimension"));
                };
                if d != s.free_dim {
                    return Err(Error::DimensionMismatch {
                        context: "free variables",
                        expected: s.free_dim,
                        found: d,
                    });
                }
                if d > 0 {
                    free = cur.rows(1, d, "free variables")?.remove(0);
                }
            }
            other => return Err(parse_err(ln, format!("unknown section {other:?}"))),
        }
    }

    let factors = factors
        .into_iter()
        .zip(s.factorized_sizes())
        .map(|(f, &n)| f.unwrap_or_else(|| DMatrix::zeros(n, 1)))
        .collect();
    let point = FactorizedPoint {
        factors,
        tail_blocks: tails,
        free,
    };
    point.check_shape(problem)?;
    Ok(point)
}

pub fn write_point(point: &FactorizedPoint) -> String {
    let mut out = String::new();
    let row = |out: &mut String, vals: &mut dyn Iterator<Item = f64>| {
        let parts: Vec<String> = vals.map(|v| format!("{v:.16e}")).collect();
        out.push_str(&parts.join(" "));
        out.push('\n');
    };
    for (j, y) in point.factors.iter().enumerate() {
        out.push_str(&format!("Y {} {} {}\n", j + 1, y.nrows(), y.ncols()));
        for r in 0..y.nrows() {
            row(&mut out, &mut (0..y.ncols()).map(|c| y[(r, c)]));
        }
    }
    let k = point.factors.len();
    for (t, x) in point.tail_blocks.iter().enumerate() {
        let n = x.dim();
        out.push_str(&format!("X {} {n} {n}\n", k + t + 1));
        for r in 0..n {
            row(&mut out, &mut (0..n).map(|c| x.get(r, c)));
        }
    }
    if !point.free.is_empty() {
        out.push_str(&format!("x {}\n", point.free.len()));
        row(&mut out, &mut point.free.iter().copied());
    }
    out
}
