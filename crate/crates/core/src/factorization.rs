//! Burer-Monteiro lift/unlift and rank bounds.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{matrix_rank, psd_factor, sym_eigen, RANK_TOL};
use crate::model::{svec_dense, ConicSdpProblem, ConstraintKind, PrimalPoint, SymmetricMatrix};
use crate::oracle;

/// Default subset-enumeration cap for [`m_prime_inequality`].
pub const EXACT_ENUMERATION_CAP: usize = 20;

/// Tolerance on negative eigenvalues accepted by [`factor`].
pub const PSD_TOL: f64 = 1e-9;

/// The k-th triangular number `k(k+1)/2`.
pub const fn triangular(k: usize) -> usize {
    k * (k + 1) / 2
}

/// `(Y₁..Y_k, X̄, x)`: factors of the leading blocks, the remaining PSD blocks
/// as matrices, and the free variables.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizedPoint {
    pub factors: Vec<DMatrix<f64>>,
    pub tail_blocks: Vec<SymmetricMatrix>,
    pub free: Vec<f64>,
}

impl FactorizedPoint {
    pub fn ranks(&self) -> Vec<usize> {
        self.factors.iter().map(|y| y.ncols()).collect()
    }

    /// Checks shapes against the problem's block structure.
    pub fn check_shape(&self, problem: &ConicSdpProblem) -> Result<()> {
        let s = &problem.structure;
        let k = s.factorized_count;
        if self.factors.len() != k {
            return Err(Error::DimensionMismatch {
                context: "number of factors",
                expected: k,
                found: self.factors.len(),
            });
        }
        for (y, &n) in self.factors.iter().zip(s.factorized_sizes()) {
            if y.nrows() != n {
                return Err(Error::DimensionMismatch {
                    context: "factor rows",
                    expected: n,
                    found: y.nrows(),
                });
            }
            if y.ncols() == 0 {
                return Err(Error::DimensionMismatch {
                    context: "factor columns",
                    expected: 1,
                    found: 0,
                });
            }
        }
        if self.tail_blocks.len() != s.tail_sizes().len() {
            return Err(Error::DimensionMismatch {
                context: "number of tail blocks",
                expected: s.tail_sizes().len(),
                found: self.tail_blocks.len(),
            });
        }
        for (x, &n) in self.tail_blocks.iter().zip(s.tail_sizes()) {
            if x.dim() != n {
                return Err(Error::DimensionMismatch {
                    context: "tail block dimension",
                    expected: n,
                    found: x.dim(),
                });
            }
        }
        if self.free.len() != s.free_dim {
            return Err(Error::DimensionMismatch {
                context: "free variables",
                expected: s.free_dim,
                found: self.free.len(),
            });
        }
        Ok(())
    }

    /// Smallest eigenvalue among the tail blocks (`+∞` when there are none).
    pub fn tail_min_eigenvalue(&self) -> f64 {
        self.tail_blocks
            .iter()
            .map(|x| crate::linalg::min_eigenpair(&x.to_dense()).0)
            .fold(f64::INFINITY, f64::min)
    }
}

/// `q(Y)`: replaces every factor by `Y_j Y_jᵀ`.
pub fn lift(point: &FactorizedPoint) -> PrimalPoint {
    let mut blocks: Vec<SymmetricMatrix> = point
        .factors
        .iter()
        .map(|y| SymmetricMatrix::from_dense(&(y * y.transpose())))
        .collect();
    blocks.extend(point.tail_blocks.iter().cloned());
    PrimalPoint {
        psd_blocks: blocks,
        free: point.free.clone(),
    }
}

/// Factors the leading `ranks.len()` blocks of `x` as `Y_j Y_jᵀ` with `Y_j`
/// of width `ranks[j]` (columns past the numerical rank are zero).
pub fn factor(x: &PrimalPoint, ranks: &[usize]) -> Result<FactorizedPoint> {
    if ranks.len() > x.psd_blocks.len() {
        return Err(Error::DimensionMismatch {
            context: "ranks",
            expected: x.psd_blocks.len(),
            found: ranks.len(),
        });
    }
    let mut factors = Vec::with_capacity(ranks.len());
    for (j, (&p, block)) in ranks.iter().zip(&x.psd_blocks).enumerate() {
        let dense = block.to_dense();
        let (vals, _) = sym_eigen(&dense);
        let n = block.dim();
        let top = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if n > 0 && vals[0] < -PSD_TOL * top.max(1.0) {
            return Err(Error::NotPsd {
                block: j,
                eigenvalue: vals[0],
            });
        }
        let rank = vals.iter().filter(|&&v| v > RANK_TOL * top).count();
        if rank > p {
            return Err(Error::RankTooSmall {
                block: j,
                rank,
                requested: p,
            });
        }
        let (mut y, _) = psd_factor(&dense, p);
        for c in rank..p.min(n) {
            y.column_mut(c).fill(0.0);
        }
        factors.push(y);
    }
    Ok(FactorizedPoint {
        factors,
        tail_blocks: x.psd_blocks[ranks.len()..].to_vec(),
        free: x.free.clone(),
    })
}

/// Adds the column `α·v` to factor `block`, so the lift changes by `α² vvᵀ`.
pub fn append_column(
    point: &FactorizedPoint,
    block: usize,
    v: &DVector<f64>,
    alpha: f64,
) -> Result<FactorizedPoint> {
    let y = point.factors.get(block).ok_or(Error::DimensionMismatch {
        context: "factor index",
        expected: point.factors.len(),
        found: block,
    })?;
    if v.len() != y.nrows() {
        return Err(Error::DimensionMismatch {
            context: "appended column",
            expected: y.nrows(),
            found: v.len(),
        });
    }
    let p = y.ncols();
    let mut grown = y.clone().insert_column(p, 0.0);
    grown.set_column(p, &(v * alpha));
    let mut out = point.clone();
    out.factors[block] = grown;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundMethod {
    ExactEnumeration,
    RankUpperBound,
    ConicFormula,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankBoundReport {
    pub m_prime: usize,
    /// Minimal rank per factorized block.
    pub ranks: Vec<usize>,
    pub method: BoundMethod,
}

/// Least `p` with `τ(p) > min(m′, τ(n))`, capped at `n`.
pub fn minimal_rank(m_prime: usize, n: usize) -> usize {
    let target = m_prime.min(triangular(n));
    let mut p = 1;
    while triangular(p) <= target && p < n {
        p += 1;
    }
    p.min(n.max(1))
}

fn report(problem: &ConicSdpProblem, m_prime: usize, method: BoundMethod) -> RankBoundReport {
    RankBoundReport {
        m_prime,
        ranks: problem
            .structure
            .factorized_sizes()
            .iter()
            .map(|&n| minimal_rank(m_prime, n))
            .collect(),
        method,
    }
}

/// Vectorized constraint `i` (all blocks plus free part) in an orthonormal basis.
fn constraint_vector(problem: &ConicSdpProblem, i: usize) -> Vec<f64> {
    let c = &problem.constraints[i];
    let mut v = Vec::new();
    for a in &c.blocks {
        v.extend(svec_dense(&a.to_dense()));
    }
    v.extend(c.free.iter().copied());
    v
}

/// Numerical rank of `{A_i : i ∈ subset}`.
pub fn constraint_rank(problem: &ConicSdpProblem, subset: &[usize]) -> usize {
    if subset.is_empty() {
        return 0;
    }
    let rows: Vec<Vec<f64>> = subset.iter().map(|&i| constraint_vector(problem, i)).collect();
    let cols = rows[0].len();
    let mat = DMatrix::from_fn(rows.len(), cols, |r, c| rows[r][c]);
    matrix_rank(&mat)
}

/// Problem with the inequalities in `active` turned into equalities.
pub fn with_active(problem: &ConicSdpProblem, active: &[usize]) -> ConicSdpProblem {
    let mut p = problem.clone();
    for &i in active {
        p.constraints[i].kind = ConstraintKind::Equality;
    }
    let (mut eq, ineq): (Vec<_>, Vec<_>) = p
        .constraints
        .into_iter()
        .partition(|c| c.kind == ConstraintKind::Equality);
    eq.extend(ineq);
    p.constraints = eq;
    p
}

/// `m′` for a single-block problem: the largest number of linearly
/// independent constraints that can be simultaneously active.
///
/// Without inequalities this is `rank 𝒜`. With at most `cap` constraints the
/// inequality subsets are searched depth-first, with feasibility of each
/// candidate active set decided by the oracle's phase-one solve; above the
/// cap `min(m, rank 𝒜)` is returned.
pub fn m_prime_inequality(problem: &ConicSdpProblem, cap: usize) -> Result<RankBoundReport> {
    let s = &problem.structure;
    if s.num_blocks() != 1 || s.free_dim != 0 {
        return Err(Error::UnsupportedStructure(
            "m′ enumeration needs a single PSD block and no free variables".into(),
        ));
    }
    let m = problem.num_constraints();
    let all: Vec<usize> = (0..m).collect();
    let full_rank = constraint_rank(problem, &all);
    if m == 0 || !problem.has_inequalities() {
        return Ok(report(problem, full_rank, BoundMethod::RankUpperBound));
    }
    if m > cap {
        return Ok(report(problem, m.min(full_rank), BoundMethod::RankUpperBound));
    }
    let eqs: Vec<usize> = (0..problem.num_equalities()).collect();
    let ineqs: Vec<usize> = (problem.num_equalities()..m).collect();
    if !oracle::is_feasible(problem)? {
        // Nothing can be active on an empty feasible set.
        return Ok(report(problem, 0, BoundMethod::ExactEnumeration));
    }
    let mut search = ActiveSearch {
        problem,
        eqs: &eqs,
        ineqs: &ineqs,
        full_rank,
        best: constraint_rank(problem, &eqs),
    };
    search.descend(&mut Vec::new(), 0)?;
    Ok(report(problem, search.best, BoundMethod::ExactEnumeration))
}

struct ActiveSearch<'a> {
    problem: &'a ConicSdpProblem,
    eqs: &'a [usize],
    ineqs: &'a [usize],
    full_rank: usize,
    best: usize,
}

impl ActiveSearch<'_> {
    fn rank_with(&self, chosen: &[usize], extra: &[usize]) -> usize {
        let mut idx: Vec<usize> = self.eqs.to_vec();
        idx.extend_from_slice(chosen);
        idx.extend_from_slice(extra);
        constraint_rank(self.problem, &idx)
    }

    /// `chosen` is a feasible active set; try extending it with inequalities
    /// from position `next` on. Feasibility is inherited by subsets and rank is
    /// monotone, which gives both prunes.
    fn descend(&mut self, chosen: &mut Vec<usize>, next: usize) -> Result<()> {
        if self.best == self.full_rank {
            return Ok(());
        }
        if self.rank_with(chosen, &self.ineqs[next..]) <= self.best {
            return Ok(());
        }
        for pos in next..self.ineqs.len() {
            let i = self.ineqs[pos];
            chosen.push(i);
            let r = self.rank_with(chosen, &[]);
            let useful = self.rank_with(chosen, &self.ineqs[pos + 1..]) > self.best;
            if useful && oracle::is_feasible(&with_active(self.problem, chosen))? {
                self.best = self.best.max(r);
                self.descend(chosen, pos + 1)?;
            }
            chosen.pop();
            if self.best == self.full_rank {
                break;
            }
        }
        Ok(())
    }
}

/// `m′ = max over tail ranks of m − d − Σ τ(r_j)`, for caller-supplied
/// candidate ranks of each non-factorized block.
pub fn m_prime_conic(problem: &ConicSdpProblem, tail_ranks: &[Vec<usize>]) -> Result<RankBoundReport> {
    let tails = problem.structure.tail_sizes();
    if tail_ranks.len() != tails.len() {
        return Err(Error::DimensionMismatch {
            context: "tail rank ranges",
            expected: tails.len(),
            found: tail_ranks.len(),
        });
    }
    let mut penalty = 0usize;
    for (j, range) in tail_ranks.iter().enumerate() {
        let smallest = range.iter().min().ok_or(Error::EmptyRankRange(j))?;
        penalty += triangular(*smallest);
    }
    let m = problem.num_constraints();
    let d = problem.structure.free_dim;
    let m_prime = m.saturating_sub(d).saturating_sub(penalty);
    Ok(report(problem, m_prime, BoundMethod::ConicFormula))
}

/// Cheap starting bound used by the staircase: exact enumeration for small
/// single-block problems, the conic formula with all tail ranks allowed
/// otherwise.
pub fn default_rank_bound(problem: &ConicSdpProblem) -> Result<RankBoundReport> {
    let s = &problem.structure;
    if s.num_blocks() == 1 && s.free_dim == 0 {
        return m_prime_inequality(problem, EXACT_ENUMERATION_CAP);
    }
    let all: Vec<usize> = (0..problem.num_constraints()).collect();
    let rank = constraint_rank(problem, &all);
    let ranges: Vec<Vec<usize>> = s.tail_sizes().iter().map(|&n| (0..=n).collect()).collect();
    let mut r = m_prime_conic(problem, &ranges)?;
    if rank < r.m_prime {
        r = report(problem, rank, BoundMethod::RankUpperBound);
    }
    Ok(r)
}
