//! Block-structured SDP data.
//!
//! A problem has PSD blocks of sizes `n₁..n_ℓ`, the first `k` of which are
//! factorized by the Burer-Monteiro solver, and a free vector of dimension `d`:
//!
//! ```text
//! min  Σ_j ⟨C_j, X_j⟩ + c·x
//! s.t. Σ_j ⟨A_ij, X_j⟩ + a_i·x  = b_i   (equalities, listed first)
//!      Σ_j ⟨A_ij, X_j⟩ + a_i·x ≥ b_i   (inequalities)
//!      X_j ⪰ 0
//! ```

mod format;
mod matrix;

pub use format::{read_problem, write_problem};
pub use matrix::{svec_dense, SparseSymmetric, SymmetricMatrix};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockStructure {
    pub psd_sizes: Vec<usize>,
    pub factorized_count: usize,
    pub free_dim: usize,
}

impl BlockStructure {
    pub fn new(psd_sizes: Vec<usize>, factorized_count: usize, free_dim: usize) -> Result<Self> {
        let s = Self {
            psd_sizes,
            factorized_count,
            free_dim,
        };
        let diags = s.diagnostics();
        if diags.is_empty() {
            Ok(s)
        } else {
            Err(Error::InvalidProblem(diags))
        }
    }

    /// One PSD block of size `n`, factorized, no free variables.
    pub fn single(n: usize) -> Self {
        Self {
            psd_sizes: vec![n],
            factorized_count: 1,
            free_dim: 0,
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.psd_sizes.len()
    }

    /// Sizes of the factorized blocks.
    pub fn factorized_sizes(&self) -> &[usize] {
        &self.psd_sizes[..self.factorized_count.min(self.psd_sizes.len())]
    }

    /// Sizes of the non-factorized (tail) blocks.
    pub fn tail_sizes(&self) -> &[usize] {
        &self.psd_sizes[self.factorized_count.min(self.psd_sizes.len())..]
    }

    fn diagnostics(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if self.psd_sizes.is_empty() && self.free_dim == 0 {
            out.push(Diagnostic::new(
                DiagnosticKind::EmptyStructure,
                None,
                None,
                "structure has no PSD blocks and no free variables".into(),
            ));
        }
        if self.factorized_count > self.psd_sizes.len() {
            out.push(Diagnostic::new(
                DiagnosticKind::FactorizedCount,
                None,
                None,
                format!(
                    "factorized_count {} exceeds number of blocks {}",
                    self.factorized_count,
                    self.psd_sizes.len()
                ),
            ));
        }
        for (j, &n) in self.psd_sizes.iter().enumerate() {
            if n == 0 {
                out.push(Diagnostic::new(
                    DiagnosticKind::ZeroBlockSize,
                    None,
                    Some(j),
                    format!("block {j} has size 0"),
                ));
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstraintKind {
    Equality,
    /// `⟨A_i, X⟩ ≥ b_i`.
    Inequality,
}

impl ConstraintKind {
    pub fn marker(self) -> char {
        match self {
            ConstraintKind::Equality => 'E',
            ConstraintKind::Inequality => 'I',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    /// One sparse matrix per PSD block.
    pub blocks: Vec<SparseSymmetric>,
    /// Coefficients on the free variables.
    pub free: Vec<f64>,
    pub rhs: f64,
    pub kind: ConstraintKind,
}

impl Constraint {
    /// A constraint touching only PSD blocks.
    pub fn new(blocks: Vec<SparseSymmetric>, rhs: f64, kind: ConstraintKind) -> Self {
        Self {
            blocks,
            free: Vec::new(),
            rhs,
            kind,
        }
    }

    pub fn with_free(mut self, free: Vec<f64>) -> Self {
        self.free = free;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cost {
    pub blocks: Vec<SymmetricMatrix>,
    pub free: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConicSdpProblem {
    pub name: String,
    pub structure: BlockStructure,
    pub cost: Cost,
    pub constraints: Vec<Constraint>,
}

/// Block-shaped vector: one symmetric matrix per PSD block plus a free part.
/// Used both for primal points and for values of the adjoint map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockVector {
    pub psd_blocks: Vec<SymmetricMatrix>,
    pub free: Vec<f64>,
}

pub type PrimalPoint = BlockVector;

impl BlockVector {
    pub fn zeros(structure: &BlockStructure) -> Self {
        Self {
            psd_blocks: structure
                .psd_sizes
                .iter()
                .map(|&n| SymmetricMatrix::zeros(n))
                .collect(),
            free: vec![0.0; structure.free_dim],
        }
    }

    /// `Σ_j ⟨self_j, other_j⟩ + self_free·other_free`.
    pub fn dot(&self, other: &BlockVector) -> f64 {
        let blocks: f64 = self
            .psd_blocks
            .iter()
            .zip(&other.psd_blocks)
            .map(|(a, b)| a.dot(b))
            .sum();
        let free: f64 = self.free.iter().zip(&other.free).map(|(a, b)| a * b).sum();
        blocks + free
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn matches(&self, structure: &BlockStructure) -> bool {
        self.psd_blocks.len() == structure.num_blocks()
            && self
                .psd_blocks
                .iter()
                .zip(&structure.psd_sizes)
                .all(|(b, &n)| b.dim() == n)
            && self.free.len() == structure.free_dim
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagnosticKind {
    EmptyStructure,
    FactorizedCount,
    ZeroBlockSize,
    CostShape,
    ConstraintBlockCount,
    ConstraintBlockDimension,
    ConstraintFreeLength,
    NonFinite,
    Ordering,
}

/// One violated problem invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub kind: DiagnosticKind,
    /// Offending constraint (0-based), if any.
    pub constraint: Option<usize>,
    /// Offending block (0-based), if any.
    pub block: Option<usize>,
    pub message: String,
}

impl Diagnostic {
    fn new(
        kind: DiagnosticKind,
        constraint: Option<usize>,
        block: Option<usize>,
        message: String,
    ) -> Self {
        Self {
            kind,
            constraint,
            block,
            message,
        }
    }
}

impl ConicSdpProblem {
    /// Builds a problem, rejecting it if any invariant fails (including the
    /// equalities-first ordering).
    pub fn new(
        name: impl Into<String>,
        structure: BlockStructure,
        cost: Cost,
        constraints: Vec<Constraint>,
    ) -> Result<Self> {
        let p = Self {
            name: name.into(),
            structure,
            cost,
            constraints,
        };
        let diags = validate(&p);
        if diags.is_empty() {
            Ok(p)
        } else {
            Err(Error::InvalidProblem(diags))
        }
    }

    /// Like [`ConicSdpProblem::new`], but first moves equalities ahead of
    /// inequalities (stable within each kind).
    pub fn new_normalized(
        name: impl Into<String>,
        structure: BlockStructure,
        cost: Cost,
        constraints: Vec<Constraint>,
    ) -> Result<Self> {
        let (mut eq, ineq): (Vec<_>, Vec<_>) = constraints
            .into_iter()
            .partition(|c| c.kind == ConstraintKind::Equality);
        eq.extend(ineq);
        Self::new(name, structure, cost, eq)
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_equalities(&self) -> usize {
        self.constraints
            .iter()
            .filter(|c| c.kind == ConstraintKind::Equality)
            .count()
    }

    pub fn num_inequalities(&self) -> usize {
        self.num_constraints() - self.num_equalities()
    }

    pub fn rhs(&self) -> Vec<f64> {
        self.constraints.iter().map(|c| c.rhs).collect()
    }

    pub fn kinds(&self) -> Vec<ConstraintKind> {
        self.constraints.iter().map(|c| c.kind).collect()
    }

    pub fn kinds_string(&self) -> String {
        self.constraints.iter().map(|c| c.kind.marker()).collect()
    }

    pub fn has_inequalities(&self) -> bool {
        self.num_inequalities() > 0
    }

    /// Objective value `⟨C, X⟩`.
    pub fn objective(&self, x: &PrimalPoint) -> f64 {
        let cost = BlockVector {
            psd_blocks: self.cost.blocks.clone(),
            free: self.cost.free.clone(),
        };
        cost.dot(x)
    }

    /// Constraint coefficient of free variable `t` in constraint `i`
    /// (missing trailing coefficients are zero).
    fn free_coef(c: &Constraint, t: usize) -> f64 {
        c.free.get(t).copied().unwrap_or(0.0)
    }

    /// Dense copies of all data, for the numerical kernels.
    pub(crate) fn dense(&self) -> DenseProblem {
        DenseProblem::new(self)
    }
}

/// Lists every violated invariant; empty iff the problem is well formed.
pub fn validate(problem: &ConicSdpProblem) -> Vec<Diagnostic> {
    let s = &problem.structure;
    let mut out = s.diagnostics();
    let nb = s.num_blocks();

    if problem.cost.blocks.len() != nb {
        out.push(Diagnostic::new(
            DiagnosticKind::CostShape,
            None,
            None,
            format!("cost has {} blocks, expected {nb}", problem.cost.blocks.len()),
        ));
    } else {
        for (j, (c, &n)) in problem.cost.blocks.iter().zip(&s.psd_sizes).enumerate() {
            if c.dim() != n {
                out.push(Diagnostic::new(
                    DiagnosticKind::CostShape,
                    None,
                    Some(j),
                    format!("cost block {j} has dimension {}, expected {n}", c.dim()),
                ));
            }
            if !c.is_finite() {
                out.push(Diagnostic::new(
                    DiagnosticKind::NonFinite,
                    None,
                    Some(j),
                    format!("cost block {j} has non-finite entries"),
                ));
            }
        }
    }
    if problem.cost.free.len() != s.free_dim {
        out.push(Diagnostic::new(
            DiagnosticKind::CostShape,
            None,
            None,
            format!(
                "cost free part has length {}, expected {}",
                problem.cost.free.len(),
                s.free_dim
            ),
        ));
    } else if problem.cost.free.iter().any(|v| !v.is_finite()) {
        out.push(Diagnostic::new(
            DiagnosticKind::NonFinite,
            None,
            None,
            "cost free part has non-finite entries".into(),
        ));
    }

    let mut seen_inequality = false;
    for (i, c) in problem.constraints.iter().enumerate() {
        if c.blocks.len() != nb {
            out.push(Diagnostic::new(
                DiagnosticKind::ConstraintBlockCount,
                Some(i),
                None,
                format!("constraint {i} has {} blocks, expected {nb}", c.blocks.len()),
            ));
        } else {
            for (j, (a, &n)) in c.blocks.iter().zip(&s.psd_sizes).enumerate() {
                if a.dim() != n {
                    out.push(Diagnostic::new(
                        DiagnosticKind::ConstraintBlockDimension,
                        Some(i),
                        Some(j),
                        format!(
                            "constraint {i} block {j} has dimension {}, expected {n}",
                            a.dim()
                        ),
                    ));
                }
                if !a.is_finite() {
                    out.push(Diagnostic::new(
                        DiagnosticKind::NonFinite,
                        Some(i),
                        Some(j),
                        format!("constraint {i} block {j} has non-finite entries"),
                    ));
                }
            }
        }
        if c.free.len() != s.free_dim {
            out.push(Diagnostic::new(
                DiagnosticKind::ConstraintFreeLength,
                Some(i),
                None,
                format!(
                    "constraint {i} free part has length {}, expected {}",
                    c.free.len(),
                    s.free_dim
                ),
            ));
        }
        if !c.rhs.is_finite() || c.free.iter().any(|v| !v.is_finite()) {
            out.push(Diagnostic::new(
                DiagnosticKind::NonFinite,
                Some(i),
                None,
                format!("constraint {i} has a non-finite right-hand side or free coefficient"),
            ));
        }
        match c.kind {
            ConstraintKind::Inequality => seen_inequality = true,
            ConstraintKind::Equality if seen_inequality => out.push(Diagnostic::new(
                DiagnosticKind::Ordering,
                Some(i),
                None,
                format!("equality constraint {i} follows an inequality"),
            )),
            ConstraintKind::Equality => {}
        }
    }
    out
}

fn check_point(problem: &ConicSdpProblem, x: &PrimalPoint) -> Result<()> {
    let s = &problem.structure;
    if x.psd_blocks.len() != s.num_blocks() {
        return Err(Error::DimensionMismatch {
            context: "primal point blocks",
            expected: s.num_blocks(),
            found: x.psd_blocks.len(),
        });
    }
    for (b, &n) in x.psd_blocks.iter().zip(&s.psd_sizes) {
        if b.dim() != n {
            return Err(Error::DimensionMismatch {
                context: "primal point block dimension",
                expected: n,
                found: b.dim(),
            });
        }
    }
    if x.free.len() != s.free_dim {
        return Err(Error::DimensionMismatch {
            context: "primal point free part",
            expected: s.free_dim,
            found: x.free.len(),
        });
    }
    Ok(())
}

/// `𝒜(X)`: component `i` is `Σ_j ⟨A_ij, X_j⟩ + a_i·x`.
pub fn apply_map(problem: &ConicSdpProblem, x: &PrimalPoint) -> Result<Vec<f64>> {
    check_point(problem, x)?;
    Ok(problem
        .constraints
        .iter()
        .map(|c| {
            let blocks: f64 = c
                .blocks
                .iter()
                .zip(&x.psd_blocks)
                .map(|(a, xb)| a.dot(xb))
                .sum();
            let free: f64 = c.free.iter().zip(&x.free).map(|(a, v)| a * v).sum();
            blocks + free
        })
        .collect())
}

/// `𝒜*(λ) = Σ_i λ_i A_i`, blockwise, with the free part `Σ_i λ_i a_i`.
pub fn apply_adjoint(problem: &ConicSdpProblem, lambda: &[f64]) -> Result<BlockVector> {
    if lambda.len() != problem.num_constraints() {
        return Err(Error::DimensionMismatch {
            context: "multiplier length",
            expected: problem.num_constraints(),
            found: lambda.len(),
        });
    }
    let mut out = BlockVector::zeros(&problem.structure);
    for (c, &l) in problem.constraints.iter().zip(lambda) {
        if l == 0.0 {
            continue;
        }
        for (a, target) in c.blocks.iter().zip(out.psd_blocks.iter_mut()) {
            a.add_scaled_to_symmetric(l, target);
        }
        for (t, v) in out.free.iter_mut().enumerate() {
            *v += l * ConicSdpProblem::free_coef(c, t);
        }
    }
    Ok(out)
}

/// Dense working copy of a problem.
#[derive(Debug, Clone)]
pub(crate) struct DenseProblem {
    pub sizes: Vec<usize>,
    pub free_dim: usize,
    pub cost: Vec<DMatrix<f64>>,
    pub cost_free: DVector<f64>,
    /// `cons[i][j]` is block `j` of constraint `i`.
    pub cons: Vec<Vec<DMatrix<f64>>>,
    /// `m × d` free coefficients.
    pub cons_free: DMatrix<f64>,
    pub rhs: DVector<f64>,
    pub is_ineq: Vec<bool>,
}

impl DenseProblem {
    fn new(p: &ConicSdpProblem) -> Self {
        let m = p.num_constraints();
        let d = p.structure.free_dim;
        Self {
            sizes: p.structure.psd_sizes.clone(),
            free_dim: d,
            cost: p.cost.blocks.iter().map(|c| c.to_dense()).collect(),
            cost_free: DVector::from_column_slice(&p.cost.free),
            cons: p
                .constraints
                .iter()
                .map(|c| c.blocks.iter().map(|a| a.to_dense()).collect())
                .collect(),
            cons_free: DMatrix::from_fn(m, d, |i, t| {
                ConicSdpProblem::free_coef(&p.constraints[i], t)
            }),
            rhs: DVector::from_iterator(m, p.constraints.iter().map(|c| c.rhs)),
            is_ineq: p
                .constraints
                .iter()
                .map(|c| c.kind == ConstraintKind::Inequality)
                .collect(),
        }
    }

    pub fn m(&self) -> usize {
        self.cons.len()
    }

    /// `C − 𝒜*(λ)` per block, and its free part.
    pub fn slack(&self, lambda: &[f64]) -> (Vec<DMatrix<f64>>, DVector<f64>) {
        let mut blocks = self.cost.clone();
        for (i, &l) in lambda.iter().enumerate() {
            if l == 0.0 {
                continue;
            }
            for (s, a) in blocks.iter_mut().zip(&self.cons[i]) {
                *s -= a * l;
            }
        }
        let lam = DVector::from_column_slice(lambda);
        let free = &self.cost_free - self.cons_free.transpose() * lam;
        (blocks, free)
    }

    /// `𝒜(X)` for dense blocks `X_j` and free vector `x`.
    pub fn map(&self, xs: &[DMatrix<f64>], free: &DVector<f64>) -> DVector<f64> {
        let mut out = &self.cons_free * free;
        for (i, row) in self.cons.iter().enumerate() {
            out[i] += row.iter().zip(xs).map(|(a, x)| a.dot(x)).sum::<f64>();
        }
        out
    }

    pub fn objective(&self, xs: &[DMatrix<f64>], free: &DVector<f64>) -> f64 {
        self.cost.iter().zip(xs).map(|(c, x)| c.dot(x)).sum::<f64>() + self.cost_free.dot(free)
    }
}
