//! Multiplier recovery, KKT residuals, slack-matrix certificates, escape
//! directions and the rank staircase.
//!
//! A point `Y` with multipliers `λ` is a global minimizer as soon as the slack
//! matrix `S(λ) = C − 𝒜*(λ)` is PSD on every block, `S(λ)Y = 0`, the free
//! part of the slack vanishes, and the usual feasibility, sign and
//! complementarity conditions hold. When some block of `S(λ)` has a negative
//! eigenvalue the corresponding eigenvector yields a descent direction, either
//! inside the kernel of a rank-deficient factor or by adding a column.

mod nnls;
mod staircase;

pub use nnls::mixed_nnls;
pub use staircase::{staircase_solve, SolveReport, StageAction, StageRecord, StaircaseConfig};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factorization::FactorizedPoint;
use crate::linalg::{matrix_rank, null_space, singular_values, rank_from_values, spectral_norm_sym, sym_eigen};
use crate::local_solver::{Kernel, SolverPoint};
use crate::model::{ConicSdpProblem, ConstraintKind, SymmetricMatrix};

pub const ACTIVE_TOL: f64 = 1e-7;
pub const CERT_TOL: f64 = 1e-7;
/// Relative tolerance for every KKT residual in [`certify`].
pub const KKT_TOL: f64 = 1e-6;
/// Inequality multipliers down to this value count as nonnegative.
pub const SIGN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MultiplierSource {
    FromSolver,
    LeastSquares,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    pub lambda: Vec<f64>,
    pub active_set: Vec<usize>,
    pub source: MultiplierSource,
    /// Norm of the stationarity residual `∇f − Σ λᵢ ∇cᵢ` they achieve.
    pub residual: f64,
    /// Set when the least-squares system was rank deficient (the minimum-norm
    /// solution was returned).
    pub rank_deficient: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KktResiduals {
    pub stationarity: f64,
    pub feasibility: f64,
    pub complementarity: f64,
    pub sign: f64,
    pub free: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Verdict {
    GlobalOptimal,
    Escapable {
        block: usize,
        eigenvector: Vec<f64>,
        eigenvalue: f64,
    },
    Indeterminate,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::GlobalOptimal => "GlobalOptimal",
            Verdict::Escapable { .. } => "Escapable",
            Verdict::Indeterminate => "Indeterminate",
        }
    }

    pub fn is_global(&self) -> bool {
        matches!(self, Verdict::GlobalOptimal)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// Ascending eigenvalues of each block of `S(λ)`.
    pub slack_spectrum: Vec<Vec<f64>>,
    pub slack_norms: Vec<f64>,
    pub kkt: KktResiduals,
    /// Whether each residual met its tolerance.
    pub kkt_passed: bool,
    /// `C•X + c·x − bᵀλ`.
    pub duality_gap: f64,
    pub verdict: Verdict,
    pub licq: bool,
}

impl Certificate {
    /// Smallest eigenvalue over all blocks of the slack (`+∞` without blocks).
    pub fn slack_min_eig(&self) -> f64 {
        self.slack_spectrum
            .iter()
            .filter_map(|s| s.first().copied())
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderReport {
    pub passes: bool,
    pub min_eigenvalue: f64,
    /// Minimizing tangent direction, one matrix per block plus the free part.
    pub worst_direction: Option<(Vec<DMatrix<f64>>, DVector<f64>)>,
    pub null_dim: usize,
    pub vacuous: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EscapeDirection {
    /// `U = v zᵀ` with `Y_j z = 0`; re-solve at the same rank from `Y + αU`.
    Kernel { block: usize, direction: DMatrix<f64> },
    /// Append `v` as a new column of `Y_j`.
    RankIncrement { block: usize, column: DVector<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LicqReport {
    pub holds: bool,
    pub jacobian_rank: usize,
    pub active_count: usize,
}

fn lifted(point: &FactorizedPoint) -> Vec<DMatrix<f64>> {
    point
        .factors
        .iter()
        .map(|y| y * y.transpose())
        .chain(point.tail_blocks.iter().map(|x| x.to_dense()))
        .collect()
}

fn residual(problem: &ConicSdpProblem, point: &FactorizedPoint) -> Result<(DVector<f64>, Vec<DMatrix<f64>>)> {
    point.check_shape(problem)?;
    let dense = problem.dense();
    let xs = lifted(point);
    let free = DVector::from_column_slice(&point.free);
    Ok((dense.map(&xs, &free) - &dense.rhs, xs))
}

fn check_len(problem: &ConicSdpProblem, lambda: &[f64]) -> Result<()> {
    if lambda.len() != problem.num_constraints() {
        return Err(Error::DimensionMismatch {
            context: "multipliers",
            expected: problem.num_constraints(),
            found: lambda.len(),
        });
    }
    Ok(())
}

/// Equalities plus the inequalities with `|𝒜(X)ᵢ − bᵢ| ≤ tol·(1+|bᵢ|)`.
pub fn active_set(problem: &ConicSdpProblem, point: &FactorizedPoint, tol: f64) -> Result<Vec<usize>> {
    let (c, _) = residual(problem, point)?;
    Ok(problem
        .constraints
        .iter()
        .enumerate()
        .filter(|(i, con)| con.kind == ConstraintKind::Equality || c[*i].abs() <= tol * (1.0 + con.rhs.abs()))
        .map(|(i, _)| i)
        .collect())
}

/// The all-blocks factored view the kernel works on.
fn solver_view(problem: &ConicSdpProblem, point: &FactorizedPoint) -> Result<(Kernel, DVector<f64>)> {
    point.check_shape(problem)?;
    let sp = SolverPoint::from_factorized(point);
    let kernel = Kernel::new(problem, &sp.ranks());
    let v = sp.to_vector();
    Ok((kernel, v))
}

/// Least-squares multipliers: minimizes the stationarity residual
/// `‖(2(C − 𝒜*(λ))Y_j)_j ⊕ (c − A_fᵀλ)‖` with inactive inequalities fixed at
/// zero and active ones constrained nonnegative.
pub fn estimate_multipliers(problem: &ConicSdpProblem, point: &FactorizedPoint) -> Result<Multipliers> {
    let active = active_set(problem, point, ACTIVE_TOL)?;
    let (kernel, v) = solver_view(problem, point)?;
    let pe = kernel.eval_point(&v)?;
    let zero = DVector::zeros(kernel.m());
    let shifted = kernel.shifted(&pe, &zero, 0.0);
    let (g0, _) = kernel.gradient(&pe, &shifted);
    let jac = kernel.jacobian(&pe);
    let a = DMatrix::from_fn(g0.len(), active.len(), |r, c| jac[(active[c], r)]);
    let nonneg: Vec<bool> = active
        .iter()
        .map(|&i| problem.constraints[i].kind == ConstraintKind::Inequality)
        .collect();
    let (sol, rank_deficient) = mixed_nnls(&a, &g0, &nonneg);
    let mut lambda = vec![0.0; kernel.m()];
    for (k, &i) in active.iter().enumerate() {
        lambda[i] = sol[k];
    }
    let res = (&g0 - &a * &sol).norm();
    Ok(Multipliers {
        lambda,
        active_set: active,
        source: MultiplierSource::LeastSquares,
        residual: res,
        rank_deficient,
    })
}

/// Wraps solver multipliers: zeroes inactive inequalities, clips tiny
/// negative inequality values and records the stationarity residual.
pub fn multipliers_from_solver(
    problem: &ConicSdpProblem,
    point: &FactorizedPoint,
    lambda: &[f64],
) -> Result<Multipliers> {
    check_len(problem, lambda)?;
    let active = active_set(problem, point, ACTIVE_TOL)?;
    let mut lam = vec![0.0; lambda.len()];
    for &i in &active {
        lam[i] = if problem.constraints[i].kind == ConstraintKind::Inequality {
            lambda[i].max(0.0)
        } else {
            lambda[i]
        };
    }
    let (kernel, v) = solver_view(problem, point)?;
    let pe = kernel.eval_point(&v)?;
    let shifted = kernel.shifted(&pe, &DVector::from_column_slice(&lam), 0.0);
    let (g, _) = kernel.gradient(&pe, &shifted);
    Ok(Multipliers {
        lambda: lam,
        active_set: active,
        source: MultiplierSource::FromSolver,
        residual: g.norm(),
        rank_deficient: false,
    })
}

/// `S(λ) = C − 𝒜*(λ)` blockwise, plus the free part `c − A_fᵀλ`.
pub fn slack_matrix(problem: &ConicSdpProblem, lambda: &[f64]) -> Result<(Vec<SymmetricMatrix>, Vec<f64>)> {
    check_len(problem, lambda)?;
    let (blocks, free) = problem.dense().slack(lambda);
    Ok((
        blocks.iter().map(SymmetricMatrix::from_dense).collect(),
        free.iter().copied().collect(),
    ))
}

pub fn kkt_residuals(problem: &ConicSdpProblem, point: &FactorizedPoint, mult: &Multipliers) -> Result<KktResiduals> {
    check_len(problem, &mult.lambda)?;
    let (c, xs) = residual(problem, point)?;
    let (slack, free) = problem.dense().slack(&mult.lambda);
    let k = problem.structure.factorized_count;
    let mut stationarity = 0.0f64;
    let mut complementarity = 0.0f64;
    for (j, s) in slack.iter().enumerate() {
        if j < k {
            stationarity = stationarity.max((s * &point.factors[j]).norm());
        } else {
            let (y, _) = crate::linalg::psd_factor(&xs[j], xs[j].nrows());
            stationarity = stationarity.max((s * y).norm());
            complementarity = complementarity.max(s.dot(&xs[j]).abs());
        }
    }
    let mut feas = 0.0;
    let mut sign = 0.0f64;
    for (i, con) in problem.constraints.iter().enumerate() {
        match con.kind {
            ConstraintKind::Equality => feas += c[i] * c[i],
            ConstraintKind::Inequality => {
                feas += c[i].min(0.0).powi(2);
                complementarity = complementarity.max((mult.lambda[i] * c[i]).abs());
                sign = sign.max(-mult.lambda[i]);
            }
        }
    }
    Ok(KktResiduals {
        stationarity,
        feasibility: feas.sqrt(),
        complementarity,
        sign: sign.max(0.0),
        free: free.norm(),
    })
}

/// Minimum of the Lagrangian Hessian quadratic form `Σ_j 2 S_j•U_jY_j…` over
/// the null space of the active-constraint Jacobian (all blocks and the free
/// part), compared against `−tol·(1 + max‖S_j‖₂)`.
pub fn second_order_check(
    problem: &ConicSdpProblem,
    point: &FactorizedPoint,
    mult: &Multipliers,
    tol: f64,
) -> Result<SecondOrderReport> {
    check_len(problem, &mult.lambda)?;
    let (kernel, v) = solver_view(problem, point)?;
    let pe = kernel.eval_point(&v)?;
    let jac = kernel.jacobian(&pe);
    let active = &mult.active_set;
    let j_active = DMatrix::from_fn(active.len(), kernel.layout.len(), |r, c| jac[(active[r], c)]);
    let basis = null_space(&j_active);
    let dim = basis.ncols();
    let (slack, _) = kernel.dense.slack(&mult.lambda);
    let scale = 1.0 + slack.iter().map(spectral_norm_sym).fold(0.0, f64::max);
    if dim == 0 {
        return Ok(SecondOrderReport {
            passes: true,
            min_eigenvalue: f64::INFINITY,
            worst_direction: None,
            null_dim: 0,
            vacuous: true,
        });
    }
    let layout = &kernel.layout;
    let hess_cols: Vec<DVector<f64>> = (0..dim)
        .map(|c| {
            let u = basis.column(c).into_owned();
            let mut out = DVector::zeros(layout.len());
            for (j, s) in slack.iter().enumerate() {
                layout.set_block(&mut out, j, &(s * layout.block(&u, j) * 2.0));
            }
            out
        })
        .collect();
    let reduced = DMatrix::from_fn(dim, dim, |r, c| basis.column(r).dot(&hess_cols[c]));
    let (vals, vecs) = sym_eigen(&reduced);
    let min = vals[0];
    let dir = &basis * vecs.column(0);
    let (blocks, free) = layout.unpack(&dir);
    Ok(SecondOrderReport {
        passes: min >= -tol * scale,
        min_eigenvalue: min,
        worst_direction: Some((blocks, free)),
        null_dim: dim,
        vacuous: false,
    })
}

fn kkt_pass(problem: &ConicSdpProblem, point: &FactorizedPoint, mult: &Multipliers, kkt: &KktResiduals, slack_norms: &[f64]) -> bool {
    let b_scale = 1.0 + problem.constraints.iter().fold(0.0f64, |a, c| a.max(c.rhs.abs()));
    let s_scale = 1.0 + slack_norms.iter().fold(0.0f64, |a, &b| a.max(b));
    let y_scale = 1.0
        + point
            .factors
            .iter()
            .map(|y| y.norm())
            .chain(point.tail_blocks.iter().map(|x| x.frobenius_norm().sqrt()))
            .fold(0.0, f64::max);
    let lam_scale = 1.0 + mult.lambda.iter().fold(0.0f64, |a, l| a.max(l.abs()));
    let c_scale = 1.0 + problem.cost.free.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    kkt.stationarity <= KKT_TOL * s_scale * y_scale
        && kkt.feasibility <= KKT_TOL * b_scale
        && kkt.complementarity <= KKT_TOL * (lam_scale * b_scale).max(s_scale * y_scale * y_scale)
        && kkt.sign <= SIGN_TOL
        && kkt.free <= KKT_TOL * c_scale * lam_scale
}

/// Evaluates the certificate. `GlobalOptimal` needs every KKT residual to
/// pass and `λ_min(S_j) ≥ −cert_tol·(1 + ‖S_j‖₂)` on every block; otherwise
/// the most negative (relative) block eigenpair below that threshold gives
/// `Escapable`, and anything else is `Indeterminate`.
pub fn certify(
    problem: &ConicSdpProblem,
    point: &FactorizedPoint,
    mult: &Multipliers,
    cert_tol: f64,
) -> Result<Certificate> {
    let kkt = kkt_residuals(problem, point, mult)?;
    let (slack, _) = problem.dense().slack(&mult.lambda);
    let mut spectrum = Vec::with_capacity(slack.len());
    let mut norms = Vec::with_capacity(slack.len());
    let mut worst: Option<(f64, usize, f64, Vec<f64>)> = None;
    for (j, s) in slack.iter().enumerate() {
        let (vals, vecs) = sym_eigen(s);
        let norm = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let threshold = cert_tol * (1.0 + norm);
        if !vals.is_empty() && vals[0] < -threshold {
            let rel = vals[0] / (1.0 + norm);
            if worst.as_ref().is_none_or(|w| rel < w.0) {
                worst = Some((rel, j, vals[0], vecs.column(0).iter().copied().collect()));
            }
        }
        spectrum.push(vals.iter().copied().collect());
        norms.push(norm);
    }
    let passed = kkt_pass(problem, point, mult, &kkt, &norms);
    let verdict = match worst {
        Some((_, block, eigenvalue, eigenvector)) => Verdict::Escapable {
            block,
            eigenvector,
            eigenvalue,
        },
        None if passed => Verdict::GlobalOptimal,
        None => Verdict::Indeterminate,
    };
    let xs = lifted(point);
    let dense = problem.dense();
    let primal = dense.objective(&xs, &DVector::from_column_slice(&point.free));
    let dual: f64 = dense.rhs.iter().zip(&mult.lambda).map(|(b, l)| b * l).sum();
    Ok(Certificate {
        slack_spectrum: spectrum,
        slack_norms: norms,
        kkt,
        kkt_passed: passed,
        duality_gap: primal - dual,
        verdict,
        licq: licq_check(problem, point)?.holds,
    })
}

/// Descent direction from an `Escapable` certificate at `block`.
pub fn escape_direction(point: &FactorizedPoint, certificate: &Certificate, block: usize) -> Result<EscapeDirection> {
    let Verdict::Escapable {
        block: b,
        eigenvector,
        ..
    } = &certificate.verdict
    else {
        return Err(Error::NumericalFailure("certificate is not escapable".into()));
    };
    if *b != block {
        return Err(Error::NumericalFailure(format!(
            "certificate is escapable at block {b}, not {block}"
        )));
    }
    let v = DVector::from_column_slice(eigenvector);
    let y = if block < point.factors.len() {
        point.factors[block].clone()
    } else {
        let x = &point.tail_blocks[block - point.factors.len()];
        crate::linalg::psd_factor(&x.to_dense(), x.dim()).0
    };
    let p = y.ncols();
    let rank = rank_from_values(&singular_values(&y));
    if rank < p {
        let kernel = null_space(&y);
        let z = kernel.column(kernel.ncols() - 1).into_owned();
        return Ok(EscapeDirection::Kernel {
            block,
            direction: &v * z.transpose(),
        });
    }
    Ok(EscapeDirection::RankIncrement { block, column: v })
}

/// LICQ at `point`: the gradients `2AᵢY` (and the free columns) of the
/// active constraints are linearly independent.
pub fn licq_check(problem: &ConicSdpProblem, point: &FactorizedPoint) -> Result<LicqReport> {
    let active = active_set(problem, point, ACTIVE_TOL)?;
    let (kernel, v) = solver_view(problem, point)?;
    let pe = kernel.eval_point(&v)?;
    let jac = kernel.jacobian(&pe);
    let rows = DMatrix::from_fn(active.len(), jac.ncols(), |r, c| jac[(active[r], c)]);
    let rank = if active.is_empty() { 0 } else { matrix_rank(&rows) };
    Ok(LicqReport {
        holds: rank == active.len(),
        jacobian_rank: rank,
        active_count: active.len(),
    })
}
