//! Local solver for the factorized problem.
//!
//! Every PSD block is parameterized as `X_j = Y_j Y_jᵀ`; non-factorized (tail)
//! blocks simply use `p_j = n_j`, which loses nothing. The outer loop is a
//! safeguarded augmented Lagrangian with PHR inequality terms, the inner loop a
//! trust-region Newton method with truncated CG and exact Hessian-vector
//! products, plus a dense negative-curvature probe at first-order points so the
//! inner solver does not stop at saddles.

mod kernel;
mod trust_region;

pub use kernel::Layout;
pub(crate) use kernel::{Kernel, PointEval};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factorization::FactorizedPoint;
use crate::linalg::psd_factor;
use crate::model::{ConicSdpProblem, SymmetricMatrix};

pub const PENALTY_CAP: f64 = 1e12;
pub const MULTIPLIER_CAP: f64 = 1e10;
/// Consecutive capped-penalty outer iterations without feasibility before
/// declaring the problem infeasible.
const INFEASIBLE_PATIENCE: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub outer_tol: f64,
    pub feas_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub penalty_init: f64,
    pub penalty_growth: f64,
    pub tr_radius_init: f64,
    pub seed: u64,
    pub init_scale: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            outer_tol: 1e-8,
            feas_tol: 1e-8,
            max_outer: 50,
            max_inner: 500,
            penalty_init: 10.0,
            penalty_growth: 10.0,
            tr_radius_init: 1.0,
            seed: 0,
            init_scale: 1.0,
        }
    }
}

impl SolverConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.outer_tol,
            self.feas_tol,
            self.penalty_init,
            self.tr_radius_init,
            self.init_scale,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) || self.penalty_growth <= 1.0 {
            return Err(Error::NumericalFailure(
                "solver tolerances must be positive and penalty_growth > 1".into(),
            ));
        }
        Ok(())
    }
}

/// All blocks in factored form, tail blocks at full rank.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverPoint {
    pub factors: Vec<DMatrix<f64>>,
    pub free: DVector<f64>,
}

impl SolverPoint {
    pub fn from_factorized(point: &FactorizedPoint) -> Self {
        let mut factors = point.factors.clone();
        for x in &point.tail_blocks {
            let (y, _) = psd_factor(&x.to_dense(), x.dim());
            factors.push(y);
        }
        Self {
            factors,
            free: DVector::from_column_slice(&point.free),
        }
    }

    pub fn to_factorized(&self, factorized_count: usize) -> FactorizedPoint {
        FactorizedPoint {
            factors: self.factors[..factorized_count].to_vec(),
            tail_blocks: self.factors[factorized_count..]
                .iter()
                .map(|y| SymmetricMatrix::from_dense(&(y * y.transpose())))
                .collect(),
            free: self.free.iter().copied().collect(),
        }
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.factors.iter().map(|y| y.ncols()).collect()
    }

    pub fn layout(&self) -> Layout {
        Layout::new(
            self.factors.iter().map(|y| (y.nrows(), y.ncols())).collect(),
            self.free.len(),
        )
    }

    pub fn to_vector(&self) -> DVector<f64> {
        self.layout().pack(&self.factors, &self.free)
    }

    pub fn from_vector(layout: &Layout, v: &DVector<f64>) -> Self {
        let (factors, free) = layout.unpack(v);
        Self { factors, free }
    }

    fn check(&self, problem: &ConicSdpProblem) -> Result<()> {
        let s = &problem.structure;
        if self.factors.len() != s.num_blocks() {
            return Err(Error::DimensionMismatch {
                context: "solver point blocks",
                expected: s.num_blocks(),
                found: self.factors.len(),
            });
        }
        for (y, &n) in self.factors.iter().zip(&s.psd_sizes) {
            if y.nrows() != n {
                return Err(Error::DimensionMismatch {
                    context: "solver point factor rows",
                    expected: n,
                    found: y.nrows(),
                });
            }
        }
        if self.free.len() != s.free_dim {
            return Err(Error::DimensionMismatch {
                context: "solver point free part",
                expected: s.free_dim,
                found: self.free.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LagrangianState {
    pub point: SolverPoint,
    pub lambda: Vec<f64>,
    pub penalty: f64,
    pub objective: f64,
    pub al_value: f64,
    /// Norm of `c` with inequality slack (`c > 0`) clipped to zero.
    pub infeasibility: f64,
    /// Norm of the augmented-Lagrangian gradient.
    pub stationarity: f64,
    /// `max_i |λᵢ cᵢ| / (1 + |λᵢ|)` over inequalities.
    pub complementarity: f64,
    pub converged: bool,
    pub inner_iterations: usize,
    pub accepted_steps: usize,
}

impl LagrangianState {
    pub fn factorized(&self, problem: &ConicSdpProblem) -> FactorizedPoint {
        self.point.to_factorized(problem.structure.factorized_count)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuterRecord {
    pub outer: usize,
    pub objective: f64,
    pub infeasibility: f64,
    pub stationarity: f64,
    pub penalty: f64,
    pub inner_iterations: usize,
}

fn check_lambda(problem: &ConicSdpProblem, lambda: &[f64]) -> Result<()> {
    if lambda.len() != problem.num_constraints() {
        return Err(Error::DimensionMismatch {
            context: "multipliers",
            expected: problem.num_constraints(),
            found: lambda.len(),
        });
    }
    Ok(())
}

/// Augmented-Lagrangian value and gradient (flat layout of `point`).
pub fn al_value_grad(
    problem: &ConicSdpProblem,
    point: &SolverPoint,
    lambda: &[f64],
    rho: f64,
) -> Result<(f64, DVector<f64>)> {
    point.check(problem)?;
    check_lambda(problem, lambda)?;
    let kernel = Kernel::new(problem, &point.ranks());
    let v = point.to_vector();
    let pe = kernel.eval_point(&v)?;
    let lam = DVector::from_column_slice(lambda);
    let sh = kernel.shifted(&pe, &lam, rho);
    let value = kernel.al_value(&pe, &lam, rho);
    let (grad, _) = kernel.gradient(&pe, &sh);
    if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NumericalFailure("non-finite augmented Lagrangian".into()));
    }
    Ok((value, grad))
}

/// Exact Hessian-vector product of the augmented Lagrangian.
pub fn al_hessian_vector(
    problem: &ConicSdpProblem,
    point: &SolverPoint,
    lambda: &[f64],
    rho: f64,
    direction: &DVector<f64>,
) -> Result<DVector<f64>> {
    point.check(problem)?;
    check_lambda(problem, lambda)?;
    let kernel = Kernel::new(problem, &point.ranks());
    if direction.len() != kernel.layout.len() {
        return Err(Error::DimensionMismatch {
            context: "direction",
            expected: kernel.layout.len(),
            found: direction.len(),
        });
    }
    let pe = kernel.eval_point(&point.to_vector())?;
    let lam = DVector::from_column_slice(lambda);
    let sh = kernel.shifted(&pe, &lam, rho);
    let hv = kernel.model(&pe, &sh, rho).hvp(&kernel.layout, direction);
    if hv.iter().any(|g| !g.is_finite()) {
        return Err(Error::NumericalFailure("non-finite Hessian-vector product".into()));
    }
    Ok(hv)
}

fn violation(kernel: &Kernel, pe: &PointEval) -> f64 {
    pe.residual
        .iter()
        .enumerate()
        .map(|(i, &c)| if kernel.dense.is_ineq[i] { c.min(0.0) } else { c })
        .map(|c| c * c)
        .sum::<f64>()
        .sqrt()
}

fn complementarity(kernel: &Kernel, pe: &PointEval, lambda: &DVector<f64>) -> f64 {
    (0..kernel.m())
        .filter(|&i| kernel.dense.is_ineq[i])
        .map(|i| (lambda[i] * pe.residual[i]).abs() / (1.0 + lambda[i].abs()))
        .fold(0.0, f64::max)
}

/// Runs the inner trust-region solver at fixed `(λ, ρ)` from `state`.
pub fn inner_minimize(
    problem: &ConicSdpProblem,
    state: &LagrangianState,
    config: &SolverConfig,
) -> Result<LagrangianState> {
    state.point.check(problem)?;
    check_lambda(problem, &state.lambda)?;
    let kernel = Kernel::new(problem, &state.point.ranks());
    let lam = DVector::from_column_slice(&state.lambda);
    let v = state.point.to_vector();
    let mut radius = config.tr_radius_init;
    let res = trust_region::minimize(&kernel, v, &lam, state.penalty, config.outer_tol, config.max_inner, &mut radius)?;
    let pe = kernel.eval_point(&res.v)?;
    Ok(LagrangianState {
        point: SolverPoint::from_vector(&kernel.layout, &res.v),
        lambda: state.lambda.clone(),
        penalty: state.penalty,
        objective: pe.objective,
        al_value: res.value,
        infeasibility: violation(&kernel, &pe),
        stationarity: res.grad_norm,
        complementarity: complementarity(&kernel, &pe, &lam),
        converged: res.converged,
        inner_iterations: res.iterations,
        accepted_steps: res.accepted,
    })
}

/// Random starting factors: i.i.d. normal entries scaled so that the expected
/// trace of each block is about `σ² · h`, with `h` a crude trace estimate from
/// the constraint data.
pub fn random_start(problem: &ConicSdpProblem, ranks: &[usize], config: &SolverConfig) -> SolverPoint {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let h = problem
        .constraints
        .iter()
        .map(|c| {
            let norm = c.blocks.iter().map(|a| a.frobenius_norm().powi(2)).sum::<f64>().sqrt();
            if norm > 0.0 {
                c.rhs.abs() / norm
            } else {
                0.0
            }
        })
        .fold(1.0f64, f64::max)
        .min(1e3);
    let factors = problem
        .structure
        .psd_sizes
        .iter()
        .zip(all_ranks(problem, ranks))
        .map(|(&n, p)| {
            let scale = config.init_scale * (h / (n * p) as f64).sqrt();
            DMatrix::from_fn(n, p, |_, _| {
                let z: f64 = StandardNormal.sample(&mut rng);
                scale * z
            })
        })
        .collect();
    SolverPoint {
        factors,
        free: DVector::zeros(problem.structure.free_dim),
    }
}

/// Factorized-block ranks followed by full ranks for the tail blocks.
pub fn all_ranks(problem: &ConicSdpProblem, ranks: &[usize]) -> Vec<usize> {
    let mut out = ranks.to_vec();
    out.extend_from_slice(problem.structure.tail_sizes());
    out
}

/// Solves the factorized problem at the given ranks (one per factorized
/// block) from a seeded random start.
pub fn al_solve(
    problem: &ConicSdpProblem,
    ranks: &[usize],
    config: &SolverConfig,
) -> Result<(LagrangianState, Vec<OuterRecord>)> {
    if ranks.len() != problem.structure.factorized_count {
        return Err(Error::DimensionMismatch {
            context: "ranks",
            expected: problem.structure.factorized_count,
            found: ranks.len(),
        });
    }
    let start = random_start(problem, ranks, config);
    al_solve_from(problem, &start, &vec![0.0; problem.num_constraints()], config)
}

/// Solves from a given start and initial multipliers.
///
/// Fails with [`Error::Infeasible`] when the constraints stay violated at the
/// penalty cap. At a rank below full that says nothing about the SDP itself.
pub fn al_solve_from(
    problem: &ConicSdpProblem,
    start: &SolverPoint,
    lambda0: &[f64],
    config: &SolverConfig,
) -> Result<(LagrangianState, Vec<OuterRecord>)> {
    let (state, trace, stalled) = al_run(problem, start, lambda0, config)?;
    if stalled {
        return Err(Error::Infeasible {
            infeasibility: state.infeasibility,
            penalty: state.penalty,
        });
    }
    Ok((state, trace))
}

/// [`al_solve_from`] that returns the last iterate when stalled at the
/// penalty cap, flagged by the third component.
pub(crate) fn al_run(
    problem: &ConicSdpProblem,
    start: &SolverPoint,
    lambda0: &[f64],
    config: &SolverConfig,
) -> Result<(LagrangianState, Vec<OuterRecord>, bool)> {
    config.validate()?;
    start.check(problem)?;
    check_lambda(problem, lambda0)?;
    let kernel = Kernel::new(problem, &start.ranks());
    let mut lam = DVector::from_iterator(
        lambda0.len(),
        lambda0.iter().enumerate().map(|(i, &l)| {
            let l = l.clamp(-MULTIPLIER_CAP, MULTIPLIER_CAP);
            if kernel.dense.is_ineq[i] {
                l.max(0.0)
            } else {
                l
            }
        }),
    );
    let mut v = start.to_vector();
    let mut pe = kernel.eval_point(&v)?;
    let mut rho = config.penalty_init;
    let mut prev_progress = f64::INFINITY;
    let mut stalled_at_cap = 0;
    let mut trace = Vec::new();
    let mut total_inner = 0;
    let mut total_accepted = 0;
    let mut last_grad = f64::INFINITY;
    let mut last_value = kernel.al_value(&pe, &lam, rho);
    let mut converged = false;

    for outer in 0..config.max_outer {
        let mut radius = config.tr_radius_init;
        let res = trust_region::minimize(&kernel, v, &lam, rho, config.outer_tol, config.max_inner, &mut radius)?;
        v = res.v;
        total_inner += res.iterations;
        total_accepted += res.accepted;
        last_grad = res.grad_norm;
        last_value = res.value;
        pe = kernel.eval_point(&v)?;

        // Progress measure min(c, λ/ρ) on inequalities, before the update.
        let progress = (0..kernel.m())
            .map(|i| {
                let c = pe.residual[i];
                if kernel.dense.is_ineq[i] {
                    c.min(lam[i] / rho).abs()
                } else {
                    c.abs()
                }
            })
            .fold(0.0, f64::max);

        let sh = kernel.shifted(&pe, &lam, rho);
        lam = sh.lambda.map(|l| l.clamp(-MULTIPLIER_CAP, MULTIPLIER_CAP));

        let infeas = violation(&kernel, &pe);
        let compl = complementarity(&kernel, &pe, &lam);
        trace.push(OuterRecord {
            outer,
            objective: pe.objective,
            infeasibility: infeas,
            stationarity: res.grad_norm,
            penalty: rho,
            inner_iterations: res.iterations,
        });

        if infeas <= config.feas_tol && res.grad_norm <= config.outer_tol && compl <= config.feas_tol {
            converged = true;
            break;
        }
        if progress > 0.25 * prev_progress {
            rho = (rho * config.penalty_growth).min(PENALTY_CAP);
        }
        prev_progress = progress;
        if rho >= PENALTY_CAP && infeas > config.feas_tol {
            stalled_at_cap += 1;
            if stalled_at_cap >= INFEASIBLE_PATIENCE {
                break;
            }
        } else {
            stalled_at_cap = 0;
        }
    }

    Ok((
        LagrangianState {
            point: SolverPoint::from_vector(&kernel.layout, &v),
            lambda: lam.iter().copied().collect(),
            penalty: rho,
            objective: pe.objective,
            al_value: last_value,
            infeasibility: violation(&kernel, &pe),
            stationarity: last_grad,
            complementarity: complementarity(&kernel, &pe, &lam),
            converged,
            inner_iterations: total_inner,
            accepted_steps: total_accepted,
        },
        trace,
        stalled_at_cap >= INFEASIBLE_PATIENCE,
    ))
}
