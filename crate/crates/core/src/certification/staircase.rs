//! Rank staircase: solve, certify, escape or escalate.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{
    certify, escape_direction, estimate_multipliers, multipliers_from_solver, Certificate, EscapeDirection,
    KktResiduals, MultiplierSource, Multipliers, Verdict, CERT_TOL,
};
use crate::error::{Error, Result};
use crate::linalg::{null_space, rank_from_values, singular_values};
use crate::factorization::{default_rank_bound, FactorizedPoint};
use crate::local_solver::{al_run, al_value_grad, random_start, SolverConfig, SolverPoint};
use crate::model::ConicSdpProblem;

/// Hard cap on solves per staircase run.
const MAX_STAGES: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaircaseConfig {
    pub solver: SolverConfig,
    /// Starting rank per factorized block; the rank bound when absent.
    pub initial_ranks: Option<Vec<usize>>,
    /// Fresh-seed restarts allowed at one rank before escalating.
    pub restarts: usize,
    pub cert_tol: f64,
}

impl Default for StaircaseConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            initial_ranks: None,
            restarts: 3,
            cert_tol: CERT_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StageAction {
    Done,
    KernelEscape,
    RankIncrement,
    Restart,
    Escalate,
    Stop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub ranks: Vec<usize>,
    pub seed: u64,
    pub objective: f64,
    pub kkt: KktResiduals,
    pub slack_min_eig: f64,
    pub duality_gap: f64,
    pub verdict: Verdict,
    pub multiplier_source: MultiplierSource,
    pub solver_converged: bool,
    pub outer_iterations: usize,
    pub action: StageAction,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub stages: Vec<StageRecord>,
    pub point: FactorizedPoint,
    pub multipliers: Multipliers,
    pub certificate: Certificate,
    pub objective: f64,
    pub ranks: Vec<usize>,
    pub seed: u64,
}

impl SolveReport {
    pub fn verdict(&self) -> &Verdict {
        &self.certificate.verdict
    }

    /// Number of stages that raised some rank.
    pub fn rank_increments(&self) -> usize {
        self.stages
            .windows(2)
            .filter(|w| w[1].ranks.iter().zip(&w[0].ranks).any(|(a, b)| a > b))
            .count()
    }
}

/// Prefers solver multipliers unless least squares strictly lowers the
/// stationarity residual.
fn choose_multipliers(problem: &ConicSdpProblem, point: &FactorizedPoint, lambda: &[f64]) -> Result<Multipliers> {
    let solver = multipliers_from_solver(problem, point, lambda)?;
    let ls = estimate_multipliers(problem, point)?;
    Ok(if ls.residual < solver.residual { ls } else { solver })
}

/// Step length along `dir` (flat layout) that lowers the AL, halving from a
/// scale-aware start; falls back to the smallest trial.
fn line_search(problem: &ConicSdpProblem, base: &SolverPoint, dir: &DVector<f64>, lambda: &[f64], rho: f64) -> f64 {
    let layout = base.layout();
    let v = base.to_vector();
    let f0 = al_value_grad(problem, base, lambda, rho).map(|r| r.0).unwrap_or(f64::INFINITY);
    let mut alpha = (1.0 + v.norm()) / dir.norm().max(f64::MIN_POSITIVE);
    for _ in 0..40 {
        let trial = SolverPoint::from_vector(&layout, &(&v + dir * alpha));
        if let Ok((f, _)) = al_value_grad(problem, &trial, lambda, rho) {
            if f < f0 {
                return alpha;
            }
        }
        alpha *= 0.5;
    }
    alpha
}

/// Solves at increasing rank until the certificate proves global optimality,
/// every factorized block reaches full rank, or the restart budget runs out.
pub fn staircase_solve(problem: &ConicSdpProblem, config: &StaircaseConfig) -> Result<SolveReport> {
    config.solver.validate()?;
    let sizes = problem.structure.factorized_sizes().to_vec();
    let mut ranks = match &config.initial_ranks {
        Some(r) => {
            if r.len() != sizes.len() {
                return Err(Error::DimensionMismatch {
                    context: "initial ranks",
                    expected: sizes.len(),
                    found: r.len(),
                });
            }
            r.iter().zip(&sizes).map(|(&p, &n)| p.clamp(1, n)).collect()
        }
        None => default_rank_bound(problem)?.ranks,
    };

    let base_seed = config.solver.seed;
    let mut attempt = 0u64;
    let mut restarts_here = 0usize;
    let mut warm: Option<(SolverPoint, Vec<f64>)> = None;
    let mut stages = Vec::new();
    let mut best: Option<SolveReport> = None;

    loop {
        let seed = base_seed.wrapping_add(attempt);
        attempt += 1;
        let solver_cfg = config.solver.clone().with_seed(seed);
        let (start, lambda0) = match warm.take() {
            Some(w) => w,
            None => (
                random_start(problem, &ranks, &solver_cfg),
                vec![0.0; problem.num_constraints()],
            ),
        };
        let (state, trace, stalled) = al_run(problem, &start, &lambda0, &solver_cfg)?;
        let full_rank = ranks.iter().zip(&sizes).all(|(p, n)| p >= n);
        if stalled && full_rank {
            return Err(Error::Infeasible {
                infeasibility: state.infeasibility,
                penalty: state.penalty,
            });
        }
        let point = state.factorized(problem);
        let mult = choose_multipliers(problem, &point, &state.lambda)?;
        let cert = certify(problem, &point, &mult, config.cert_tol)?;

        let mut next_ranks = ranks.clone();
        let action = if cert.verdict.is_global() {
            StageAction::Done
        } else if stages.len() + 1 >= MAX_STAGES {
            StageAction::Stop
        } else if stalled {
            // No point of this rank satisfies the constraints.
            restarts_here = config.restarts;
            escalate_or_restart(&mut next_ranks, &sizes, &mut restarts_here, config.restarts, false)
        } else if let Verdict::Escapable { block, .. } = &cert.verdict {
            match escape_direction(&point, &cert, *block)? {
                EscapeDirection::Kernel { block, direction } if restarts_here < config.restarts => {
                    let mut dir_blocks: Vec<DMatrix<f64>> =
                        state.point.factors.iter().map(|y| DMatrix::zeros(y.nrows(), y.ncols())).collect();
                    // Tail blocks were refactored for the certificate; redo the
                    // kernel direction against the solver's own factor.
                    dir_blocks[block] = if block < problem.structure.factorized_count {
                        direction
                    } else {
                        kernel_direction(&state.point.factors[block], &cert.verdict).unwrap_or(direction)
                    };
                    let layout = state.point.layout();
                    let dir = layout.pack(&dir_blocks, &DVector::zeros(state.point.free.len()));
                    let alpha = line_search(problem, &state.point, &dir, &state.lambda, state.penalty);
                    let v = state.point.to_vector() + dir * alpha;
                    warm = Some((SolverPoint::from_vector(&layout, &v), state.lambda.clone()));
                    restarts_here += 1;
                    StageAction::KernelEscape
                }
                EscapeDirection::RankIncrement { block, column }
                    if block < sizes.len() && ranks[block] < sizes[block] =>
                {
                    next_ranks[block] += 1;
                    let mut grown = state.point.clone();
                    let p = grown.factors[block].ncols();
                    grown.factors[block] = grown.factors[block].clone().resize_horizontally(p + 1, 0.0);
                    let mut dir_blocks: Vec<DMatrix<f64>> =
                        grown.factors.iter().map(|y| DMatrix::zeros(y.nrows(), y.ncols())).collect();
                    dir_blocks[block].set_column(p, &column);
                    let layout = grown.layout();
                    let dir = layout.pack(&dir_blocks, &DVector::zeros(grown.free.len()));
                    let alpha = line_search(problem, &grown, &dir, &state.lambda, state.penalty);
                    let v = grown.to_vector() + dir * alpha;
                    warm = Some((SolverPoint::from_vector(&layout, &v), state.lambda.clone()));
                    restarts_here = 0;
                    StageAction::RankIncrement
                }
                _ => escalate_or_restart(&mut next_ranks, &sizes, &mut restarts_here, config.restarts, full_rank),
            }
        } else {
            escalate_or_restart(&mut next_ranks, &sizes, &mut restarts_here, config.restarts, full_rank)
        };

        stages.push(StageRecord {
            ranks: ranks.clone(),
            seed,
            objective: state.objective,
            kkt: cert.kkt,
            slack_min_eig: cert.slack_min_eig(),
            duality_gap: cert.duality_gap,
            verdict: cert.verdict.clone(),
            multiplier_source: mult.source,
            solver_converged: state.converged,
            outer_iterations: trace.len(),
            action,
        });

        let candidate = SolveReport {
            stages: Vec::new(),
            point,
            multipliers: mult,
            certificate: cert,
            objective: state.objective,
            ranks: ranks.clone(),
            seed,
        };
        if action == StageAction::Done || better(&candidate, best.as_ref()) {
            best = Some(candidate);
        }
        if matches!(action, StageAction::Done | StageAction::Stop) {
            break;
        }
        ranks = next_ranks;
    }

    let mut report = best.expect("at least one stage ran");
    report.stages = stages;
    Ok(report)
}

/// Ordering used to pick the reported stage when none certifies: feasible
/// KKT points first, then the lower objective.
fn better(candidate: &SolveReport, incumbent: Option<&SolveReport>) -> bool {
    let Some(inc) = incumbent else { return true };
    let key = |r: &SolveReport| (!r.certificate.kkt_passed, r.objective);
    let (a, b) = (key(candidate), key(inc));
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

fn escalate_or_restart(
    next_ranks: &mut [usize],
    sizes: &[usize],
    restarts_here: &mut usize,
    cap: usize,
    full_rank: bool,
) -> StageAction {
    if *restarts_here < cap {
        *restarts_here += 1;
        return StageAction::Restart;
    }
    if full_rank {
        return StageAction::Stop;
    }
    for (p, &n) in next_ranks.iter_mut().zip(sizes) {
        if *p < n {
            *p += 1;
        }
    }
    *restarts_here = 0;
    StageAction::Escalate
}

fn kernel_direction(y: &DMatrix<f64>, verdict: &Verdict) -> Option<DMatrix<f64>> {
    let Verdict::Escapable { eigenvector, .. } = verdict else {
        return None;
    };
    if rank_from_values(&singular_values(y)) >= y.ncols() {
        return None;
    }
    let kernel = null_space(y);
    let z = kernel.column(kernel.ncols().checked_sub(1)?);
    Some(DVector::from_column_slice(eigenvector) * z.transpose())
}
