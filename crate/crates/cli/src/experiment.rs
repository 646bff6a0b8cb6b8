//! Seeded statistical experiments. Trials run on a rayon pool and are
//! collected in seed order, so the summary does not depend on scheduling.

use bmcert::apps::{adversarial_instance, generate_random};
use bmcert::certification::{certify, estimate_multipliers, licq_check, staircase_solve, StaircaseConfig};
use bmcert::local_solver::random_start;
use bmcert::model::{apply_map, BlockStructure, ConstraintKind};
use bmcert::oracle::oracle_solve;
use bmcert::Result;
use rayon::prelude::*;
use serde::Serialize;

/// Relative agreement required between a solve and the oracle.
pub const ORACLE_MATCH_TOL: f64 = 1e-5;
const ORACLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Genericity,
    Adversarial,
    Licq,
}

#[derive(Debug, Clone, Serialize)]
pub struct Params {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub trials: usize,
    pub base_seed: u64,
}

#[derive(Debug, Serialize)]
pub struct Trial {
    pub seed: u64,
    pub verdict: String,
    /// Objective reached by the method under test (staircase, or the planted
    /// point for `adversarial`).
    pub objective: Option<f64>,
    pub oracle_objective: Option<f64>,
    /// Genericity: certified at the initial rank. Adversarial: the planted
    /// point was rejected. LICQ: the check passed.
    pub success: bool,
    pub matches_oracle: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub kind: &'static str,
    pub params: Params,
    pub config: StaircaseConfig,
    pub success_fraction: f64,
    pub oracle_match_fraction: Option<f64>,
    pub trials: Vec<Trial>,
}

fn matches(value: f64, oracle: f64) -> bool {
    (value - oracle).abs() <= ORACLE_MATCH_TOL * (1.0 + oracle.abs())
}

fn failed(seed: u64, e: bmcert::Error) -> Trial {
    Trial {
        seed,
        verdict: "Error".into(),
        objective: None,
        oracle_objective: None,
        success: false,
        matches_oracle: None,
        error: Some(e.to_string()),
    }
}

/// Random equality SDP at rank `p`: success means GlobalOptimal with no rank
/// increment.
fn genericity_trial(params: &Params, config: &StaircaseConfig, seed: u64) -> Result<Trial> {
    let kinds = vec![ConstraintKind::Equality; params.m];
    let problem = generate_random(&BlockStructure::single(params.n), params.m, &kinds, seed)?;
    let mut cfg = config.clone();
    cfg.initial_ranks = Some(vec![params.p]);
    cfg.solver.seed = seed;
    let report = staircase_solve(&problem, &cfg)?;
    let oracle = oracle_solve(&problem, ORACLE_TOL)?.objective;
    Ok(Trial {
        seed,
        verdict: report.verdict().name().into(),
        objective: Some(report.objective),
        oracle_objective: Some(oracle),
        success: report.verdict().is_global() && report.rank_increments() == 0 && report.ranks == [params.p],
        matches_oracle: Some(matches(report.objective, oracle)),
        error: None,
    })
}

/// Certificate at a planted spurious point, with multipliers estimated from
/// the point alone: success means the point was not certified.
fn adversarial_trial(params: &Params, config: &StaircaseConfig, seed: u64) -> Result<Trial> {
    let fixture = adversarial_instance(params.n, params.m, params.p, seed)?;
    let mult = estimate_multipliers(&fixture.problem, &fixture.planted)?;
    let cert = certify(&fixture.problem, &fixture.planted, &mult, config.cert_tol)?;
    let oracle = oracle_solve(&fixture.problem, ORACLE_TOL)?.objective;
    Ok(Trial {
        seed,
        verdict: cert.verdict.name().into(),
        objective: Some(fixture.planted_objective),
        oracle_objective: Some(oracle),
        success: !cert.verdict.is_global(),
        matches_oracle: Some(matches(fixture.planted_objective, oracle)),
        error: None,
    })
}

/// Random equality data with `b = 𝒜(YYᵀ)` for a random rank-`p` factor `Y`;
/// success means LICQ holds at `Y`.
fn licq_trial(params: &Params, config: &StaircaseConfig, seed: u64) -> Result<Trial> {
    let kinds = vec![ConstraintKind::Equality; params.m];
    let mut problem = generate_random(&BlockStructure::single(params.n), params.m, &kinds, seed)?;
    let start = random_start(&problem, &[params.p], &config.solver.clone().with_seed(seed));
    let point = start.to_factorized(problem.structure.factorized_count);
    let b = apply_map(&problem, &bmcert::factorization::lift(&point))?;
    for (c, bi) in problem.constraints.iter_mut().zip(b) {
        c.rhs = bi;
    }
    let report = licq_check(&problem, &point)?;
    Ok(Trial {
        seed,
        verdict: if report.holds { "LicqHolds" } else { "LicqFails" }.into(),
        objective: None,
        oracle_objective: None,
        success: report.holds,
        matches_oracle: None,
        error: None,
    })
}

pub fn run(kind: Kind, params: Params, config: StaircaseConfig, jobs: usize) -> Result<Summary> {
    let seeds: Vec<u64> = (0..params.trials as u64).map(|i| params.base_seed + i).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| bmcert::Error::NumericalFailure(format!("thread pool: {e}")))?;
    let trials: Vec<Trial> = pool.install(|| {
        seeds
            .par_iter()
            .map(|&seed| {
                let out = match kind {
                    Kind::Genericity => genericity_trial(&params, &config, seed),
                    Kind::Adversarial => adversarial_trial(&params, &config, seed),
                    Kind::Licq => licq_trial(&params, &config, seed),
                };
                out.unwrap_or_else(|e| failed(seed, e))
            })
            .collect()
    });
    let total = trials.len().max(1) as f64;
    let success_fraction = trials.iter().filter(|t| t.success).count() as f64 / total;
    let oracle_match_fraction = (kind == Kind::Genericity)
        .then(|| trials.iter().filter(|t| t.matches_oracle == Some(true)).count() as f64 / total);
    Ok(Summary {
        kind: match kind {
            Kind::Genericity => "genericity",
            Kind::Adversarial => "adversarial",
            Kind::Licq => "licq",
        },
        params,
        config,
        success_fraction,
        oracle_match_fraction,
        trials,
    })
}
