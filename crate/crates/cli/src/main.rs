//! `bmcert`: solve, certify and bound block SDPs from the command line.
//!
//! Exit codes: 0 certified globally optimal, 1 usage or input error,
//! 2 indeterminate (or not certified), 3 infeasible.

mod experiment;
mod json;
mod point;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use bmcert::apps::{
    adversarial_instance, generate_random, sensing_psd_instance, sensing_symmetric_instance, soc_instance,
    build_soc_embedding, DenseJson, Sidecar,
};
use bmcert::certification::{certify, estimate_multipliers, licq_check, staircase_solve, StaircaseConfig, CERT_TOL};
use bmcert::factorization::{default_rank_bound, lift, m_prime_conic, minimal_rank};
use bmcert::model::{read_problem, write_problem, BlockStructure, ConicSdpProblem, ConstraintKind};
use bmcert::oracle::oracle_solve;
use bmcert::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use report::{Final, ProblemInfo, Report, TraceEntry};

const ORACLE_TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(name = "bmcert", version, about = "Certified low-rank solver for block semidefinite programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the rank staircase on a problem file and report the certificate.
    Solve {
        problem: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Also solve with the interior-point oracle and report its objective.
        #[arg(long)]
        oracle: bool,
        /// Record wall time in the report (breaks byte-for-byte reruns).
        #[arg(long)]
        timing: bool,
        /// Write the final factored point here.
        #[arg(long)]
        point_out: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certify a given point: multipliers, KKT residuals, slack spectrum, LICQ.
    Certify {
        problem: PathBuf,
        point: PathBuf,
        #[arg(long, default_value_t = CERT_TOL)]
        cert_tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank bound: m′ and the minimal factor rank per factorized block.
    Bound {
        problem: PathBuf,
        /// Allowed ranks per tail block, `;`-separated, each `lo-hi` or a
        /// comma list (e.g. `0-1;1,2`).
        #[arg(long)]
        ranks: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Seeded statistical experiment over many random instances.
    Experiment {
        #[arg(value_enum)]
        kind: ExperimentKind,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        /// Factor rank; the least `p` with `τ(p) > m` when absent.
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a seeded instance in the problem format plus a `.json` sidecar.
    Generate {
        #[arg(value_enum)]
        builder: Builder,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 6)]
        m: usize,
        /// Factor rank (adversarial) or planted rank (sensing).
        #[arg(long, default_value_t = 1)]
        r: usize,
        /// Number of inequalities among the `m` constraints (random).
        #[arg(long, default_value_t = 0)]
        inequalities: usize,
        /// Cone dimension (soc).
        #[arg(long, default_value_t = 3)]
        cone_dim: usize,
        /// Also record the oracle optimum in the sidecar.
        #[arg(long)]
        oracle: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentKind {
    Genericity,
    Adversarial,
    Licq,
}

#[derive(Clone, Copy, ValueEnum)]
enum Builder {
    Random,
    SensingPsd,
    SensingSymmetric,
    Soc,
    Adversarial,
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Initial rank, one value for all factorized blocks or a comma list.
    #[arg(long)]
    rank: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sets both the stationarity and the feasibility tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    outer_tol: Option<f64>,
    #[arg(long)]
    feas_tol: Option<f64>,
    #[arg(long)]
    max_outer: Option<usize>,
    #[arg(long)]
    max_inner: Option<usize>,
    #[arg(long)]
    penalty_init: Option<f64>,
    #[arg(long)]
    penalty_growth: Option<f64>,
    #[arg(long)]
    tr_radius: Option<f64>,
    #[arg(long)]
    init_scale: Option<f64>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    cert_tol: Option<f64>,
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if matches!(e, Error::Infeasible { .. }) { 3 } else { 1 };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

impl SolverArgs {
    fn config(&self, factorized: usize) -> Result<StaircaseConfig, Failure> {
        let mut c = StaircaseConfig::default();
        let s = &mut c.solver;
        s.seed = self.seed;
        if let Some(t) = self.tol {
            s.outer_tol = t;
            s.feas_tol = t;
        }
        s.outer_tol = self.outer_tol.unwrap_or(s.outer_tol);
        s.feas_tol = self.feas_tol.unwrap_or(s.feas_tol);
        s.max_outer = self.max_outer.unwrap_or(s.max_outer);
        s.max_inner = self.max_inner.unwrap_or(s.max_inner);
        s.penalty_init = self.penalty_init.unwrap_or(s.penalty_init);
        s.penalty_growth = self.penalty_growth.unwrap_or(s.penalty_growth);
        s.tr_radius_init = self.tr_radius.unwrap_or(s.tr_radius_init);
        s.init_scale = self.init_scale.unwrap_or(s.init_scale);
        s.validate()?;
        c.restarts = self.restarts.unwrap_or(c.restarts);
        c.cert_tol = self.cert_tol.unwrap_or(c.cert_tol);
        if !(c.cert_tol.is_finite() && c.cert_tol > 0.0) {
            return Err(usage("--cert-tol must be positive"));
        }
        if let Some(text) = &self.rank {
            let ranks = parse_list(text).map_err(usage)?;
            c.initial_ranks = Some(match ranks.len() {
                1 => vec![ranks[0]; factorized],
                l if l == factorized => ranks,
                l => return Err(usage(format!("--rank lists {l} values for {factorized} factorized blocks"))),
            });
        }
        Ok(c)
    }
}

fn parse_list(text: &str) -> Result<Vec<usize>, String> {
    text.split(',')
        .map(|t| t.trim().parse().map_err(|_| format!("cannot parse {t:?} as a count")))
        .collect()
}

/// `lo-hi` or a comma list.
fn parse_range(text: &str) -> Result<Vec<usize>, String> {
    match text.split_once('-') {
        Some((lo, hi)) => {
            let lo: usize = lo.trim().parse().map_err(|_| format!("bad range start in {text:?}"))?;
            let hi: usize = hi.trim().parse().map_err(|_| format!("bad range end in {text:?}"))?;
            Ok((lo..=hi).collect())
        }
        None => parse_list(text),
    }
}

fn load(path: &Path) -> Result<ConicSdpProblem, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    read_problem(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn verdict_code(global: bool) -> u8 {
    if global {
        0
    } else {
        2
    }
}

fn cmd_solve(
    path: &Path,
    solver: &SolverArgs,
    oracle: bool,
    timing: bool,
    point_out: &Option<PathBuf>,
    out: &Option<PathBuf>,
) -> Result<u8, Failure> {
    let problem = load(path)?;
    let config = solver.config(problem.structure.factorized_count)?;
    let start = Instant::now();
    let solved = staircase_solve(&problem, &config);
    let elapsed = start.elapsed().as_millis() as u64;
    let oracle_objective = if oracle {
        Some(oracle_solve(&problem, ORACLE_TOL)?.objective)
    } else {
        None
    };
    let (mut report, code) = match solved {
        Ok(r) => {
            if let Some(p) = point_out {
                std::fs::write(p, point::write_point(&r.point)).map_err(|e| usage(format!("{}: {e}", p.display())))?;
            }
            (Report::from_solve(&problem, &config, &r), verdict_code(r.verdict().is_global()))
        }
        Err(e @ Error::Infeasible { .. }) => {
            eprintln!("{e}");
            let r = Report {
                problem: ProblemInfo::from(&problem),
                config: &config,
                trace: vec![],
                final_: Final {
                    verdict: "Infeasible".into(),
                    objective: f64::NAN,
                    gap_vs_dual: f64::NAN,
                    time_ms: None,
                    seed: Some(config.solver.seed),
                    oracle_objective: None,
                },
                details: None,
            };
            (r, 3)
        }
        Err(e) => return Err(e.into()),
    };
    report.final_.time_ms = timing.then_some(elapsed);
    report.final_.oracle_objective = oracle_objective;
    emit(out, &json::to_string(&report))?;
    Ok(code)
}

#[derive(Serialize)]
struct CertifyConfig {
    cert_tol: f64,
}

#[derive(Serialize)]
struct CertifyDetails {
    lambda: Vec<f64>,
    active_set: Vec<usize>,
    multiplier_residual: f64,
    rank_deficient: bool,
    kkt_passed: bool,
    licq: bool,
    jacobian_rank: usize,
    active_count: usize,
    slack_spectrum: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    escape_block: Option<usize>,
}

fn cmd_certify(path: &Path, point_path: &Path, cert_tol: f64, out: &Option<PathBuf>) -> Result<u8, Failure> {
    let problem = load(path)?;
    let text = std::fs::read_to_string(point_path).map_err(|e| usage(format!("{}: {e}", point_path.display())))?;
    let point = point::read_point(&text, &problem).map_err(|e| usage(format!("{}: {e}", point_path.display())))?;
    let mult = estimate_multipliers(&problem, &point)?;
    let cert = certify(&problem, &point, &mult, cert_tol)?;
    let licq = licq_check(&problem, &point)?;
    let objective = problem.objective(&lift(&point));
    let escape_block = match &cert.verdict {
        bmcert::certification::Verdict::Escapable { block, .. } => Some(*block + 1),
        _ => None,
    };
    let report = Report {
        problem: ProblemInfo::from(&problem),
        config: CertifyConfig { cert_tol },
        trace: vec![TraceEntry::from_certificate(point.ranks(), objective, &cert)],
        final_: Final {
            verdict: cert.verdict.name().into(),
            objective,
            gap_vs_dual: cert.duality_gap,
            time_ms: None,
            seed: None,
            oracle_objective: None,
        },
        details: Some(CertifyDetails {
            lambda: mult.lambda.clone(),
            active_set: mult.active_set.clone(),
            multiplier_residual: mult.residual,
            rank_deficient: mult.rank_deficient,
            kkt_passed: cert.kkt_passed,
            licq: licq.holds,
            jacobian_rank: licq.jacobian_rank,
            active_count: licq.active_count,
            slack_spectrum: cert.slack_spectrum.clone(),
            escape_block,
        }),
    };
    emit(out, &json::to_string(&report))?;
    Ok(verdict_code(cert.verdict.is_global()))
}

#[derive(Serialize)]
struct BoundOutput {
    m_prime: usize,
    p_per_block: Vec<usize>,
    method: bmcert::factorization::BoundMethod,
}

fn cmd_bound(path: &Path, ranks: &Option<String>, out: &Option<PathBuf>) -> Result<u8, Failure> {
    let problem = load(path)?;
    let report = match ranks {
        Some(text) => {
            let ranges = text.split(';').map(parse_range).collect::<Result<Vec<_>, _>>().map_err(usage)?;
            m_prime_conic(&problem, &ranges)?
        }
        None => default_rank_bound(&problem)?,
    };
    let output = BoundOutput {
        m_prime: report.m_prime,
        p_per_block: report.ranks,
        method: report.method,
    };
    emit(out, &json::to_string(&output))?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_experiment(
    kind: ExperimentKind,
    n: Option<usize>,
    m: Option<usize>,
    p: Option<usize>,
    trials: Option<usize>,
    solver: &SolverArgs,
    jobs: usize,
    out: &Option<PathBuf>,
) -> Result<u8, Failure> {
    let (kind, dn, dm, dtrials) = match kind {
        ExperimentKind::Genericity => (experiment::Kind::Genericity, 12, 8, 100),
        ExperimentKind::Adversarial => (experiment::Kind::Adversarial, 6, 3, 50),
        ExperimentKind::Licq => (experiment::Kind::Licq, 10, 8, 100),
    };
    let n = n.unwrap_or(dn);
    let m = m.unwrap_or(dm);
    let p = match (p, kind) {
        (Some(p), _) => p,
        (None, experiment::Kind::Adversarial) => 2,
        (None, _) => minimal_rank(m, n),
    };
    if p == 0 || p > n || jobs == 0 {
        return Err(usage("need 1 ≤ p ≤ n and --jobs ≥ 1"));
    }
    if solver.rank.is_some() {
        return Err(usage("experiments take the rank from --p"));
    }
    let config = solver.config(1)?;
    let params = experiment::Params {
        n,
        m,
        p,
        trials: trials.unwrap_or(dtrials),
        base_seed: solver.seed,
    };
    let summary = experiment::run(kind, params, config, jobs)?;
    emit(out, &json::to_string(&summary))?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_generate(
    builder: Builder,
    out: &Path,
    seed: u64,
    n: usize,
    m: usize,
    r: usize,
    inequalities: usize,
    cone_dim: usize,
    oracle: bool,
) -> Result<u8, Failure> {
    let param = |k: &str, v: usize| (k.to_string(), v as f64);
    let mut sidecar = Sidecar {
        seed: Some(seed),
        ..Default::default()
    };
    let problem = match builder {
        Builder::Random => {
            if inequalities > m {
                return Err(usage("--inequalities exceeds --m"));
            }
            let mut kinds = vec![ConstraintKind::Equality; m - inequalities];
            kinds.extend(vec![ConstraintKind::Inequality; inequalities]);
            sidecar.builder = "random".into();
            sidecar.parameters = vec![param("n", n), param("m", m), param("inequalities", inequalities)];
            generate_random(&BlockStructure::single(n), m, &kinds, seed)?
        }
        Builder::SensingPsd | Builder::SensingSymmetric => {
            let f = if matches!(builder, Builder::SensingPsd) {
                sidecar.builder = "sensing-psd".into();
                sensing_psd_instance(n, m, r, seed)?
            } else {
                sidecar.builder = "sensing-symmetric".into();
                sensing_symmetric_instance(n, m, r, seed)?
            };
            sidecar.parameters = vec![param("n", n), param("m", m), param("r", r)];
            sidecar.planted = vec![DenseJson::from(&f.planted)];
            sidecar.planted_objective = Some(f.planted_nuclear_norm);
            f.problem
        }
        Builder::Soc => {
            sidecar.builder = "soc".into();
            sidecar.parameters = vec![param("n", n), param("cone_dim", cone_dim), param("m", m)];
            build_soc_embedding(&soc_instance(n, cone_dim, m, seed)?)?
        }
        Builder::Adversarial => {
            let f = adversarial_instance(n, m, r, seed)?;
            sidecar.builder = "adversarial".into();
            sidecar.parameters = vec![param("n", n), param("m", m), param("p", r)];
            sidecar.planted = f.planted.factors.iter().map(DenseJson::from).collect();
            sidecar.planted_objective = Some(f.planted_objective);
            f.problem
        }
    };
    if oracle {
        sidecar.oracle_objective = Some(oracle_solve(&problem, ORACLE_TOL)?.objective);
    }
    std::fs::write(out, write_problem(&problem)).map_err(|e| usage(format!("{}: {e}", out.display())))?;
    let mut side = out.as_os_str().to_owned();
    side.push(".json");
    let side = PathBuf::from(side);
    std::fs::write(&side, json::to_string(&sidecar)).map_err(|e| usage(format!("{}: {e}", side.display())))?;
    Ok(0)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Solve {
            problem,
            solver,
            oracle,
            timing,
            point_out,
            out,
        } => cmd_solve(&problem, &solver, oracle, timing, &point_out, &out),
        Command::Certify {
            problem,
            point,
            cert_tol,
            out,
        } => cmd_certify(&problem, &point, cert_tol, &out),
        Command::Bound { problem, ranks, out } => cmd_bound(&problem, &ranks, &out),
        Command::Experiment {
            kind,
            n,
            m,
            p,
            trials,
            solver,
            jobs,
            out,
        } => cmd_experiment(kind, n, m, p, trials, &solver, jobs, &out),
        Command::Generate {
            builder,
            out,
            seed,
            n,
            m,
            r,
            inequalities,
            cone_dim,
            oracle,
        } => cmd_generate(builder, &out, seed, n, m, r, inequalities, cone_dim, oracle),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
