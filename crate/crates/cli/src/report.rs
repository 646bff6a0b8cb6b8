//! The JSON report shared by `solve`, `certify` and `experiment`.

use bmcert::certification::{Certificate, KktResiduals, SolveReport, StageAction, StageRecord};
use bmcert::model::ConicSdpProblem;
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct ProblemInfo {
    pub name: String,
    pub n_blocks: usize,
    pub m: usize,
    /// One `E`/`I` per constraint.
    pub kinds: String,
}

impl From<&ConicSdpProblem> for ProblemInfo {
    fn from(p: &ConicSdpProblem) -> Self {
        Self {
            name: p.name.clone(),
            n_blocks: p.structure.num_blocks(),
            m: p.num_constraints(),
            kinds: p.kinds_string(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TraceEntry {
    /// Factor rank per factorized block.
    pub rank: Vec<usize>,
    pub objective: f64,
    pub kkt: KktResiduals,
    pub slack_min_eig: f64,
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub action: Option<StageAction>,
}

impl From<&StageRecord> for TraceEntry {
    fn from(s: &StageRecord) -> Self {
        Self {
            rank: s.ranks.clone(),
            objective: s.objective,
            kkt: s.kkt,
            slack_min_eig: s.slack_min_eig,
            verdict: s.verdict.name().to_string(),
            seed: Some(s.seed),
            action: Some(s.action),
        }
    }
}

impl TraceEntry {
    pub fn from_certificate(rank: Vec<usize>, objective: f64, cert: &Certificate) -> Self {
        Self {
            rank,
            objective,
            kkt: cert.kkt,
            slack_min_eig: cert.slack_min_eig(),
            verdict: cert.verdict.name().to_string(),
            seed: None,
            action: None,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Final {
    pub verdict: String,
    pub objective: f64,
    pub gap_vs_dual: f64,
    /// Wall time, only recorded on request since it breaks byte equality.
    pub time_ms: Option<u64>,
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_objective: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct Report<C: Serialize, X: Serialize = ()> {
    pub problem: ProblemInfo,
    pub config: C,
    pub trace: Vec<TraceEntry>,
    #[serde(rename = "final")]
    pub final_: Final,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<X>,
}

impl<C: Serialize> Report<C> {
    pub fn from_solve(problem: &ConicSdpProblem, config: C, report: &SolveReport) -> Self {
        Self {
            problem: problem.into(),
            config,
            trace: report.stages.iter().map(TraceEntry::from).collect(),
            final_: Final {
                verdict: report.verdict().name().to_string(),
                objective: report.objective,
                gap_vs_dual: report.certificate.duality_gap,
                time_ms: None,
                seed: Some(report.seed),
                oracle_objective: None,
            },
            details: None,
        }
    }
}
