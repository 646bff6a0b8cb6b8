use thiserror::Error;

use crate::model::Diagnostic;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown block marker {block}")]
    UnknownBlock { line: usize, block: usize },
    #[error("line {line}: inconsistent dimension declaration: {message}")]
    InconsistentDimension { line: usize, message: String },
    #[error("problem violates {} invariant(s): {}", .0.len(), summarize(.0))]
    InvalidProblem(Vec<Diagnostic>),
    #[error("block {block} is not PSD (eigenvalue {eigenvalue:e})")]
    NotPsd { block: usize, eigenvalue: f64 },
    #[error("block {block} has numerical rank {rank} but only {requested} columns were requested")]
    RankTooSmall {
        block: usize,
        rank: usize,
        requested: usize,
    },
    #[error("unsupported structure: {0}")]
    UnsupportedStructure(String),
    #[error("empty rank range for tail block {0}")]
    EmptyRankRange(usize),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("problem appears infeasible (infeasibility {infeasibility:e} at penalty {penalty:e})")]
    Infeasible { infeasibility: f64, penalty: f64 },
    #[error("problem is not strictly feasible: {0}")]
    NotStrictlyFeasible(String),
    #[error("iteration limit {0} reached")]
    MaxIterations(usize),
}

fn summarize(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| d.message.as_str())
        .collect::<Vec<_>>()
        .join("; ")
}
