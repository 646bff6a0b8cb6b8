//! Independent reference solvers for small problems.
//!
//! [`oracle_solve`] is a dense interior-point method; [`brute_force_2x2`] is a
//! derivative-free search used to cross-check it on single 2×2 blocks. Neither
//! uses randomness.

mod brute;
mod ipm;

pub use brute::brute_force_2x2;
pub use ipm::{oracle_solve, OracleSolution};

use crate::error::Result;
use crate::model::{
    BlockStructure, ConicSdpProblem, Constraint, ConstraintKind, Cost, SparseSymmetric,
    SymmetricMatrix,
};

pub const DEFAULT_TOL: f64 = 1e-9;

/// Accuracy at which a stalled phase-one iterate is still trusted.
const PHASE_ONE_ACCURACY: f64 = 1e-4;

/// Decides whether the feasible set is nonempty.
///
/// Solves the phase-one problem `min Σ (r⁺ + r⁻)` with elastic variables on
/// every row and a big-M trace bound; the original set is feasible iff the
/// optimum is (numerically) zero.
pub fn is_feasible(problem: &ConicSdpProblem) -> Result<bool> {
    let (bounds, scale) = phase_one_value(problem)?;
    let threshold = 1e-6 * scale;
    match bounds {
        PhaseOne::Solved(value) => Ok(value <= threshold),
        // Stalled run: the dual objective bounds the value from below, the
        // primal objective from above up to the achieved accuracy.
        PhaseOne::Stalled { lower, upper, accuracy } => Ok(lower <= threshold && upper <= threshold.max(10.0 * accuracy * scale)),
    }
}

enum PhaseOne {
    Solved(f64),
    Stalled { lower: f64, upper: f64, accuracy: f64 },
}

fn phase_one_value(problem: &ConicSdpProblem) -> Result<(PhaseOne, f64)> {
    let m = problem.num_constraints();
    let s = &problem.structure;
    let b_inf = problem.constraints.iter().fold(0.0f64, |a, c| a.max(c.rhs.abs()));
    let total: usize = s.psd_sizes.iter().sum::<usize>() + 2 * m + 1;
    let big_m = 1e3 * (1.0 + b_inf) * total as f64;

    // Blocks: originals, then r⁺_i, r⁻_i for each row, then the trace slack u.
    let mut sizes = s.psd_sizes.clone();
    sizes.extend(std::iter::repeat_n(1, 2 * m + 1));
    let nb = sizes.len();
    let orig = s.num_blocks();

    let mut cost_blocks: Vec<SymmetricMatrix> = sizes.iter().map(|&n| SymmetricMatrix::zeros(n)).collect();
    for b in &mut cost_blocks[orig..orig + 2 * m] {
        b.set(0, 0, 1.0);
    }

    let mut constraints = Vec::with_capacity(m + 1);
    for (i, c) in problem.constraints.iter().enumerate() {
        let mut blocks = c.blocks.clone();
        for k in 0..2 * m + 1 {
            let v = if k == 2 * i {
                1.0
            } else if k == 2 * i + 1 {
                -1.0
            } else {
                0.0
            };
            blocks.push(SparseSymmetric::new(1, [(0, 0, v)]));
        }
        constraints.push(Constraint {
            blocks,
            free: c.free.clone(),
            rhs: c.rhs,
            kind: c.kind,
        });
    }
    let trace_row: Vec<SparseSymmetric> = sizes.iter().map(|&n| SparseSymmetric::identity(n)).collect();
    constraints.push(Constraint {
        blocks: trace_row,
        free: vec![0.0; s.free_dim],
        rhs: big_m,
        kind: ConstraintKind::Equality,
    });

    let phase = ConicSdpProblem::new_normalized(
        format!("{}-phase-one", problem.name),
        BlockStructure {
            psd_sizes: sizes,
            factorized_count: 0,
            free_dim: s.free_dim,
        },
        Cost {
            blocks: cost_blocks,
            free: vec![0.0; s.free_dim],
        },
        constraints,
    )?;
    debug_assert_eq!(phase.structure.num_blocks(), nb);
    // Degenerate active sets (weakly active duplicates) can stall the IPM short
    // of full accuracy; a reasonably converged iterate still separates a zero
    // value from a positive one.
    let value = match ipm::solve_with_best(&phase, DEFAULT_TOL) {
        (Ok(sol), _) => PhaseOne::Solved(sol.objective.max(0.0)),
        (Err(_), Some(best)) if best.accuracy <= PHASE_ONE_ACCURACY => PhaseOne::Stalled {
            lower: best.dual_objective,
            upper: best.objective,
            accuracy: best.accuracy,
        },
        (Err(e), _) => return Err(e),
    };
    Ok((value, 1.0 + b_inf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PrimalPoint;

    fn single_block(
        n: usize,
        cost: SymmetricMatrix,
        cons: Vec<(SparseSymmetric, f64, ConstraintKind)>,
    ) -> ConicSdpProblem {
        ConicSdpProblem::new_normalized(
            "t",
            BlockStructure::single(n),
            Cost {
                blocks: vec![cost],
                free: vec![],
            },
            cons.into_iter()
                .map(|(a, b, k)| Constraint::new(vec![a], b, k))
                .collect(),
        )
        .unwrap()
    }

    pub(crate) fn trivial() -> ConicSdpProblem {
        single_block(
            2,
            SymmetricMatrix::identity(2),
            vec![(SparseSymmetric::unit(2, 0, 0), 1.0, ConstraintKind::Equality)],
        )
    }

    #[test]
    fn trivial_sdp_objective_is_one() {
        let sol = oracle_solve(&trivial(), DEFAULT_TOL).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-8, "{}", sol.objective);
        assert!((sol.lambda[0] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn trace_constrained_min_is_smallest_eigenvalue() {
        let p = single_block(
            2,
            SymmetricMatrix::from_diagonal(&[1.0, -1.0]),
            vec![(SparseSymmetric::identity(2), 1.0, ConstraintKind::Equality)],
        );
        let sol = oracle_solve(&p, DEFAULT_TOL).unwrap();
        assert!((sol.objective + 1.0).abs() < 1e-8);
        assert!(sol.gap >= -1e-8);
    }

    #[test]
    fn integer_quadratic_relaxation_matches_grid() {
        // f(x) = x² − 0.8x + 0.16 with X₁₁ ≥ X₁₂, X₂₂ = 1.
        let mut c = SymmetricMatrix::zeros(2);
        c.set(0, 0, 1.0);
        c.set(0, 1, -0.4);
        c.set(1, 1, 0.16);
        let p = single_block(
            2,
            c,
            vec![
                (SparseSymmetric::unit(2, 1, 1), 1.0, ConstraintKind::Equality),
                (
                    SparseSymmetric::new(2, [(0, 0, 1.0), (0, 1, -0.5)]),
                    0.0,
                    ConstraintKind::Inequality,
                ),
            ],
        );
        let sol = oracle_solve(&p, DEFAULT_TOL).unwrap();
        // Independent grid over X₁₁ ∈ [0, 2], X₁₂ ∈ [−√X₁₁, √X₁₁] with X₂₂ = 1.
        let mut best = f64::INFINITY;
        let steps = 2000;
        for a in 0..=steps {
            let x11 = 2.0 * a as f64 / steps as f64;
            let r = x11.sqrt();
            for k in 0..=steps {
                let x12 = -r + 2.0 * r * k as f64 / steps as f64;
                if x11 >= x12 {
                    best = best.min(x11 - 0.8 * x12 + 0.16);
                }
            }
        }
        assert!((sol.objective - best).abs() < 1e-5, "{} vs {best}", sol.objective);
    }

    #[test]
    fn weak_duality_and_psd_output() {
        let p = trivial();
        let sol = oracle_solve(&p, DEFAULT_TOL).unwrap();
        assert!(sol.dual_objective <= sol.objective + 1e-8);
        let (min, _) = crate::linalg::min_eigenpair(&sol.x.psd_blocks[0].to_dense());
        assert!(min >= -1e-9);
        let _ = PrimalPoint::zeros(&p.structure);
    }

    #[test]
    fn feasibility_phase_detects_conflicts() {
        assert!(is_feasible(&trivial()).unwrap());
        let p = single_block(
            2,
            SymmetricMatrix::identity(2),
            vec![
                (SparseSymmetric::unit(2, 0, 0), 1.0, ConstraintKind::Equality),
                (SparseSymmetric::unit(2, 0, 0), -1.0, ConstraintKind::Equality),
            ],
        );
        assert!(!is_feasible(&p).unwrap());
        // X₁₁ = 0 forces X₁₂ = 0: a feasible set with no interior.
        let p = single_block(
            2,
            SymmetricMatrix::identity(2),
            vec![
                (SparseSymmetric::unit(2, 0, 0), 0.0, ConstraintKind::Equality),
                (SparseSymmetric::unit(2, 1, 1), 1.0, ConstraintKind::Equality),
            ],
        );
        assert!(is_feasible(&p).unwrap());
        // X₁₁ = 0 and X₁₂ ≥ 1 is infeasible.
        let p = single_block(
            2,
            SymmetricMatrix::identity(2),
            vec![
                (SparseSymmetric::unit(2, 0, 0), 0.0, ConstraintKind::Equality),
                (SparseSymmetric::new(2, [(0, 1, 0.5)]), 1.0, ConstraintKind::Inequality),
            ],
        );
        assert!(!is_feasible(&p).unwrap());
    }
}
