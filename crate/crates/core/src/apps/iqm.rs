//! SDP relaxation of integer quadratic minimization.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::factorization::{minimal_rank, BoundMethod, RankBoundReport};
use crate::model::{BlockStructure, ConicSdpProblem, Constraint, ConstraintKind, Cost, SparseSymmetric, SymmetricMatrix};

#[derive(Debug, Clone)]
pub struct IntegerQuadratic {
    pub problem: ConicSdpProblem,
    /// `m′ = n + 1`: the equality and all `n` inequalities are active at `x = 1`.
    pub bound: RankBoundReport,
}

/// Cost matrix with `x̃ᵀCx̃ = xᵀQx + lᵀx + c₀` for `x̃ = (x, 1)`.
pub fn iqm_cost(q: &DMatrix<f64>, l: &DVector<f64>, c0: f64) -> Result<SymmetricMatrix> {
    let n = q.nrows();
    if q.ncols() != n || l.len() != n {
        return Err(Error::DimensionMismatch {
            context: "quadratic data",
            expected: n,
            found: if q.ncols() != n { q.ncols() } else { l.len() },
        });
    }
    let mut c = DMatrix::zeros(n + 1, n + 1);
    c.view_mut((0, 0), (n, n)).copy_from(&((q + q.transpose()) * 0.5));
    for i in 0..n {
        c[(i, n)] = 0.5 * l[i];
        c[(n, i)] = 0.5 * l[i];
    }
    c[(n, n)] = c0;
    Ok(SymmetricMatrix::from_dense(&c))
}

/// `min C•X` s.t. `X_{ii} ≥ X_{i,n+1}` for `i ≤ n`, `X_{n+1,n+1} = 1`, `X ⪰ 0`.
pub fn build_integer_quadratic(c: &SymmetricMatrix) -> Result<IntegerQuadratic> {
    let size = c.dim();
    if size < 2 {
        return Err(Error::DimensionMismatch {
            context: "integer quadratic cost (n + 1 ≥ 2)",
            expected: 2,
            found: size,
        });
    }
    let n = size - 1;
    let mut constraints = vec![Constraint::new(
        vec![SparseSymmetric::unit(size, n, n)],
        1.0,
        ConstraintKind::Equality,
    )];
    for i in 0..n {
        constraints.push(Constraint::new(
            vec![SparseSymmetric::new(size, [(i, i, 1.0), (i, n, -0.5)])],
            0.0,
            ConstraintKind::Inequality,
        ));
    }
    let problem = ConicSdpProblem::new_normalized(
        format!("integer-quadratic-{n}"),
        BlockStructure::single(size),
        Cost {
            blocks: vec![c.clone()],
            free: vec![],
        },
        constraints,
    )?;
    Ok(IntegerQuadratic {
        problem,
        bound: RankBoundReport {
            m_prime: n + 1,
            ranks: vec![minimal_rank(n + 1, size)],
            method: BoundMethod::RankUpperBound,
        },
    })
}
