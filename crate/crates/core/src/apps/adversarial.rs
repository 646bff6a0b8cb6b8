//! Costs with a planted spurious critical point.
//!
//! Given equality data `𝒜` and a factor `Y` of rank `p`, pick `S` supported on
//! the orthogonal complement of `range Y` (so `SY = 0` and `rank S ≤ n − p`)
//! with a negative eigenvalue, and any `λ`. With `C = S + 𝒜*(λ)` and
//! `b = 𝒜(YYᵀ)` the point `Y` is first-order critical with slack `S`, yet `S`
//! is not PSD.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::random::{normal, random_symmetric};
use crate::error::{Error, Result};
use crate::factorization::FactorizedPoint;
use crate::linalg::{matrix_rank, null_space};
use crate::model::{BlockStructure, ConicSdpProblem, Constraint, ConstraintKind, Cost, SparseSymmetric, SymmetricMatrix};

#[derive(Debug, Clone)]
pub struct AdversarialFixture {
    pub problem: ConicSdpProblem,
    pub planted: FactorizedPoint,
    pub lambda: Vec<f64>,
    pub slack: DMatrix<f64>,
    pub planted_objective: f64,
}

/// Builds the fixture from explicit parts. `complement` is the restriction
/// of `S` to an orthonormal basis of `(range Y)^⊥` (size `n − rank Y`).
pub fn build_adversarial_cost(
    constraints: &[DMatrix<f64>],
    y: &DMatrix<f64>,
    complement: &DMatrix<f64>,
    lambda: &[f64],
) -> Result<AdversarialFixture> {
    let n = y.nrows();
    let p = y.ncols();
    if p >= n || matrix_rank(y) >= n {
        return Err(Error::UnsupportedStructure(
            "a negative slack eigenvalue needs rank Y < n".into(),
        ));
    }
    if lambda.len() != constraints.len() {
        return Err(Error::DimensionMismatch {
            context: "adversarial multipliers",
            expected: constraints.len(),
            found: lambda.len(),
        });
    }
    let basis = null_space(&y.transpose());
    if complement.nrows() != basis.ncols() || complement.ncols() != basis.ncols() {
        return Err(Error::DimensionMismatch {
            context: "slack on the complement of range Y",
            expected: basis.ncols(),
            found: complement.nrows(),
        });
    }
    let sym = (complement + complement.transpose()) * 0.5;
    let s = &basis * sym * basis.transpose();
    let x = y * y.transpose();
    let mut c = s.clone();
    for (a, &l) in constraints.iter().zip(lambda) {
        c += a * l;
    }
    let cons = constraints
        .iter()
        .map(|a| Constraint::new(vec![SparseSymmetric::from_dense(a)], a.dot(&x), ConstraintKind::Equality))
        .collect();
    let problem = ConicSdpProblem::new(
        format!("adversarial-{n}-{p}"),
        BlockStructure::single(n),
        Cost {
            blocks: vec![SymmetricMatrix::from_dense(&c)],
            free: vec![],
        },
        cons,
    )?;
    let planted_objective = c.dot(&x);
    Ok(AdversarialFixture {
        problem,
        planted: FactorizedPoint {
            factors: vec![y.clone()],
            tail_blocks: vec![],
            free: vec![],
        },
        lambda: lambda.to_vec(),
        slack: s,
        planted_objective,
    })
}

/// Seeded fixture: `A₁ = Iₙ` (keeps the SDP bounded), `A₂..A_m` Gaussian,
/// `Y` Gaussian `n×p`, `S` Gaussian on the complement with its smallest
/// eigenvalue pushed below −1/2, `λ` standard normal.
pub fn adversarial_instance(n: usize, m: usize, p: usize, seed: u64) -> Result<AdversarialFixture> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut constraints = vec![DMatrix::identity(n, n)];
    constraints.extend((1..m).map(|_| random_symmetric(&mut rng, n)));
    let y = DMatrix::from_fn(n, p, |_, _| normal(&mut rng));
    let k = n.saturating_sub(p);
    let mut d = random_symmetric(&mut rng, k);
    if k > 0 {
        let (vals, _) = crate::linalg::sym_eigen(&d);
        let shift = (vals[0] + 0.5 + normal(&mut rng).abs()).max(0.0);
        d -= DMatrix::identity(k, k) * shift;
    }
    let lambda: Vec<f64> = (0..m).map(|_| normal(&mut rng)).collect();
    let mut f = build_adversarial_cost(&constraints, &y, &d, &lambda)?;
    f.problem.name = format!("adversarial-{n}-{m}-{p}-{seed}");
    Ok(f)
}
