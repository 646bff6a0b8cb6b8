//! Seeded random instances with a strictly feasible primal and dual.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{BlockStructure, ConicSdpProblem, Constraint, ConstraintKind, Cost, SparseSymmetric, SymmetricMatrix};

pub(crate) fn normal<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// `(G + Gᵀ)/2` with i.i.d. standard normal `G`.
pub fn random_symmetric<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| normal(rng));
    (&g + g.transpose()) * 0.5
}

/// `G Gᵀ / n + I/10`, positive definite.
pub fn random_psd<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| normal(rng));
    &g * g.transpose() / n as f64 + DMatrix::identity(n, n) * 0.1
}

/// Gaussian constraint data with `b = 𝒜(X₀)` (minus a positive margin on
/// inequalities) for a random `X₀ ≻ 0`, and `C = S₀ + 𝒜*(y₀)` with `S₀ ≻ 0`
/// and `y₀ ≥ 0` on inequalities, so both the primal and the dual are strictly
/// feasible and the optimum is attained. Zero right-hand sides are resampled.
pub fn generate_random(
    structure: &BlockStructure,
    m: usize,
    kinds: &[ConstraintKind],
    seed: u64,
) -> Result<ConicSdpProblem> {
    if kinds.len() != m {
        return Err(Error::DimensionMismatch {
            context: "constraint kinds",
            expected: m,
            found: kinds.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes = &structure.psd_sizes;
    let d = structure.free_dim;

    let mats: Vec<Vec<DMatrix<f64>>> = (0..m)
        .map(|_| sizes.iter().map(|&n| random_symmetric(&mut rng, n)).collect())
        .collect();
    let free_rows: Vec<Vec<f64>> = (0..m).map(|_| (0..d).map(|_| normal(&mut rng)).collect()).collect();

    // Redraw the interior point until no equality right-hand side is near zero.
    let (x0, xf0) = loop {
        let x0: Vec<DMatrix<f64>> = sizes.iter().map(|&n| random_psd(&mut rng, n)).collect();
        let xf0: Vec<f64> = (0..d).map(|_| normal(&mut rng)).collect();
        let ok = (0..m).all(|i| kinds[i] == ConstraintKind::Inequality || value(&mats[i], &free_rows[i], &x0, &xf0).abs() >= 1e-3);
        if ok {
            break (x0, xf0);
        }
    };
    let mut rhs = Vec::with_capacity(m);
    for i in 0..m {
        let mut v = value(&mats[i], &free_rows[i], &x0, &xf0);
        if kinds[i] == ConstraintKind::Inequality {
            v -= 0.1 + normal(&mut rng).abs();
            while v.abs() < 1e-3 {
                v -= 0.1 + normal(&mut rng).abs();
            }
        }
        rhs.push(v);
    }

    let y0: Vec<f64> = kinds
        .iter()
        .map(|k| {
            let y = normal(&mut rng);
            if *k == ConstraintKind::Inequality {
                y.abs()
            } else {
                y
            }
        })
        .collect();
    let cost_blocks: Vec<SymmetricMatrix> = sizes
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let mut c = random_psd(&mut rng, n);
            for i in 0..m {
                c += &mats[i][j] * y0[i];
            }
            SymmetricMatrix::from_dense(&c)
        })
        .collect();
    let cost_free: Vec<f64> = (0..d)
        .map(|t| (0..m).map(|i| free_rows[i][t] * y0[i]).sum())
        .collect();

    let constraints = (0..m)
        .map(|i| {
            Constraint::new(
                mats[i].iter().map(SparseSymmetric::from_dense).collect(),
                rhs[i],
                kinds[i],
            )
            .with_free(free_rows[i].clone())
        })
        .collect();
    ConicSdpProblem::new_normalized(
        format!("random-{seed}"),
        structure.clone(),
        Cost {
            blocks: cost_blocks,
            free: cost_free,
        },
        constraints,
    )
}

fn value(mats: &[DMatrix<f64>], free: &[f64], x0: &[DMatrix<f64>], xf0: &[f64]) -> f64 {
    mats.iter().zip(x0).map(|(a, x)| a.dot(x)).sum::<f64>() + free.iter().zip(xf0).map(|(a, x)| a * x).sum::<f64>()
}
