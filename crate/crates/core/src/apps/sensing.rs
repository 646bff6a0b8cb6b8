//! Nuclear-norm matrix sensing, PSD and symmetric variants.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::random::{normal, random_symmetric};
use crate::error::{Error, Result};
use crate::factorization::FactorizedPoint;
use crate::linalg::sym_eigen;
use crate::model::{BlockStructure, ConicSdpProblem, Constraint, ConstraintKind, Cost, SparseSymmetric, SymmetricMatrix};

#[derive(Debug, Clone)]
pub struct SensingFixture {
    pub problem: ConicSdpProblem,
    pub planted: DMatrix<f64>,
    /// `‖X★‖_*`, an upper bound on the optimal value since `X★` is feasible.
    pub planted_nuclear_norm: f64,
}

pub fn nuclear_norm(x: &DMatrix<f64>) -> f64 {
    sym_eigen(x).0.iter().map(|v| v.abs()).sum()
}

/// `m` Gaussian symmetric `n×n` matrices scaled to unit Frobenius norm.
pub fn random_measurements(n: usize, m: usize, seed: u64) -> Vec<DMatrix<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m)
        .map(|_| {
            let a = random_symmetric(&mut rng, n);
            let norm = a.norm();
            a / norm
        })
        .collect()
}

fn check(measurements: &[DMatrix<f64>], planted: &DMatrix<f64>) -> Result<usize> {
    let n = planted.nrows();
    if planted.ncols() != n {
        return Err(Error::DimensionMismatch {
            context: "planted matrix columns",
            expected: n,
            found: planted.ncols(),
        });
    }
    if let Some(a) = measurements.iter().find(|a| a.nrows() != n || a.ncols() != n) {
        return Err(Error::DimensionMismatch {
            context: "measurement size",
            expected: n,
            found: a.nrows(),
        });
    }
    Ok(n)
}

/// `min Iₙ•X` s.t. `𝒜(X) = 𝒜(X★)`, `X ⪰ 0`.
pub fn build_sensing_psd(measurements: &[DMatrix<f64>], planted: &DMatrix<f64>) -> Result<SensingFixture> {
    let n = check(measurements, planted)?;
    let constraints = measurements
        .iter()
        .map(|a| {
            Constraint::new(
                vec![SparseSymmetric::from_dense(a)],
                a.dot(planted),
                ConstraintKind::Equality,
            )
        })
        .collect();
    let problem = ConicSdpProblem::new(
        format!("sensing-psd-{n}"),
        BlockStructure::single(n),
        Cost {
            blocks: vec![SymmetricMatrix::identity(n)],
            free: vec![],
        },
        constraints,
    )?;
    Ok(SensingFixture {
        problem,
        planted: planted.clone(),
        planted_nuclear_norm: nuclear_norm(planted),
    })
}

/// Split `X = X₁ − X₂`: `min Iₙ•X₁ + Iₙ•X₂` s.t. `𝒜(X₁) − 𝒜(X₂) = 𝒜(X★)`,
/// both blocks factorized.
pub fn build_sensing_symmetric(measurements: &[DMatrix<f64>], planted: &DMatrix<f64>) -> Result<SensingFixture> {
    let n = check(measurements, planted)?;
    let constraints = measurements
        .iter()
        .map(|a| {
            Constraint::new(
                vec![SparseSymmetric::from_dense(a), SparseSymmetric::from_dense(&(-a))],
                a.dot(planted),
                ConstraintKind::Equality,
            )
        })
        .collect();
    let problem = ConicSdpProblem::new(
        format!("sensing-symmetric-{n}"),
        BlockStructure::new(vec![n, n], 2, 0)?,
        Cost {
            blocks: vec![SymmetricMatrix::identity(n), SymmetricMatrix::identity(n)],
            free: vec![],
        },
        constraints,
    )?;
    Ok(SensingFixture {
        problem,
        planted: planted.clone(),
        planted_nuclear_norm: nuclear_norm(planted),
    })
}

/// `X₁ − X₂` from a point of the split problem.
pub fn recover_symmetric(point: &FactorizedPoint) -> DMatrix<f64> {
    let lift = |j: usize| {
        if j < point.factors.len() {
            &point.factors[j] * point.factors[j].transpose()
        } else {
            point.tail_blocks[j - point.factors.len()].to_dense()
        }
    };
    lift(0) - lift(1)
}

/// Seeded PSD sensing instance with a planted `G Gᵀ`, `G` of size `n×r`.
pub fn sensing_psd_instance(n: usize, m: usize, r: usize, seed: u64) -> Result<SensingFixture> {
    let measurements = random_measurements(n, m, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0001);
    let g = DMatrix::from_fn(n, r, |_, _| normal(&mut rng));
    let mut f = build_sensing_psd(&measurements, &(&g * g.transpose()))?;
    f.problem.name = format!("sensing-psd-{n}-{m}-{r}-{seed}");
    Ok(f)
}

/// Seeded symmetric sensing instance with planted `G₁G₁ᵀ − G₂G₂ᵀ`, each of
/// rank `r`.
pub fn sensing_symmetric_instance(n: usize, m: usize, r: usize, seed: u64) -> Result<SensingFixture> {
    let measurements = random_measurements(n, m, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0002);
    let g1 = DMatrix::from_fn(n, r, |_, _| normal(&mut rng));
    let g2 = DMatrix::from_fn(n, r, |_, _| normal(&mut rng));
    let planted = &g1 * g1.transpose() - &g2 * g2.transpose();
    let mut f = build_sensing_symmetric(&measurements, &planted)?;
    f.problem.name = format!("sensing-symmetric-{n}-{m}-{r}-{seed}");
    Ok(f)
}
