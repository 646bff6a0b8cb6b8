//! Second-order cone constraints through the arrow-matrix embedding.
//!
//! `x ∈ 𝒬ⁿ` (`x₁ ≥ ‖x̄‖`) iff `Arw(x) = [[x₁, x̄ᵀ], [x̄, x₁I]] ⪰ 0`. A free PSD
//! block `M` of size `n` equals some `Arw(x)` iff its diagonal is constant and
//! its trailing off-diagonal entries vanish, which takes `τ(n−1)` equalities.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::random::{normal, random_psd, random_symmetric};
use crate::error::{Error, Result};
use crate::model::{BlockStructure, ConicSdpProblem, Constraint, ConstraintKind, Cost, SparseSymmetric, SymmetricMatrix};

/// `⟨A, X⟩ + a·x = b` with `X` in the PSD block and `x` in the cone.
#[derive(Debug, Clone)]
pub struct SocConstraint {
    pub psd: SparseSymmetric,
    pub cone: Vec<f64>,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct SocProblem {
    pub psd_size: usize,
    pub cone_dim: usize,
    pub cost_psd: SymmetricMatrix,
    pub cost_cone: Vec<f64>,
    pub constraints: Vec<SocConstraint>,
}

pub fn arrow_matrix(x: &[f64]) -> SymmetricMatrix {
    let n = x.len();
    let mut m = SymmetricMatrix::zeros(n);
    for k in 0..n {
        m.set(k, k, x[0]);
        if k > 0 {
            m.set(0, k, x[k]);
        }
    }
    m
}

/// Cone coordinates of an arrow matrix: `x₁ = M₁₁`, `x_k = M₁ₖ`.
pub fn arrow_to_cone(m: &SymmetricMatrix) -> Vec<f64> {
    (0..m.dim()).map(|k| m.get(0, k)).collect()
}

/// `x₁ − ‖x̄‖`; nonnegative iff `x ∈ 𝒬ⁿ`.
pub fn cone_margin(x: &[f64]) -> f64 {
    x[0] - x[1..].iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Linear functional `a·x` as a symmetric matrix acting on `Arw(x)`.
fn cone_functional(a: &[f64]) -> SparseSymmetric {
    let n = a.len();
    let mut entries = vec![(0, 0, a[0])];
    entries.extend((1..n).map(|k| (0, k, 0.5 * a[k])));
    SparseSymmetric::new(n, entries)
}

/// Two-block SDP: the PSD block (factorized) and the arrow block (tail), with
/// the original equalities first and the `τ(n₂−1)` structural equalities
/// `M_kk − M₁₁ = 0` (`k ≥ 2`) and `M_kl = 0` (`2 ≤ k < l`) after them.
pub fn build_soc_embedding(soc: &SocProblem) -> Result<ConicSdpProblem> {
    let n2 = soc.cone_dim;
    if n2 < 2 {
        return Err(Error::UnsupportedStructure(format!("cone dimension {n2} < 2")));
    }
    let n1 = soc.psd_size;
    if soc.cost_cone.len() != n2 || soc.constraints.iter().any(|c| c.cone.len() != n2) {
        return Err(Error::DimensionMismatch {
            context: "cone coefficient length",
            expected: n2,
            found: soc.constraints.iter().map(|c| c.cone.len()).find(|&l| l != n2).unwrap_or(soc.cost_cone.len()),
        });
    }
    let mut constraints: Vec<Constraint> = soc
        .constraints
        .iter()
        .map(|c| Constraint::new(vec![c.psd.clone(), cone_functional(&c.cone)], c.rhs, ConstraintKind::Equality))
        .collect();
    let zero = SparseSymmetric::zeros(n1);
    for k in 1..n2 {
        constraints.push(Constraint::new(
            vec![zero.clone(), SparseSymmetric::new(n2, [(k, k, 1.0), (0, 0, -1.0)])],
            0.0,
            ConstraintKind::Equality,
        ));
    }
    for k in 1..n2 {
        for l in k + 1..n2 {
            constraints.push(Constraint::new(
                vec![zero.clone(), SparseSymmetric::new(n2, [(k, l, 1.0)])],
                0.0,
                ConstraintKind::Equality,
            ));
        }
    }
    let mut cost_cone = SymmetricMatrix::zeros(n2);
    cone_functional(&soc.cost_cone).add_scaled_to_symmetric(1.0, &mut cost_cone);
    ConicSdpProblem::new(
        format!("soc-{n1}-{n2}"),
        BlockStructure::new(vec![n1, n2], 1, 0)?,
        Cost {
            blocks: vec![soc.cost_psd.clone(), cost_cone],
            free: vec![],
        },
        constraints,
    )
}

/// Seeded instance with strictly feasible primal (`X₀ ≻ 0`, `x₀` interior)
/// and dual (`C − 𝒜*(y) ≻ 0`, `c − 𝒜_cone*(y)` interior to the cone).
pub fn soc_instance(n1: usize, n2: usize, m1: usize, seed: u64) -> Result<SocProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mats: Vec<DMatrix<f64>> = (0..m1).map(|_| random_symmetric(&mut rng, n1)).collect();
    let cones: Vec<Vec<f64>> = (0..m1).map(|_| (0..n2).map(|_| normal(&mut rng)).collect()).collect();
    let interior = |rng: &mut ChaCha8Rng| {
        let tail: Vec<f64> = (1..n2).map(|_| normal(rng)).collect();
        let norm = tail.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut x = vec![norm + 0.5 + normal(rng).abs()];
        x.extend(tail);
        x
    };
    let x0 = random_psd(&mut rng, n1);
    let xc0 = interior(&mut rng);
    let y0: Vec<f64> = (0..m1).map(|_| normal(&mut rng)).collect();
    let mut cost_psd = random_psd(&mut rng, n1);
    let mut cost_cone = interior(&mut rng);
    for i in 0..m1 {
        cost_psd += &mats[i] * y0[i];
        for k in 0..n2 {
            cost_cone[k] += cones[i][k] * y0[i];
        }
    }
    let constraints = (0..m1)
        .map(|i| SocConstraint {
            psd: SparseSymmetric::from_dense(&mats[i]),
            cone: cones[i].clone(),
            rhs: mats[i].dot(&x0) + cones[i].iter().zip(&xc0).map(|(a, x)| a * x).sum::<f64>(),
        })
        .collect();
    Ok(SocProblem {
        psd_size: n1,
        cone_dim: n2,
        cost_psd: SymmetricMatrix::from_dense(&cost_psd),
        cost_cone,
        constraints,
    })
}
