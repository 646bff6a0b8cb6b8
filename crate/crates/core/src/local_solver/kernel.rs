//! Augmented-Lagrangian value, gradient and Hessian-vector products over the
//! flat variable vector `(vec Y₁, …, vec Y_ℓ, x)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{ConicSdpProblem, DenseProblem};

/// Offsets of each factor inside the flat variable vector (column-major).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub shapes: Vec<(usize, usize)>,
    pub offsets: Vec<usize>,
    pub free_offset: usize,
    pub free_dim: usize,
}

impl Layout {
    pub fn new(shapes: Vec<(usize, usize)>, free_dim: usize) -> Self {
        let mut offsets = Vec::with_capacity(shapes.len());
        let mut at = 0;
        for &(n, p) in &shapes {
            offsets.push(at);
            at += n * p;
        }
        Self {
            shapes,
            offsets,
            free_offset: at,
            free_dim,
        }
    }

    pub fn len(&self) -> usize {
        self.free_offset + self.free_dim
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn block(&self, v: &DVector<f64>, j: usize) -> DMatrix<f64> {
        let (n, p) = self.shapes[j];
        DMatrix::from_column_slice(n, p, &v.as_slice()[self.offsets[j]..self.offsets[j] + n * p])
    }

    pub fn free(&self, v: &DVector<f64>) -> DVector<f64> {
        v.rows(self.free_offset, self.free_dim).into_owned()
    }

    pub fn set_block(&self, v: &mut DVector<f64>, j: usize, m: &DMatrix<f64>) {
        let (n, p) = self.shapes[j];
        debug_assert_eq!((m.nrows(), m.ncols()), (n, p));
        v.as_mut_slice()[self.offsets[j]..self.offsets[j] + n * p].copy_from_slice(m.as_slice());
    }

    pub fn pack(&self, blocks: &[DMatrix<f64>], free: &DVector<f64>) -> DVector<f64> {
        let mut v = DVector::zeros(self.len());
        for (j, b) in blocks.iter().enumerate() {
            self.set_block(&mut v, j, b);
        }
        v.rows_mut(self.free_offset, self.free_dim).copy_from(free);
        v
    }

    pub fn unpack(&self, v: &DVector<f64>) -> (Vec<DMatrix<f64>>, DVector<f64>) {
        (
            (0..self.shapes.len()).map(|j| self.block(v, j)).collect(),
            self.free(v),
        )
    }
}

/// Quantities at one point, independent of the multipliers.
#[derive(Debug, Clone)]
pub struct PointEval {
    pub factors: Vec<DMatrix<f64>>,
    pub objective: f64,
    /// `c = 𝒜(lift) − b`.
    pub residual: DVector<f64>,
}

/// Shifted multipliers `λ̃` and the PHR branch mask.
#[derive(Debug, Clone)]
pub struct Shifted {
    pub lambda: DVector<f64>,
    /// Whether constraint `i` contributes curvature `ρ ∇cᵢ ∇cᵢᵀ`.
    pub curved: Vec<bool>,
}

/// Second-order model data at a point: `H u = 2 S̃ U + ρ Jᵀ W J u`.
#[derive(Debug, Clone)]
pub struct LocalModel {
    pub slack: Vec<DMatrix<f64>>,
    /// Row `i` is `∇cᵢ` in the flat layout.
    pub jacobian: DMatrix<f64>,
    pub weights: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct Kernel {
    pub dense: DenseProblem,
    pub layout: Layout,
}

impl Kernel {
    pub fn new(problem: &ConicSdpProblem, ranks: &[usize]) -> Self {
        let dense = problem.dense();
        let shapes = dense
            .sizes
            .iter()
            .zip(ranks)
            .map(|(&n, &p)| (n, p))
            .collect();
        let layout = Layout::new(shapes, dense.free_dim);
        Self { dense, layout }
    }

    pub fn m(&self) -> usize {
        self.dense.m()
    }

    pub fn eval_point(&self, v: &DVector<f64>) -> Result<PointEval> {
        let (factors, free) = self.layout.unpack(v);
        let lifts: Vec<DMatrix<f64>> = factors.iter().map(|y| y * y.transpose()).collect();
        let objective = self.dense.objective(&lifts, &free);
        let residual = self.dense.map(&lifts, &free) - &self.dense.rhs;
        if !objective.is_finite() || residual.iter().any(|r| !r.is_finite()) {
            return Err(Error::NumericalFailure(
                "non-finite objective or constraint value".into(),
            ));
        }
        Ok(PointEval {
            factors,
            objective,
            residual,
        })
    }

    pub fn shifted(&self, pe: &PointEval, lambda: &DVector<f64>, rho: f64) -> Shifted {
        let m = self.m();
        let mut out = DVector::zeros(m);
        let mut curved = vec![false; m];
        for i in 0..m {
            let t = lambda[i] - rho * pe.residual[i];
            if self.dense.is_ineq[i] {
                out[i] = t.max(0.0);
                curved[i] = t > 0.0;
            } else {
                out[i] = t;
                curved[i] = true;
            }
        }
        Shifted {
            lambda: out,
            curved,
        }
    }

    /// Augmented Lagrangian value
    /// `f − Σ_eq λc + ρ/2 Σ_eq c² + 1/(2ρ) Σ_ineq (max(0, λ − ρc)² − λ²)`.
    pub fn al_value(&self, pe: &PointEval, lambda: &DVector<f64>, rho: f64) -> f64 {
        let mut v = pe.objective;
        for i in 0..self.m() {
            let c = pe.residual[i];
            let l = lambda[i];
            if self.dense.is_ineq[i] {
                if rho > 0.0 {
                    let t = (l - rho * c).max(0.0);
                    v += (t * t - l * l) / (2.0 * rho);
                } else if l > 0.0 {
                    v -= l * c;
                }
            } else {
                v += -l * c + 0.5 * rho * c * c;
            }
        }
        v
    }

    /// `∇ = (2 S̃_j Y_j)_j ⊕ (c_f − A_fᵀ λ̃)` with `S̃ = C − 𝒜*(λ̃)`.
    pub fn gradient(&self, pe: &PointEval, shifted: &Shifted) -> (DVector<f64>, Vec<DMatrix<f64>>) {
        let (slack, free) = self.dense.slack(shifted.lambda.as_slice());
        let blocks: Vec<DMatrix<f64>> = slack
            .iter()
            .zip(&pe.factors)
            .map(|(s, y)| s * y * 2.0)
            .collect();
        (self.layout.pack(&blocks, &free), slack)
    }

    /// Row `i`: gradient of `cᵢ` w.r.t. the flat variables.
    pub fn jacobian(&self, pe: &PointEval) -> DMatrix<f64> {
        let m = self.m();
        let mut jac = DMatrix::zeros(m, self.layout.len());
        for i in 0..m {
            let blocks: Vec<DMatrix<f64>> = self.dense.cons[i]
                .iter()
                .zip(&pe.factors)
                .map(|(a, y)| a * y * 2.0)
                .collect();
            let free = self.dense.cons_free.row(i).transpose();
            jac.set_row(i, &self.layout.pack(&blocks, &free).transpose());
        }
        jac
    }

    pub fn model(&self, pe: &PointEval, shifted: &Shifted, rho: f64) -> LocalModel {
        let (slack, _) = self.dense.slack(shifted.lambda.as_slice());
        let weights = DVector::from_iterator(
            self.m(),
            shifted.curved.iter().map(|&c| if c { rho } else { 0.0 }),
        );
        LocalModel {
            slack,
            jacobian: self.jacobian(pe),
            weights,
        }
    }
}

impl LocalModel {
    pub fn hvp(&self, layout: &Layout, u: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(layout.len());
        for (j, s) in self.slack.iter().enumerate() {
            let uj = layout.block(u, j);
            layout.set_block(&mut out, j, &(s * uj * 2.0));
        }
        if self.jacobian.nrows() > 0 {
            let ju = &self.jacobian * u;
            let weighted = ju.component_mul(&self.weights);
            out += self.jacobian.transpose() * weighted;
        }
        out
    }

    /// Dense Hessian, column by column.
    pub fn dense(&self, layout: &Layout) -> DMatrix<f64> {
        let n = layout.len();
        let mut h = DMatrix::zeros(n, n);
        let mut e = DVector::zeros(n);
        for k in 0..n {
            e[k] = 1.0;
            h.set_column(k, &self.hvp(layout, &e));
            e[k] = 0.0;
        }
        (&h + h.transpose()) * 0.5
    }
}
