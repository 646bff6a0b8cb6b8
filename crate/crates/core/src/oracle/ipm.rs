//! Dense infeasible-start primal-dual path-following method (HKM direction,
//! Mehrotra predictor-corrector).
//!
//! Works on the equality form obtained by giving every inequality a 1×1 slack
//! block: `Σ_j ⟨A_ij, X_j⟩ + (A_f x)_i = b_i`, `X_j ⪰ 0`, `x` free. Free
//! variables stay in the Newton system as an augmented block.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::sym_eigen;
use crate::model::{ConicSdpProblem, PrimalPoint, SymmetricMatrix};

const STEP_FRACTION: f64 = 0.99;
const MAX_ITERS: usize = 120;
const DIVERGENCE: f64 = 1e10;

#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub x: PrimalPoint,
    /// Dual multipliers, one per constraint (inequality entries are ≥ 0).
    pub lambda: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    pub gap: f64,
    pub iterations: usize,
    /// Largest of the relative primal/dual infeasibilities and relative gap.
    pub accuracy: f64,
}

struct StandardForm {
    /// Sizes of all blocks, original ones first then one per inequality.
    sizes: Vec<usize>,
    n_orig: usize,
    cost: Vec<DMatrix<f64>>,
    /// `cons[i][j]`; `None` for blocks a constraint does not touch.
    cons: Vec<Vec<Option<DMatrix<f64>>>>,
    cons_free: DMatrix<f64>,
    cost_free: DVector<f64>,
    rhs: DVector<f64>,
}

impl StandardForm {
    fn new(p: &ConicSdpProblem) -> Self {
        let dense = p.dense();
        let m = dense.m();
        let n_orig = dense.sizes.len();
        let ineq: Vec<usize> = (0..m).filter(|&i| dense.is_ineq[i]).collect();
        let mut sizes = dense.sizes.clone();
        sizes.extend(std::iter::repeat_n(1, ineq.len()));
        let mut cost = dense.cost.clone();
        cost.extend(std::iter::repeat_n(DMatrix::zeros(1, 1), ineq.len()));
        let cons = (0..m)
            .map(|i| {
                let mut row: Vec<Option<DMatrix<f64>>> = dense.cons[i]
                    .iter()
                    .map(|a| if a.iter().all(|&v| v == 0.0) { None } else { Some(a.clone()) })
                    .collect();
                for &k in &ineq {
                    row.push(if k == i {
                        Some(DMatrix::from_element(1, 1, -1.0))
                    } else {
                        None
                    });
                }
                row
            })
            .collect();
        Self {
            sizes,
            n_orig,
            cost,
            cons,
            cons_free: dense.cons_free,
            cost_free: dense.cost_free,
            rhs: dense.rhs,
        }
    }

    fn m(&self) -> usize {
        self.cons.len()
    }

    fn d(&self) -> usize {
        self.cost_free.len()
    }

    fn map(&self, xs: &[DMatrix<f64>], free: &DVector<f64>) -> DVector<f64> {
        let mut out = &self.cons_free * free;
        for (i, row) in self.cons.iter().enumerate() {
            for (a, x) in row.iter().zip(xs) {
                if let Some(a) = a {
                    out[i] += a.dot(x);
                }
            }
        }
        out
    }

    fn adjoint(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> = self.sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for (i, row) in self.cons.iter().enumerate() {
            if y[i] == 0.0 {
                continue;
            }
            for (a, o) in row.iter().zip(out.iter_mut()) {
                if let Some(a) = a {
                    *o += a * y[i];
                }
            }
        }
        out
    }
}

fn sym(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

fn inv_spd(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    a.clone().cholesky().map(|c| c.inverse())
}

/// Largest step `α` keeping `x + α·dx ⪰ 0`, for `x ≻ 0`.
fn max_step(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> f64 {
    let Some(chol) = x.clone().cholesky() else {
        return 0.0;
    };
    let l = chol.l();
    let Some(linv) = l.clone().try_inverse() else {
        return 0.0;
    };
    let w = &linv * dx * linv.transpose();
    let (vals, _) = sym_eigen(&w);
    let min = vals[0];
    if min >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / min
    }
}

fn frob(blocks: &[DMatrix<f64>]) -> f64 {
    blocks.iter().map(|b| b.norm_squared()).sum::<f64>().sqrt()
}

fn inner(a: &[DMatrix<f64>], b: &[DMatrix<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

/// Solves the problem to relative accuracy `tol` (primal/dual infeasibility
/// and gap).
pub fn oracle_solve(problem: &ConicSdpProblem, tol: f64) -> Result<OracleSolution> {
    solve_with_best(problem, tol).0
}

/// Like [`oracle_solve`], also returning the most accurate iterate seen, which
/// is useful when the run stops short of `tol`.
pub(crate) fn solve_with_best(problem: &ConicSdpProblem, tol: f64) -> (Result<OracleSolution>, Option<OracleSolution>) {
    let sf = StandardForm::new(problem);
    let m = sf.m();
    let d = sf.d();
    let nb = sf.sizes.len();
    let total_dim: usize = sf.sizes.iter().sum();

    let b_norm = sf.rhs.norm();
    let c_norm = (frob(&sf.cost).powi(2) + sf.cost_free.norm_squared()).sqrt();

    // Block-wise starting point in the spirit of SDPT3's default.
    let mut xs = Vec::with_capacity(nb);
    let mut zs = Vec::with_capacity(nb);
    for (j, &n) in sf.sizes.iter().enumerate() {
        let nf = n as f64;
        let mut xi = 10.0f64.max(nf.sqrt());
        let mut eta = 10.0f64.max(nf.sqrt()).max(sf.cost[j].norm());
        for (i, row) in sf.cons.iter().enumerate() {
            if let Some(a) = &row[j] {
                let an = a.norm();
                xi = xi.max(nf * (1.0 + sf.rhs[i].abs()) / (1.0 + an));
                eta = eta.max(an);
            }
        }
        xs.push(DMatrix::identity(n, n) * xi);
        zs.push(DMatrix::identity(n, n) * eta);
    }
    let mut y = DVector::zeros(m);
    let mut free = DVector::zeros(d);

    let mut best: Option<(f64, OracleSolution)> = None;
    let mut stalls = 0;

    for iter in 0..MAX_ITERS {
        let ax = sf.map(&xs, &free);
        let rp = &sf.rhs - &ax;
        let aty = sf.adjoint(&y);
        let rd: Vec<DMatrix<f64>> = (0..nb).map(|j| &sf.cost[j] - &zs[j] - &aty[j]).collect();
        let rf = &sf.cost_free - sf.cons_free.transpose() * &y;

        let pobj = inner(&sf.cost, &xs) + sf.cost_free.dot(&free);
        let dobj = sf.rhs.dot(&y);
        let xz = inner(&xs, &zs);
        let mu = xz / total_dim.max(1) as f64;

        let pinf = rp.norm() / (1.0 + b_norm);
        let dinf = (frob(&rd).powi(2) + rf.norm_squared()).sqrt() / (1.0 + c_norm);
        let denom = 1.0 + pobj.abs() + dobj.abs();
        let relgap = (pobj - dobj).abs().max(xz.max(0.0)) / denom;
        let accuracy = pinf.max(dinf).max(relgap);

        let candidate = || OracleSolution {
            x: PrimalPoint {
                psd_blocks: xs[..sf.n_orig].iter().map(SymmetricMatrix::from_dense).collect(),
                free: free.iter().copied().collect(),
            },
            lambda: y.iter().copied().collect(),
            objective: pobj,
            dual_objective: dobj,
            gap: pobj - dobj,
            iterations: iter,
            accuracy,
        };
        if best.as_ref().is_none_or(|(a, _)| accuracy < *a) {
            best = Some((accuracy, candidate()));
        }
        if accuracy <= tol {
            return (Ok(candidate()), None);
        }
        let xnorm = frob(&xs) + free.norm();
        if !xnorm.is_finite() || xnorm > DIVERGENCE * (1.0 + b_norm) || y.norm() > DIVERGENCE * (1.0 + c_norm) {
            let err = Error::NotStrictlyFeasible(format!(
                "iterates diverged after {iter} iterations (|X| = {xnorm:e}, |y| = {:e})",
                y.norm()
            ));
            return (Err(err), best.map(|(_, b)| b));
        }

        let zinv: Vec<DMatrix<f64>> = match zs.iter().map(inv_spd).collect::<Option<Vec<_>>>() {
            Some(v) => v,
            None => break,
        };

        // Schur complement M_ik = Σ_j ⟨A_ij, X_j A_kj Z_j⁻¹⟩.
        let mut g: Vec<Vec<Option<DMatrix<f64>>>> = Vec::with_capacity(m);
        for row in &sf.cons {
            g.push(
                row.iter()
                    .enumerate()
                    .map(|(j, a)| a.as_ref().map(|a| &xs[j] * a * &zinv[j]))
                    .collect(),
            );
        }
        let mut kkt = DMatrix::zeros(m + d, m + d);
        for i in 0..m {
            for k in i..m {
                let mut s = 0.0;
                for j in 0..nb {
                    if let (Some(a), Some(gk)) = (&sf.cons[i][j], &g[k][j]) {
                        s += a.dot(gk);
                    }
                }
                kkt[(i, k)] = s;
                kkt[(k, i)] = s;
            }
        }
        for i in 0..m {
            for t in 0..d {
                kkt[(i, m + t)] = sf.cons_free[(i, t)];
                kkt[(m + t, i)] = sf.cons_free[(i, t)];
            }
        }
        let lu = kkt.clone().lu();

        let direction = |sigma_mu: f64, corr: Option<&[DMatrix<f64>]>| -> Option<(Vec<DMatrix<f64>>, DVector<f64>, DVector<f64>, Vec<DMatrix<f64>>)> {
            // ΔX = H − sym(X ΔZ Z⁻¹), H = σμZ⁻¹ − X − sym(corr Z⁻¹)
            let h: Vec<DMatrix<f64>> = (0..nb)
                .map(|j| {
                    let mut h = &zinv[j] * sigma_mu - &xs[j];
                    if let Some(c) = corr {
                        h -= sym(&(&c[j] * &zinv[j]));
                    }
                    h
                })
                .collect();
            let base: Vec<DMatrix<f64>> = (0..nb)
                .map(|j| &h[j] - sym(&(&xs[j] * &rd[j] * &zinv[j])))
                .collect();
            let rhs_p = &rp - sf.map(&base, &DVector::zeros(d));
            let mut rhs = DVector::zeros(m + d);
            rhs.rows_mut(0, m).copy_from(&rhs_p);
            rhs.rows_mut(m, d).copy_from(&rf);
            let sol = lu.solve(&rhs).or_else(|| {
                let (s, _) = crate::linalg::lstsq(&kkt, &rhs);
                Some(s)
            })?;
            if sol.iter().any(|v| !v.is_finite()) {
                return None;
            }
            let dy = sol.rows(0, m).into_owned();
            let dfree = sol.rows(m, d).into_owned();
            let atdy = sf.adjoint(&dy);
            let dz: Vec<DMatrix<f64>> = (0..nb).map(|j| &rd[j] - &atdy[j]).collect();
            let dx: Vec<DMatrix<f64>> = (0..nb)
                .map(|j| &h[j] - sym(&(&xs[j] * &dz[j] * &zinv[j])))
                .collect();
            Some((dx, dfree, dy, dz))
        };

        let steps = |dx: &[DMatrix<f64>], dz: &[DMatrix<f64>]| -> (f64, f64) {
            let ap = (0..nb).map(|j| max_step(&xs[j], &dx[j])).fold(f64::INFINITY, f64::min);
            let ad = (0..nb).map(|j| max_step(&zs[j], &dz[j])).fold(f64::INFINITY, f64::min);
            (ap, ad)
        };

        let Some((dx_a, _, _, dz_a)) = direction(0.0, None) else {
            break;
        };
        let (ap, ad) = steps(&dx_a, &dz_a);
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let mut mu_aff = 0.0;
        for j in 0..nb {
            mu_aff += (&xs[j] + &dx_a[j] * ap).dot(&(&zs[j] + &dz_a[j] * ad));
        }
        mu_aff /= total_dim.max(1) as f64;
        let sigma = if mu > 0.0 {
            (mu_aff / mu).clamp(0.0, 1.0).powi(3)
        } else {
            0.0
        };
        let corr: Vec<DMatrix<f64>> = (0..nb).map(|j| &dx_a[j] * &dz_a[j]).collect();
        let Some((dx, dfree, dy, dz)) = direction(sigma * mu, Some(&corr)) else {
            break;
        };
        let (ap, ad) = steps(&dx, &dz);
        let ap = (STEP_FRACTION * ap).min(1.0);
        let ad = (STEP_FRACTION * ad).min(1.0);
        if ap < 1e-12 && ad < 1e-12 {
            stalls += 1;
            if stalls > 3 {
                break;
            }
        }
        for j in 0..nb {
            xs[j] += &dx[j] * ap;
            zs[j] += &dz[j] * ad;
            xs[j] = sym(&xs[j]);
            zs[j] = sym(&zs[j]);
        }
        free += dfree * ap;
        y += dy * ad;
    }

    match best {
        // The last few digits are sometimes lost to conditioning near the
        // optimal face; accept anything within a factor 1e3 of the target.
        Some((acc, sol)) if acc <= tol * 1e3 => (Ok(sol), None),
        Some((acc, sol)) => {
            let err = if acc.is_finite() && acc < 1.0 {
                Error::MaxIterations(MAX_ITERS)
            } else {
                Error::NotStrictlyFeasible(format!("no progress towards feasibility (accuracy {acc:e})"))
            };
            (Err(err), Some(sol))
        }
        None => (Err(Error::MaxIterations(MAX_ITERS)), None),
    }
}
