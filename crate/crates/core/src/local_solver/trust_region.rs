//! Trust-region Newton iteration with Steihaug truncated CG.

use nalgebra::DVector;

use super::kernel::{Kernel, LocalModel, Layout};
use crate::error::Result;
use crate::linalg::min_eigenpair;

const ETA_ACCEPT: f64 = 0.1;
const ETA_EXPAND: f64 = 0.75;
const MAX_RADIUS: f64 = 1e8;
/// Variables beyond this norm mean the AL is unbounded below at this `ρ`.
const DIVERGENCE_NORM: f64 = 1e12;
/// Dense eigen-solves for the curvature probe stop above this many variables.
const DENSE_PROBE_LIMIT: usize = 1500;

pub(crate) struct InnerResult {
    pub v: DVector<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub accepted: usize,
    pub converged: bool,
}

struct Snapshot {
    v: DVector<f64>,
    value: f64,
    grad: DVector<f64>,
    infeasibility: f64,
}

fn snapshot(kernel: &Kernel, v: DVector<f64>, lambda: &DVector<f64>, rho: f64) -> Result<Snapshot> {
    let pe = kernel.eval_point(&v)?;
    let sh = kernel.shifted(&pe, lambda, rho);
    let value = kernel.al_value(&pe, lambda, rho);
    let (grad, _) = kernel.gradient(&pe, &sh);
    let infeasibility = super::violation(kernel, &pe);
    Ok(Snapshot {
        v,
        value,
        grad,
        infeasibility,
    })
}

fn local_model(kernel: &Kernel, v: &DVector<f64>, lambda: &DVector<f64>, rho: f64) -> Result<LocalModel> {
    let pe = kernel.eval_point(v)?;
    let sh = kernel.shifted(&pe, lambda, rho);
    Ok(kernel.model(&pe, &sh, rho))
}

/// Smallest `τ ≥ 0` with `‖z + τ d‖ = Δ`.
fn to_boundary(z: &DVector<f64>, d: &DVector<f64>, radius: f64) -> f64 {
    let a = d.dot(d);
    let b = 2.0 * z.dot(d);
    let c = z.dot(z) - radius * radius;
    let disc = (b * b - 4.0 * a * c).max(0.0);
    (-b + disc.sqrt()) / (2.0 * a)
}

/// Approximately minimizes `gᵀs + ½ sᵀHs` over `‖s‖ ≤ Δ`.
fn steihaug(model: &LocalModel, layout: &Layout, g: &DVector<f64>, radius: f64) -> DVector<f64> {
    let n = g.len();
    let gnorm = g.norm();
    let tol = gnorm * gnorm.sqrt().min(0.5);
    let mut z = DVector::zeros(n);
    let mut r = g.clone();
    let mut d = -g;
    for _ in 0..n.max(1) * 2 {
        let hd = model.hvp(layout, &d);
        let curv = d.dot(&hd);
        if curv <= 1e-14 * d.norm_squared() {
            let tau = to_boundary(&z, &d, radius);
            return z + d * tau;
        }
        let rr = r.dot(&r);
        let alpha = rr / curv;
        let z_next = &z + &d * alpha;
        if z_next.norm() >= radius {
            let tau = to_boundary(&z, &d, radius);
            return z + d * tau;
        }
        z = z_next;
        r += hd * alpha;
        if r.norm() <= tol {
            return z;
        }
        let beta = r.dot(&r) / rr;
        d = -&r + d * beta;
    }
    z
}

/// Minimizes the AL at fixed `(λ, ρ)` to gradient norm
/// `max(tol, 0.1 · infeasibility)` (re-evaluated at the current iterate),
/// checking for negative curvature whenever the gradient is that small.
pub(crate) fn minimize(
    kernel: &Kernel,
    v0: DVector<f64>,
    lambda: &DVector<f64>,
    rho: f64,
    tol: f64,
    max_iter: usize,
    radius: &mut f64,
) -> Result<InnerResult> {
    let layout = &kernel.layout;
    let mut cur = snapshot(kernel, v0, lambda, rho)?;
    let mut accepted = 0;
    let mut iterations = 0;
    let mut converged = false;

    let target = |s: &Snapshot| tol.max(0.1 * s.infeasibility);
    while iterations < max_iter {
        let gnorm = cur.grad.norm();
        let model = local_model(kernel, &cur.v, lambda, rho)?;
        let (step, predicted) = if gnorm <= target(&cur) {
            if layout.len() > DENSE_PROBE_LIMIT {
                converged = true;
                break;
            }
            let h = model.dense(layout);
            let (eig, vec) = min_eigenpair(&h);
            let scale = h.iter().fold(1.0f64, |a, x| a.max(x.abs()));
            if layout.is_empty() || eig >= -1e-9 * scale {
                converged = true;
                break;
            }
            let sign = if cur.grad.dot(&vec) > 0.0 { -1.0 } else { 1.0 };
            let s = vec * (sign * *radius);
            let pred = -(cur.grad.dot(&s) + 0.5 * eig * *radius * *radius);
            (s, pred)
        } else {
            let s = steihaug(&model, layout, &cur.grad, *radius);
            let hs = model.hvp(layout, &s);
            let pred = -(cur.grad.dot(&s) + 0.5 * s.dot(&hs));
            (s, pred)
        };
        iterations += 1;

        let trial_v = &cur.v + &step;
        let trial = snapshot(kernel, trial_v, lambda, rho).ok();
        let ratio = match &trial {
            Some(t) if t.value.is_finite() && predicted > 0.0 => {
                let actual = cur.value - t.value;
                let floor = 1e-15 * (1.0 + cur.value.abs());
                if predicted <= floor {
                    // Reductions at rounding level: accept only if the gradient improves.
                    if t.value <= cur.value + floor && t.grad.norm() < gnorm {
                        1.0
                    } else {
                        -1.0
                    }
                } else {
                    actual / predicted
                }
            }
            _ => -1.0,
        };

        if ratio >= ETA_ACCEPT {
            cur = trial.expect("ratio is positive only for a finite trial");
            accepted += 1;
            if ratio >= ETA_EXPAND {
                *radius = (*radius * 2.0).min(MAX_RADIUS);
            }
        } else {
            *radius *= 0.25;
        }
        if cur.v.norm() > DIVERGENCE_NORM {
            break;
        }
        if *radius < 1e-15 * (1.0 + cur.v.norm()) {
            // No further progress is representable.
            converged = cur.grad.norm() <= target(&cur);
            break;
        }
    }

    let grad_norm = cur.grad.norm();
    let done = grad_norm <= target(&cur);
    Ok(InnerResult {
        value: cur.value,
        grad_norm,
        v: cur.v,
        iterations,
        accepted,
        converged: converged || done,
    })
}
