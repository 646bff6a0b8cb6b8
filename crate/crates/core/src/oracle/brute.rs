//! Exhaustive search for problems with a single 2×2 block.
//!
//! `X = [[x₁₁, x₁₂], [x₁₂, x₂₂]]` is a point `v` of ℝ³. A linear objective
//! attains its minimum either at a vertex of the polyhedron cut out by the
//! linear constraints that happens to be PSD, or on the rank-≤1 boundary
//! `X = s·u(θ)u(θ)ᵀ` (an optimal face of the polyhedron that contains a PSD
//! interior point also contains an optimal boundary point). Vertices are
//! enumerated over all row subsets. On the boundary, `s` solves a
//! one-dimensional LP for each `θ`, and `θ` is scanned on a fine grid and
//! refined by bracketing; with two independent equalities the admissible `θ`
//! are roots of a trigonometric polynomial, located by sign changes and
//! bisection.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{lstsq, matrix_rank};
use crate::model::{ConicSdpProblem, ConstraintKind, SparseSymmetric, SymmetricMatrix};

const THETA_GRID: usize = 200_000;

fn coords_sparse(a: &SparseSymmetric) -> [f64; 3] {
    let mut c = [0.0; 3];
    for &(i, j, v) in a.entries() {
        match (i, j) {
            (0, 0) => c[0] += v,
            (0, 1) => c[1] += 2.0 * v,
            _ => c[2] += v,
        }
    }
    c
}

fn coords_dense(a: &SymmetricMatrix) -> [f64; 3] {
    [a.get(0, 0), 2.0 * a.get(0, 1), a.get(1, 1)]
}

fn dot3(a: &[f64; 3], v: &[f64; 3]) -> f64 {
    a[0] * v[0] + a[1] * v[1] + a[2] * v[2]
}

/// `u uᵀ` for `u = (cos θ, sin θ)`, in coordinates.
fn ray(theta: f64) -> [f64; 3] {
    let (s, c) = theta.sin_cos();
    [c * c, c * s, s * s]
}

struct Search {
    cost: [f64; 3],
    eqs: Vec<([f64; 3], f64)>,
    ineqs: Vec<([f64; 3], f64)>,
}

enum Ray {
    Infeasible,
    Unbounded,
    Value(f64),
}

impl Search {
    fn tol(v: &[f64; 3]) -> f64 {
        1e-10 * (1.0 + v.iter().map(|x| x.abs()).sum::<f64>())
    }

    fn feasible(&self, v: &[f64; 3]) -> bool {
        let tol = Self::tol(v);
        let psd = v[0] >= -tol && v[2] >= -tol && v[0] * v[2] - v[1] * v[1] >= -tol * (1.0 + v[0].abs() + v[2].abs());
        psd && self.ineqs.iter().all(|(g, r)| dot3(g, v) >= r - tol * (1.0 + r.abs()))
            && self.eqs.iter().all(|(a, r)| (dot3(a, v) - r).abs() <= 1e3 * tol * (1.0 + r.abs()))
    }

    /// PSD vertices of the polyhedron: all equalities plus enough
    /// inequalities to pin a point.
    fn vertices(&self) -> Option<f64> {
        let m = self.ineqs.len();
        let mut best: Option<f64> = None;
        for mask in 0u32..(1 << m) {
            let chosen: Vec<&([f64; 3], f64)> = self
                .eqs
                .iter()
                .chain((0..m).filter(|i| mask >> i & 1 == 1).map(|i| &self.ineqs[i]))
                .collect();
            if chosen.len() != 3 {
                continue;
            }
            let a = DMatrix::from_fn(3, 3, |r, c| chosen[r].0[c]);
            if matrix_rank(&a) < 3 {
                continue;
            }
            let rhs = DVector::from_iterator(3, chosen.iter().map(|c| c.1));
            let Some(v) = a.lu().solve(&rhs) else { continue };
            let v = [v[0], v[1], v[2]];
            if self.feasible(&v) {
                let f = dot3(&self.cost, &v);
                best = Some(best.map_or(f, |b: f64| b.min(f)));
            }
        }
        best
    }

    /// Best `s ≥ 0` along the ray `s·u(θ)u(θ)ᵀ`.
    fn along(&self, theta: f64) -> Ray {
        let w = ray(theta);
        let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
        for (a, r) in &self.eqs {
            let alpha = dot3(a, &w);
            if alpha.abs() <= 1e-14 {
                if r.abs() > 1e-12 {
                    return Ray::Infeasible;
                }
                continue;
            }
            let s = r / alpha;
            lo = lo.max(s);
            hi = hi.min(s);
        }
        for (g, r) in &self.ineqs {
            let gamma = dot3(g, &w);
            if gamma > 0.0 {
                lo = lo.max(r / gamma);
            } else if gamma < 0.0 {
                hi = hi.min(r / gamma);
            } else if *r > 0.0 {
                return Ray::Infeasible;
            }
        }
        if lo > hi * (1.0 + 1e-12) + 1e-14 {
            return Ray::Infeasible;
        }
        let kappa = dot3(&self.cost, &w);
        if kappa >= 0.0 {
            Ray::Value(kappa * lo)
        } else if hi.is_finite() {
            Ray::Value(kappa * hi)
        } else {
            Ray::Unbounded
        }
    }

    /// Minimum over the rank-≤1 boundary when at most one equality is present.
    fn boundary_scan(&self) -> Result<Option<f64>> {
        let h = std::f64::consts::PI / THETA_GRID as f64;
        let mut vals = Vec::with_capacity(THETA_GRID);
        for i in 0..THETA_GRID {
            match self.along(i as f64 * h) {
                Ray::Unbounded => return Err(Error::NumericalFailure("objective appears unbounded below".into())),
                Ray::Infeasible => vals.push(f64::INFINITY),
                Ray::Value(f) => vals.push(f),
            }
        }
        let mut best: Option<f64> = None;
        // Refine every grid point that is a local minimum (including ones next
        // to an infeasible neighbour, where the optimum may be an endpoint).
        for i in 0..THETA_GRID {
            let f = vals[i];
            if !f.is_finite() {
                continue;
            }
            let prev = vals[(i + THETA_GRID - 1) % THETA_GRID];
            let next = vals[(i + 1) % THETA_GRID];
            if f > prev || f > next {
                continue;
            }
            let f = self.refine(i as f64 * h, h, f)?;
            best = Some(best.map_or(f, |b: f64| b.min(f)));
        }
        Ok(best)
    }

    fn refine(&self, mut center: f64, mut half: f64, mut best: f64) -> Result<f64> {
        const POINTS: usize = 41;
        while half > 1e-15 {
            let step = 2.0 * half / (POINTS - 1) as f64;
            for k in 0..POINTS {
                let t = center - half + step * k as f64;
                match self.along(t) {
                    Ray::Unbounded => return Err(Error::NumericalFailure("objective appears unbounded below".into())),
                    Ray::Value(f) if f < best => {
                        best = f;
                        center = t;
                    }
                    _ => {}
                }
            }
            half = 2.0 * step;
        }
        Ok(best)
    }

    /// Minimum over the rank-≤1 boundary with exactly two equalities: `θ`
    /// must satisfy `r₂·α₁(θ) = r₁·α₂(θ)`.
    fn boundary_roots(&self) -> Result<Option<f64>> {
        let (a1, r1) = self.eqs[0];
        let (a2, r2) = self.eqs[1];
        let phi = |t: f64| {
            let w = ray(t);
            r2 * dot3(&a1, &w) - r1 * dot3(&a2, &w)
        };
        let h = std::f64::consts::PI / THETA_GRID as f64;
        let mut best: Option<f64> = None;
        let mut consider = |t: f64| -> Result<()> {
            match self.along(t) {
                Ray::Unbounded => Err(Error::NumericalFailure("objective appears unbounded below".into())),
                Ray::Infeasible => Ok(()),
                Ray::Value(f) => {
                    best = Some(best.map_or(f, |b: f64| b.min(f)));
                    Ok(())
                }
            }
        };
        for i in 0..THETA_GRID {
            let (mut lo, mut hi) = (i as f64 * h, (i + 1) as f64 * h);
            let (flo, fhi) = (phi(lo), phi(hi));
            if flo == 0.0 {
                consider(lo)?;
                continue;
            }
            if flo.signum() == fhi.signum() {
                continue;
            }
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if phi(mid).signum() == flo.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            consider(0.5 * (lo + hi))?;
        }
        Ok(best)
    }
}

/// Minimum of a single-2×2-block problem by exhaustive search; accurate to
/// about 1e-9 relative on well-posed instances.
pub fn brute_force_2x2(problem: &ConicSdpProblem) -> Result<f64> {
    let s = &problem.structure;
    if s.psd_sizes != [2] || s.free_dim != 0 {
        return Err(Error::UnsupportedStructure(
            "brute force needs exactly one 2×2 block and no free variables".into(),
        ));
    }
    let rows = |kind: ConstraintKind| -> Vec<([f64; 3], f64)> {
        problem
            .constraints
            .iter()
            .filter(|c| c.kind == kind)
            .map(|c| (coords_sparse(&c.blocks[0]), c.rhs))
            .collect()
    };
    let raw_eqs = rows(ConstraintKind::Equality);

    // Replace the equalities by an independent set with the same solutions.
    let eqs = if raw_eqs.is_empty() {
        vec![]
    } else {
        let e = DMatrix::from_fn(raw_eqs.len(), 3, |i, k| raw_eqs[i].0[k]);
        let rhs = DVector::from_iterator(raw_eqs.len(), raw_eqs.iter().map(|c| c.1));
        let (v0, _) = lstsq(&e, &rhs);
        if (&e * &v0 - &rhs).norm() > 1e-9 * (1.0 + rhs.norm()) {
            return Err(Error::NotStrictlyFeasible("inconsistent equalities".into()));
        }
        let svd = e.svd(false, true);
        let vt = svd.v_t.expect("requested V");
        let smax = svd.singular_values.max();
        (0..svd.singular_values.len())
            .filter(|&k| svd.singular_values[k] > 1e-9 * smax.max(1.0))
            .map(|k| {
                let a = [vt[(k, 0)], vt[(k, 1)], vt[(k, 2)]];
                (a, a[0] * v0[0] + a[1] * v0[1] + a[2] * v0[2])
            })
            .collect()
    };
    let search = Search {
        cost: coords_dense(&problem.cost.blocks[0]),
        eqs,
        ineqs: rows(ConstraintKind::Inequality),
    };
    if search.ineqs.len() > 20 {
        return Err(Error::UnsupportedStructure("too many inequalities to enumerate".into()));
    }

    let vertex = search.vertices();
    let boundary = match search.eqs.len() {
        0 | 1 => search.boundary_scan()?,
        2 => search.boundary_roots()?,
        _ => None,
    };
    match (vertex, boundary) {
        (Some(a), Some(b)) => Ok(a.min(b)),
        (Some(a), None) | (None, Some(a)) => Ok(a),
        (None, None) => Err(Error::NotStrictlyFeasible("no feasible point found".into())),
    }
}
