//! Least squares with sign constraints on a subset of the coordinates.

use nalgebra::{DMatrix, DVector};

use crate::linalg::lstsq;

/// Solves `min ‖A x − b‖` subject to `xᵢ ≥ 0` where `nonneg[i]`, by the
/// Lawson-Hanson active-set method with unconstrained coordinates always in the
/// passive set. Returns the solution and whether a rank-deficient subproblem
/// was met.
pub fn mixed_nnls(a: &DMatrix<f64>, b: &DVector<f64>, nonneg: &[bool]) -> (DVector<f64>, bool) {
    let n = a.ncols();
    let mut passive: Vec<bool> = nonneg.iter().map(|&c| !c).collect();
    let mut deficient = false;
    let tol = 1e-12 * (1.0 + a.norm() * b.norm());

    let solve_passive = |passive: &[bool], deficient: &mut bool| -> DVector<f64> {
        let cols: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
        let mut z = DVector::zeros(n);
        if cols.is_empty() {
            return z;
        }
        let sub = DMatrix::from_fn(a.nrows(), cols.len(), |r, c| a[(r, cols[c])]);
        let (zs, def) = lstsq(&sub, b);
        *deficient |= def;
        for (k, &i) in cols.iter().enumerate() {
            z[i] = zs[k];
        }
        z
    };

    // Only unconstrained coordinates start passive, so this is feasible.
    let mut x = solve_passive(&passive, &mut deficient);
    for _ in 0..3 * n + 10 {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..n)
            .filter(|&i| nonneg[i] && !passive[i] && w[i] > tol)
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(t) = candidate else { break };
        passive[t] = true;
        loop {
            let z = solve_passive(&passive, &mut deficient);
            let blocked: Vec<usize> = (0..n).filter(|&i| nonneg[i] && passive[i] && z[i] <= 0.0).collect();
            if blocked.is_empty() {
                x = z;
                break;
            }
            let alpha = blocked
                .iter()
                .map(|&i| {
                    let d = x[i] - z[i];
                    if d > 0.0 {
                        x[i] / d
                    } else {
                        0.0
                    }
                })
                .fold(1.0f64, f64::min);
            x = &x + (z - &x) * alpha;
            for i in 0..n {
                if nonneg[i] && passive[i] && x[i] <= 1e-15 {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
        }
    }
    (x, deficient)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_matches_least_squares() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_column_slice(&[1.0, 2.0, 3.0]);
        let (x, def) = mixed_nnls(&a, &b, &[false, false]);
        assert!(!def);
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sign_constraint_binds() {
        // min (x − (−1))² + (y − 2)² with x ≥ 0 → (0, 2).
        let a = DMatrix::identity(2, 2);
        let b = DVector::from_column_slice(&[-1.0, 2.0]);
        let (x, _) = mixed_nnls(&a, &b, &[true, true]);
        assert_eq!(x.as_slice(), &[0.0, 2.0]);
        let (x, _) = mixed_nnls(&a, &b, &[false, true]);
        assert!((x[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn coupled_columns() {
        // Brute-force over a grid of the nonnegative coordinate.
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 0.0, 1.0, 1.0, -1.0]);
        let b = DVector::from_column_slice(&[0.0, -2.0, 1.0]);
        let (x, _) = mixed_nnls(&a, &b, &[false, true]);
        let obj = |x0: f64, x1: f64| (a.clone() * DVector::from_column_slice(&[x0, x1]) - &b).norm_squared();
        let mut best = f64::INFINITY;
        for k in 0..=4000 {
            let x1 = k as f64 * 1e-3;
            // Optimal x0 for fixed x1 in closed form.
            let x0 = ((b[0] - x1) + (b[2] + x1)) / 2.0;
            best = best.min(obj(x0, x1));
        }
        assert!(x[1] >= 0.0);
        assert!(obj(x[0], x[1]) <= best + 1e-9);
    }
}
