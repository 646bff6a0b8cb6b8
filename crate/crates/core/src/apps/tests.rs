use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::random::normal;
use super::*;
use crate::certification::{certify, kkt_residuals, MultiplierSource, Multipliers, CERT_TOL};
use crate::linalg::{matrix_rank, sym_eigen};
use crate::model::{validate, write_problem, BlockStructure, ConstraintKind};
use crate::oracle::{is_feasible, oracle_solve};

#[test]
fn iqm_single_variable() {
    let c = iqm_cost(
        &DMatrix::from_element(1, 1, 1.0),
        &DVector::from_element(1, -0.8),
        0.16,
    )
    .unwrap();
    assert_eq!(c.to_dense(), DMatrix::from_row_slice(2, 2, &[1.0, -0.4, -0.4, 0.16]));
    let iqm = build_integer_quadratic(&c).unwrap();
    assert_eq!(iqm.problem.num_constraints(), 2);
    assert!(validate(&iqm.problem).is_empty());
}

#[test]
fn iqm_counts_and_bound() {
    let iqm = build_integer_quadratic(&crate::model::SymmetricMatrix::identity(3)).unwrap();
    assert_eq!(iqm.problem.num_constraints(), 3);
    assert_eq!(iqm.problem.structure.psd_sizes, vec![3]);
    let iqm = build_integer_quadratic(&crate::model::SymmetricMatrix::identity(6)).unwrap();
    // τ(p) > 6 first holds at p = 4.
    assert_eq!(iqm.bound.ranks, vec![4]);
}

#[test]
fn iqm_cost_reproduces_quadratic() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 3;
    let q = random_psd(&mut rng, n);
    let l = DVector::from_fn(n, |_, _| normal(&mut rng));
    let c0 = normal(&mut rng);
    let c = iqm_cost(&q, &l, c0).unwrap().to_dense();
    for _ in 0..100 {
        let x = DVector::from_fn(n, |_, _| normal(&mut rng));
        let f = x.dot(&(&q * &x)) + l.dot(&x) + c0;
        let xt = DVector::from_fn(n + 1, |i, _| if i < n { x[i] } else { 1.0 });
        let g = xt.dot(&(&c * &xt));
        assert!((f - g).abs() <= 1e-12 * (1.0 + f.abs()));
    }
}

#[test]
fn sensing_psd_construction() {
    let f = sensing_psd_instance(4, 6, 1, 0).unwrap();
    assert_eq!(f.problem.num_equalities(), 6);
    assert_eq!(f.problem.cost.blocks[0], crate::model::SymmetricMatrix::identity(4));
    assert!(validate(&f.problem).is_empty());
    let sol = oracle_solve(&f.problem, 1e-9).unwrap();
    assert!(sol.objective <= f.planted_nuclear_norm + 1e-7);
}

fn unit_measurements() -> Vec<DMatrix<f64>> {
    let s = 0.5f64.sqrt();
    vec![
        DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
        DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]),
        DMatrix::from_row_slice(2, 2, &[0.0, s, s, 0.0]),
    ]
}

#[test]
fn symmetric_sensing_of_diag_one_minus_one() {
    let planted = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let f = build_sensing_symmetric(&unit_measurements(), &planted).unwrap();
    assert_eq!(f.problem.structure.factorized_count, 2);
    let sol = oracle_solve(&f.problem, 1e-10).unwrap();
    assert!((sol.objective - 2.0).abs() < 1e-7, "{}", sol.objective);
    assert!((f.planted_nuclear_norm - 2.0).abs() < 1e-12);
}

#[test]
fn symmetric_sensing_with_zero_rhs() {
    let f = build_sensing_symmetric(&unit_measurements(), &DMatrix::zeros(2, 2)).unwrap();
    let sol = oracle_solve(&f.problem, 1e-10).unwrap();
    assert!(sol.objective.abs() < 1e-7);
}

#[test]
fn soc_added_equalities() {
    for (n2, added) in [(2, 1), (3, 3), (5, 10)] {
        let soc = soc_instance(3, n2, 2, 1).unwrap();
        let p = build_soc_embedding(&soc).unwrap();
        assert_eq!(p.num_constraints(), 2 + added);
        assert!(validate(&p).is_empty());
    }
    let soc = SocProblem {
        psd_size: 2,
        cone_dim: 1,
        cost_psd: crate::model::SymmetricMatrix::identity(2),
        cost_cone: vec![1.0],
        constraints: vec![],
    };
    assert!(build_soc_embedding(&soc).is_err());
}

#[test]
fn arrow_round_trip_and_membership() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..1000 {
        let n = 2 + trial % 4;
        let mut x: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
        if trial % 5 == 0 {
            // Exactly on the boundary.
            x[0] = x[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
        }
        let m = arrow_matrix(&x);
        assert_eq!(arrow_to_cone(&m), x);
        let (vals, _) = sym_eigen(&m.to_dense());
        let scale = 1.0 + x.iter().map(|v| v.abs()).sum::<f64>();
        let margin = cone_margin(&x);
        if margin > 1e-9 * scale {
            assert!(vals[0] > 0.0);
        } else if margin < -1e-9 * scale {
            assert!(vals[0] < 0.0);
        } else {
            assert!(vals[0].abs() <= 1e-9 * scale);
            assert_eq!(matrix_rank(&m.to_dense()), n - 1);
        }
    }
}

#[test]
fn soc_two_matches_lp_form() {
    // With n₂ = 2 the cone is x₁ ≥ |x₂|, i.e. u = x₁ + x₂ ≥ 0 and w = x₁ − x₂ ≥ 0.
    let soc = soc_instance(2, 2, 2, 4).unwrap();
    let embedded = oracle_solve(&build_soc_embedding(&soc).unwrap(), 1e-10).unwrap();
    use crate::model::{Constraint, Cost, SparseSymmetric, SymmetricMatrix};
    let lin = |a: &[f64]| ((a[0] + a[1]) / 2.0, (a[0] - a[1]) / 2.0);
    let constraints = soc
        .constraints
        .iter()
        .map(|c| {
            let (cu, cw) = lin(&c.cone);
            Constraint::new(
                vec![c.psd.clone(), SparseSymmetric::new(1, [(0, 0, cu)]), SparseSymmetric::new(1, [(0, 0, cw)])],
                c.rhs,
                ConstraintKind::Equality,
            )
        })
        .collect();
    let (cu, cw) = lin(&soc.cost_cone);
    let lp = crate::model::ConicSdpProblem::new(
        "lp",
        BlockStructure::new(vec![2, 1, 1], 0, 0).unwrap(),
        Cost {
            blocks: vec![soc.cost_psd.clone(), SymmetricMatrix::from_diagonal(&[cu]), SymmetricMatrix::from_diagonal(&[cw])],
            free: vec![],
        },
        constraints,
    )
    .unwrap();
    let direct = oracle_solve(&lp, 1e-10).unwrap();
    assert!((embedded.objective - direct.objective).abs() < 1e-7);
}

#[test]
fn adversarial_small_example() {
    let y = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
    let comp = DMatrix::from_diagonal(&DVector::from_column_slice(&[-1.0, 1.0]));
    let f = build_adversarial_cost(&[DMatrix::identity(3, 3)], &y, &comp, &[0.5]).unwrap();
    assert!((&f.slack * &y).norm() < 1e-15);
    assert_eq!(matrix_rank(&f.slack), 2);
    let (vals, _) = sym_eigen(&f.slack);
    for (v, e) in vals.iter().zip([-1.0, 0.0, 1.0]) {
        assert!((v - e).abs() < 1e-12);
    }
    let full = DMatrix::<f64>::identity(3, 3);
    assert!(build_adversarial_cost(&[], &full, &DMatrix::zeros(0, 0), &[]).is_err());
}

#[test]
fn adversarial_planted_point_is_critical_not_certified() {
    for seed in 0..5 {
        let f = adversarial_instance(6, 3, 2, seed).unwrap();
        let mult = Multipliers {
            lambda: f.lambda.clone(),
            active_set: (0..3).collect(),
            source: MultiplierSource::FromSolver,
            residual: 0.0,
            rank_deficient: false,
        };
        let kkt = kkt_residuals(&f.problem, &f.planted, &mult).unwrap();
        assert!(kkt.stationarity <= 1e-12 * (1.0 + f.slack.norm()));
        assert!(kkt.feasibility <= 1e-12 * (1.0 + f.planted_objective.abs()));
        let cert = certify(&f.problem, &f.planted, &mult, CERT_TOL).unwrap();
        assert!(!cert.verdict.is_global());
    }
}

#[test]
fn random_generator_properties() {
    let s = BlockStructure::new(vec![3, 2], 1, 1).unwrap();
    let kinds = [ConstraintKind::Equality, ConstraintKind::Inequality, ConstraintKind::Equality];
    let a = generate_random(&s, 3, &kinds, 9).unwrap();
    let b = generate_random(&s, 3, &kinds, 9).unwrap();
    assert_eq!(write_problem(&a), write_problem(&b));
    assert!(validate(&a).is_empty());
    assert!(a.constraints.iter().all(|c| c.rhs != 0.0));
    assert!(is_feasible(&a).unwrap());
    assert!(oracle_solve(&a, 1e-9).is_ok());
    assert!(generate_random(&s, 2, &kinds, 9).is_err());
}
