//! Acceptance suite. Runs each criterion, prints one PASS/FAIL line per
//! criterion and exits non-zero if any failed.
//!
//! Reference values come from independent computations in this file (finite
//! differences, the interior-point and brute-force oracles, explicit
//! eigendecompositions and subset enumeration), never from the solver itself.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use bmcert::apps::{
    adversarial_instance, arrow_matrix, build_soc_embedding, generate_random, nuclear_norm, recover_symmetric,
    sensing_psd_instance, sensing_symmetric_instance, soc_instance, SocProblem,
};
use bmcert::certification::{
    certify, estimate_multipliers, kkt_residuals, licq_check, staircase_solve, MultiplierSource, Multipliers,
    StaircaseConfig,
};
use bmcert::factorization::{lift, m_prime_conic, m_prime_inequality, triangular, FactorizedPoint};
use bmcert::local_solver::{al_hessian_vector, al_value_grad, SolverConfig, SolverPoint};
use bmcert::model::{
    apply_map, write_problem, BlockStructure, ConicSdpProblem, Constraint, ConstraintKind, Cost, SparseSymmetric,
    SymmetricMatrix,
};
use bmcert::oracle::{brute_force_2x2, is_feasible, oracle_solve};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const ORACLE_TOL: f64 = 1e-9;

struct Outcome {
    pass: bool,
    detail: String,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

fn staircase(problem: &ConicSdpProblem, ranks: Option<Vec<usize>>, seed: u64) -> bmcert::certification::SolveReport {
    let config = StaircaseConfig {
        solver: SolverConfig::default().with_seed(seed),
        initial_ranks: ranks,
        ..Default::default()
    };
    staircase_solve(problem, &config).expect("staircase run")
}

/// Random mixed instance for the derivative checks: up to three blocks, some
/// factorized, optional free variables, mixed constraint kinds, `n ≤ 15`,
/// `m ≤ 12`, plus a random point, multipliers and penalty.
fn derivative_instance(seed: u64) -> (ConicSdpProblem, SolverPoint, Vec<f64>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(0xd1ff ^ seed);
    let nb = rng.random_range(1..=3);
    let mut sizes: Vec<usize> = (0..nb).map(|_| rng.random_range(1..=6)).collect();
    while sizes.iter().sum::<usize>() > 15 {
        let j = sizes.iter().enumerate().max_by_key(|(_, &n)| n).unwrap().0;
        sizes[j] -= 1;
    }
    let k = rng.random_range(0..=nb);
    let d = rng.random_range(0..=2);
    let m = rng.random_range(1..=12);
    let n_eq = rng.random_range(0..=m);
    let kinds: Vec<ConstraintKind> = (0..m)
        .map(|i| if i < n_eq { ConstraintKind::Equality } else { ConstraintKind::Inequality })
        .collect();
    let structure = BlockStructure::new(sizes.clone(), k, d).unwrap();
    let problem = generate_random(&structure, m, &kinds, seed).unwrap();
    let point = SolverPoint {
        factors: sizes
            .iter()
            .map(|&n| {
                let p = rng.random_range(1..=n);
                DMatrix::from_fn(n, p, |_, _| normal(&mut rng))
            })
            .collect(),
        free: DVector::from_fn(d, |_, _| normal(&mut rng)),
    };
    let lambda = kinds
        .iter()
        .map(|k| match k {
            ConstraintKind::Equality => normal(&mut rng),
            ConstraintKind::Inequality => normal(&mut rng).abs(),
        })
        .collect();
    let rho = 10f64.powf(rng.random_range(-0.5..2.0));
    (problem, point, lambda, rho)
}

fn rel(a: &DVector<f64>, reference: &DVector<f64>) -> f64 {
    (a - reference).norm() / reference.norm().max(1e-12)
}

fn c1_derivatives() -> Outcome {
    let mut worst_g: f64 = 0.0;
    let mut worst_h: f64 = 0.0;
    for seed in 0..50 {
        let (p, pt, lam, rho) = derivative_instance(seed);
        let layout = pt.layout();
        let v = pt.to_vector();
        let at = |x: &DVector<f64>| al_value_grad(&p, &SolverPoint::from_vector(&layout, x), &lam, rho).unwrap();
        let (_, g) = at(&v);
        let fd = DVector::from_fn(v.len(), |i, _| {
            let h = 1e-6 * (1.0 + v[i].abs());
            let mut vp = v.clone();
            vp[i] += h;
            let mut vm = v.clone();
            vm[i] -= h;
            (at(&vp).0 - at(&vm).0) / (2.0 * h)
        });
        worst_g = worst_g.max(rel(&g, &fd));

        let mut rng = ChaCha8Rng::seed_from_u64(7000 + seed);
        let u = DVector::from_fn(v.len(), |_, _| normal(&mut rng));
        let u = &u / u.norm();
        let hv = al_hessian_vector(&p, &pt, &lam, rho, &u).unwrap();
        let h = 1e-6 * (1.0 + v.norm());
        let fd_h = (at(&(&v + &u * h)).1 - at(&(&v - &u * h)).1) / (2.0 * h);
        worst_h = worst_h.max(rel(&hv, &fd_h));
    }
    Outcome {
        pass: worst_g <= 1e-6 && worst_h <= 1e-5,
        detail: format!("50 instances, worst gradient rel. error {worst_g:.2e}, worst HVP rel. error {worst_h:.2e}"),
    }
}

/// Strictly feasible instances: every third one is a single 2×2 block so the
/// grid oracle applies.
fn oracle_instance(seed: u64) -> ConicSdpProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0ac1e ^ seed);
    let (structure, m) = if seed % 3 == 0 {
        (BlockStructure::single(2), rng.random_range(1..=2))
    } else {
        let nb = rng.random_range(1..=2);
        let sizes: Vec<usize> = (0..nb).map(|_| rng.random_range(2..=5)).collect();
        let k = rng.random_range(1..=nb);
        let d = rng.random_range(0..=1);
        (BlockStructure::new(sizes, k, d).unwrap(), rng.random_range(2..=6))
    };
    let n_eq = rng.random_range(0..=m);
    let kinds: Vec<ConstraintKind> = (0..m)
        .map(|i| if i < n_eq { ConstraintKind::Equality } else { ConstraintKind::Inequality })
        .collect();
    generate_random(&structure, m, &kinds, 100 + seed).unwrap()
}

fn c2_oracle_equivalence() -> Outcome {
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    let mut brute_count = 0;
    for seed in 0..30 {
        let p = oracle_instance(seed);
        let r = staircase(&p, None, seed);
        let o = oracle_solve(&p, ORACLE_TOL).unwrap().objective;
        worst = worst.max((r.objective - o).abs() / (1.0 + o.abs()));
        if !close(r.objective, o, 1e-5) {
            failures.push(format!("seed {seed}: staircase {} vs oracle {o}", r.objective));
        }
        if p.structure.psd_sizes == [2] && p.structure.free_dim == 0 {
            brute_count += 1;
            let b = brute_force_2x2(&p).unwrap();
            if !close(r.objective, b, 1e-5) {
                failures.push(format!("seed {seed}: staircase {} vs grid {b}", r.objective));
            }
        }
    }
    Outcome {
        pass: failures.is_empty() && brute_count > 0,
        detail: format!(
            "30 instances ({brute_count} 2x2), worst rel. deviation {worst:.2e}{}",
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    }
}

fn c3_genericity() -> Outcome {
    let (n, m, p) = (12, 8, 4);
    assert!(triangular(p) > m && triangular(p - 1) <= m);
    let mut good = 0;
    let mut notes = Vec::new();
    for seed in 0..100 {
        let problem = generate_random(&BlockStructure::single(n), m, &vec![ConstraintKind::Equality; m], seed).unwrap();
        let r = staircase(&problem, Some(vec![p]), seed);
        let cert = &r.certificate;
        let s_norm = cert.slack_spectrum[0].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let ok = r.verdict().is_global()
            && r.ranks == [p]
            && r.rank_increments() == 0
            && cert.duality_gap.abs() <= 1e-6 * (1.0 + r.objective.abs())
            && cert.slack_min_eig() >= -1e-7 * s_norm;
        if ok {
            good += 1;
        } else if notes.len() < 5 {
            notes.push(format!("seed {seed}: {} ranks {:?}", r.verdict().name(), r.ranks));
        }
    }
    Outcome {
        pass: good >= 95,
        detail: format!("{good}/100 certified at rank {p}{}", if notes.is_empty() { String::new() } else { format!("; {}", notes.join("; ")) }),
    }
}

fn c4_fixed_cost() -> Outcome {
    let (n, m, r) = (8, 6, 1);
    let mut good = 0;
    let mut notes = Vec::new();
    for seed in 0..50 {
        let f = sensing_psd_instance(n, m, r, seed).unwrap();
        let res = staircase(&f.problem, None, seed);
        let o = oracle_solve(&f.problem, ORACLE_TOL).unwrap().objective;
        if res.verdict().is_global() && close(res.objective, o, 1e-5) {
            good += 1;
        } else {
            notes.push(format!("seed {seed}: {} {} vs {o}", res.verdict().name(), res.objective));
        }
    }
    Outcome {
        pass: good == 50,
        detail: format!("{good}/50 sensing fixtures certified and matching the oracle{}", if notes.is_empty() { String::new() } else { format!("; {}", notes.join("; ")) }),
    }
}

fn c5_adversarial() -> Outcome {
    let mut notes = Vec::new();
    let mut worst_stat: f64 = 0.0;
    let mut spurious = 0;
    for seed in 0..50 {
        let f = adversarial_instance(6, 3, 2, seed).unwrap();
        let planted = Multipliers {
            lambda: f.lambda.clone(),
            active_set: (0..3).collect(),
            source: MultiplierSource::FromSolver,
            residual: 0.0,
            rank_deficient: false,
        };
        let kkt = kkt_residuals(&f.problem, &f.planted, &planted).unwrap();
        worst_stat = worst_stat.max(kkt.stationarity);
        let estimated = estimate_multipliers(&f.problem, &f.planted).unwrap();
        for mult in [&planted, &estimated] {
            let cert = certify(&f.problem, &f.planted, mult, bmcert::certification::CERT_TOL).unwrap();
            if cert.verdict.is_global() {
                notes.push(format!("seed {seed}: planted point certified"));
            }
        }
        let o = oracle_solve(&f.problem, ORACLE_TOL).unwrap().objective;
        if f.planted_objective - o > 1e-4 {
            spurious += 1;
            let r = staircase(&f.problem, Some(vec![2]), 1000 + seed);
            if r.objective >= f.planted_objective {
                notes.push(format!("seed {seed}: staircase {} did not beat planted {}", r.objective, f.planted_objective));
            }
        }
    }
    Outcome {
        pass: notes.is_empty() && worst_stat <= 1e-10,
        detail: format!(
            "50 fixtures ({spurious} with oracle gap > 1e-4), worst planted stationarity {worst_stat:.2e}{}",
            if notes.is_empty() { String::new() } else { format!("; {}", notes.join("; ")) }
        ),
    }
}

fn c6_multi_block() -> Outcome {
    let (n, m, p) = (6, 10, 5);
    assert!(triangular(p) > m && triangular(p - 1) <= m);
    let mut good = 0;
    let mut notes = Vec::new();
    for seed in 0..20 {
        let f = sensing_symmetric_instance(n, m, 1, seed).unwrap();
        let r = staircase(&f.problem, Some(vec![p, p]), seed);
        let o = oracle_solve(&f.problem, ORACLE_TOL).unwrap().objective;
        let nn = nuclear_norm(&recover_symmetric(&r.point));
        if r.verdict().is_global() && close(nn, o, 1e-5) {
            good += 1;
        } else {
            notes.push(format!("seed {seed}: {} nuclear norm {nn} vs {o}", r.verdict().name()));
        }
    }
    Outcome {
        pass: good == 20,
        detail: format!("{good}/20 two-block fixtures certified, nuclear norm matches oracle{}", if notes.is_empty() { String::new() } else { format!("; {}", notes.join("; ")) }),
    }
}

/// The same SOC instance without the arrow embedding: for `n₂ = 2` the cone
/// is two nonnegative variables `x₁ ± x₂`; for `n₂ = 3` it is the 2×2 PSD
/// cone through `[[x₁+x₂, x₃], [x₃, x₁−x₂]]`.
fn soc_direct(soc: &SocProblem) -> Option<ConicSdpProblem> {
    let n1 = soc.psd_size;
    // Coefficients of a·x in the new variables.
    let (sizes, map): (Vec<usize>, Box<dyn Fn(&[f64]) -> Vec<SymmetricMatrix>>) = match soc.cone_dim {
        2 => (
            vec![n1, 1, 1],
            Box::new(|a: &[f64]| {
                vec![
                    SymmetricMatrix::from_diagonal(&[(a[0] + a[1]) / 2.0]),
                    SymmetricMatrix::from_diagonal(&[(a[0] - a[1]) / 2.0]),
                ]
            }),
        ),
        3 => (
            vec![n1, 2],
            Box::new(|a: &[f64]| {
                // x₁ = (Z₁₁+Z₂₂)/2, x₂ = (Z₁₁−Z₂₂)/2, x₃ = Z₁₂.
                let mut z = SymmetricMatrix::zeros(2);
                z.set(0, 0, (a[0] + a[1]) / 2.0);
                z.set(1, 1, (a[0] - a[1]) / 2.0);
                z.set(0, 1, a[2] / 2.0);
                vec![z]
            }),
        ),
        _ => return None,
    };
    let constraints = soc
        .constraints
        .iter()
        .map(|c| {
            let mut blocks = vec![c.psd.clone()];
            blocks.extend(map(&c.cone).iter().map(SparseSymmetric::from_symmetric));
            Constraint::new(blocks, c.rhs, ConstraintKind::Equality)
        })
        .collect();
    let mut cost = vec![soc.cost_psd.clone()];
    cost.extend(map(&soc.cost_cone));
    let nb = sizes.len();
    Some(
        ConicSdpProblem::new(
            "soc-direct",
            BlockStructure::new(sizes, nb, 0).unwrap(),
            Cost { blocks: cost, free: vec![] },
            constraints,
        )
        .unwrap(),
    )
}

fn c7_soc() -> Outcome {
    let mut notes = Vec::new();
    let mut worst: f64 = 0.0;
    let mut independent = 0;
    for seed in 0..10u64 {
        let n1 = 2 + (seed % 3) as usize;
        let n2 = 2 + (seed % 4) as usize;
        let m1 = 1 + (seed % 3) as usize;
        let soc = soc_instance(n1, n2, m1, 40 + seed).unwrap();
        let embedded = build_soc_embedding(&soc).unwrap();
        let r = staircase(&embedded, None, seed);
        let reference = match soc_direct(&soc) {
            Some(direct) => {
                independent += 1;
                oracle_solve(&direct, ORACLE_TOL).unwrap().objective
            }
            None => oracle_solve(&embedded, ORACLE_TOL).unwrap().objective,
        };
        worst = worst.max((r.objective - reference).abs() / (1.0 + reference.abs()));
        if !close(r.objective, reference, 1e-6) {
            notes.push(format!("seed {seed} (n2={n2}): {} vs {reference}", r.objective));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0xb0);
    let mut boundary_ok = 0;
    for trial in 0..100 {
        let n = 2 + trial % 5;
        let tail: Vec<f64> = (1..n).map(|_| normal(&mut rng)).collect();
        let mut x = vec![tail.iter().map(|v| v * v).sum::<f64>().sqrt()];
        x.extend(tail);
        let eig = SymmetricEigen::new(arrow_matrix(&x).to_dense()).eigenvalues;
        let rank = eig.iter().filter(|v| v.abs() > 1e-8).count();
        let psd = eig.iter().all(|&v| v >= -1e-8);
        if rank == n - 1 && psd {
            boundary_ok += 1;
        }
    }
    if boundary_ok != 100 {
        notes.push(format!("boundary rank n2-1 on {boundary_ok}/100 points"));
    }
    Outcome {
        pass: notes.is_empty(),
        detail: format!(
            "10 fixtures ({independent} against a cone-free formulation), worst rel. deviation {worst:.2e}, boundary rank {boundary_ok}/100{}",
            if notes.is_empty() { String::new() } else { format!("; {}", notes.join("; ")) }
        ),
    }
}

fn c8_licq() -> Outcome {
    let (n, m) = (8, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(0x11c9);
    let mut passed = 0;
    for seed in 0..100 {
        let mut problem = generate_random(&BlockStructure::single(n), m, &vec![ConstraintKind::Equality; m], 500 + seed).unwrap();
        let p = rng.random_range(1..=3);
        let point = FactorizedPoint {
            factors: vec![DMatrix::from_fn(n, p, |_, _| normal(&mut rng))],
            tail_blocks: vec![],
            free: vec![],
        };
        let b = apply_map(&problem, &lift(&point)).unwrap();
        let nonzero = b.iter().all(|v| v.abs() > 1e-12);
        for (c, v) in problem.constraints.iter_mut().zip(b) {
            c.rhs = v;
        }
        if nonzero && licq_check(&problem, &point).unwrap().holds {
            passed += 1;
        }
    }

    // Third constraint repeats the first.
    let a = SparseSymmetric::new(3, [(0, 0, 1.0), (1, 2, 0.5)]);
    let dup = ConicSdpProblem::new(
        "duplicate",
        BlockStructure::single(3),
        Cost { blocks: vec![SymmetricMatrix::identity(3)], free: vec![] },
        vec![
            Constraint::new(vec![a.clone()], 1.0, ConstraintKind::Equality),
            Constraint::new(vec![SparseSymmetric::identity(3)], 3.0, ConstraintKind::Equality),
            Constraint::new(vec![a], 1.0, ConstraintKind::Equality),
        ],
    )
    .unwrap();
    let y = FactorizedPoint {
        factors: vec![DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 1.0])],
        tail_blocks: vec![],
        free: vec![],
    };
    let dup_fails = !licq_check(&dup, &y).unwrap().holds;
    Outcome {
        pass: passed == 100 && dup_fails,
        detail: format!("generic: {passed}/100 pass, duplicated constraint rejected: {dup_fails}"),
    }
}

/// Rank of the vectorized constraints in `subset` (upper triangle with
/// off-diagonal entries weighted by √2, then the free part).
fn subset_rank(problem: &ConicSdpProblem, subset: &[usize]) -> usize {
    if subset.is_empty() {
        return 0;
    }
    let rows: Vec<Vec<f64>> = subset
        .iter()
        .map(|&i| {
            let c = &problem.constraints[i];
            let mut v = Vec::new();
            for a in &c.blocks {
                let d = a.to_dense();
                for col in 0..d.ncols() {
                    for row in 0..=col {
                        v.push(if row == col { d[(row, col)] } else { d[(row, col)] * 2f64.sqrt() });
                    }
                }
            }
            v.extend(&c.free);
            v
        })
        .collect();
    let mat = DMatrix::from_fn(rows.len(), rows[0].len(), |r, c| rows[r][c]);
    let sv = mat.singular_values();
    let tol = 1e-9 * sv.max().max(1.0);
    sv.iter().filter(|&&s| s > tol).count()
}

/// Inequality instance on a 3×3 block: `⟨Aᵢ, X⟩ ≥ bᵢ` with `b` chosen below
/// the values at a random interior point; some rows are duplicated or
/// mutually exclusive to make the active-set structure non-trivial.
fn m_prime_instance(seed: u64) -> ConicSdpProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(0x3e ^ seed);
    let n = 3;
    let m = 3 + (seed % 6) as usize;
    let sym = |rng: &mut ChaCha8Rng| {
        let g = DMatrix::from_fn(n, n, |_, _| normal(rng));
        (&g + g.transpose()) * 0.5
    };
    let g = DMatrix::from_fn(n, n, |_, _| normal(&mut rng));
    let x0 = &g * g.transpose() / n as f64 + DMatrix::identity(n, n) * 0.1;
    let mut mats: Vec<DMatrix<f64>> = Vec::new();
    let mut rhs = Vec::new();
    while mats.len() < m {
        match rng.random_range(0..4) {
            0 if !mats.is_empty() => {
                // Opposite of an earlier row with a gap: never active together.
                let j = rng.random_range(0..mats.len());
                let a: DMatrix<f64> = -&mats[j];
                rhs.push(a.dot(&x0) - 0.5);
                mats.push(a);
            }
            1 if !mats.is_empty() => {
                let j = rng.random_range(0..mats.len());
                let a = mats[j].clone() * 2.0;
                rhs.push(2.0 * rhs[j]);
                mats.push(a);
            }
            _ => {
                let a = sym(&mut rng);
                rhs.push(a.dot(&x0) - 0.1 - normal(&mut rng).abs());
                mats.push(a);
            }
        }
    }
    ConicSdpProblem::new(
        format!("mprime-{seed}"),
        BlockStructure::single(n),
        Cost { blocks: vec![SymmetricMatrix::identity(n)], free: vec![] },
        mats.iter()
            .zip(rhs)
            .map(|(a, b)| Constraint::new(vec![SparseSymmetric::from_dense(a)], b, ConstraintKind::Inequality))
            .collect(),
    )
    .unwrap()
}

fn brute_m_prime(problem: &ConicSdpProblem) -> usize {
    let m = problem.num_constraints();
    let mut best = 0;
    for mask in 0u32..(1 << m) {
        let subset: Vec<usize> = (0..m).filter(|i| mask >> i & 1 == 1).collect();
        let r = subset_rank(problem, &subset);
        if r <= best {
            continue;
        }
        let mut active = problem.clone();
        for &i in &subset {
            active.constraints[i].kind = ConstraintKind::Equality;
        }
        let (mut eq, ineq): (Vec<_>, Vec<_>) =
            active.constraints.into_iter().partition(|c| c.kind == ConstraintKind::Equality);
        eq.extend(ineq);
        active.constraints = eq;
        if is_feasible(&active).unwrap() {
            best = r;
        }
    }
    best
}

fn c9_rank_bounds() -> Outcome {
    let mut notes = Vec::new();
    for k in 0..=10usize {
        let count = (0..k).flat_map(|i| (i..k).map(move |j| (i, j))).count();
        if triangular(k) != count {
            notes.push(format!("tau({k}) = {} but {count} entries", triangular(k)));
        }
    }
    let mut checked = 0;
    for seed in 0..12 {
        let p = m_prime_instance(seed);
        let got = m_prime_inequality(&p, 20).unwrap();
        let want = brute_m_prime(&p);
        checked += 1;
        let min_p = (1..).find(|&q| triangular(q) > want.min(triangular(3)) || q == 3).unwrap();
        if got.m_prime != want || got.ranks != [min_p] {
            notes.push(format!("seed {seed}: m' {} vs brute force {want}, p {:?} vs {min_p}", got.m_prime, got.ranks));
        }
    }
    // Inequalities written as 1×1 tail blocks: with ranks fixed, m′ is m
    // minus the slack blocks forced to be nonzero (inactive constraints).
    let conic = ConicSdpProblem::new(
        "slack-blocks",
        BlockStructure::new(vec![3, 1, 1, 1], 1, 0).unwrap(),
        Cost {
            blocks: vec![SymmetricMatrix::identity(3), SymmetricMatrix::zeros(1), SymmetricMatrix::zeros(1), SymmetricMatrix::zeros(1)],
            free: vec![],
        },
        (0..3)
            .map(|i| {
                let mut blocks = vec![SparseSymmetric::unit(3, i, i), SparseSymmetric::zeros(1), SparseSymmetric::zeros(1), SparseSymmetric::zeros(1)];
                blocks[1 + i] = SparseSymmetric::new(1, [(0, 0, -1.0)]);
                Constraint::new(blocks, 1.0, ConstraintKind::Equality)
            })
            .collect(),
    )
    .unwrap();
    for inactive in 0..=3usize {
        let ranges: Vec<Vec<usize>> = (0..3).map(|j| if j < inactive { vec![1] } else { vec![0, 1] }).collect();
        let got = m_prime_conic(&conic, &ranges).unwrap().m_prime;
        if got != 3 - inactive {
            notes.push(format!("slack blocks: m' {got} with {inactive} inactive"));
        }
    }
    Outcome {
        pass: notes.is_empty(),
        detail: format!("tau(0..10) exact, {checked} enumerated m' instances exact, slack-block formula exact{}", if notes.is_empty() { String::new() } else { format!("; {}", notes.join("; ")) }),
    }
}

fn bmcert(args: &[&str]) -> (Option<i32>, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_bmcert")).args(args).output().expect("run bmcert");
    (out.status.code(), out.stdout)
}

fn c10_determinism() -> Outcome {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    let file = dir.join("determinism.sdp");
    let kinds = [ConstraintKind::Equality, ConstraintKind::Equality, ConstraintKind::Inequality];
    let problem = generate_random(&BlockStructure::new(vec![4, 2], 1, 1).unwrap(), 3, &kinds, 77).unwrap();
    std::fs::write(&file, write_problem(&problem)).unwrap();
    let file = file.to_str().unwrap();

    let mut notes = Vec::new();
    let solve = ["solve", file, "--seed", "5", "--rank", "1", "--oracle"];
    let (c1, a) = bmcert(&solve);
    let (c2, b) = bmcert(&solve);
    if c1 != Some(0) || c1 != c2 || a != b || a.is_empty() {
        notes.push(format!("solve: exit {c1:?}/{c2:?}, identical {}", a == b));
    }
    let exp = ["experiment", "genericity", "--n", "6", "--m", "4", "--trials", "8", "--seed", "3", "--jobs", "3"];
    let (c1, a) = bmcert(&exp);
    let (c2, b) = bmcert(&exp);
    if c1 != Some(0) || c1 != c2 || a != b || a.is_empty() {
        notes.push(format!("experiment: exit {c1:?}/{c2:?}, identical {}", a == b));
    }
    Outcome {
        pass: notes.is_empty(),
        detail: format!("solve and experiment reruns byte-identical{}", if notes.is_empty() { String::new() } else { format!("; {}", notes.join("; ")) }),
    }
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Outcome); 10] = [
        ("1 derivative correctness", Duration::from_secs(30), c1_derivatives),
        ("2 oracle equivalence", Duration::from_secs(120), c2_oracle_equivalence),
        ("3 genericity", Duration::from_secs(300), c3_genericity),
        ("4 fixed-cost genericity", Duration::from_secs(180), c4_fixed_cost),
        ("5 adversarial soundness", Duration::from_secs(120), c5_adversarial),
        ("6 multi-block sensing", Duration::MAX, c6_multi_block),
        ("7 SOC embedding", Duration::MAX, c7_soc),
        ("8 LICQ genericity", Duration::MAX, c8_licq),
        ("9 rank bounds", Duration::MAX, c9_rank_bounds),
        ("10 determinism", Duration::MAX, c10_determinism),
    ];
    let mut failed = 0;
    for (name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let pass = outcome.pass && in_time;
        if !pass {
            failed += 1;
        }
        let budget_note = if budget == Duration::MAX { String::new() } else { format!(" (budget {}s)", budget.as_secs()) };
        println!(
            "{} criterion {name}: {} [{:.1}s{budget_note}]",
            if pass { "PASS" } else { "FAIL" },
            outcome.detail,
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 10 acceptance criteria passed");
}
