use nalgebra::{DMatrix, DVector};
use superpose::experiments::{compare_estimators, gen_mca_instance, McaConfig};
use superpose::linalg::{norm1, norm2, sub};
use superpose::random::{gaussian_vec, seeded_rng};
use superpose::{apg_solve, ComponentSpec, DenseMatrix, McaNorm, QKind, SolverConfig, SuperpositionProblem};

fn to_nalgebra(x: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(x.rows(), x.cols(), |i, j| x.get(i, j))
}

fn exact_stop() -> SolverConfig {
    SolverConfig {
        rel_tol: 0.0,
        max_iter: 50_000,
        ..SolverConfig::default()
    }
}

#[test]
fn inactive_constraints_give_least_squares() {
    let mut rng = seeded_rng(31);
    for p in [3, 10, 25] {
        let n = 3 * p;
        let x = DenseMatrix::new(n, p, gaussian_vec(&mut rng, n * p)).unwrap();
        let y = gaussian_vec(&mut rng, n);
        let xm = to_nalgebra(&x);
        let ls = xm.clone().svd(true, true).solve(&DVector::from_column_slice(&y), 1e-12).unwrap();
        let specs = vec![
            ComponentSpec::nuclear(1, p, 1e4).unwrap(),
            ComponentSpec::rotated_l1(superpose::random_orthogonal(p, 2), 1e4).unwrap(),
        ];
        let problem = SuperpositionProblem::new(y, x, specs).unwrap();
        let result = apg_solve(&problem, &exact_stop()).unwrap();
        let sum: Vec<f64> = result.estimates[0].iter().zip(&result.estimates[1]).map(|(a, b)| a + b).collect();
        let diff = norm2(&sub(&sum, ls.as_slice()));
        assert!(diff <= 1e-6 * ls.norm(), "p = {p}: {diff}");
    }
}

#[test]
fn active_l1_constraint_sits_on_the_boundary() {
    let mut rng = seeded_rng(8);
    let (n, p) = (30, 10);
    let x = DenseMatrix::new(n, p, gaussian_vec(&mut rng, n * p)).unwrap();
    let y = gaussian_vec(&mut rng, n);
    let xm = to_nalgebra(&x);
    let yv = DVector::from_column_slice(&y);
    let ls = (xm.transpose() * &xm).lu().solve(&(xm.transpose() * &yv)).unwrap();
    let radius = 0.3 * ls.iter().map(|v| v.abs()).sum::<f64>();
    let problem = SuperpositionProblem::new(y, x, vec![ComponentSpec::l1(p, radius).unwrap()]).unwrap();
    let est = &apg_solve(&problem, &exact_stop()).unwrap().estimates[0];
    assert!((norm1(est) - radius).abs() <= 1e-8 * radius);
    // KKT: the gradient is constant in magnitude on the support and no larger off it
    let resid: Vec<f64> = (yv - &xm * DVector::from_column_slice(est)).iter().copied().collect();
    let g: Vec<f64> = (xm.transpose() * DVector::from_column_slice(&resid)).iter().copied().collect();
    let top = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (gi, ei) in g.iter().zip(est) {
        if ei.abs() > 1e-8 {
            assert!((gi.abs() - top).abs() <= 1e-4 * top, "{gi} vs {top}");
            assert!(gi * ei > 0.0);
        }
    }
}

#[test]
fn constrained_and_penalized_agree_on_identifiable_instance() {
    let config = McaConfig {
        p: 50,
        s1: 1,
        s2: 1,
        q_kind: QKind::Identity,
        noise_sigma: 0.0,
        n_grid: vec![40],
        trials: 1,
        base_seed: 12,
        norm_kind: McaNorm::L1,
        fresh_q_per_trial: false,
        record_wall_time: false,
    };
    let problem = gen_mca_instance(&config, 40, 0).unwrap();
    let cmp = compare_estimators(&problem, &[1e-3, 1e-3], &exact_stop()).unwrap();
    let truth = problem.ground_truth().unwrap();
    for result in [&cmp.constrained, &cmp.penalized] {
        for (est, t) in result.estimates.iter().zip(truth) {
            assert!(norm2(&sub(est, t)) <= 1e-3, "{:?}", result.componentwise_error);
        }
    }
    assert!(cmp.decomposition_difference <= 2e-3, "{}", cmp.decomposition_difference);
}
