//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use superpose::experiments::{
    hull_gauge_by_support, infimal_convolution_norm_bruteforce, loglog_slope, presets, run_error_vs_n,
    run_ksupport_experiment, run_phase_transition, summarize, Summary,
};
use superpose::geometry::{
    estimate_rho, gaussian_width_cone_mc, gaussian_width_subspace, width_upper_bound_l1_cone,
};
use superpose::linalg::{norm1, norm2};
use superpose::norms::ksupport::{frank_wolfe_gap, gap_tolerance, ksupport_norm};
use superpose::random::{gaussian_vec, seeded_rng};
use superpose::{
    apg_solve, gradient_component, objective, random_orthogonal, ComponentSpec, DenseMatrix, McaConfig,
    NormKind, SolverConfig, SuperpositionProblem,
};

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn mean_errors(summaries: &[Summary]) -> Vec<f64> {
    summaries.iter().map(|s| s.mean_error).collect()
}

fn noise_ordering() -> Outcome {
    let start = Instant::now();
    let curves: Vec<(String, Vec<Summary>)> = presets::fig_noise_desk()
        .into_iter()
        .map(|(label, c)| (label, summarize(&run_error_vs_n(&c, &SolverConfig::default()).unwrap())))
        .collect();
    let elapsed = start.elapsed();
    let get = |name: &str| &curves.iter().find(|c| c.0 == name).unwrap().1;
    let (eye, random, neg) = (get("identity"), get("random"), get("negative_identity"));
    let mut ok = elapsed <= Duration::from_secs(600);
    for ((a, b), c) in eye.iter().zip(random).zip(neg) {
        if a.n >= 50 {
            ok &= a.mean_error < b.mean_error && b.mean_error < c.mean_error;
        }
        // ‖θ₁*‖₂ = 1
        ok &= c.mean_error >= 0.5;
    }
    (
        ok,
        format!(
            "I {:.3?} random {:.3?} -I {:.3?} in {:.1?}",
            mean_errors(eye),
            mean_errors(random),
            mean_errors(neg),
            elapsed
        ),
    )
}

fn rate() -> Outcome {
    let (_, base) = presets::fig_noise_desk().remove(0);
    let cfg = McaConfig {
        n_grid: vec![50, 100, 200, 400],
        ..base
    };
    let s = summarize(&run_error_vs_n(&cfg, &SolverConfig::default()).unwrap());
    let slope = loglog_slope(&s).unwrap_or(f64::NAN);
    ((-0.7..=-0.3).contains(&slope), format!("slope {slope:.3} over {:.3?}", mean_errors(&s)))
}

fn at_most_one_small_inversion(fractions: &[f64]) -> bool {
    let drops: Vec<f64> = fractions.windows(2).map(|w| w[0] - w[1]).filter(|d| *d > 0.0).collect();
    drops.is_empty() || (drops.len() == 1 && drops[0] <= 0.1)
}

fn phase_transition() -> Outcome {
    let curves = run_phase_transition(&presets::fig_phase_desk(), &presets::noiseless_solver()).unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    let at30 = |p: usize| -> f64 {
        let c = curves.iter().find(|c| c.label == format!("p{p}")).unwrap();
        summarize(&c.records).iter().find(|s| s.n == 30).unwrap().recovery_fraction
    };
    let gap = at30(20) - at30(160);
    ok &= gap >= 0.2;
    for c in &curves {
        let fr: Vec<f64> = summarize(&c.records).iter().map(|s| s.recovery_fraction).collect();
        ok &= at_most_one_small_inversion(&fr);
        detail.push(format!("{} {:?}", c.label, fr));
    }
    (ok, format!("gap at n=30 {gap:.2}; {}", detail.join("; ")))
}

fn ksupport_sparsity() -> Outcome {
    let (base, ps, _) = presets::fig_ksupport_desk();
    let largest = *base.n_grid.last().unwrap();
    let base = McaConfig {
        n_grid: vec![largest],
        ..base
    };
    let curves = run_ksupport_experiment(&base, &ps, &[(2, 2), (3, 3)], &SolverConfig::default()).unwrap();
    let err = |label: String| {
        let c = curves.iter().find(|c| c.label == label).unwrap();
        summarize(&c.records)[0].mean_error
    };
    let mut ok = true;
    let mut detail = Vec::new();
    for p in ps {
        let (a, b) = (err(format!("p{p}_s2_2")), err(format!("p{p}_s3_3")));
        ok &= a <= b;
        detail.push(format!("p{p} n={largest}: (2,2) {a:.3} vs (3,3) {b:.3}"));
    }
    (ok, detail.join("; "))
}

fn rho_bound() -> Outcome {
    let p = 10;
    let mut worst = f64::INFINITY;
    for seed in 0..50 {
        let q = random_orthogonal(p, 1000 + seed);
        let q00 = q.get(0, 0);
        // θ₁* = e₀ and Qθ₂* = sign(Q₀₀)·e₀ satisfy the sign condition at (0, 0)
        let theta1: Vec<f64> = (0..p).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
        let rotated: Vec<f64> = theta1.iter().map(|v| v * q00.signum()).collect();
        let theta2 = q.tr_matvec(&rotated).unwrap();
        let cones = vec![
            (ComponentSpec::l1(p, 1.0).unwrap(), theta1),
            (ComponentSpec::rotated_l1(q, 1.0).unwrap(), theta2),
        ];
        let rho = estimate_rho(&cones, 2000, seed).unwrap();
        let bound = ((1.0 - (1.0 - q00 * q00).sqrt()) / 2.0).sqrt();
        worst = worst.min(rho - (bound - 0.02));
    }
    (worst >= 0.0, format!("min over 50 Q of rho_hat - (bound - 0.02) = {worst:.4}"))
}

fn feasible_candidate(spec: &ComponentSpec, rng: &mut impl Rng, center: Option<&[f64]>) -> Vec<f64> {
    let d = spec.dim();
    let g = gaussian_vec(rng, d);
    let mut c: Vec<f64> = match center {
        Some(x) => x.iter().zip(&g).map(|(a, b)| a + 1e-3 * b).collect(),
        None => {
            let u: f64 = rng.random();
            let r = spec.eval(&g).unwrap();
            g.iter().map(|v| v * spec.radius() * u / r).collect()
        }
    };
    let r = spec.eval(&c).unwrap();
    if r > spec.radius() {
        c.iter_mut().for_each(|v| *v *= spec.radius() / r);
    }
    c
}

fn projection_oracles() -> Outcome {
    let families = vec![
        ComponentSpec::l1(20, 1.5).unwrap(),
        ComponentSpec::rotated_l1(random_orthogonal(20, 4), 1.2).unwrap(),
        ComponentSpec::nuclear(4, 5, 1.3).unwrap(),
        ComponentSpec::ksupport(20, 3, 1.1).unwrap(),
    ];
    let mut rng = seeded_rng(606);
    let mut ok = true;
    let mut detail = Vec::new();
    for spec in &families {
        let (mut worst_feas, mut worst_gain, mut worst_gap) = (0.0f64, f64::NEG_INFINITY, 0.0f64);
        let mut points = 0;
        while points < 200 {
            let v: Vec<f64> = gaussian_vec(&mut rng, spec.dim()).iter().map(|x| 2.0 * x).collect();
            if spec.eval(&v).unwrap() <= spec.radius() {
                continue;
            }
            points += 1;
            let proj = spec.project_certified(&v).unwrap();
            let x = &proj.point;
            worst_feas = worst_feas.max((spec.eval(x).unwrap() - spec.radius()) / spec.radius());
            let dist = norm2(&v.iter().zip(x).map(|(a, b)| a - b).collect::<Vec<_>>());
            for i in 0..1000 {
                let c = feasible_candidate(spec, &mut rng, (i % 2 == 1).then_some(x.as_slice()));
                let dc = norm2(&v.iter().zip(&c).map(|(a, b)| a - b).collect::<Vec<_>>());
                worst_gain = worst_gain.max(dist - dc);
            }
            if spec.kind() == NormKind::KSupport {
                let gap = frank_wolfe_gap(&v, x, 3, spec.radius());
                worst_gap = worst_gap.max(gap / gap_tolerance(&v));
            }
        }
        ok &= worst_feas <= 1e-9 && worst_gain <= 1e-7 && worst_gap <= 1.0;
        detail.push(format!(
            "{} feas {worst_feas:.1e} nearer {worst_gain:.1e}{}",
            spec.kind(),
            if spec.kind() == NormKind::KSupport {
                format!(" gap/tol {worst_gap:.2}")
            } else {
                String::new()
            }
        ));
    }
    (ok, detail.join("; "))
}

fn norm_identities() -> Outcome {
    let mut rng = seeded_rng(707);
    let (mut k1, mut kp, mut sandwich) = (0.0f64, 0.0f64, 0usize);
    for _ in 0..1000 {
        let p = rng.random_range(1..=30);
        let v = gaussian_vec(&mut rng, p);
        let (l1, l2) = (norm1(&v), norm2(&v));
        k1 = k1.max((ksupport_norm(&v, 1) - l1).abs());
        kp = kp.max((ksupport_norm(&v, p) - l2).abs());
        let k = rng.random_range(1..=p);
        let ks = ksupport_norm(&v, k);
        let slack = 1e-12 * l1;
        if ks < l2 - slack || ks > l1 + slack || ks < l1 / (k as f64).sqrt() - slack {
            sandwich += 1;
        }
    }
    (
        k1 <= 1e-10 && kp <= 1e-10 && sandwich == 0,
        format!("|k=1 - l1| {k1:.1e}, |k=p - l2| {kp:.1e}, sandwich violations {sandwich}"),
    )
}

fn solver_correctness() -> Outcome {
    let mut rng = seeded_rng(808);
    // stop only when the objective repeats exactly
    let tight = SolverConfig {
        rel_tol: 0.0,
        max_iter: 50_000,
        ..SolverConfig::default()
    };
    let (mut worst_ls, mut worst_fd) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let p = rng.random_range(2..=40);
        let n = 2 * p;
        let x = DenseMatrix::new(n, p, gaussian_vec(&mut rng, n * p)).unwrap();
        let y = gaussian_vec(&mut rng, n);
        let xm = DMatrix::from_row_slice(n, p, &(0..n * p).map(|k| x.get(k / p, k % p)).collect::<Vec<_>>());
        let yv = DVector::from_column_slice(&y);
        let ls = (xm.transpose() * &xm).lu().solve(&(xm.transpose() * yv)).unwrap();
        let radius = 1e3 * ls.iter().map(|v| v.abs()).sum::<f64>();
        let problem = SuperpositionProblem::new(y, x, vec![ComponentSpec::l1(p, radius).unwrap()]).unwrap();
        let est = &apg_solve(&problem, &tight).unwrap().estimates[0];
        let diff: f64 = est.iter().zip(ls.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        worst_ls = worst_ls.max(diff / ls.norm());

        let theta = vec![gaussian_vec(&mut rng, p)];
        let g = gradient_component(&problem, &theta).unwrap();
        let h = 1e-5;
        for j in 0..p {
            let mut plus = theta.clone();
            plus[0][j] += h;
            let mut minus = theta.clone();
            minus[0][j] -= h;
            let fd = (objective(&problem, &plus).unwrap() - objective(&problem, &minus).unwrap()) / (2.0 * h);
            worst_fd = worst_fd.max((fd - g[j]).abs() / g[j].abs().max(1.0));
        }
    }
    (
        worst_ls <= 1e-6 && worst_fd <= 1e-5,
        format!("least squares rel diff {worst_ls:.1e}, gradient rel diff {worst_fd:.1e}"),
    )
}

fn hull_lemma() -> Outcome {
    let norms = [
        (ComponentSpec::l1(2, 1.0).unwrap(), 1.0),
        (ComponentSpec::ksupport(2, 2, 1.0).unwrap(), 1.0),
    ];
    let mut worst = 0.0f64;
    for j in 0..720 {
        let a = 2.0 * std::f64::consts::PI * j as f64 / 720.0;
        let theta = [a.cos(), a.sin()];
        let brute = infimal_convolution_norm_bruteforce(&norms, &theta, 0.01).unwrap();
        let hull = hull_gauge_by_support(&norms, &theta, 720).unwrap();
        worst = worst.max((brute - hull).abs() / hull);
    }
    (worst <= 0.02, format!("max relative disagreement {worst:.4}"))
}

fn widths() -> Outcome {
    let w1 = gaussian_width_subspace(1, 7).unwrap().value;
    let exact_err = (w1 - (2.0 / std::f64::consts::PI).sqrt()).abs();
    let full = gaussian_width_subspace(20, 20).unwrap().value;
    let spec = ComponentSpec::l1(20, 1.0).unwrap();
    let mc = gaussian_width_cone_mc(&spec, &[0.0; 20], 2000, 500, 10).unwrap().value;
    let mut anchor = vec![0.0; 1000];
    anchor[0] = 1.0;
    let bound = width_upper_bound_l1_cone(1, 1000, &anchor, 2000, 10).unwrap().value;
    let rel = (mc - full).abs() / full;
    (
        exact_err <= 1e-12 && rel <= 0.05 && bound <= 5.7,
        format!("dim-1 error {exact_err:.1e}; full-space MC {mc:.4} vs {full:.4} ({rel:.4}); l1 bound {bound:.3}"),
    )
}

fn run_cli(preset_file: &Path, out: &Path, threads: usize) -> bool {
    Command::new(env!("CARGO_BIN_EXE_superpose"))
        .args(["experiment", "--config"])
        .arg(preset_file)
        .arg("--out")
        .arg(out)
        .args(["--threads", &threads.to_string()])
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("noise.json");
    std::fs::write(&config, r#"{"preset": "fig-noise-desk"}"#).unwrap();
    let (one, eight) = (dir.path().join("t1"), dir.path().join("t8"));
    if !(run_cli(&config, &one, 1) && run_cli(&config, &eight, 8)) {
        return (false, "experiment command failed".into());
    }
    let mut names: Vec<String> = std::fs::read_dir(&one)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    let identical = names.len() == 3
        && names
            .iter()
            .all(|n| std::fs::read(one.join(n)).ok() == std::fs::read(eight.join(n)).ok());
    (identical, format!("{} CSV files compared: {}", names.len(), names.join(", ")))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("error ordering across rotations", noise_ordering),
        ("1/sqrt(n) error rate", rate),
        ("phase transition in p", phase_transition),
        ("k-support sparsity ordering", ksupport_sparsity),
        ("structural coherence lower bound", rho_bound),
        ("projection oracles", projection_oracles),
        ("norm identities", norm_identities),
        ("solver correctness", solver_correctness),
        ("convex hull gauge", hull_lemma),
        ("width estimators", widths),
        ("thread-count determinism", determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        });
        let status = if ok { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {status} {name}: {detail} [{:.1?}]", i + 1, start.elapsed());
        if !ok {
            failed.push(i + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 11 criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
