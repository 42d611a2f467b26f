mod support;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::*;
use svmlab::complexity::{gamma_s1, gamma_s2, r_star_bound, r_star_exact_s1, Capacity, EntropyModel, ModelParams, Setting};
use svmlab::kernel::KernelSpec;
use svmlab::losses::{cond_hinge_risk, empirical_hinge};
use svmlab::rademacher::{localized_inf_bound, localized_min_bound, rademacher_exact, rademacher_mc, CircleBasis, SignDraws};
use svmlab::selection::{calibrate, certify_fit, train_calibrated, CalibrationInput, CERTIFICATE_TOL};
use svmlab::solver::{dual_svm0_crosscheck, outer_grid, train_regularized, HingeProblem, Regularizer, TrainConfig};
use svmlab::spectrum::{analytic_spectrum, empirical_top_eigenvalues};
use svmlab::synth::{Sample, SyntheticDist};

fn random_sample(rng: &mut ChaCha8Rng, n: usize) -> Sample {
    let xs: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let ys: Vec<f64> = (0..n).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
    Sample::new(xs, ys).unwrap()
}

fn signed_gram(k: &KernelSpec, s: &Sample) -> Vec<Vec<f64>> {
    let n = s.len();
    (0..n)
        .map(|i| (0..n).map(|j| s.ys[i] * s.ys[j] * k.eval(s.xs[i], s.xs[j]).unwrap()).collect())
        .collect()
}

#[test]
fn ball_solver_matches_active_set_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let kernels = [KernelSpec::circle(1.0, 1.0, 1.0).unwrap(), KernelSpec::gaussian(0.3).unwrap()];
    for trial in 0..40 {
        let k = &kernels[trial % 2];
        let n = rng.gen_range(1..=6);
        let s = random_sample(&mut rng, n);
        let radius = 10f64.powf(rng.gen_range(-1.5..1.5));
        let expect = ball_dual_enumeration(&signed_gram(k, &s), &vec![1.0 / n as f64; n], radius);
        let problem = HingeProblem::new(k, &s).unwrap();
        let sol = problem.solve_ball(radius, 1e-10, 200_000, None, None).unwrap();
        assert!((sol.primal - expect).abs() <= 1e-6 * expect.max(1e-3), "trial {trial}: {} vs {expect}", sol.primal);
        assert!(sol.lower <= expect + 1e-10);
        // the returned function is feasible and attains the reported value
        let g = problem.representer(&sol.gamma);
        assert!(g.norm().unwrap() <= radius * (1.0 + 1e-9));
        assert!((empirical_hinge(&g, &s).unwrap() - sol.primal).abs() < 1e-9);
    }
}

#[test]
fn ball_solver_with_both_labels_at_each_point() {
    // Each point carries both labels with unequal weights; for large radii
    // the ball stops binding and the minimum is the weighted Bayes hinge.
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let k = KernelSpec::circle(1.0, 1.0, 1.0).unwrap();
    for trial in 0..20 {
        let nodes: Vec<f64> = (0..3).map(|_| rng.gen_range(0.0..1.0)).collect();
        let (mut xs, mut ys, mut w) = (Vec::new(), Vec::new(), Vec::new());
        for &x in &nodes {
            let p: f64 = rng.gen_range(0.1..0.9);
            xs.extend([x, x]);
            ys.extend([1.0, -1.0]);
            w.extend([p / 3.0, (1.0 - p) / 3.0]);
        }
        let radius = 10f64.powf(rng.gen_range(-1.0..3.0));
        let q: Vec<Vec<f64>> = (0..6)
            .map(|i| (0..6).map(|j| ys[i] * ys[j] * k.eval(xs[i], xs[j]).unwrap()).collect())
            .collect();
        let expect = ball_dual_enumeration(&q, &w, radius);
        let problem = HingeProblem::weighted(&k, &xs, &ys, w.clone()).unwrap();
        let sol = problem.solve_ball(radius, 1e-10, 200_000, None, None).unwrap();
        assert!((sol.primal - expect).abs() <= 1e-6 * expect.max(1e-3), "trial {trial}: {} vs {expect}", sol.primal);
        assert!(sol.norm <= radius * (1.0 + 1e-9));
        let floor: f64 = w.chunks(2).map(|p| 2.0 * p[0].min(p[1])).sum();
        assert!(sol.primal >= floor - 1e-12);
    }
}

#[test]
fn quadratic_objective_matches_dual_coordinate_ascent() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let k = KernelSpec::circle(1.0, 1.0, 1.0).unwrap();
    for _ in 0..20 {
        let n = rng.gen_range(5..=50);
        let s = random_sample(&mut rng, n);
        let lambda = 10f64.powf(rng.gen_range(-2.0..-0.3)).max(1.0 / n as f64);
        let fit = train_regularized(&s, &k, &TrainConfig::new(Regularizer::Quadratic, lambda)).unwrap();
        let check = dual_svm0_crosscheck(&s, &k, lambda).unwrap();
        assert!((fit.objective - check.objective).abs() <= 1e-4 * check.objective, "{} vs {}", fit.objective, check.objective);
        let direct = empirical_hinge(&fit.g_hat, &s).unwrap() + lambda * 2.0 * (k.sup_bound() * fit.g_hat.norm().unwrap()).powi(2);
        assert!((direct - fit.objective).abs() < 1e-9);
    }
}

#[test]
fn larger_penalty_never_grows_the_norm() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let k = KernelSpec::circle(1.0, 1.0, 1.0).unwrap();
    let m = k.sup_bound();
    for _ in 0..20 {
        let n = rng.gen_range(8..=40);
        let s = random_sample(&mut rng, n);
        let phi = if rng.gen::<bool>() { Regularizer::Linear } else { Regularizer::Quadratic };
        let lo = rng.gen_range(1.0 / n as f64..0.2);
        let hi = lo * rng.gen_range(1.5..5.0);
        let a = train_regularized(&s, &k, &TrainConfig::new(phi.clone(), lo)).unwrap();
        let b = train_regularized(&s, &k, &TrainConfig::new(phi, hi)).unwrap();
        // one step of the geometric outer grid
        let grid = outer_grid(n, m, 64, &[]);
        let step = grid[2] / grid[1];
        assert!(b.norm <= a.norm * step + 1e-9, "{} > {}", b.norm, a.norm);
    }
}

#[test]
fn calibrated_fits_pass_the_certificate() {
    let k = KernelSpec::circle(1.0, 1.0, 1.0).unwrap();
    let spec = analytic_spectrum(&k).unwrap();
    let dist = SyntheticDist::hard_gap(1, 0.2).unwrap();
    for phi in [Regularizer::Linear, Regularizer::Quadratic] {
        for seed in 0..4 {
            let n = 64 << seed;
            let cal = calibrate(&CalibrationInput::new(Capacity::Spectrum(&spec), n, k.sup_bound(), 0.2, 0.3, phi.clone())).unwrap();
            let fit = train_calibrated(&dist.sample(n, seed, 0), &k, &cal, &cal.train_config()).unwrap();
            let cert = certify_fit(&fit, &cal, CERTIFICATE_TOL).unwrap();
            assert!(cert.passed, "{cert:?}");
        }
    }
}

#[test]
fn gamma_s2_matches_numeric_entropy_root() {
    for s in [0.75, 1.0, 2.0] {
        let em = EntropyModel::sobolev(s).unwrap();
        for n in [16, 1000, 65536] {
            for m in [1.0, 1.6] {
                let x = entropy_root_numeric(1.0, s, n, m);
                let expect = x * x / (m * m);
                let got = gamma_s2(&em, n, m).unwrap();
                assert!((got - expect).abs() <= 1e-6 * expect, "s={s} n={n}: {got} vs {expect}");
            }
        }
    }
}

#[test]
fn gamma_s1_matches_brute_force_scan() {
    let k = KernelSpec::circle(1.0, 1.0, 1.0).unwrap();
    let spec = analytic_spectrum(&k).unwrap();
    let m = k.sup_bound();
    for n in [256, 4096, 65536] {
        let inf = circle_spectral_inf(1.0, 1.0, 1.0, n, 0.3, m, 5000);
        let expect = inf / (0.3 * (n as f64).sqrt());
        let got = gamma_s1(&spec, n, 0.3, m).unwrap();
        assert!((got - expect).abs() <= 1e-9 * expect, "n={n}: {got} vs {expect}");
    }
}

#[test]
fn gamma_rates_for_unit_smoothness() {
    let k = KernelSpec::circle(1.0, 1.0, 1.0).unwrap();
    let spec = analytic_spectrum(&k).unwrap();
    let em = EntropyModel::sobolev(1.0).unwrap();
    let m = k.sup_bound();
    let ns: Vec<f64> = (8..=16).map(|e| f64::from(1u32 << e)).collect();
    let g1: Vec<f64> = ns.iter().map(|&n| gamma_s1(&spec, n as usize, 0.3, m).unwrap()).collect();
    let g2: Vec<f64> = ns.iter().map(|&n| gamma_s2(&em, n as usize, m).unwrap()).collect();
    assert!((log_log_slope(&ns, &g1) + 2.0 / 3.0).abs() <= 0.05);
    assert!((log_log_slope(&ns, &g2) + 2.0 / 3.0).abs() <= 1e-6);
}

#[test]
fn r_star_bound_dominates_exact_fixed_point() {
    let k = KernelSpec::circle(1.0, 1.0, 1.0).unwrap();
    let spec = analytic_spectrum(&k).unwrap();
    let m = k.sup_bound();
    for n in [50, 512, 10_000] {
        for radius in [0.1, 1.0, 10.0, 100.0] {
            let params = ModelParams::new(Setting::S1, radius, m, 0.2, 0.3).unwrap();
            let bound = r_star_bound(&params, Capacity::Spectrum(&spec), n, m, 0.3).unwrap();
            let exact = r_star_exact_s1(&spec, &params, n).unwrap();
            assert!(exact <= bound, "n={n} R={radius}: {exact} > {bound}");
        }
    }
}

#[test]
fn rademacher_enumeration_and_domination() {
    let k = KernelSpec::circle(1.0, 1.0, 1.0).unwrap();
    let d = 7;
    let basis = CircleBasis::top(&k, d).unwrap();
    let pairs = circle_eigenpairs(1.0, |f| k.circle_coefficient(f).unwrap(), d);
    let spec = basis.spectrum();
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for n in [4, 7, 10] {
        let xs: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        for radius in [0.3, 1.0, 3.0] {
            for r in [0.01, 0.1, 1.0] {
                let lib = rademacher_exact(&basis, radius, r, &xs).unwrap();
                let oracle = rademacher_by_enumeration(&pairs, radius, r, &xs);
                assert!((lib - oracle).abs() <= 1e-8 * oracle.max(1e-12), "{lib} vs {oracle}");
                let inf = localized_inf_bound(&spec, radius, r, n);
                let min = localized_min_bound(&spec, radius, r, n);
                assert!(oracle <= inf + 1e-12 && inf <= min + 1e-12, "n={n} R={radius} r={r}: {oracle} {inf} {min}");
            }
        }
    }
}

#[test]
fn rademacher_monte_carlo_agrees_with_enumeration() {
    let k = KernelSpec::circle(1.0, 1.0, 1.0).unwrap();
    let basis = CircleBasis::top(&k, 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let xs: Vec<f64> = (0..10).map(|_| rng.gen::<f64>()).collect();
    let exact = rademacher_exact(&basis, 1.0, 0.1, &xs).unwrap();
    let mc = rademacher_mc(&basis, 1.0, 0.1, &xs, 4000, SignDraws::WithReplacement, &mut rng).unwrap();
    assert!((mc.mean - exact).abs() <= 3.0 * mc.std_error, "{} ± {} vs {exact}", mc.mean, mc.std_error);
}

#[test]
fn conditional_risk_argmin_by_brute_force() {
    let gs: Vec<f64> = (0..=6000).map(|i| -3.0 + i as f64 * 1e-3).collect();
    for i in 1..20 {
        let eta = i as f64 * 0.05;
        if (eta - 0.5).abs() < 1e-9 {
            continue;
        }
        let vals: Vec<f64> = gs.iter().map(|&g| cond_hinge_risk(eta, g).unwrap()).collect();
        let best = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let argmins: Vec<f64> = gs.iter().zip(&vals).filter(|(_, v)| **v <= best + 1e-12).map(|(g, _)| *g).collect();
        let sign = if eta > 0.5 { 1.0 } else { -1.0 };
        assert!(argmins.iter().all(|g| (g - sign).abs() < 1e-9), "eta={eta}: {argmins:?}");
    }
    let at_one: Vec<f64> = gs.iter().filter(|&&g| g >= 1.0).map(|&g| cond_hinge_risk(1.0, g).unwrap()).collect();
    assert!(at_one.iter().all(|v| v.abs() < 1e-12));
    let at_half: Vec<f64> = gs.iter().filter(|&&g| g.abs() <= 1.0).map(|&g| cond_hinge_risk(0.5, g).unwrap()).collect();
    assert!(at_half.iter().all(|v| (v - 1.0).abs() < 1e-12));
}

#[test]
fn label_agreement_rate_matches_gap() {
    let dist = SyntheticDist::hard_gap(1, 0.2).unwrap();
    let s = dist.sample(100_000, 7, 0);
    let agree = s.xs.iter().zip(&s.ys).filter(|(x, y)| dist.bayes(**x).unwrap() == **y).count() as f64 / 1e5;
    assert!((agree - 0.7).abs() <= 0.005, "{agree}");
}

#[test]
fn empirical_spectrum_approaches_analytic() {
    let k = KernelSpec::circle(1.0, 1.0, 1.0).unwrap();
    let spec = analytic_spectrum(&k).unwrap();
    let truth: Vec<f64> = (1..=5).map(|j| spec.eigenvalue(j)).collect();
    let dist = SyntheticDist::hard_gap(1, 0.2).unwrap();
    let median_error = |n: usize| {
        let mut errs: Vec<f64> = (0..20)
            .map(|seed| {
                let xs = dist.sample(n, seed, 3).xs;
                let top = empirical_top_eigenvalues(&k.gram(&xs).unwrap(), n, 5).unwrap();
                top.iter().zip(&truth).map(|(a, b)| ((a - b) / b).abs()).fold(0.0, f64::max)
            })
            .collect();
        errs.sort_by(f64::total_cmp);
        0.5 * (errs[9] + errs[10])
    };
    let small = median_error(200);
    let large = median_error(2000);
    assert!(large < small, "{large} >= {small}");
    assert!(large <= 0.1, "{large}");
}
