//! End-to-end acceptance checks. Runs as a plain program so that every
//! criterion prints exactly one PASS/FAIL line.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use svmlab::complexity::Capacity;
use svmlab::kernel::RepresenterFn;
use svmlab::losses::{cond_hinge_risk, rel_01_risk, rel_hinge_risk};
use svmlab::rademacher::{localized_inf_bound, localized_min_bound, rademacher_exact, CircleBasis};
use svmlab::selection::{calibrate, oracle_rhs_from, reference_fits, reference_radii, CalibrationInput};
use svmlab::solver::{dual_svm0_crosscheck, train_regularized, HingeProblem, Regularizer, TrainConfig};
use svmlab::spectrum::analytic_spectrum;
use svmlab::subroot::{solve_fixed_point, SubrootFn};
use svmlab::synth::{Sample, SyntheticDist};
use svmlab::KernelSpec;
use svmlab_cli::{run, ExperimentConfig, ExperimentKind};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn circle() -> KernelSpec {
    KernelSpec::circle(1.0, 1.0, 1.0).unwrap()
}

fn spectrum_correctness() -> Outcome {
    let k = circle();
    let spec = analytic_spectrum(&k).unwrap();
    let mut exact = spec.eigenvalue(1) == 1.0;
    for f in 1..=2000u64 {
        let half = k.circle_coefficient(f).unwrap() / 2.0;
        exact &= spec.eigenvalue(2 * f as usize) == half && spec.eigenvalue(2 * f as usize + 1) == half;
    }
    let cfg = ExperimentConfig {
        n: vec![2000],
        replicates: 20,
        spectrum_count: 5,
        ..Default::default()
    };
    let report = run(ExperimentKind::Spectrum, &cfg).unwrap();
    let err = report.summary["per_n"][0]["top5_max_rel_error"].as_f64().unwrap();
    outcome(exact && err <= 0.10, format!("analytic mapping exact={exact}, top-5 median rel error at n=2000: {err:.4}"))
}

fn gamma_rate() -> Outcome {
    let cfg = ExperimentConfig {
        n: (8..=16).map(|e| 1usize << e).collect(),
        ..Default::default()
    };
    let report = run(ExperimentKind::Gamma, &cfg).unwrap();
    let s1 = report.summary["gamma_s1_fit"]["slope"].as_f64().unwrap();
    let s2 = report.summary["gamma_s2_fit"]["slope"].as_f64().unwrap();
    outcome(
        (s1 + 2.0 / 3.0).abs() <= 0.05 && (s2 + 2.0 / 3.0).abs() <= 1e-6,
        format!("slope S1 {s1:.4}, slope S2 {s2:.9}"),
    )
}

fn subroot_solver() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let a = 10f64.powf(rng.gen_range(-2.0..2.0));
        let b = 10f64.powf(rng.gen_range(-2.0..2.0));
        let got = solve_fixed_point(&SubrootFn::new(move |r: f64| a * r.sqrt() + b), 1e-12).unwrap().r;
        let expect = ((a + (a * a + 4.0 * b).sqrt()) / 2.0).powi(2);
        worst = worst.max((got - expect).abs() / expect);
    }
    outcome(worst <= 1e-8, format!("max relative error {worst:.2e} over 100 pairs"))
}

fn rademacher_domination() -> Outcome {
    let k = circle();
    let d = 7;
    let basis = CircleBasis::top(&k, d).unwrap();
    let pairs = support::circle_eigenpairs(1.0, |f| k.circle_coefficient(f).unwrap(), d);
    let spec = basis.spectrum();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut violations, mut mismatches, mut cases) = (0, 0, 0);
    for n in [4, 7, 10] {
        let xs: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        for radius in [0.3, 1.0, 3.0] {
            for r in [0.01, 0.1, 1.0] {
                cases += 1;
                let oracle = support::rademacher_by_enumeration(&pairs, radius, r, &xs);
                let lib = rademacher_exact(&basis, radius, r, &xs).unwrap();
                if (lib - oracle).abs() > 1e-8 * oracle.max(1e-12) {
                    mismatches += 1;
                }
                let inf = localized_inf_bound(&spec, radius, r, n);
                let min = localized_min_bound(&spec, radius, r, n);
                if !(oracle.max(lib) <= inf + 1e-12 && inf <= min + 1e-12) {
                    violations += 1;
                }
            }
        }
    }
    outcome(
        violations == 0 && mismatches == 0,
        format!("{cases} cases, {violations} domination violations, {mismatches} enumeration mismatches"),
    )
}

fn loss_relations() -> Outcome {
    let k = circle();
    let dists = [SyntheticDist::hard_gap(1, 0.2).unwrap(), SyntheticDist::banded(2, 0.1, 0.1).unwrap()];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut violations = 0;
    for i in 0..1000 {
        let m = rng.gen_range(1..=6);
        let anchors: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
        let coeffs: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let g = RepresenterFn::new(k.clone(), anchors, coeffs).unwrap();
        let dist = &dists[i % 2];
        let l = rel_hinge_risk(&g, dist).unwrap();
        let t = rel_01_risk(&g, dist).unwrap();
        if t > l + 1e-8 {
            violations += 1;
        }
    }
    let gs: Vec<f64> = (0..=6000).map(|i| -3.0 + i as f64 * 1e-3).collect();
    let mut argmin_bad = 0;
    for i in 1..20 {
        let eta = i as f64 * 0.05;
        if (eta - 0.5).abs() < 1e-9 {
            continue;
        }
        let (best_g, _) = gs
            .iter()
            .map(|&g| (g, cond_hinge_risk(eta, g).unwrap()))
            .fold((0.0, f64::INFINITY), |acc, p| if p.1 < acc.1 { p } else { acc });
        if (best_g - if eta > 0.5 { 1.0 } else { -1.0 }).abs() > 1e-9 {
            argmin_bad += 1;
        }
    }
    outcome(violations == 0 && argmin_bad == 0, format!("{violations} Θ>L violations in 1000 functions, {argmin_bad} argmin mismatches"))
}

fn random_sample(rng: &mut ChaCha8Rng, n: usize) -> Sample {
    let xs: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let ys: Vec<f64> = (0..n).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
    Sample::new(xs, ys).unwrap()
}

fn solver_cross_validation() -> Outcome {
    let k = circle();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut reg_worst: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.gen_range(5..=50);
        let s = random_sample(&mut rng, n);
        let lambda = 10f64.powf(rng.gen_range(-2.0..-0.3)).max(1.0 / n as f64);
        let fit = train_regularized(&s, &k, &TrainConfig::new(Regularizer::Quadratic, lambda)).unwrap();
        let check = dual_svm0_crosscheck(&s, &k, lambda).unwrap();
        reg_worst = reg_worst.max((fit.objective - check.objective).abs() / check.objective);
    }
    let mut ball_worst: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.gen_range(1..=6);
        let s = random_sample(&mut rng, n);
        let radius = 10f64.powf(rng.gen_range(-1.5..1.5));
        let q: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| s.ys[i] * s.ys[j] * k.eval(s.xs[i], s.xs[j]).unwrap()).collect())
            .collect();
        let expect = support::ball_dual_enumeration(&q, &vec![1.0 / n as f64; n], radius);
        let sol = HingeProblem::new(&k, &s).unwrap().solve_ball(radius, 1e-9, 200_000, None, None).unwrap();
        ball_worst = ball_worst.max((sol.primal - expect).abs() / expect.max(1e-3));
    }
    outcome(
        reg_worst <= 1e-4 && ball_worst <= 1e-4,
        format!("regularized vs dual ascent {reg_worst:.2e}, constrained vs active-set enumeration {ball_worst:.2e}"),
    )
}

fn oracle_inequality() -> Outcome {
    let cfg = ExperimentConfig {
        n: vec![512],
        replicates: 200,
        delta: 0.05,
        c: 1.0,
        dist: SyntheticDist::hard_gap(1, 0.2).unwrap(),
        ..Default::default()
    };
    let report = run(ExperimentKind::VerifyOracle, &cfg).unwrap();
    let groups = report.summary["per_group"].as_array().unwrap();
    let mut parts = Vec::new();
    let mut ok = report.summary["all_certificates_passed"] == true && groups.len() == 2;
    for g in groups {
        let rate = g["violation_rate"].as_f64().unwrap();
        ok &= rate <= 0.08;
        parts.push(format!("{} violation rate {rate:.3} ({} certified)", g["phi"].as_str().unwrap(), g["certificates_passed"]));
    }
    outcome(ok, parts.join(", "))
}

fn regularizer_comparison() -> Outcome {
    let k = circle();
    let spec = analytic_spectrum(&k).unwrap();
    let dist = SyntheticDist::hard_gap(1, 0.2).unwrap();
    let n = 512;
    let cal = |phi| calibrate(&CalibrationInput::new(Capacity::Spectrum(&spec), n, k.sup_bound(), 0.2, 0.3, phi)).unwrap();
    let (lin, quad) = (cal(Regularizer::Linear), cal(Regularizer::Quadratic));
    let fits = reference_fits(&dist, &k, &reference_radii(&lin, 24), 64, &lin.train_config()).unwrap();
    let (a, b) = (oracle_rhs_from(&fits, &lin), oracle_rhs_from(&fits, &quad));
    let mut checked = 0;
    let mut bad = 0;
    for (ra, rb) in a.rows.iter().zip(&b.rows) {
        if 2.0 * k.sup_bound() * ra.norm >= 0.5 {
            checked += 1;
            if ra.term > rb.term + 1e-12 {
                bad += 1;
            }
        }
    }
    let cfg = ExperimentConfig {
        n: vec![64, 128, 256, 512],
        replicates: 2,
        ..Default::default()
    };
    let report = run(ExperimentKind::RateStudy, &cfg).unwrap();
    let fits = &report.summary["rel_hinge_fit"];
    let lin_slope = fits["linear"]["slope"].as_f64();
    let quad_slope = fits["quadratic"]["slope"].as_f64();
    outcome(
        checked > 0 && bad == 0 && lin_slope.is_some() && quad_slope.is_some(),
        format!(
            "{bad} of {checked} grid functions with linear term above quadratic; risk slopes linear {:.3}, quadratic {:.3}",
            lin_slope.unwrap_or(f64::NAN),
            quad_slope.unwrap_or(f64::NAN)
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("cfg.toml");
    std::fs::write(&cfg_path, "n = [48, 96]\nreplicates = 6\n").unwrap();
    let run_cli = |kind: &str, workers: usize, tag: &str| -> Vec<u8> {
        let out = dir.path().join(tag);
        let status = Command::new(env!("CARGO_BIN_EXE_svmlab"))
            .arg(kind)
            .arg("--config")
            .arg(&cfg_path)
            .arg("--out")
            .arg(&out)
            .arg("--workers")
            .arg(workers.to_string())
            .arg("--seed")
            .arg("17")
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        std::fs::read(out.join("rows.csv")).unwrap()
    };
    let mut same = true;
    let mut kinds = Vec::new();
    for kind in ["verify-oracle", "select", "risk"] {
        let one = run_cli(kind, 1, &format!("{kind}-1"));
        let again = run_cli(kind, 1, &format!("{kind}-1b"));
        let eight = run_cli(kind, 8, &format!("{kind}-8"));
        same &= one == again && one == eight;
        kinds.push(kind);
    }
    outcome(same, format!("rows.csv byte-identical across reruns and 1 vs 8 workers for {}", kinds.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [(&str, Duration, fn() -> Outcome); 9] = [
        ("1 spectrum correctness", Duration::from_secs(120), spectrum_correctness),
        ("2 gamma rate", Duration::from_secs(60), gamma_rate),
        ("3 sub-root solver", Duration::from_secs(1), subroot_solver),
        ("4 localized Rademacher domination", Duration::from_secs(300), rademacher_domination),
        ("5 loss relations", Duration::from_secs(180), loss_relations),
        ("6 solver cross-validation", Duration::from_secs(300), solver_cross_validation),
        ("7 oracle inequality", Duration::from_secs(1800), oracle_inequality),
        ("8 regularizer comparison", Duration::MAX, regularizer_comparison),
        ("9 determinism", Duration::MAX, determinism),
    ];
    let mut failed = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let result = std::panic::catch_unwind(check);
        let elapsed = start.elapsed();
        let (passed, detail) = match result {
            Ok(o) => (o.passed && elapsed <= budget, o.detail),
            Err(_) => (false, "panicked".to_string()),
        };
        let budget_note = if budget == Duration::MAX { String::new() } else { format!(" / budget {:.0}s", budget.as_secs_f64()) };
        println!(
            "{} criterion {name}: {detail} [{:.1}s{budget_note}]",
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
        failed += usize::from(!passed);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
