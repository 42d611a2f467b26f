//! Experiment drivers. Each returns a table of rows and a JSON summary that
//! can be recomputed from those rows.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use svmlab::complexity::{gamma_s1, gamma_s2, Capacity, EntropyModel, Setting};
use svmlab::losses::{risk_report, risk_report_mc, Bayes, Constant, Negated, RiskReport};
use svmlab::rademacher::{localized_inf_bound, localized_min_bound, rademacher_exact, rademacher_mc, CircleBasis, SignDraws, MAX_ENUMERATION};
use svmlab::selection::{
    calibrate, certify_fit, oracle_rhs, select_model, split_confidence, train_calibrated, CalibrationInput, PenaltyCalibration,
    CERTIFICATE_TOL,
};
use svmlab::spectrum::{analytic_spectrum, empirical_top_eigenvalues, SpectrumModel};
use svmlab::synth::Sample;
use svmlab::KernelSpec;

use crate::config::{ExperimentConfig, ExperimentKind, PhiChoice};
use crate::stats::rate_study_fit;

/// Version of the `summary.json` layout.
pub const SCHEMA_VERSION: u32 = 1;

/// Rows of `rows.csv`, all cells already formatted.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| *h == name)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| anyhow!("csv: {e}"))
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub kind: ExperimentKind,
    pub table: Table,
    pub summary: Value,
}

impl Report {
    /// The full `summary.json` document.
    pub fn summary_document(&self, cfg: &ExperimentConfig) -> Value {
        json!({
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind.name(),
            "config": cfg,
            "results": self.summary,
        })
    }

    pub fn write(&self, cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("output: cannot create {}", dir.display()))?;
        fs::write(dir.join("rows.csv"), self.table.to_csv()?).context("output: rows.csv")?;
        let mut text = serde_json::to_string_pretty(&self.summary_document(cfg))?;
        text.push('\n');
        fs::write(dir.join("summary.json"), text).context("output: summary.json")?;
        Ok(())
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn int(v: impl ToString) -> String {
    v.to_string()
}

/// Sample stream of replicate `rep` at the `ni`-th sample size.
fn stream(ni: usize, rep: usize) -> u64 {
    ((ni as u64) << 32) | rep as u64
}

fn pool_map<T, U, F>(workers: usize, items: Vec<T>, f: F) -> Result<Vec<U>>
where
    T: Send,
    U: Send,
    F: Fn(T) -> Result<U> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().context("worker pool")?;
    pool.install(|| items.into_par_iter().map(&f).collect())
}

fn circle_spectrum(kernel: &KernelSpec) -> Result<SpectrumModel> {
    analytic_spectrum(kernel).with_context(|| format!("spectrum: analytic spectrum of the {} kernel", kernel.family_name()))
}

/// Capacity data of the configured setting.
enum CapacityData {
    Spectrum(SpectrumModel),
    Entropy(EntropyModel),
}

impl CapacityData {
    fn build(cfg: &ExperimentConfig, kernel: &KernelSpec) -> Result<Self> {
        match Setting::from(cfg.setting) {
            Setting::S1 => Ok(CapacityData::Spectrum(circle_spectrum(kernel)?)),
            Setting::S2 => Ok(CapacityData::Entropy(cfg.entropy_model()?)),
        }
    }

    fn capacity(&self) -> Capacity<'_> {
        match self {
            CapacityData::Spectrum(s) => Capacity::Spectrum(s),
            CapacityData::Entropy(e) => Capacity::Entropy(e),
        }
    }
}

fn calibration(cfg: &ExperimentConfig, cap: &CapacityData, kernel: &KernelSpec, n: usize, phi: PhiChoice, delta: f64) -> Result<PenaltyCalibration> {
    let mut input = CalibrationInput::new(cap.capacity(), n, kernel.sup_bound(), cfg.eta0, cfg.eta1, phi.regularizer());
    input.delta = delta;
    input.c = cfg.c;
    input.k_contrast = cfg.k_contrast;
    input.trailing = cfg.trailing;
    calibrate(&input).with_context(|| format!("selection: calibrate n={n} phi={phi:?} setting={:?} delta={delta} c={}", cfg.setting, cfg.c))
}

fn phi_name(p: PhiChoice) -> &'static str {
    match p {
        PhiChoice::Linear => "linear",
        PhiChoice::Quadratic => "quadratic",
    }
}

pub fn run(kind: ExperimentKind, cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate(kind)?;
    let (table, summary) = match kind {
        ExperimentKind::Spectrum => spectrum(cfg)?,
        ExperimentKind::Gamma => gamma(cfg)?,
        ExperimentKind::Calibrate => calibrate_table(cfg)?,
        ExperimentKind::Train => fits(cfg, false)?,
        ExperimentKind::VerifyOracle => fits(cfg, true)?,
        ExperimentKind::RateStudy => rate_study(cfg)?,
        ExperimentKind::Select => select(cfg)?,
        ExperimentKind::RademacherCheck => rademacher_check(cfg)?,
        ExperimentKind::Risk => risk(cfg)?,
    };
    Ok(Report { kind, table, summary })
}

fn spectrum(cfg: &ExperimentConfig) -> Result<(Table, Value)> {
    let kernel = &cfg.kernels[0];
    let spec = circle_spectrum(kernel)?;
    let count = cfg.spectrum_count.max(1);
    let mut table = Table::new(&["n", "index", "analytic", "empirical_median", "rel_error"]);
    let mut per_n = Vec::new();
    for (ni, &n) in cfg.n.iter().enumerate() {
        let reps: Vec<usize> = (0..cfg.replicates).collect();
        let tops = pool_map(cfg.workers, reps, |rep| {
            let xs = cfg.dist.sample(n, cfg.seed, stream(ni, rep)).xs;
            let gram = kernel.gram(&xs).with_context(|| format!("rkhs: gram n={n}"))?;
            empirical_top_eigenvalues(&gram, n, count).with_context(|| format!("spectrum: empirical n={n} replicate={rep}"))
        })?;
        let mut top5_error: f64 = 0.0;
        for j in 0..count.min(n) {
            let mut vals: Vec<f64> = tops.iter().map(|t| t[j]).collect();
            vals.sort_by(f64::total_cmp);
            let median = median_sorted(&vals);
            let analytic = spec.eigenvalue(j + 1);
            let rel = if analytic > 0.0 { (median - analytic).abs() / analytic } else { median.abs() };
            if j < 5 {
                top5_error = top5_error.max(rel);
            }
            table.push(vec![int(n), int(j + 1), num(analytic), num(median), num(rel)]);
        }
        per_n.push(json!({ "n": n, "top5_max_rel_error": top5_error }));
    }
    Ok((table, json!({ "replicates": cfg.replicates, "per_n": per_n })))
}

fn median_sorted(v: &[f64]) -> f64 {
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn gamma(cfg: &ExperimentConfig) -> Result<(Table, Value)> {
    let kernel = &cfg.kernels[0];
    let m = kernel.sup_bound();
    let spec = if kernel.is_circle() { Some(circle_spectrum(kernel)?) } else { None };
    let em = cfg.entropy_model()?;
    let cap = CapacityData::build(cfg, kernel)?;
    let mut table = Table::new(&["n", "gamma_s1", "gamma_s2", "lambda"]);
    let (mut s1, mut s2) = (Vec::new(), Vec::new());
    for &n in &cfg.n {
        let g1 = match &spec {
            Some(s) => Some(gamma_s1(s, n, cfg.eta1, m).with_context(|| format!("complexity: gamma_s1 n={n}"))?),
            None => None,
        };
        let g2 = gamma_s2(&em, n, m).with_context(|| format!("complexity: gamma_s2 n={n}"))?;
        let lambda = calibration(cfg, &cap, kernel, n, cfg.phi[0], cfg.delta)?.lambda;
        if let Some(g) = g1 {
            s1.push((n as f64, g));
        }
        s2.push((n as f64, g2));
        table.push(vec![int(n), g1.map_or(String::new(), num), num(g2), num(lambda)]);
    }
    let fit = |pts: &[(f64, f64)]| rate_study_fit(pts).ok();
    Ok((table, json!({ "gamma_s1_fit": fit(&s1), "gamma_s2_fit": fit(&s2) })))
}

fn calibrate_table(cfg: &ExperimentConfig) -> Result<(Table, Value)> {
    let kernel = &cfg.kernels[0];
    let cap = CapacityData::build(cfg, kernel)?;
    let mut table = Table::new(&["n", "phi", "k", "radius", "pen", "rho", "b", "c_r", "r_star", "sufficient", "covers"]);
    let mut per = Vec::new();
    for &n in &cfg.n {
        for &phi in &cfg.phi {
            let cal = calibration(cfg, &cap, kernel, n, phi, cfg.delta)?;
            for e in &cal.entries {
                table.push(vec![
                    int(n),
                    phi_name(phi).into(),
                    int(e.k),
                    num(e.radius),
                    num(e.pen),
                    num(e.rho),
                    num(e.params.b),
                    num(e.params.c),
                    num(e.params.r_star),
                    num(e.sufficient),
                    int(e.pen >= e.sufficient),
                ]);
            }
            per.push(json!({
                "n": n,
                "phi": phi_name(phi),
                "gamma": cal.gamma,
                "lambda": cal.lambda,
                "x_r": cal.x_r,
                "weight_sum": cal.weight_sum(),
                "trailing": cal.trailing_value(),
                "models": cal.entries.len(),
            }));
        }
    }
    Ok((table, json!({ "per_calibration": per })))
}

/// One regularized fit of a train, verify-oracle or rate-study run.
#[derive(Clone, Debug, Serialize)]
struct FitRow {
    stream: u64,
    n: usize,
    phi: PhiChoice,
    lambda: f64,
    r_hat: f64,
    norm: f64,
    empirical_loss: f64,
    objective: f64,
    rel_hinge: f64,
    rel_01: f64,
    certificate: bool,
    oracle_rhs: Option<f64>,
}

const FIT_HEADER: [&str; 15] = [
    "seed",
    "stream",
    "replicate",
    "n",
    "kernel",
    "phi",
    "lambda",
    "r_hat",
    "norm",
    "empirical_loss",
    "objective",
    "rel_hinge",
    "rel_01",
    "certificate",
    "oracle_rhs",
];

fn fit_rows(cfg: &ExperimentConfig, with_oracle: bool) -> Result<Vec<(usize, FitRow)>> {
    let kernel = &cfg.kernels[0];
    let cap = CapacityData::build(cfg, kernel)?;
    let mut out = Vec::new();
    for (ni, &n) in cfg.n.iter().enumerate() {
        for &phi in &cfg.phi {
            let cal = calibration(cfg, &cap, kernel, n, phi, cfg.delta)?;
            let mut base = cal.train_config();
            base.tol = cfg.tol;
            let rhs = if with_oracle {
                let r = oracle_rhs(&cfg.dist, kernel, &cal, cfg.reference_nodes, &base)
                    .with_context(|| format!("selection: oracle bound n={n} phi={phi:?}"))?;
                Some(r.rhs)
            } else {
                None
            };
            let reps: Vec<usize> = (0..cfg.replicates).collect();
            let rows = pool_map(cfg.workers, reps, |rep| {
                let st = stream(ni, rep);
                let sample = cfg.dist.sample(n, cfg.seed, st);
                let ctx = || format!("n={n} phi={phi:?} seed={} stream={st}", cfg.seed);
                let fit = train_calibrated(&sample, kernel, &cal, &base).with_context(|| format!("solver: train {}", ctx()))?;
                let cert = certify_fit(&fit, &cal, CERTIFICATE_TOL).with_context(|| format!("selection: certificate {}", ctx()))?;
                let risk = risk_report(&fit.g_hat, &cfg.dist).with_context(|| format!("losses: risk {}", ctx()))?;
                Ok((
                    rep,
                    FitRow {
                        stream: st,
                        n,
                        phi,
                        lambda: cal.lambda,
                        r_hat: cert.r_hat,
                        norm: fit.norm,
                        empirical_loss: fit.empirical_loss,
                        objective: fit.objective,
                        rel_hinge: risk.rel_hinge,
                        rel_01: risk.rel_01,
                        certificate: cert.passed,
                        oracle_rhs: rhs,
                    },
                ))
            })?;
            out.extend(rows);
        }
    }
    Ok(out)
}

fn fit_table(cfg: &ExperimentConfig, rows: &[(usize, FitRow)], with_oracle: bool) -> Table {
    let mut header = FIT_HEADER.to_vec();
    if with_oracle {
        header.push("violated");
    } else {
        header.retain(|h| *h != "oracle_rhs");
    }
    let mut table = Table::new(&header);
    for (rep, r) in rows {
        let mut row = vec![
            int(cfg.seed),
            int(r.stream),
            int(rep),
            int(r.n),
            int(0),
            phi_name(r.phi).into(),
            num(r.lambda),
            num(r.r_hat),
            num(r.norm),
            num(r.empirical_loss),
            num(r.objective),
            num(r.rel_hinge),
            num(r.rel_01),
            int(r.certificate),
        ];
        if let Some(rhs) = r.oracle_rhs {
            row.push(num(rhs));
            row.push(int(r.rel_hinge > rhs));
        }
        table.push(row);
    }
    table
}

/// Per-(n, φ) aggregates of fit rows.
pub fn fit_summary(table: &Table) -> Result<Value> {
    let col = |name: &str| table.column(name).ok_or_else(|| anyhow!("rows: missing column {name}"));
    let (cn, cphi, cl, cnorm, ccert) = (col("n")?, col("phi")?, col("rel_hinge")?, col("norm")?, col("certificate")?);
    let cviol = table.column("violated");
    let mut groups: BTreeMap<(usize, String), Vec<&Vec<String>>> = BTreeMap::new();
    for r in &table.rows {
        groups.entry((r[cn].parse()?, r[cphi].clone())).or_default().push(r);
    }
    let mut per = Vec::new();
    let mut all_certified = true;
    for ((n, phi), rows) in &groups {
        let m = rows.len() as f64;
        let parse = |c: usize| -> Result<Vec<f64>> { rows.iter().map(|r| Ok(r[c].parse::<f64>()?)).collect() };
        let l = parse(cl)?;
        let norms = parse(cnorm)?;
        let certified = rows.iter().filter(|r| r[ccert] == "true").count();
        all_certified &= certified == rows.len();
        let mut entry = json!({
            "n": n,
            "phi": phi,
            "replicates": rows.len(),
            "mean_rel_hinge": l.iter().sum::<f64>() / m,
            "mean_norm": norms.iter().sum::<f64>() / m,
            "certificates_passed": certified,
        });
        if let Some(cv) = cviol {
            let violations = rows.iter().filter(|r| r[cv] == "true").count();
            entry["violations"] = json!(violations);
            entry["violation_rate"] = json!(violations as f64 / m);
        }
        per.push(entry);
    }
    Ok(json!({ "per_group": per, "all_certificates_passed": all_certified }))
}

fn fits(cfg: &ExperimentConfig, with_oracle: bool) -> Result<(Table, Value)> {
    let rows = fit_rows(cfg, with_oracle)?;
    let table = fit_table(cfg, &rows, with_oracle);
    let summary = fit_summary(&table)?;
    Ok((table, summary))
}

fn rate_study(cfg: &ExperimentConfig) -> Result<(Table, Value)> {
    let kernel = &cfg.kernels[0];
    let rows = fit_rows(cfg, false)?;
    let table = fit_table(cfg, &rows, false);
    let mut summary = fit_summary(&table)?;
    let m = kernel.sup_bound();
    let gammas: Vec<(f64, f64)> = match Setting::from(cfg.setting) {
        Setting::S1 => {
            let spec = circle_spectrum(kernel)?;
            cfg.n.iter().map(|&n| Ok((n as f64, gamma_s1(&spec, n, cfg.eta1, m)?))).collect::<Result<_>>()?
        }
        Setting::S2 => {
            let em = cfg.entropy_model()?;
            cfg.n.iter().map(|&n| Ok((n as f64, gamma_s2(&em, n, m)?))).collect::<Result<_>>()?
        }
    };
    summary["gamma_fit"] = json!(rate_study_fit(&gammas).context("rate-study: gamma fit")?);
    let mut loss_fits = serde_json::Map::new();
    for &phi in &cfg.phi {
        let pts: Vec<(f64, f64)> = summary["per_group"]
            .as_array()
            .expect("per_group is an array")
            .iter()
            .filter(|g| g["phi"] == phi_name(phi))
            .map(|g| (g["n"].as_f64().unwrap_or(0.0), g["mean_rel_hinge"].as_f64().unwrap_or(0.0)))
            .filter(|p| p.1 > 0.0)
            .collect();
        loss_fits.insert(phi_name(phi).into(), json!(rate_study_fit(&pts).context("rate-study: risk fit")?));
    }
    summary["rel_hinge_fit"] = Value::Object(loss_fits);
    Ok((table, summary))
}

fn select(cfg: &ExperimentConfig) -> Result<(Table, Value)> {
    let t = cfg.kernels.len();
    let delta = split_confidence(cfg.delta, t)?;
    let caps: Vec<CapacityData> = cfg.kernels.iter().map(|k| CapacityData::build(cfg, k)).collect::<Result<_>>()?;
    let mut table = Table::new(&[
        "seed",
        "stream",
        "replicate",
        "n",
        "phi",
        "kernel",
        "k",
        "radius",
        "empirical_loss",
        "lower",
        "pen",
        "penalized",
        "rho",
        "chosen",
        "certificate",
    ]);
    let mut chosen_counts: BTreeMap<usize, usize> = BTreeMap::new();
    let mut all_certified = true;
    for (ni, &n) in cfg.n.iter().enumerate() {
        for &phi in &cfg.phi {
            let cals: Vec<PenaltyCalibration> = cfg
                .kernels
                .iter()
                .zip(&caps)
                .map(|(k, c)| calibration(cfg, c, k, n, phi, delta))
                .collect::<Result<_>>()?;
            let mut base = cals[0].train_config();
            base.tol = cfg.tol;
            let reps: Vec<usize> = (0..cfg.replicates).collect();
            let results = pool_map(cfg.workers, reps, |rep| {
                let st = stream(ni, rep);
                let sample = cfg.dist.sample(n, cfg.seed, st);
                select_model(&sample, &cfg.kernels, &cals, &base).with_context(|| format!("selection: select n={n} phi={phi:?} stream={st}"))
            })?;
            for (rep, res) in results.iter().enumerate() {
                let cert = res.certificate(CERTIFICATE_TOL);
                all_certified &= cert.passed;
                *chosen_counts.entry(res.kernel).or_default() += 1;
                for r in &res.rows {
                    table.push(vec![
                        int(cfg.seed),
                        int(stream(ni, rep)),
                        int(rep),
                        int(n),
                        phi_name(phi).into(),
                        int(r.kernel),
                        int(r.k),
                        num(r.radius),
                        num(r.empirical_loss),
                        num(r.lower),
                        num(r.pen),
                        num(r.penalized),
                        num(r.rho),
                        int(r.chosen),
                        int(cert.passed),
                    ]);
                }
            }
        }
    }
    let counts: BTreeMap<String, usize> = chosen_counts.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    Ok((table, json!({ "kernels": t, "delta_per_kernel": delta, "chosen_kernel_counts": counts, "all_certificates_passed": all_certified })))
}

fn rademacher_check(cfg: &ExperimentConfig) -> Result<(Table, Value)> {
    let kernel = &cfg.kernels[0];
    let grid = &cfg.rademacher;
    let basis = CircleBasis::top(kernel, grid.basis).context("complexity: eigenfunction basis")?;
    let spec = basis.spectrum();
    let mut table = Table::new(&["n", "replicate", "radius", "r", "method", "estimate", "std_error", "inf_bound", "min_bound", "dominated"]);
    let mut violations = 0usize;
    for (ni, &n) in cfg.n.iter().enumerate() {
        let items: Vec<(usize, f64, f64)> = (0..cfg.replicates)
            .flat_map(|rep| grid.radii.iter().flat_map(move |&big| grid.levels.iter().map(move |&r| (rep, big, r))))
            .collect();
        let rows = pool_map(cfg.workers, items, |(rep, big, r)| {
            let st = stream(ni, rep);
            let xs = cfg.dist.sample(n, cfg.seed, st).xs;
            let ctx = || format!("complexity: rademacher n={n} R={big} r={r} stream={st}");
            let (method, est, se) = if n <= MAX_ENUMERATION {
                ("exact", rademacher_exact(&basis, big, r, &xs).with_context(ctx)?, 0.0)
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(st);
                let mc = rademacher_mc(&basis, big, r, &xs, grid.mc_draws, SignDraws::WithReplacement, &mut rng).with_context(ctx)?;
                ("monte_carlo", mc.mean, mc.std_error)
            };
            let inf = localized_inf_bound(&spec, big, r, n);
            let min = localized_min_bound(&spec, big, r, n);
            let dominated = est - 3.0 * se <= inf + 1e-12 && inf <= min + 1e-12;
            Ok((rep, big, r, method, est, se, inf, min, dominated))
        })?;
        for (rep, big, r, method, est, se, inf, min, dominated) in rows {
            violations += usize::from(!dominated);
            table.push(vec![int(n), int(rep), num(big), num(r), method.into(), num(est), num(se), num(inf), num(min), int(dominated)]);
        }
    }
    let points = table.rows.len();
    Ok((table, json!({ "basis": grid.basis, "points": points, "violations": violations })))
}

fn risk(cfg: &ExperimentConfig) -> Result<(Table, Value)> {
    let kernel = &cfg.kernels[0];
    let cap = CapacityData::build(cfg, kernel)?;
    let dist = &cfg.dist;
    let mut table = Table::new(&["n", "replicate", "scorer", "method", "rel_hinge", "rel_01", "error_estimate"]);
    let push = |table: &mut Table, n: usize, rep: usize, name: &str, rep_q: &RiskReport, rep_mc: &RiskReport| {
        for r in [rep_q, rep_mc] {
            let method = match r.method {
                svmlab::losses::RiskMethod::Quadrature => "quadrature",
                svmlab::losses::RiskMethod::MonteCarlo => "monte_carlo",
            };
            table.push(vec![int(n), int(rep), name.into(), method.into(), num(r.rel_hinge), num(r.rel_01), num(r.error_estimate)]);
        }
    };
    let mut worst: f64 = 0.0;
    for (ni, &n) in cfg.n.iter().enumerate() {
        let phi = cfg.phi[0];
        let cal = calibration(cfg, &cap, kernel, n, phi, cfg.delta)?;
        let mut base = cal.train_config();
        base.tol = cfg.tol;
        let reps: Vec<usize> = (0..cfg.replicates).collect();
        let results = pool_map(cfg.workers, reps, |rep| {
            let st = stream(ni, rep);
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5151);
            rng.set_stream(st);
            let sample: Sample = dist.sample(n, cfg.seed, st);
            let fit = train_calibrated(&sample, kernel, &cal, &base).with_context(|| format!("solver: train n={n} stream={st}"))?;
            let ctx = || format!("losses: risk n={n} stream={st}");
            let mut out = Vec::new();
            if rep == 0 {
                out.push(("zero", risk_report(&Constant(0.0), dist).with_context(ctx)?, risk_report_mc(&Constant(0.0), dist, cfg.mc_draws, &mut rng).with_context(ctx)?));
                out.push(("bayes", risk_report(&Bayes(dist), dist).with_context(ctx)?, risk_report_mc(&Bayes(dist), dist, cfg.mc_draws, &mut rng).with_context(ctx)?));
                let flipped = Negated(Bayes(dist));
                out.push(("flipped_bayes", risk_report(&flipped, dist).with_context(ctx)?, risk_report_mc(&flipped, dist, cfg.mc_draws, &mut rng).with_context(ctx)?));
            }
            out.push(("trained", risk_report(&fit.g_hat, dist).with_context(ctx)?, risk_report_mc(&fit.g_hat, dist, cfg.mc_draws, &mut rng).with_context(ctx)?));
            Ok((rep, out))
        })?;
        for (rep, out) in results {
            for (name, q, mc) in out {
                if mc.error_estimate > 0.0 {
                    worst = worst.max((q.rel_hinge - mc.rel_hinge).abs() / mc.error_estimate);
                }
                push(&mut table, n, rep, name, &q, &mc);
            }
        }
    }
    if table.rows.is_empty() {
        bail!("risk: nothing to evaluate");
    }
    Ok((table, json!({ "max_hinge_discrepancy_in_std_errors": worst })))
}
