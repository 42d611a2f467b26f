//! WebAssembly bindings for the browser demo. Every export returns a JSON
//! string; errors come back as JavaScript exceptions carrying the message.

use serde::Serialize;
use svmlab::complexity::{gamma_s1, Capacity};
use svmlab::losses::risk_report;
use svmlab::selection::{calibrate, certify_fit, train_calibrated, CalibrationInput, PenaltyCalibration, CERTIFICATE_TOL};
use svmlab::solver::Regularizer;
use svmlab::spectrum::analytic_spectrum;
use svmlab::synth::SyntheticDist;
use svmlab::KernelSpec;
use wasm_bindgen::prelude::*;

type JsResult = Result<String, JsError>;

fn to_json<T: Serialize>(v: &T) -> JsResult {
    serde_json::to_string(v).map_err(|e| JsError::new(&e.to_string()))
}

fn err(e: svmlab::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn circle(smoothness: f64) -> Result<KernelSpec, JsError> {
    KernelSpec::circle(1.0, 1.0, smoothness).map_err(err)
}

fn calibration(kernel: &KernelSpec, n: usize, phi: &str, delta: f64, c: f64) -> Result<PenaltyCalibration, JsError> {
    let spec = analytic_spectrum(kernel).map_err(err)?;
    let phi = Regularizer::parse(phi).map_err(err)?;
    let mut input = CalibrationInput::new(Capacity::Spectrum(&spec), n, kernel.sup_bound(), 0.2, 0.3, phi);
    input.delta = delta;
    input.c = c;
    calibrate(&input).map_err(err)
}

#[derive(Serialize)]
struct SpectrumCurve {
    eigenvalues: Vec<f64>,
    n: Vec<usize>,
    gamma: Vec<f64>,
}

/// Leading eigenvalues of the circle kernel with smoothness `s` and the
/// calibration rate γ(n) for n = 2⁴ … 2^`max_log2n`.
#[wasm_bindgen]
pub fn spectrum_curve(smoothness: f64, count: usize, max_log2n: u32) -> JsResult {
    let k = circle(smoothness)?;
    let spec = analytic_spectrum(&k).map_err(err)?;
    let eigenvalues = (1..=count.clamp(1, 200)).map(|j| spec.eigenvalue(j)).collect();
    let n: Vec<usize> = (4..=max_log2n.clamp(4, 24)).map(|e| 1usize << e).collect();
    let gamma = n.iter().map(|&n| gamma_s1(&spec, n, 0.3, k.sup_bound())).collect::<Result<_, _>>().map_err(err)?;
    to_json(&SpectrumCurve { eigenvalues, n, gamma })
}

#[derive(Serialize)]
struct PenaltyRow {
    k: u32,
    radius: f64,
    pen: f64,
    rho: f64,
}

#[derive(Serialize)]
struct PenaltyTable {
    lambda: f64,
    gamma: f64,
    rows: Vec<PenaltyRow>,
}

/// Penalty table on the dyadic radius grid for sample size `n`.
#[wasm_bindgen]
pub fn penalty_table(smoothness: f64, n: usize, phi: &str, delta: f64, c: f64) -> JsResult {
    let k = circle(smoothness)?;
    let cal = calibration(&k, n.max(2), phi, delta, c)?;
    let rows = cal
        .entries
        .iter()
        .map(|e| PenaltyRow {
            k: e.k,
            radius: e.radius,
            pen: e.pen,
            rho: e.rho,
        })
        .collect();
    to_json(&PenaltyTable {
        lambda: cal.lambda,
        gamma: cal.gamma,
        rows,
    })
}

#[derive(Serialize)]
struct FitDemo {
    xs: Vec<f64>,
    ys: Vec<f64>,
    grid: Vec<f64>,
    fitted: Vec<f64>,
    bayes: Vec<f64>,
    norm: f64,
    empirical_loss: f64,
    rel_hinge: f64,
    rel_01: f64,
    certified: bool,
}

/// Draws a sample from the hard-gap distribution, trains the calibrated
/// estimator and returns the fitted function on a 200-point grid.
#[wasm_bindgen]
pub fn fit_demo(smoothness: f64, n: usize, seed: u64, freq: u32, eta0: f64, phi: &str) -> JsResult {
    let n = n.clamp(2, 2000);
    let k = circle(smoothness)?;
    let dist = SyntheticDist::hard_gap(freq, eta0).map_err(err)?;
    let cal = calibration(&k, n, phi, 0.05, 1.0)?;
    let sample = dist.sample(n, seed, 0);
    let fit = train_calibrated(&sample, &k, &cal, &cal.train_config()).map_err(err)?;
    let cert = certify_fit(&fit, &cal, CERTIFICATE_TOL).map_err(err)?;
    let risk = risk_report(&fit.g_hat, &dist).map_err(err)?;
    let grid: Vec<f64> = (0..200).map(|i| i as f64 / 200.0).collect();
    let fitted = grid.iter().map(|&x| fit.g_hat.eval(x)).collect::<Result<_, _>>().map_err(err)?;
    let bayes = grid.iter().map(|&x| dist.bayes(x)).collect::<Result<_, _>>().map_err(err)?;
    to_json(&FitDemo {
        xs: sample.xs,
        ys: sample.ys,
        grid,
        fitted,
        bayes,
        norm: fit.norm,
        empirical_loss: fit.empirical_loss,
        rel_hinge: risk.rel_hinge,
        rel_01: risk.rel_01,
        certified: cert.passed,
    })
}
