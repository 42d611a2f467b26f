//! Penalty calibration over the dyadic radius grid, penalized selection over
//! radii and kernels, minimizer certificates, and the right-hand side of the
//! oracle inequality.

use serde::{Deserialize, Serialize};

use crate::complexity::{gamma_s1, gamma_s2, r_star_bound, Capacity, ModelParams, Setting};
use crate::error::{check_param, Error, Result};
use crate::kernel::{KernelSpec, RepresenterFn};
use crate::losses::rel_hinge_risk;
use crate::quad::gauss_legendre;
use crate::solver::{FitResult, HingeProblem, Regularizer, TrainConfig};
use crate::synth::{Sample, SyntheticDist};

/// Which weight multiplies `η₀⁻¹` in the additive penalty term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrailingTerm {
    /// `w₁⁻¹ η₀⁻¹`, matching the approximate-minimizer argument.
    #[default]
    InverseWeight,
    /// `w₁ η₀⁻¹`.
    Weight,
}

/// Inputs of [`calibrate`].
#[derive(Clone, Debug)]
pub struct CalibrationInput<'a> {
    pub capacity: Capacity<'a>,
    pub n: usize,
    /// Confidence level δ.
    pub delta: f64,
    pub eta0: f64,
    /// Two-sided gap; used in the spectral setting only.
    pub eta1: f64,
    /// Kernel sup bound M.
    pub m: f64,
    /// Multiplier standing in for the universal constant.
    pub c: f64,
    /// Contrast constant of the selection theorem.
    pub k_contrast: f64,
    pub phi: Regularizer,
    pub trailing: TrailingTerm,
}

impl<'a> CalibrationInput<'a> {
    /// Defaults: δ = 0.05, c = 1, K = 3, inverse-weight trailing term.
    pub fn new(capacity: Capacity<'a>, n: usize, m: f64, eta0: f64, eta1: f64, phi: Regularizer) -> Self {
        Self {
            capacity,
            n,
            delta: 0.05,
            eta0,
            eta1,
            m,
            c: 1.0,
            k_contrast: 3.0,
            phi,
            trailing: TrailingTerm::InverseWeight,
        }
    }
}

/// Per-radius penalty data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyEntry {
    pub k: u32,
    pub radius: f64,
    pub pen: f64,
    /// Slack making the regularized estimator an approximate penalized minimizer.
    pub rho: f64,
    pub params: ModelParams,
    /// `c (r*/C + (C + b)((x_R + log δ⁻¹) ∨ 1)/n)`, for comparison with `pen`.
    pub sufficient: f64,
}

/// Λ_n, the radius grid and the penalty table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyCalibration {
    pub setting: Setting,
    pub n: usize,
    pub delta: f64,
    pub c: f64,
    pub k_contrast: f64,
    pub eta0: f64,
    pub eta1: f64,
    pub w1: f64,
    pub m: f64,
    pub gamma: f64,
    pub lambda: f64,
    /// Per-model weight `x_R = log(log₂ n + 2)`.
    pub x_r: f64,
    pub phi: Regularizer,
    pub trailing: TrailingTerm,
    pub entries: Vec<PenaltyEntry>,
}

/// `⌈log₂ n⌉` for `n ≥ 1`.
pub fn ceil_log2(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        (n - 1).ilog2() + 1
    }
}

/// Confidence level per kernel when selecting among `t` kernels.
pub fn split_confidence(delta: f64, t: usize) -> Result<f64> {
    if t == 0 {
        return Err(Error::Empty("kernel list"));
    }
    Ok(delta / t as f64)
}

/// Builds Λ_n at equality, `Λ_n = c (γ(n) + w₁⁻¹ (log(δ⁻¹ log n) ∨ 1)/n)`,
/// and `pen(R) = Λ_n (φ(MR/2) + trailing)` on `R = M⁻¹ 2^k`, `0 ≤ k ≤ ⌈log₂ n⌉`.
pub fn calibrate(input: &CalibrationInput<'_>) -> Result<PenaltyCalibration> {
    let CalibrationInput {
        capacity,
        n,
        delta,
        eta0,
        eta1,
        m,
        c,
        k_contrast,
        ref phi,
        trailing,
    } = *input;
    check_param("delta", delta, delta > 0.0 && delta < 1.0, "must lie in (0, 1)")?;
    check_param("n", n as f64, n >= 2, "sample size must be at least 2")?;
    check_param("eta0", eta0, eta0 > 0.0 && eta0 <= 0.5, "must lie in (0, 1/2]")?;
    check_param("M", m, m > 0.0 && m.is_finite(), "must be positive")?;
    check_param("c", c, c > 0.0 && c.is_finite(), "must be positive")?;
    check_param("K", k_contrast, k_contrast > 1.0, "must exceed 1")?;
    phi.validate()?;
    let setting = capacity.setting();
    let (gamma, w1) = match capacity {
        Capacity::Spectrum(spec) => {
            check_param("eta1", eta1, eta1 > 0.0 && eta1 <= 0.5, "must lie in (0, 1/2]")?;
            (gamma_s1(spec, n, eta1, m)?, eta1)
        }
        Capacity::Entropy(em) => (gamma_s2(em, n, m)?, 1.0),
    };
    let nf = n as f64;
    let confidence = ((nf.ln() / delta).ln()).max(1.0);
    let lambda = c * (gamma + confidence / (w1 * nf));
    let x_r = (nf.log2() + 2.0).ln();
    let trail = match trailing {
        TrailingTerm::InverseWeight => 1.0 / (w1 * eta0),
        TrailingTerm::Weight => w1 / eta0,
    };
    let mut entries = Vec::new();
    for k in 0..=ceil_log2(n) {
        let radius = 2f64.powi(k as i32) / m;
        let params = ModelParams::new(setting, radius, m, eta0, eta1)?;
        let mut params = params;
        params.r_star = r_star_bound(&params, capacity, n, m, eta1)?;
        let pen = lambda * (phi.eval(m * radius / 2.0) + trail);
        let rho = lambda * (phi.eval(m * radius) + phi.eval(1.0) + 1.0 / (w1 * eta0)) - pen;
        let sufficient = c * (params.r_star / params.c + (params.c + params.b) * (x_r + (1.0 / delta).ln()).max(1.0) / nf);
        entries.push(PenaltyEntry {
            k,
            radius,
            pen,
            rho,
            params,
            sufficient,
        });
    }
    Ok(PenaltyCalibration {
        setting,
        n,
        delta,
        c,
        k_contrast,
        eta0,
        eta1,
        w1,
        m,
        gamma,
        lambda,
        x_r,
        phi: phi.clone(),
        trailing,
        entries,
    })
}

impl PenaltyCalibration {
    pub fn radii(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.radius).collect()
    }

    /// The additive term multiplying Λ_n in `pen`.
    pub fn trailing_value(&self) -> f64 {
        match self.trailing {
            TrailingTerm::InverseWeight => 1.0 / (self.w1 * self.eta0),
            TrailingTerm::Weight => self.w1 / self.eta0,
        }
    }

    /// `Σ_R e^{−x_R}`.
    pub fn weight_sum(&self) -> f64 {
        self.entries.len() as f64 * (-self.x_r).exp()
    }

    /// Training settings using this calibration's φ and Λ_n.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig::new(self.phi.clone(), self.lambda)
    }

    /// Grid index and radius of the smallest dyadic ball containing a
    /// function of norm `norm`: `k̂ = ⌈(log₂(M‖g‖))₊⌉`.
    pub fn dyadic_radius(&self, norm: f64) -> Result<(u32, f64)> {
        let x = self.m * norm;
        let k = if x <= 1.0 { 0 } else { x.log2().ceil() as u32 };
        match self.entries.iter().find(|e| e.k == k) {
            Some(e) => Ok((k, e.radius)),
            None => Err(Error::InvalidParameter {
                name: "norm",
                value: norm,
                reason: "function lies outside the largest ball of the grid",
            }),
        }
    }
}

/// Outcome of the approximate-minimizer check
/// `P_n ℓ(g) + pen(R̂) ≤ min_R (inner(R) + pen(R) + ρ_R) + tol`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub k_hat: u32,
    pub r_hat: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub passed: bool,
}

/// Default additive slack of the certificate, covering solver duality gaps.
pub const CERTIFICATE_TOL: f64 = 1e-5;

/// Checks a regularized fit. The fit must include every grid radius among
/// its evaluated radii; their certified lower bounds stand in for the ball
/// minima.
pub fn certify_fit(fit: &FitResult, cal: &PenaltyCalibration, tol: f64) -> Result<Certificate> {
    let (k_hat, r_hat) = cal.dyadic_radius(fit.norm)?;
    let pen_hat = cal.entries[k_hat as usize].pen;
    let lhs = fit.empirical_loss + pen_hat;
    let mut rhs = f64::INFINITY;
    for e in &cal.entries {
        let inner = fit
            .inner_at(e.radius)
            .ok_or_else(|| Error::Config(format!("fit did not evaluate grid radius {}", e.radius)))?;
        rhs = rhs.min(inner.lower + e.pen + e.rho);
    }
    Ok(Certificate {
        k_hat,
        r_hat,
        lhs,
        rhs,
        passed: lhs <= rhs + tol,
    })
}

/// Regularized training that also evaluates every grid radius, so that the
/// result can be certified against `cal`.
pub fn train_calibrated(sample: &Sample, kernel: &KernelSpec, cal: &PenaltyCalibration, base: &TrainConfig) -> Result<FitResult> {
    let problem = HingeProblem::new(kernel, sample)?;
    let mut cfg = base.clone();
    cfg.phi = cal.phi.clone();
    cfg.lambda = cal.lambda;
    crate::solver::regularized_on(&problem, &cfg, &cal.radii())
}

/// One (kernel, radius) model of a selection run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionRow {
    pub kernel: usize,
    pub k: u32,
    pub radius: f64,
    pub empirical_loss: f64,
    pub lower: f64,
    pub pen: f64,
    pub penalized: f64,
    pub rho: f64,
    pub chosen: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub kernel: usize,
    pub radius: f64,
    pub g_hat: RepresenterFn,
    pub rows: Vec<SelectionRow>,
}

impl SelectionResult {
    /// `P_n ℓ(ĝ) + pen(R̂) ≤ min over models of (lower + pen + ρ) + tol`.
    pub fn certificate(&self, tol: f64) -> Certificate {
        let chosen = self.rows.iter().find(|r| r.chosen).expect("one row is chosen");
        let rhs = self
            .rows
            .iter()
            .map(|r| r.lower + r.pen + r.rho)
            .fold(f64::INFINITY, f64::min);
        Certificate {
            k_hat: chosen.k,
            r_hat: chosen.radius,
            lhs: chosen.penalized,
            rhs,
            passed: chosen.penalized <= rhs + tol,
        }
    }
}

/// Penalized minimum empirical loss over all `(kernel, R)` pairs; ties go
/// to the smaller radius, then to the lower kernel index. Each calibration
/// should be built with δ replaced by δ/t.
pub fn select_model(sample: &Sample, kernels: &[KernelSpec], cals: &[PenaltyCalibration], cfg: &TrainConfig) -> Result<SelectionResult> {
    if kernels.is_empty() {
        return Err(Error::Empty("kernel list"));
    }
    if kernels.len() != cals.len() {
        return Err(Error::LengthMismatch {
            what: "kernels vs calibrations",
            left: kernels.len(),
            right: cals.len(),
        });
    }
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for (ki, (kernel, cal)) in kernels.iter().zip(cals).enumerate() {
        let problem = HingeProblem::new(kernel, sample)?;
        let mut warm: Option<Vec<f64>> = None;
        for e in &cal.entries {
            let sol = problem.solve_ball(e.radius, cfg.tol, cfg.max_sweeps, warm.as_deref(), None)?;
            rows.push(SelectionRow {
                kernel: ki,
                k: e.k,
                radius: e.radius,
                empirical_loss: sol.primal,
                lower: sol.lower,
                pen: e.pen,
                penalized: sol.primal + e.pen,
                rho: e.rho,
                chosen: false,
            });
            fits.push(problem.representer(&sol.gamma));
            warm = Some(sol.dual);
        }
    }
    let best = (0..rows.len())
        .min_by(|&a, &b| {
            let (ra, rb) = (&rows[a], &rows[b]);
            ra.penalized
                .total_cmp(&rb.penalized)
                .then(ra.radius.total_cmp(&rb.radius))
                .then(ra.kernel.cmp(&rb.kernel))
        })
        .expect("rows are nonempty");
    rows[best].chosen = true;
    Ok(SelectionResult {
        kernel: rows[best].kernel,
        radius: rows[best].radius,
        g_hat: fits.swap_remove(best),
        rows,
    })
}

/// Deterministic stand-in for a large reference sample: Gauss–Legendre
/// nodes on every smooth piece of η, each carrying both labels with
/// weights `ω η(x)` and `ω (1 − η(x))`.
#[derive(Clone, Debug)]
pub struct ReferenceDesign {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub weights: Vec<f64>,
}

impl ReferenceDesign {
    pub fn new(dist: &SyntheticDist, nodes_per_piece: usize) -> Result<Self> {
        if nodes_per_piece == 0 {
            return Err(Error::Empty("reference nodes"));
        }
        let (t, w) = gauss_legendre(nodes_per_piece);
        let bps = dist.breakpoints();
        let (mut xs, mut ys, mut weights) = (Vec::new(), Vec::new(), Vec::new());
        for p in bps.windows(2) {
            let (a, b) = (p[0], p[1]);
            let half = 0.5 * (b - a);
            for (ti, wi) in t.iter().zip(&w) {
                let x = a + half * (ti + 1.0);
                let omega = wi * half;
                let eta = dist.eta(x)?;
                xs.push(x);
                ys.push(1.0);
                weights.push(omega * eta);
                xs.push(x);
                ys.push(-1.0);
                weights.push(omega * (1.0 - eta));
            }
        }
        Ok(Self { xs, ys, weights })
    }
}

/// A function trained on the reference design at a given radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceFit {
    pub radius: f64,
    pub norm: f64,
    /// `L(g, s*)` by quadrature.
    pub rel_hinge: f64,
    pub g: RepresenterFn,
}

/// Radii used to approximate the infimum: zero, the dyadic grid and a
/// geometric fill between its ends.
pub fn reference_radii(cal: &PenaltyCalibration, fill: usize) -> Vec<f64> {
    let mut radii = vec![0.0];
    radii.extend(cal.radii());
    let lo = 1.0 / (64.0 * cal.m);
    let hi = cal.entries.last().map_or(lo, |e| e.radius);
    if fill >= 2 {
        radii.extend((0..fill).map(|i| lo * (hi / lo).powf(i as f64 / (fill - 1) as f64)));
    }
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    radii
}

/// Ball-constrained fits on the reference design with their exact relative
/// hinge risks.
pub fn reference_fits(dist: &SyntheticDist, kernel: &KernelSpec, radii: &[f64], nodes_per_piece: usize, cfg: &TrainConfig) -> Result<Vec<ReferenceFit>> {
    reference_fits_until(dist, kernel, radii, nodes_per_piece, cfg, |_, _| false)
}

/// Like [`reference_fits`], but stops before the first radius `r` for which
/// `stop(r, fits so far)` holds.
pub fn reference_fits_until<F>(dist: &SyntheticDist, kernel: &KernelSpec, radii: &[f64], nodes_per_piece: usize, cfg: &TrainConfig, mut stop: F) -> Result<Vec<ReferenceFit>>
where
    F: FnMut(f64, &[ReferenceFit]) -> bool,
{
    let design = ReferenceDesign::new(dist, nodes_per_piece)?;
    let problem = HingeProblem::weighted(kernel, &design.xs, &design.ys, design.weights)?;
    let mut out = Vec::with_capacity(radii.len());
    let mut warm: Option<Vec<f64>> = None;
    let mut sorted = radii.to_vec();
    sorted.sort_by(f64::total_cmp);
    for r in sorted {
        if stop(r, &out) {
            break;
        }
        let sol = problem.solve_ball(r, cfg.tol, cfg.max_sweeps, warm.as_deref(), None)?;
        let g = problem.representer(&sol.gamma);
        let rel_hinge = rel_hinge_risk(&g, dist)?;
        out.push(ReferenceFit {
            radius: r,
            norm: sol.norm,
            rel_hinge,
            g,
        });
        warm = Some(sol.dual);
    }
    Ok(out)
}

/// One candidate of the infimum: `L(g) + 2Λ φ(2M‖g‖)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RhsRow {
    pub radius: f64,
    pub norm: f64,
    pub rel_hinge: f64,
    pub term: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleRhs {
    /// `2 inf_g [L(g) + 2Λ φ(2M‖g‖)] + 4Λ(2φ(2) + c · trailing)`.
    pub rhs: f64,
    pub inf_term: f64,
    pub trailing: f64,
    pub rows: Vec<RhsRow>,
}

/// Upper approximation of the oracle bound from a set of candidate
/// functions; any candidate keeps the bound conservative.
pub fn oracle_rhs_from(fits: &[ReferenceFit], cal: &PenaltyCalibration) -> OracleRhs {
    let lam = cal.lambda;
    let phi = &cal.phi;
    let rows: Vec<RhsRow> = fits
        .iter()
        .map(|f| RhsRow {
            radius: f.radius,
            norm: f.norm,
            rel_hinge: f.rel_hinge,
            term: f.rel_hinge + 2.0 * lam * phi.eval(2.0 * cal.m * f.norm),
        })
        .collect();
    let inf_term = rows.iter().map(|r| r.term).fold(f64::INFINITY, f64::min);
    let trailing = 4.0 * lam * (2.0 * phi.eval(2.0) + cal.c * cal.trailing_value());
    OracleRhs {
        rhs: 2.0 * inf_term + trailing,
        inf_term,
        trailing,
        rows,
    }
}

/// [`oracle_rhs_from`] with fits on a reference design of
/// `nodes_per_piece` nodes per smooth piece of η.
pub fn oracle_rhs(dist: &SyntheticDist, kernel: &KernelSpec, cal: &PenaltyCalibration, nodes_per_piece: usize, cfg: &TrainConfig) -> Result<OracleRhs> {
    let radii = reference_radii(cal, 24);
    // Radii whose penalty alone exceeds the best term found cannot improve
    // the infimum once the ball constraint is active.
    let fits = reference_fits_until(dist, kernel, &radii, nodes_per_piece, cfg, |r, fits| {
        let best = oracle_rhs_from(fits, cal).inf_term;
        2.0 * cal.lambda * cal.phi.eval(2.0 * cal.m * r) >= best
    })?;
    Ok(oracle_rhs_from(&fits, cal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::SpectrumModel;

    fn zero_cal(n: usize, phi: Regularizer) -> PenaltyCalibration {
        let spec = Box::leak(Box::new(SpectrumModel::finite(vec![0.0])));
        calibrate(&CalibrationInput::new(Capacity::Spectrum(spec), n, 1.0, 0.2, 0.3, phi)).unwrap()
    }

    #[test]
    fn grid_and_weights() {
        let cal = zero_cal(1024, Regularizer::Linear);
        assert_eq!(cal.entries.len(), 11);
        assert!((cal.x_r - 12f64.ln()).abs() < 1e-15);
        assert!(cal.weight_sum() <= 1.0);
        assert_eq!(ceil_log2(1024), 10);
        assert_eq!(ceil_log2(1025), 11);
        assert_eq!(ceil_log2(2), 1);
    }

    #[test]
    fn zero_spectrum_lambda() {
        let cal = zero_cal(1000, Regularizer::Quadratic);
        let expect = ((1000f64.ln() / 0.05).ln()).max(1.0) / (0.3 * 1000.0);
        assert!((cal.lambda - expect).abs() < 1e-15);
        assert!(cal.lambda >= 1.0 / 1000.0);
    }

    #[test]
    fn pen_monotone_and_rho_nonnegative() {
        for phi in [Regularizer::Linear, Regularizer::Quadratic] {
            let cal = zero_cal(300, phi);
            for w in cal.entries.windows(2) {
                assert!(w[1].pen >= w[0].pen);
            }
            assert!(cal.entries.iter().all(|e| e.rho >= 0.0));
        }
    }

    #[test]
    fn dyadic_radius_rule() {
        let cal = zero_cal(16, Regularizer::Linear);
        assert_eq!(cal.dyadic_radius(0.0).unwrap().0, 0);
        assert_eq!(cal.dyadic_radius(1.0).unwrap().0, 0);
        assert_eq!(cal.dyadic_radius(1.5).unwrap().0, 1);
        assert_eq!(cal.dyadic_radius(4.0).unwrap().0, 2);
        assert_eq!(cal.dyadic_radius(16.0).unwrap().0, 4);
        assert!(cal.dyadic_radius(17.0).is_err());
    }

    #[test]
    fn trailing_variants() {
        let spec = SpectrumModel::finite(vec![1.0]);
        let mut input = CalibrationInput::new(Capacity::Spectrum(&spec), 100, 1.0, 0.2, 0.25, Regularizer::Linear);
        let a = calibrate(&input).unwrap();
        input.trailing = TrailingTerm::Weight;
        let b = calibrate(&input).unwrap();
        assert!((a.trailing_value() - 20.0).abs() < 1e-12);
        assert!((b.trailing_value() - 1.25).abs() < 1e-12);
        assert!(b.entries.iter().zip(&a.entries).all(|(x, y)| x.pen < y.pen));
        input.delta = 1.5;
        assert!(calibrate(&input).is_err());
    }

    #[test]
    fn reference_design_weights_sum_to_one() {
        let d = SyntheticDist::banded(2, 0.1, 0.2).unwrap();
        let rd = ReferenceDesign::new(&d, 16).unwrap();
        assert!((rd.weights.iter().sum::<f64>() - 1.0).abs() < 1e-13);
        assert_eq!(rd.xs.len(), 4 * 16 * 2);
    }

    #[test]
    fn selection_single_radius_and_duplicates() {
        let k = KernelSpec::circle(1.0, 1.0, 1.0).unwrap();
        let s = Sample::new(vec![0.2, 0.7], vec![1.0, -1.0]).unwrap();
        let cal = zero_cal(2, Regularizer::Linear);
        let cfg = cal.train_config();
        let single = select_model(&s, &[k.clone()], &[cal.clone()], &cfg).unwrap();
        assert_eq!(single.rows.len(), 2);
        assert!(single.certificate(CERTIFICATE_TOL).passed);
        let dup = select_model(&s, &[k.clone(), k.clone()], &[cal.clone(), cal.clone()], &cfg).unwrap();
        assert_eq!(dup.kernel, 0);
        assert_eq!(dup.radius, single.radius);
        assert!(select_model(&s, &[], &[], &cfg).is_err());
    }
}
