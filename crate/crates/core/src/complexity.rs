//! Complexity functionals that calibrate the regularization: γ(n) for the
//! spectral and entropy settings, the localized bound φ_R and the fixed
//! points r_R*.

use serde::{Deserialize, Serialize};

use crate::error::{check_param, Error, Result};
use crate::quad;
use crate::spectrum::SpectrumModel;
use crate::subroot::{solve_fixed_point, SubrootFn, DEFAULT_TOL};

/// How the capacity of the RKHS ball is measured.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    /// Eigenvalue tail sums of the integral operator; needs the two-sided gap η₁.
    S1,
    /// Sup-norm entropy of the unit ball.
    S2,
}

impl std::fmt::Display for Setting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Setting::S1 => "s1",
            Setting::S2 => "s2",
        })
    }
}

/// Sup-norm ε-entropy of the unit ball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum EntropyModel {
    /// `H(ε) = C_H ε^{-1/s}`.
    PowerLaw { smoothness: f64, constant: f64 },
    /// Piecewise-linear `H` through `(eps_i, h_i)`, constant outside the knots.
    Table { eps: Vec<f64>, h: Vec<f64> },
}

impl EntropyModel {
    /// Sobolev-type entropy `ε^{-1/s}` with `C_H = 1`.
    pub fn sobolev(smoothness: f64) -> Result<Self> {
        let m = EntropyModel::PowerLaw {
            smoothness,
            constant: 1.0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EntropyModel::PowerLaw { smoothness, constant } => {
                check_param("smoothness", *smoothness, *smoothness > 0.5, "entropy integral diverges for s ≤ 1/2")?;
                check_param("constant", *constant, *constant > 0.0, "must be positive")
            }
            EntropyModel::Table { eps, h } => {
                if eps.is_empty() {
                    return Err(Error::Empty("entropy table"));
                }
                if eps.len() != h.len() {
                    return Err(Error::LengthMismatch {
                        what: "entropy table eps vs h",
                        left: eps.len(),
                        right: h.len(),
                    });
                }
                if eps.iter().any(|&e| !(e > 0.0)) || eps.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Config("entropy table eps must be positive and increasing".into()));
                }
                if h.iter().any(|&v| !(v >= 0.0)) || h.windows(2).any(|w| w[1] > w[0]) {
                    return Err(Error::Config("entropy values must be nonnegative and nonincreasing".into()));
                }
                Ok(())
            }
        }
    }

    /// `H(ε)`.
    pub fn entropy(&self, eps_at: f64) -> f64 {
        match self {
            EntropyModel::PowerLaw { smoothness, constant } => constant * eps_at.powf(-1.0 / smoothness),
            EntropyModel::Table { eps, h } => {
                if eps_at <= eps[0] {
                    return h[0];
                }
                let last = eps.len() - 1;
                if eps_at >= eps[last] {
                    return h[last];
                }
                let i = eps.partition_point(|&e| e <= eps_at) - 1;
                let t = (eps_at - eps[i]) / (eps[i + 1] - eps[i]);
                h[i] + t * (h[i + 1] - h[i])
            }
        }
    }
}

/// `ξ(x) = ∫₀ˣ √H(ε) dε`.
pub fn xi(em: &EntropyModel, x: f64) -> Result<f64> {
    em.validate()?;
    check_param("x", x, x >= 0.0, "must be nonnegative")?;
    if x == 0.0 {
        return Ok(0.0);
    }
    match em {
        EntropyModel::PowerLaw { smoothness, constant } => {
            let e = 1.0 - 1.0 / (2.0 * smoothness);
            Ok(constant.sqrt() * x.powf(e) / e)
        }
        EntropyModel::Table { eps, .. } => {
            let mut breaks = vec![0.0];
            breaks.extend(eps.iter().copied().filter(|&e| e < x));
            breaks.push(x);
            let mut f = |t: f64| em.entropy(t).sqrt();
            let whole = breaks.iter().map(|&b| em.entropy(b).sqrt()).fold(0.0, f64::max) * x;
            quad::integrate(&mut f, &breaks, 1e-10 * whole.max(f64::MIN_POSITIVE))
        }
    }
}

fn check_n(n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: 0.0,
            reason: "sample size must be at least 1",
        });
    }
    Ok(n as f64)
}

/// Exact `inf_{d ≥ 0} (inc(d) + dec(d))` where `inc` is nondecreasing and
/// `dec` nonnegative: the scan stops once `inc(d)` alone reaches the best
/// value found.
fn scan_inf(limit: usize, inc: impl Fn(usize) -> f64, dec: impl Fn(usize) -> f64) -> (usize, f64) {
    let mut best = (0, inc(0) + dec(0));
    let mut d = 1;
    while d <= limit {
        let a = inc(d);
        if a >= best.1 {
            break;
        }
        let v = a + dec(d);
        if v < best.1 {
            best = (d, v);
        }
        d += 1;
    }
    best
}

/// Infimum over d of `d/√n + (η₁/M) √(Σ_{j>d} λ_j)`, with the minimizing d.
pub fn spectral_inf(spec: &SpectrumModel, n: usize, eta1: f64, m: f64) -> Result<(usize, f64)> {
    let rn = check_n(n)?.sqrt();
    let w = eta1 / m;
    Ok(scan_inf(spec.scan_limit(), |d| d as f64 / rn, |d| w * spec.tail_sum(d).sqrt()))
}

/// γ(n) of the spectral setting,
/// `η₁⁻¹ n^{-1/2} inf_d (d/√n + (η₁/M) √(Σ_{j>d} λ_j))`.
pub fn gamma_s1(spec: &SpectrumModel, n: usize, eta1: f64, m: f64) -> Result<f64> {
    check_param("eta1", eta1, eta1 > 0.0 && eta1 <= 0.5, "must lie in (0, 1/2]")?;
    check_param("M", m, m > 0.0, "must be positive")?;
    if spec.explicit().is_empty() && spec.rank() == Some(0) {
        return Err(Error::Empty("spectrum"));
    }
    let (_, inf) = spectral_inf(spec, n, eta1, m)?;
    Ok(inf / (eta1 * (n as f64).sqrt()))
}

/// Solution of `ξ(x) = M⁻¹ √n x²` in closed form (power law) or by bisection.
pub fn x_star(em: &EntropyModel, n: usize, m: f64) -> Result<f64> {
    em.validate()?;
    check_param("M", m, m > 0.0, "must be positive")?;
    let nf = check_n(n)?;
    match em {
        EntropyModel::PowerLaw { smoothness, constant } => {
            let e = 1.0 - 1.0 / (2.0 * smoothness);
            let base = m * constant.sqrt() / (e * nf.sqrt());
            Ok(base.powf(1.0 / (1.0 + 1.0 / (2.0 * smoothness))))
        }
        EntropyModel::Table { .. } => x_star_by_bisection(em, n, m),
    }
}

/// Bisection on the strictly decreasing ratio `ξ(x)/x²`.
pub fn x_star_by_bisection(em: &EntropyModel, n: usize, m: f64) -> Result<f64> {
    let target = check_n(n)?.sqrt() / m;
    let ratio = |x: f64| -> Result<f64> { Ok(xi(em, x)? / (x * x)) };
    let (mut lo, mut hi) = (1.0, 1.0);
    let mut guard = 0;
    while ratio(lo)? <= target {
        lo *= 0.5;
        guard += 1;
        if guard > 2000 {
            return Err(Error::BracketNotFound("ξ(x)/x² stays below target"));
        }
    }
    guard = 0;
    while ratio(hi)? > target {
        hi *= 2.0;
        guard += 1;
        if guard > 2000 {
            return Err(Error::BracketNotFound("ξ(x)/x² stays above target"));
        }
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if ratio(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// γ(n) of the entropy setting, `M⁻² x*(n)²`.
pub fn gamma_s2(em: &EntropyModel, n: usize, m: f64) -> Result<f64> {
    let x = x_star(em, n, m)?;
    Ok(x * x / (m * m))
}

/// Localized Rademacher bound of the spectral setting,
/// `φ_R(r) = (4/√n) inf_d (√(dr) + 2R √(Σ_{j>d} λ_j))`, as a sub-root function.
pub fn phi_r_s1<'a>(spec: &'a SpectrumModel, radius: f64, n: usize) -> Result<SubrootFn<'a>> {
    check_param("R", radius, radius >= 0.0, "must be nonnegative")?;
    let rn = check_n(n)?.sqrt();
    let limit = spec.scan_limit();
    Ok(SubrootFn::new(move |r: f64| {
        let tail_term = |d: usize| 2.0 * radius * spec.tail_sum(d).sqrt();
        let inf = if r <= 0.0 {
            // The √(dr) term vanishes; the tail term is nonincreasing in d.
            tail_term(limit)
        } else {
            scan_inf(limit, |d| (d as f64 * r).sqrt(), tail_term).1
        };
        4.0 * inf / rn
    }))
}

/// Parameters (b_R, C_R, r_R*) of the ball model of radius R.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub radius: f64,
    /// Sup bound of the loss on the ball, `1 + MR`.
    pub b: f64,
    /// Variance-to-excess-risk constant.
    pub c: f64,
    pub r_star: f64,
    pub setting: Setting,
}

impl ModelParams {
    /// `b_R = 1 + MR`; `C_R = 2(MR/η₁ + 1/η₀)` in S1, `MR + 1/η₀` in S2.
    /// `r_star` is left at zero until [`r_star_bound`] fills it.
    pub fn new(setting: Setting, radius: f64, m: f64, eta0: f64, eta1: f64) -> Result<Self> {
        check_param("R", radius, radius >= 0.0, "must be nonnegative")?;
        check_param("eta0", eta0, eta0 > 0.0 && eta0 <= 0.5, "must lie in (0, 1/2]")?;
        let mr = m * radius;
        let c = match setting {
            Setting::S1 => {
                check_param("eta1", eta1, eta1 > 0.0 && eta1 <= 0.5, "must lie in (0, 1/2]")?;
                2.0 * (mr / eta1 + 1.0 / eta0)
            }
            Setting::S2 => mr + 1.0 / eta0,
        };
        Ok(Self {
            radius,
            b: 1.0 + mr,
            c,
            r_star: 0.0,
            setting,
        })
    }
}

/// Capacity description matching a [`Setting`].
#[derive(Clone, Copy, Debug)]
pub enum Capacity<'a> {
    Spectrum(&'a SpectrumModel),
    Entropy(&'a EntropyModel),
}

impl Capacity<'_> {
    pub fn setting(&self) -> Setting {
        match self {
            Capacity::Spectrum(_) => Setting::S1,
            Capacity::Entropy(_) => Setting::S2,
        }
    }
}

/// Closed-form upper bound on r_R*:
/// S1: `16 C_R²/√n · inf_d (d/√n + (η₁/M) √(Σ_{j>d} λ_j))`;
/// S2: `2500 M⁻² C_R² x*(n)²`.
pub fn r_star_bound(params: &ModelParams, capacity: Capacity<'_>, n: usize, m: f64, eta1: f64) -> Result<f64> {
    if capacity.setting() != params.setting {
        return Err(Error::Config(format!(
            "capacity model does not match setting {}",
            params.setting
        )));
    }
    let c2 = params.c * params.c;
    match capacity {
        Capacity::Spectrum(spec) => {
            let (_, inf) = spectral_inf(spec, n, eta1, m)?;
            Ok(16.0 * c2 / (n as f64).sqrt() * inf)
        }
        Capacity::Entropy(em) => {
            let x = x_star(em, n, m)?;
            Ok(2500.0 * c2 * x * x / (m * m))
        }
    }
}

/// Fills `params.r_star` with [`r_star_bound`].
pub fn with_r_star(mut params: ModelParams, capacity: Capacity<'_>, n: usize, m: f64, eta1: f64) -> Result<ModelParams> {
    params.r_star = r_star_bound(&params, capacity, n, m, eta1)?;
    Ok(params)
}

/// Exact solution of `φ_R(r) = r/C_R` in the spectral setting.
pub fn r_star_exact_s1(spec: &SpectrumModel, params: &ModelParams, n: usize) -> Result<f64> {
    let psi = phi_r_s1(spec, params.radius, n)?.scaled(params.c);
    let fp = solve_fixed_point(&psi, DEFAULT_TOL)?;
    Ok(fp.r)
}
