//! Hinge and 0-1 losses, their conditional risks, and relative risks
//! `L(g, s*)` and `Θ(g, s*)` against synthetic distributions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::RepresenterFn;
use crate::quad;
use crate::synth::{Sample, SyntheticDist};

/// Absolute accuracy targeted by the quadrature risks.
pub const RISK_TOL: f64 = 1e-8;

/// `(1 − z)₊`.
pub fn hinge(margin: f64) -> f64 {
    (1.0 - margin).max(0.0)
}

/// `1{z ≤ 0}`; a zero margin counts as an error.
pub fn zero_one(margin: f64) -> f64 {
    if margin <= 0.0 {
        1.0
    } else {
        0.0
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&eta) {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "eta",
            value: eta,
            reason: "conditional probability must lie in [0, 1]",
        })
    }
}

/// `η(1 − g)₊ + (1 − η)(1 + g)₊`.
pub fn cond_hinge_risk(eta: f64, g: f64) -> Result<f64> {
    check_eta(eta)?;
    Ok(cond_hinge(eta, g))
}

fn cond_hinge(eta: f64, g: f64) -> f64 {
    eta * hinge(g) + (1.0 - eta) * hinge(-g)
}

/// `η·1{g ≤ 0} + (1 − η)·1{−g ≤ 0}`.
pub fn cond_01_risk(eta: f64, g: f64) -> Result<f64> {
    check_eta(eta)?;
    Ok(cond_01(eta, g))
}

fn cond_01(eta: f64, g: f64) -> f64 {
    eta * zero_one(g) + (1.0 - eta) * zero_one(-g)
}

/// A real-valued classifier score on the circle.
pub trait Scorer {
    fn score(&self, x: f64) -> f64;

    /// Points where the score may fail to be smooth.
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Absolute rounding level of `score`; quadrature does not resolve the
    /// integrand below it.
    fn noise(&self) -> f64 {
        0.0
    }
}

impl Scorer for RepresenterFn {
    fn score(&self, x: f64) -> f64 {
        self.eval_unchecked(x)
    }

    fn noise(&self) -> f64 {
        let mass: f64 = self.coeffs.iter().map(|c| c.abs()).sum();
        64.0 * f64::EPSILON * mass * self.kernel.sup_bound()
    }

    fn kinks(&self) -> Vec<f64> {
        if self.kernel.kinked_at_anchors() {
            self.anchors.clone()
        } else {
            Vec::new()
        }
    }
}

/// The Bayes classifier of a distribution.
pub struct Bayes<'a>(pub &'a SyntheticDist);

impl Scorer for Bayes<'_> {
    fn score(&self, x: f64) -> f64 {
        self.0.bayes_unchecked(x)
    }

    fn kinks(&self) -> Vec<f64> {
        self.0.breakpoints()
    }
}

/// A constant score.
pub struct Constant(pub f64);

impl Scorer for Constant {
    fn score(&self, _: f64) -> f64 {
        self.0
    }
}

/// `−g`.
pub struct Negated<S>(pub S);

impl<S: Scorer> Scorer for Negated<S> {
    fn score(&self, x: f64) -> f64 {
        -self.0.score(x)
    }

    fn kinks(&self) -> Vec<f64> {
        self.0.kinks()
    }
}

/// A closure score with declared kinks.
pub struct FnScorer<F> {
    pub f: F,
    pub kinks: Vec<f64>,
}

impl<F: Fn(f64) -> f64> Scorer for FnScorer<F> {
    fn score(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    fn kinks(&self) -> Vec<f64> {
        self.kinks.clone()
    }
}

impl<S: Scorer + ?Sized> Scorer for &S {
    fn score(&self, x: f64) -> f64 {
        (**self).score(x)
    }

    fn kinks(&self) -> Vec<f64> {
        (**self).kinks()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskMethod {
    Quadrature,
    MonteCarlo,
}

/// Relative hinge and 0-1 risks of a score.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub rel_hinge: f64,
    pub rel_01: f64,
    pub method: RiskMethod,
    /// Quadrature tolerance, or the larger Monte Carlo standard error.
    pub error_estimate: f64,
}

/// Samples per panel used to bracket level crossings of the score.
const CROSSING_PROBES: usize = 16;

fn bisect_level<S: Scorer>(g: &S, level: f64, mut lo: f64, mut hi: f64) -> f64 {
    let below = g.score(lo) < level;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (g.score(mid) < level) == below {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Panel boundaries on `[0, 1]`: distribution breakpoints, score kinks and
/// the located crossings of the score with the levels −1, 0 and 1.
fn panels<S: Scorer>(g: &S, dist: &SyntheticDist) -> Vec<f64> {
    let mut base = dist.breakpoints();
    base.extend(g.kinks().into_iter().filter(|k| (0.0..=1.0).contains(k)));
    base.push(0.0);
    base.push(1.0);
    base.sort_by(f64::total_cmp);
    base.dedup();
    let mut breaks = base.clone();
    for w in base.windows(2) {
        let (a, b) = (w[0], w[1]);
        let probes: Vec<(f64, f64)> = (0..=CROSSING_PROBES)
            .map(|i| {
                let x = a + (b - a) * i as f64 / CROSSING_PROBES as f64;
                (x, g.score(x))
            })
            .collect();
        for level in [-1.0, 0.0, 1.0] {
            for p in probes.windows(2) {
                let (x0, v0) = p[0];
                let (x1, v1) = p[1];
                if (v0 < level) != (v1 < level) {
                    breaks.push(bisect_level(g, level, x0, x1));
                }
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    breaks
}

/// Midpoint-of-panel evaluation of η avoids the value at a jump.
fn integrate_panels(breaks: &[f64], dist: &SyntheticDist, noise: f64, f: impl Fn(f64, f64) -> f64) -> Result<f64> {
    let density_tol = (0.01 * RISK_TOL).max(noise);
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let mut integrand = |x: f64| f(dist.eta_unchecked(x.min(1.0 - f64::EPSILON)), x);
        total += quad::integrate(&mut integrand, &[a, b], density_tol * (b - a))?;
    }
    Ok(total)
}

/// `L(g, s*) = E[ℓ(Y g(X)) − ℓ(Y s*(X))]` by composite Gauss–Legendre
/// quadrature.
pub fn rel_hinge_risk<S: Scorer>(g: &S, dist: &SyntheticDist) -> Result<f64> {
    let breaks = panels(g, dist);
    rel_hinge_on(&breaks, g, dist)
}

fn rel_hinge_on<S: Scorer>(breaks: &[f64], g: &S, dist: &SyntheticDist) -> Result<f64> {
    integrate_panels(breaks, dist, g.noise(), |eta, x| cond_hinge(eta, g.score(x)) - 2.0 * eta.min(1.0 - eta))
}

/// `Θ(g, s*) = P[Y g(X) ≤ 0] − P[Y s*(X) ≤ 0]` by quadrature over panels
/// split at the sign changes of `g`.
pub fn rel_01_risk<S: Scorer>(g: &S, dist: &SyntheticDist) -> Result<f64> {
    let breaks = panels(g, dist);
    rel_01_on(&breaks, g, dist)
}

fn rel_01_on<S: Scorer>(breaks: &[f64], g: &S, dist: &SyntheticDist) -> Result<f64> {
    integrate_panels(breaks, dist, g.noise(), |eta, x| cond_01(eta, g.score(x)) - eta.min(1.0 - eta))
}

/// Both relative risks by quadrature.
pub fn risk_report<S: Scorer>(g: &S, dist: &SyntheticDist) -> Result<RiskReport> {
    let breaks = panels(g, dist);
    Ok(RiskReport {
        rel_hinge: rel_hinge_on(&breaks, g, dist)?,
        rel_01: rel_01_on(&breaks, g, dist)?,
        method: RiskMethod::Quadrature,
        error_estimate: RISK_TOL.max(g.noise()),
    })
}

/// Both relative risks by Monte Carlo over `draws` uniform inputs, with the
/// labels integrated out conditionally.
pub fn risk_report_mc<S: Scorer, G: Rng>(g: &S, dist: &SyntheticDist, draws: usize, rng: &mut G) -> Result<RiskReport> {
    if draws < 2 {
        return Err(Error::Empty("Monte Carlo draws"));
    }
    let (mut sh, mut sh2, mut s0, mut s02) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..draws {
        let x: f64 = rng.gen();
        let eta = dist.eta_unchecked(x);
        let v = g.score(x);
        let base = eta.min(1.0 - eta);
        let h = cond_hinge(eta, v) - 2.0 * base;
        let z = cond_01(eta, v) - base;
        sh += h;
        sh2 += h * h;
        s0 += z;
        s02 += z * z;
    }
    let m = draws as f64;
    let se = |s: f64, s2: f64| ((s2 - s * s / m) / (m - 1.0) / m).max(0.0).sqrt();
    Ok(RiskReport {
        rel_hinge: sh / m,
        rel_01: s0 / m,
        method: RiskMethod::MonteCarlo,
        error_estimate: se(sh, sh2).max(se(s0, s02)),
    })
}

/// `(1/n) Σ (1 − y_i g(x_i))₊`.
pub fn empirical_hinge<S: Scorer>(g: &S, sample: &Sample) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::Empty("sample"));
    }
    let total: f64 = sample.xs.iter().zip(&sample.ys).map(|(&x, &y)| hinge(y * g.score(x))).sum();
    Ok(total / sample.len() as f64)
}
