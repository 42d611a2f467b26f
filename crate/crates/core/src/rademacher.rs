//! Localized Rademacher averages of RKHS balls on the circle, computed in the
//! eigenfunction coordinates of the kernel operator, and the two closed-form
//! upper bounds they are compared against.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_param, Error, Result};
use crate::kernel::{KernelFamily, KernelSpec};
use crate::spectrum::SpectrumModel;

/// Largest supported number of eigenfunctions.
pub const MAX_BASIS: usize = 64;
/// Largest sample size for exhaustive sign enumeration.
pub const MAX_ENUMERATION: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Wave {
    Const,
    Cos(u64),
    Sin(u64),
}

/// Leading eigenfunctions of a circle kernel under the uniform marginal,
/// scaled so that `E[ψ_j(X)²] = λ_j`.
#[derive(Clone, Debug)]
pub struct CircleBasis {
    waves: Vec<(f64, Wave)>,
    a0: f64,
}

impl CircleBasis {
    /// The `d` eigenfunctions with the largest eigenvalues. Cosine/sine pairs
    /// of a frequency are kept adjacent.
    pub fn top(kernel: &KernelSpec, d: usize) -> Result<Self> {
        let KernelFamily::CircleFourier { a0, truncation, .. } = kernel.family() else {
            return Err(Error::NonCircleKernel);
        };
        if d == 0 || d > MAX_BASIS {
            return Err(Error::InvalidParameter {
                name: "D",
                value: d as f64,
                reason: "number of eigenfunctions must lie in 1..=64",
            });
        }
        if let Some(t) = truncation {
            if d > 2 * t + 1 {
                return Err(Error::InvalidParameter {
                    name: "D",
                    value: d as f64,
                    reason: "exceeds the number of eigenfunctions of the truncated kernel",
                });
            }
        }
        let max_freq = truncation.map_or(d as u64, |t| (t as u64).min(d as u64));
        let mut waves = vec![(*a0, Wave::Const)];
        for k in 1..=max_freq {
            let half = 0.5 * kernel.circle_coefficient(k)?;
            waves.push((half, Wave::Cos(k)));
            waves.push((half, Wave::Sin(k)));
        }
        waves.sort_by(|a, b| b.0.total_cmp(&a.0));
        waves.truncate(d);
        Ok(Self { waves, a0: *a0 })
    }

    pub fn len(&self) -> usize {
        self.waves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waves.is_empty()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.waves.iter().map(|w| w.0).collect()
    }

    /// The basis eigenvalues as a finite spectrum.
    pub fn spectrum(&self) -> SpectrumModel {
        SpectrumModel::finite(self.eigenvalues())
    }

    /// False when the last function is a cosine whose sine partner was cut.
    pub fn pair_complete(&self) -> bool {
        !matches!(self.waves.last(), Some((_, Wave::Cos(_))))
    }

    pub fn eval(&self, j: usize, x: f64) -> f64 {
        let (lambda, wave) = self.waves[j];
        match wave {
            Wave::Const => self.a0.sqrt(),
            Wave::Cos(k) => (2.0 * lambda).sqrt() * (2.0 * PI * k as f64 * x).cos(),
            Wave::Sin(k) => (2.0 * lambda).sqrt() * (2.0 * PI * k as f64 * x).sin(),
        }
    }

    /// Row-major `n × D` matrix of `ψ_j(x_i)`.
    fn design(&self, xs: &[f64]) -> Vec<f64> {
        let d = self.len();
        let mut out = Vec::with_capacity(xs.len() * d);
        for &x in xs {
            for j in 0..d {
                out.push(self.eval(j, x));
            }
        }
        out
    }
}

/// `sup { Σ_j α_j c_j : Σ α_j² ≤ R², Σ λ_j α_j² ≤ r }`.
///
/// The dual `min_{μ,ν≥0} Σ c_j²/(4(μ+νλ_j)) + μR² + νr` is minimized in
/// closed form along each ray `(μ,ν) = t(1−θ, θ)`, giving
/// `√(A(θ)B(θ))` with `A = Σ c_j²/(1−θ+θλ_j)`, `B = (1−θ)R² + θr`. The ray
/// minimum is quasi-convex in θ, so a golden-section search finds it.
pub fn sup_two_ellipsoids(c: &[f64], lambdas: &[f64], radius: f64, r: f64) -> f64 {
    dual_search(c, lambdas, radius, r).0
}

/// Returns the dual value and the minimizing ray parameter θ.
fn dual_search(c: &[f64], lambdas: &[f64], radius: f64, r: f64) -> (f64, f64) {
    debug_assert_eq!(c.len(), lambdas.len());
    if radius <= 0.0 {
        return (0.0, 0.0);
    }
    if r <= 0.0 {
        let null: f64 = c
            .iter()
            .zip(lambdas)
            .filter(|(_, &l)| l <= 0.0)
            .map(|(ci, _)| ci * ci)
            .sum();
        return (radius * null.sqrt(), 1.0);
    }
    let ray = |theta: f64| -> f64 {
        let mut a = 0.0;
        for (ci, &l) in c.iter().zip(lambdas) {
            if ci * ci == 0.0 {
                continue;
            }
            let w = (1.0 - theta) + theta * l;
            if w <= 0.0 {
                return f64::INFINITY;
            }
            a += ci * ci / w;
        }
        let b = (1.0 - theta) * radius * radius + theta * r;
        (a * b).sqrt()
    };
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (ray(x1), ray(x2));
    for _ in 0..200 {
        if hi - lo < 1e-15 {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = ray(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = ray(x2);
        }
    }
    let mid = 0.5 * (lo + hi);
    [(ray(0.0), 0.0), (ray(1.0), 1.0), (f1, x1), (f2, x2), (ray(mid), mid)]
        .into_iter()
        .fold((f64::INFINITY, 0.0), |best, cand| if cand.0 < best.0 { cand } else { best })
}

/// Primal value from the stationary family `α_j(θ) = c_j/(1−θ+θλ_j)`,
/// with θ chosen by bisection so that both constraints bind together (or
/// an endpoint when one of them is slack). A lower bound on
/// [`sup_two_ellipsoids`] that meets it at the optimum.
pub fn sup_two_ellipsoids_primal(c: &[f64], lambdas: &[f64], radius: f64, r: f64) -> f64 {
    if radius <= 0.0 {
        return 0.0;
    }
    let alpha = |theta: f64| -> Vec<f64> {
        c.iter()
            .zip(lambdas)
            .map(|(ci, &l)| {
                let w = (1.0 - theta) + theta * l;
                if w > 0.0 {
                    ci / w
                } else if r <= 0.0 {
                    *ci
                } else {
                    0.0
                }
            })
            .collect()
    };
    let moments = |a: &[f64]| -> (f64, f64) {
        let n2 = a.iter().map(|v| v * v).sum();
        let l2 = a.iter().zip(lambdas).map(|(v, l)| l * v * v).sum();
        (n2, l2)
    };
    let value = |a: &[f64]| -> f64 {
        let (n2, l2) = moments(a);
        let mut scale = f64::INFINITY;
        if n2 > 0.0 {
            scale = scale.min(radius / n2.sqrt());
        }
        if l2 > 0.0 {
            scale = scale.min((r / l2).sqrt());
        }
        if !scale.is_finite() {
            return 0.0;
        }
        scale * a.iter().zip(c).map(|(v, ci)| v * ci).sum::<f64>()
    };
    if r <= 0.0 {
        return value(&alpha(1.0));
    }
    // Sign of R²·l2 − r·n2 tells which constraint binds after scaling.
    let excess = |theta: f64| {
        let (n2, l2) = moments(&alpha(theta));
        radius * radius * l2 - r * n2
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if excess(lo) <= 0.0 {
        return value(&alpha(lo));
    }
    if lambdas.iter().all(|&l| l > 0.0) && excess(hi) >= 0.0 {
        return value(&alpha(hi));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    value(&alpha(lo)).max(value(&alpha(hi)))
}

fn sup_for_signs(design: &[f64], d: usize, n: usize, signs: impl Fn(usize) -> f64, lambdas: &[f64], radius: f64, r: f64) -> f64 {
    let mut c = vec![0.0; d];
    for i in 0..n {
        let s = signs(i);
        for j in 0..d {
            c[j] += s * design[i * d + j];
        }
    }
    for cj in &mut c {
        *cj /= n as f64;
    }
    sup_two_ellipsoids(&c, lambdas, radius, r)
}

fn check_inputs(basis: &CircleBasis, radius: f64, r: f64, xs: &[f64]) -> Result<()> {
    check_param("R", radius, radius >= 0.0, "must be nonnegative")?;
    check_param("r", r, r >= 0.0, "must be nonnegative")?;
    if xs.is_empty() {
        return Err(Error::Empty("sample"));
    }
    if basis.is_empty() {
        return Err(Error::Empty("basis"));
    }
    Ok(())
}

/// `E_σ sup` averaged over all `2ⁿ` sign vectors.
pub fn rademacher_exact(basis: &CircleBasis, radius: f64, r: f64, xs: &[f64]) -> Result<f64> {
    check_inputs(basis, radius, r, xs)?;
    let n = xs.len();
    if n > MAX_ENUMERATION {
        return Err(Error::InvalidParameter {
            name: "n",
            value: n as f64,
            reason: "exhaustive enumeration supports at most 20 points",
        });
    }
    let d = basis.len();
    let design = basis.design(xs);
    let lambdas = basis.eigenvalues();
    let count = 1usize << n;
    let total: f64 = (0..count)
        .map(|mask| sup_for_signs(&design, d, n, |i| sign_bit(mask, i), &lambdas, radius, r))
        .sum();
    Ok(total / count as f64)
}

fn sign_bit(mask: usize, i: usize) -> f64 {
    if mask >> i & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

/// How Monte Carlo sign vectors are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignDraws {
    /// Independent uniform sign vectors.
    WithReplacement,
    /// Distinct sign vectors sampled without replacement (needs `n ≤ 20`).
    Distinct,
}

/// Monte Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub draws: usize,
}

/// Monte Carlo estimate of `E_σ sup` over `n_sigma` sign vectors.
pub fn rademacher_mc<G: Rng>(
    basis: &CircleBasis,
    radius: f64,
    r: f64,
    xs: &[f64],
    n_sigma: usize,
    draws: SignDraws,
    rng: &mut G,
) -> Result<McEstimate> {
    check_inputs(basis, radius, r, xs)?;
    if n_sigma == 0 {
        return Err(Error::Empty("sign draws"));
    }
    let n = xs.len();
    let d = basis.len();
    let design = basis.design(xs);
    let lambdas = basis.eigenvalues();
    let values: Vec<f64> = match draws {
        SignDraws::WithReplacement => (0..n_sigma)
            .map(|_| {
                let signs: Vec<f64> = (0..n).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
                sup_for_signs(&design, d, n, |i| signs[i], &lambdas, radius, r)
            })
            .collect(),
        SignDraws::Distinct => {
            if n > MAX_ENUMERATION || n_sigma > 1usize << n {
                return Err(Error::InvalidParameter {
                    name: "n_sigma",
                    value: n_sigma as f64,
                    reason: "distinct draws need n ≤ 20 and n_sigma ≤ 2ⁿ",
                });
            }
            let mut masks: Vec<usize> = (0..1usize << n).collect();
            masks.shuffle(rng);
            masks[..n_sigma]
                .iter()
                .map(|&mask| sup_for_signs(&design, d, n, |i| sign_bit(mask, i), &lambdas, radius, r))
                .collect()
        }
    };
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = if values.len() > 1 {
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        std_error: (var / m).sqrt(),
        draws: values.len(),
    })
}

/// `(1/√n) inf_d (√(dr) + R √(Σ_{j>d} λ_j))`.
pub fn localized_inf_bound(spec: &SpectrumModel, radius: f64, r: f64, n: usize) -> f64 {
    let limit = spec.scan_limit();
    let mut best = radius * spec.tail_sum(0).sqrt();
    if r <= 0.0 {
        best = best.min(radius * spec.tail_sum(limit).sqrt());
    } else {
        for d in 1..=limit {
            let head = (d as f64 * r).sqrt();
            if head >= best {
                break;
            }
            best = best.min(head + radius * spec.tail_sum(d).sqrt());
        }
    }
    best / (n as f64).sqrt()
}

/// `√(2/n) · √(Σ_j min(r, R² λ_j))`.
pub fn localized_min_bound(spec: &SpectrumModel, radius: f64, r: f64, n: usize) -> f64 {
    let r2 = radius * radius;
    if r <= 0.0 || r2 == 0.0 {
        return 0.0;
    }
    // Eigenvalues are nonincreasing: the first `count` terms are capped at r.
    let limit = spec.scan_limit();
    let (mut lo, mut hi) = (0usize, limit);
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if r2 * spec.eigenvalue(mid) >= r {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let sum = r * lo as f64 + r2 * spec.tail_sum(lo);
    (2.0 / n as f64).sqrt() * sum.sqrt()
}
