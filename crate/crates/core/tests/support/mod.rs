//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` for (numerically) singular systems.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() <= 1e-13 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

fn quad_form(q: &[Vec<f64>], u: &[f64]) -> f64 {
    let n = u.len();
    (0..n).map(|i| (0..n).map(|j| u[i] * q[i][j] * u[j]).sum::<f64>()).sum()
}

/// `max_{0 ≤ u ≤ w} Σu − R √(uᵀQu)` by enumerating all `3ⁿ` assignments of
/// each coordinate to the lower bound, the upper bound or the free set.
///
/// For a free set F, stationarity reads `(Qu)_F = s·1` with `s = √(uᵀQu)/R`,
/// so `u_F` is affine in `s` and `s` solves a scalar quadratic. When Q is
/// singular the maximizer may instead sit where `uᵀQu = 0` and the square
/// root is not differentiable; those points are vertices of
/// `{0 ≤ u ≤ w, Qu = 0}`, reached as the `s = 0` member of the same family.
/// Every feasible candidate is a lower bound.
pub fn ball_dual_enumeration(q: &[Vec<f64>], w: &[f64], radius: f64) -> f64 {
    let n = w.len();
    assert!(n <= 8);
    let dual = |u: &[f64]| u.iter().sum::<f64>() - radius * quad_form(q, u).max(0.0).sqrt();
    let mut best = 0.0f64;
    let mut state = vec![0u8; n];
    for code in 0..3usize.pow(n as u32) {
        let mut c = code;
        for s in state.iter_mut() {
            *s = (c % 3) as u8;
            c /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let base: Vec<f64> = (0..n).map(|i| if state[i] == 1 { w[i] } else { 0.0 }).collect();
        if free.is_empty() {
            best = best.max(dual(&base));
            continue;
        }
        if radius == 0.0 {
            continue;
        }
        let qff: Vec<Vec<f64>> = free.iter().map(|&i| free.iter().map(|&j| q[i][j]).collect()).collect();
        let rhs0: Vec<f64> = free.iter().map(|&i| -(0..n).map(|j| q[i][j] * base[j]).sum::<f64>()).collect();
        let (Some(p0), Some(p1)) = (solve_dense(qff.clone(), rhs0), solve_dense(qff, vec![1.0; free.len()])) else {
            continue;
        };
        // u(s) = a + s b.
        let mut a = base.clone();
        let mut b = vec![0.0; n];
        for (k, &i) in free.iter().enumerate() {
            a[i] = p0[k];
            b[i] = p1[k];
        }
        let qa = quad_form(q, &a);
        let qb = quad_form(q, &b);
        let qab: f64 = (0..n).map(|i| (0..n).map(|j| a[i] * q[i][j] * b[j]).sum::<f64>()).sum();
        // qa + 2 s qab + s² qb = R² s².
        let cq = qb - radius * radius;
        let mut roots = Vec::new();
        if cq.abs() < 1e-300 {
            if qab != 0.0 {
                roots.push(-qa / (2.0 * qab));
            }
        } else {
            let disc = qab * qab - cq * qa;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                roots.push((-qab + sq) / cq);
                roots.push((-qab - sq) / cq);
            }
        }
        roots.push(0.0);
        for s in roots {
            if !(s >= 0.0) {
                continue;
            }
            let u: Vec<f64> = (0..n).map(|i| a[i] + s * b[i]).collect();
            let slack = 1e-12 * w.iter().fold(0.0f64, |m, v| m.max(*v));
            if u.iter().zip(w).all(|(ui, wi)| *ui >= -slack && *ui <= wi + slack) {
                let u: Vec<f64> = u.iter().zip(w).map(|(ui, wi)| ui.clamp(0.0, *wi)).collect();
                best = best.max(dual(&u));
            }
        }
    }
    best
}

/// `sup { c·β : Σ β_j²/λ_j ≤ R², Σ β_j² ≤ r }` via its Lagrangian dual
/// `min_{t∈[0,1]} √(Σ c_j² / (t/(R²λ_j) + (1−t)/r))`, minimized by ternary
/// search (the objective is convex in t).
pub fn ellipsoid_pair_sup(c: &[f64], lambdas: &[f64], radius: f64, r: f64) -> f64 {
    if radius == 0.0 || r == 0.0 {
        return 0.0;
    }
    let f = |t: f64| -> f64 {
        c.iter()
            .zip(lambdas)
            .map(|(cj, &l)| {
                let prec = if l > 0.0 { t / (radius * radius * l) } else if t > 0.0 { f64::INFINITY } else { 0.0 };
                cj * cj / (prec + (1.0 - t) / r)
            })
            .sum::<f64>()
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..300 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    [0.0, 0.5 * (lo + hi), 1.0].iter().map(|&t| f(t)).fold(f64::INFINITY, f64::min).max(0.0).sqrt()
}

/// Circle-kernel eigenpairs `(λ, frequency, is_sine)` in the order
/// constant, cos 1, sin 1, cos 2, ... stably sorted by decreasing λ, built
/// from the Fourier coefficients.
pub fn circle_eigenpairs(a0: f64, coeff: impl Fn(u64) -> f64, d: usize) -> Vec<(f64, u64, bool)> {
    let mut v = vec![(a0, 0, false)];
    for k in 1..=d as u64 {
        v.push((coeff(k) / 2.0, k, false));
        v.push((coeff(k) / 2.0, k, true));
    }
    v.sort_by(|a, b| b.0.total_cmp(&a.0));
    v.truncate(d);
    v
}

/// L²-orthonormal eigenfunction for a pair from [`circle_eigenpairs`].
pub fn unit_wave(freq: u64, sine: bool, x: f64) -> f64 {
    if freq == 0 {
        1.0
    } else if sine {
        2f64.sqrt() * (2.0 * PI * freq as f64 * x).sin()
    } else {
        2f64.sqrt() * (2.0 * PI * freq as f64 * x).cos()
    }
}

/// `E_σ sup_f (1/n) Σ σ_i f(x_i)` over `‖f‖_H ≤ R`, `‖f‖²_{L²} ≤ r` inside the
/// span of the given eigenpairs, averaged over all sign vectors.
pub fn rademacher_by_enumeration(pairs: &[(f64, u64, bool)], radius: f64, r: f64, xs: &[f64]) -> f64 {
    let n = xs.len();
    let lambdas: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut total = 0.0;
    for code in 0..(1u64 << n) {
        let c: Vec<f64> = pairs
            .iter()
            .map(|&(_, k, s)| {
                xs.iter()
                    .enumerate()
                    .map(|(i, &x)| if code >> i & 1 == 1 { 1.0 } else { -1.0 } * unit_wave(k, s, x))
                    .sum::<f64>()
                    / n as f64
            })
            .collect();
        total += ellipsoid_pair_sup(&c, &lambdas, radius, r);
    }
    total / (1u64 << n) as f64
}

/// `∫₀ˣ √(C ε^{-1/s}) dε` by Simpson's rule after the substitution
/// `ε = x t^p`, with `p` chosen to make the integrand vanish smoothly at 0.
pub fn entropy_integral_numeric(constant: f64, smoothness: f64, x: f64) -> f64 {
    let p = 3.0 / (1.0 - 1.0 / (2.0 * smoothness));
    let g = |t: f64| {
        if t == 0.0 {
            return 0.0;
        }
        let eps = x * t.powf(p);
        (constant * eps.powf(-1.0 / smoothness)).sqrt() * x * p * t.powf(p - 1.0)
    };
    let panels = 4000;
    let h = 1.0 / panels as f64;
    let mut s = g(0.0) + g(1.0);
    for i in 1..panels {
        s += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Root of `ξ(x) = √n x² / M` by bisection with the numeric entropy integral.
pub fn entropy_root_numeric(constant: f64, smoothness: f64, n: usize, m: f64) -> f64 {
    let h = |x: f64| entropy_integral_numeric(constant, smoothness, x) - (n as f64).sqrt() * x * x / m;
    let (mut lo, mut hi) = (1e-300f64, 1.0f64);
    while h(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `d/√n + (η₁/M) √(Σ_{j>d} λ_j)` minimized over `d ≤ max_d` by brute force,
/// for the circle spectrum `a₀, a₁/2, a₁/2, a₂/2, ...` with `a_k = A k^{-2s}`.
/// Tail sums are accumulated directly over `terms` frequencies plus the
/// integral remainder.
pub fn circle_spectral_inf(a0: f64, amplitude: f64, smoothness: f64, n: usize, eta1: f64, m: f64, max_d: usize) -> f64 {
    let terms = 2_000_000u64;
    let mut lambdas = vec![a0];
    for k in 1..=terms {
        let a = amplitude * (k as f64).powf(-2.0 * smoothness) / 2.0;
        lambdas.push(a);
        lambdas.push(a);
    }
    lambdas.sort_by(|a, b| b.total_cmp(a));
    let remainder = amplitude * (terms as f64 + 0.5).powf(1.0 - 2.0 * smoothness) / (2.0 * smoothness - 1.0);
    // suffix sums from the small end for accuracy
    let mut tails = vec![0.0; max_d + 1];
    let mut acc = remainder;
    for j in (0..lambdas.len()).rev() {
        acc += lambdas[j];
        if j <= max_d {
            tails[j] = acc;
        }
    }
    // tails[d] = Σ_{j ≥ d} over 0-based index = Σ_{j > d} 1-based.
    (0..=max_d)
        .map(|d| d as f64 / (n as f64).sqrt() + eta1 / m * tails[d].sqrt())
        .fold(f64::INFINITY, f64::min)
}

/// Ordinary least squares slope of `ln y` on `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
