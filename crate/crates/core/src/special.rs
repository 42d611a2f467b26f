//! Zeta-type sums and Bernoulli polynomials used by the circle kernel.

use std::f64::consts::PI;

/// Bernoulli numbers B_0..=B_12.
const BERNOULLI: [f64; 13] = [
    1.0,
    -0.5,
    1.0 / 6.0,
    0.0,
    -1.0 / 30.0,
    0.0,
    1.0 / 42.0,
    0.0,
    -1.0 / 30.0,
    0.0,
    5.0 / 66.0,
    0.0,
    -691.0 / 2730.0,
];

/// Largest integer smoothness with a closed-form periodic series.
pub(crate) const MAX_CLOSED_FORM_ORDER: u32 = 6;

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * f64::from(i))
}

/// Σ_{k≥1} cos(2πkx) / k^{2s} for integer s, x in [0, 1].
pub(crate) fn periodic_cos_series(s: u32, x: f64) -> f64 {
    let c = &series_coefficients()[s as usize];
    c[..=2 * s as usize].iter().rev().fold(0.0, |acc, &ck| acc * x + ck)
}

/// Power-basis coefficients (ascending) of
/// `(−1)^{s+1} (2π)^{2s} B_{2s}(x) / (2 (2s)!)` for `s ≤ 6`.
fn series_coefficients() -> &'static [[f64; 13]; 7] {
    static TABLE: std::sync::OnceLock<[[f64; 13]; 7]> = std::sync::OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [[0.0; 13]; 7];
        for s in 1..=MAX_CLOSED_FORM_ORDER {
            let n = 2 * s;
            let sign = if s % 2 == 1 { 1.0 } else { -1.0 };
            let scale = sign * (2.0 * PI).powi(n as i32) / (2.0 * factorial(n));
            // B_n(x) = Σ_k C(n,k) B_k x^{n−k}.
            for k in 0..=n {
                t[s as usize][(n - k) as usize] = scale * binomial(n, k) * BERNOULLI[k as usize];
            }
        }
        t
    })
}

/// Hurwitz-type tail Σ_{k≥m} k^{-p} for p > 1, m ≥ 1 (Euler–Maclaurin).
pub(crate) fn power_tail(p: f64, m: u64) -> f64 {
    debug_assert!(p > 1.0 && m >= 1);
    const START: u64 = 12;
    let mut direct = 0.0;
    let mut a = m;
    while a < START {
        direct += (a as f64).powf(-p);
        a += 1;
    }
    let af = a as f64;
    let mut s = af.powf(1.0 - p) / (p - 1.0) + 0.5 * af.powf(-p);
    // Σ_j B_{2j}/(2j)! · p(p+1)…(p+2j−2) · a^{−p−2j+1}
    let mut rising = p;
    let mut fact = 2.0;
    let mut pw = af.powf(-p - 1.0);
    for j in 1..=5usize {
        s += BERNOULLI[2 * j] / fact * rising * pw;
        let jf = j as f64;
        rising *= (p + 2.0 * jf - 1.0) * (p + 2.0 * jf);
        fact *= (2.0 * jf + 1.0) * (2.0 * jf + 2.0);
        pw /= af * af;
    }
    direct + s
}

/// Riemann zeta for p > 1.
pub(crate) fn zeta(p: f64) -> f64 {
    power_tail(p, 1)
}
