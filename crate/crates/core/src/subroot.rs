//! Sub-root functions and their unique positive fixed point.
//!
//! ψ is sub-root when it is nonnegative, nondecreasing and `ψ(r)/√r` is
//! nonincreasing. Then `ψ(r) = r` has exactly one positive solution `r*`,
//! and `r ≥ ψ(r)` holds exactly when `r ≥ r*`, which makes bisection on the
//! sign of `ψ(r) - r` unconditionally correct.

use crate::error::{Error, Result};

/// Default relative tolerance on `|ψ(r*) - r*|`.
pub const DEFAULT_TOL: f64 = 1e-10;

const GRID_TOL: f64 = 1e-12;

pub struct SubrootFn<'a> {
    f: Box<dyn Fn(f64) -> f64 + Send + Sync + 'a>,
    /// A positive value of the order of the fixed point, used to start the
    /// bracket search.
    pub domain_hint: f64,
}

impl<'a> SubrootFn<'a> {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'a) -> Self {
        Self {
            f: Box::new(f),
            domain_hint: 1.0,
        }
    }

    pub fn with_hint(mut self, hint: f64) -> Self {
        if hint.is_finite() && hint > 0.0 {
            self.domain_hint = hint;
        }
        self
    }

    pub fn eval(&self, r: f64) -> f64 {
        (self.f)(r)
    }

    /// `r ↦ c · ψ(r)`.
    pub fn scaled(self, c: f64) -> SubrootFn<'a> {
        let hint = self.domain_hint;
        SubrootFn::new(move |r| c * (self.f)(r)).with_hint(hint)
    }

    /// Pointwise minimum, again sub-root.
    pub fn min(self, other: SubrootFn<'a>) -> SubrootFn<'a> {
        let hint = self.domain_hint.min(other.domain_hint);
        SubrootFn::new(move |r| (self.f)(r).min((other.f)(r))).with_hint(hint)
    }
}

/// Checks both monotonicity conditions on a sorted positive grid, within a
/// relative tolerance of 1e-12.
pub fn is_subroot(psi: &SubrootFn<'_>, grid: &[f64]) -> bool {
    let vals: Vec<f64> = grid.iter().map(|&r| psi.eval(r)).collect();
    if vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return false;
    }
    grid.windows(2).zip(vals.windows(2)).all(|(r, v)| {
        let slack = GRID_TOL * v[0].abs().max(v[1].abs()).max(f64::MIN_POSITIVE);
        let nondecreasing = v[1] >= v[0] - slack;
        let ratio0 = v[0] / r[0].sqrt();
        let ratio1 = v[1] / r[1].sqrt();
        let ratio_ok = ratio1 <= ratio0 + GRID_TOL * ratio0.abs().max(ratio1.abs()).max(f64::MIN_POSITIVE);
        nondecreasing && ratio_ok
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedPoint {
    pub r: f64,
    /// Set when ψ vanished at every probed point; `r` is then 0.
    pub degenerate: bool,
}

/// Unique positive solution of `ψ(r) = r` by bracket doubling/halving from
/// `domain_hint` followed by bisection to full precision.
pub fn solve_fixed_point(psi: &SubrootFn<'_>, tol: f64) -> Result<FixedPoint> {
    let above = |r: f64| psi.eval(r) > r; // true iff r < r*
    let mut probed_nonzero = false;
    let mut r = psi.domain_hint;
    let (mut lo, mut hi);
    if above(r) {
        lo = r;
        let mut found = false;
        for _ in 0..1023 {
            r *= 2.0;
            if !r.is_finite() {
                break;
            }
            if !above(r) {
                found = true;
                break;
            }
            lo = r;
        }
        if !found {
            return Err(Error::BracketNotFound("ψ(r) > r up to 2^1023 · hint"));
        }
        hi = r;
    } else {
        hi = r;
        probed_nonzero |= psi.eval(r) > 0.0;
        let mut found = false;
        for _ in 0..1100 {
            r *= 0.5;
            if r == 0.0 {
                break;
            }
            let v = psi.eval(r);
            probed_nonzero |= v > 0.0;
            if v > r {
                found = true;
                break;
            }
            hi = r;
        }
        if !found {
            if !probed_nonzero {
                return Ok(FixedPoint {
                    r: 0.0,
                    degenerate: true,
                });
            }
            return Err(Error::BracketNotFound("ψ(r) ≤ r down to the smallest positive float"));
        }
        lo = r;
    }
    // Invariant: ψ(lo) > lo, ψ(hi) ≤ hi.
    for _ in 0..4000 {
        let mid = if hi > 4.0 * lo { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if mid <= lo || mid >= hi {
            break;
        }
        if above(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    let resid = (psi.eval(r) - r).abs();
    if resid > tol * r.max(1.0) && resid > 1e-6 * r {
        return Err(Error::BracketNotFound("bisection residual too large; input is not sub-root"));
    }
    Ok(FixedPoint { r, degenerate: false })
}

/// Geometric grid of `count` points spanning `[lo, hi]`.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![lo];
    }
    let step = (hi / lo).ln() / (count - 1) as f64;
    (0..count).map(|i| lo * (step * i as f64).exp()).collect()
}
