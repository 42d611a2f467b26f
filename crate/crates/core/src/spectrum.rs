//! Eigenvalues of the kernel integral operator: analytic for the circle
//! kernel under the uniform marginal, empirical from Gram matrices.

use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernel::{KernelFamily, KernelSpec};
use crate::special::power_tail;

/// Number of cos/sin frequency pairs listed explicitly for an infinite
/// circle spectrum (so the explicit prefix has `2·5000 + 1` entries).
pub const DEFAULT_EXPLICIT_PAIRS: usize = 5_000;

/// Remainder beyond the explicit prefix.
#[derive(Clone, Debug, PartialEq)]
pub enum TailRule {
    /// Finite-rank spectrum.
    Zero,
    /// Pairs `A k^{-p}/2, A k^{-p}/2` for every frequency `k ≥ first_freq`.
    PowerLawPairs { amplitude: f64, exponent: f64, first_freq: u64 },
}

/// Nonincreasing eigenvalue sequence with exact tail sums.
#[derive(Clone, Debug)]
pub struct SpectrumModel {
    eigenvalues: Vec<f64>,
    /// `suffix[d] = Σ_{j ≥ d} eigenvalues[j]` (0-based), length `len + 1`.
    suffix: Vec<f64>,
    tail: TailRule,
    tail_total: f64,
}

impl SpectrumModel {
    /// Builds a spectrum from explicit values (sorted nonincreasing, negatives
    /// clamped) and a tail rule.
    pub fn new(mut eigenvalues: Vec<f64>, tail: TailRule) -> Self {
        for v in eigenvalues.iter_mut() {
            *v = v.max(0.0);
        }
        eigenvalues.sort_by(|a, b| b.total_cmp(a));
        let mut suffix = vec![0.0; eigenvalues.len() + 1];
        for j in (0..eigenvalues.len()).rev() {
            suffix[j] = suffix[j + 1] + eigenvalues[j];
        }
        let tail_total = tail_beyond(&tail, 0);
        Self {
            eigenvalues,
            suffix,
            tail,
            tail_total,
        }
    }

    pub fn finite(eigenvalues: Vec<f64>) -> Self {
        Self::new(eigenvalues, TailRule::Zero)
    }

    /// Explicitly stored eigenvalues.
    pub fn explicit(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn tail_rule(&self) -> &TailRule {
        &self.tail
    }

    /// `λ_j` with 1-based `j`.
    pub fn eigenvalue(&self, j: usize) -> f64 {
        assert!(j >= 1, "eigenvalues are 1-indexed");
        if j <= self.eigenvalues.len() {
            return self.eigenvalues[j - 1];
        }
        match self.tail {
            TailRule::Zero => 0.0,
            TailRule::PowerLawPairs {
                amplitude,
                exponent,
                first_freq,
            } => {
                let k = first_freq + ((j - self.eigenvalues.len() - 1) / 2) as u64;
                0.5 * amplitude * (k as f64).powf(-exponent)
            }
        }
    }

    /// `Σ_{j>d} λ_j`.
    pub fn tail_sum(&self, d: usize) -> f64 {
        if d <= self.eigenvalues.len() {
            self.suffix[d] + self.tail_total
        } else {
            tail_beyond(&self.tail, d - self.eigenvalues.len())
        }
    }

    /// Trace of the operator.
    pub fn total_sum(&self) -> f64 {
        self.tail_sum(0)
    }

    /// Number of nonzero eigenvalues, `None` for an infinite-rank spectrum.
    pub fn rank(&self) -> Option<usize> {
        match self.tail {
            TailRule::Zero => Some(self.eigenvalues.iter().take_while(|&&l| l > 0.0).count()),
            _ => None,
        }
    }

    /// Index beyond which the d-scans of the penalty formulas stop even when
    /// their stopping rule has not fired.
    pub(crate) fn scan_limit(&self) -> usize {
        match self.tail {
            TailRule::Zero => self.rank().unwrap_or(0),
            _ => 1 << 22,
        }
    }

    /// Writes `index,eigenvalue` rows (1-based) for the first `count` values.
    pub fn write_csv<W: Write>(&self, mut w: W, count: usize) -> std::io::Result<()> {
        writeln!(w, "index,eigenvalue")?;
        for j in 1..=count {
            writeln!(w, "{},{}", j, self.eigenvalue(j))?;
        }
        Ok(())
    }
}

/// Tail mass after skipping `skip` entries of the tail sequence.
fn tail_beyond(tail: &TailRule, skip: usize) -> f64 {
    match *tail {
        TailRule::Zero => 0.0,
        TailRule::PowerLawPairs {
            amplitude,
            exponent,
            first_freq,
        } => {
            let k = first_freq + (skip / 2) as u64;
            let full = amplitude * power_tail(exponent, k);
            if skip % 2 == 1 {
                full - 0.5 * amplitude * (k as f64).powf(-exponent)
            } else {
                full
            }
        }
    }
}

/// Operator spectrum of a circle kernel under the uniform marginal:
/// `{a₀} ∪ {a_k/2, a_k/2 : k ≥ 1}` re-sorted.
pub fn analytic_spectrum(kernel: &KernelSpec) -> Result<SpectrumModel> {
    analytic_spectrum_with(kernel, DEFAULT_EXPLICIT_PAIRS)
}

pub fn analytic_spectrum_with(kernel: &KernelSpec, explicit_pairs: usize) -> Result<SpectrumModel> {
    let KernelFamily::CircleFourier {
        a0,
        amplitude,
        smoothness,
        truncation,
    } = *kernel.family()
    else {
        return Err(Error::NonCircleKernel);
    };
    if amplitude == 0.0 {
        return Ok(SpectrumModel::finite(vec![a0]));
    }
    let p = 2.0 * smoothness;
    let coef = |k: usize| amplitude * (k as f64).powf(-p);
    match truncation {
        Some(n) => {
            let mut ev = Vec::with_capacity(2 * n + 1);
            ev.push(a0);
            for k in 1..=n {
                ev.push(0.5 * coef(k));
                ev.push(0.5 * coef(k));
            }
            Ok(SpectrumModel::finite(ev))
        }
        None => {
            // Grow the explicit prefix until a₀ sorts inside it.
            let mut pairs = explicit_pairs.max(1);
            while a0 > 0.0 && a0 < 0.5 * coef(pairs) {
                pairs *= 2;
            }
            let mut ev = Vec::with_capacity(2 * pairs + 1);
            if a0 > 0.0 {
                ev.push(a0);
            }
            for k in 1..=pairs {
                ev.push(0.5 * coef(k));
                ev.push(0.5 * coef(k));
            }
            Ok(SpectrumModel::new(
                ev,
                TailRule::PowerLawPairs {
                    amplitude,
                    exponent: p,
                    first_freq: pairs as u64 + 1,
                },
            ))
        }
    }
}

fn check_symmetric(g: &DMatrix<f64>) -> Result<()> {
    if !g.is_square() {
        return Err(Error::NotSymmetric {
            asymmetry: f64::INFINITY,
        });
    }
    let n = g.nrows();
    let scale = g.amax().max(f64::MIN_POSITIVE);
    let mut asym: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            asym = asym.max((g[(i, j)] - g[(j, i)]).abs());
        }
    }
    if asym > 1e-12 * scale {
        return Err(Error::NotSymmetric { asymmetry: asym });
    }
    Ok(())
}

/// Eigenvalues of `G/n` (dense symmetric solver), negatives clamped.
pub fn empirical_spectrum(gram: &DMatrix<f64>, n: usize) -> Result<SpectrumModel> {
    check_symmetric(gram)?;
    if n == 0 {
        return Err(Error::Empty("sample size"));
    }
    let scaled = gram / n as f64;
    let ev = scaled.symmetric_eigenvalues();
    Ok(SpectrumModel::finite(ev.iter().copied().collect()))
}

/// Leading `k` eigenvalues of `G/n` by block subspace iteration with
/// Rayleigh–Ritz; suited to large Gram matrices with decaying spectra.
pub fn empirical_top_eigenvalues(gram: &DMatrix<f64>, n: usize, k: usize) -> Result<Vec<f64>> {
    check_symmetric(gram)?;
    let dim = gram.nrows();
    if dim == 0 || n == 0 {
        return Err(Error::Empty("gram matrix"));
    }
    let k = k.min(dim);
    let block = (2 * k + 4).min(dim);
    // Deterministic, well-spread start block.
    let mut q = DMatrix::from_fn(dim, block, |i, j| {
        let t = (i as f64 + 0.5) / dim as f64;
        ((j + 1) as f64 * 2.399_963 * (i as f64 + 1.0) + t).sin() + if i % block == j { 1.0 } else { 0.0 }
    });
    let mut prev = vec![f64::INFINITY; k];
    for _ in 0..500 {
        let z = gram * &q;
        q = z.qr().q();
        let small = q.transpose() * gram * &q;
        let mut ev: Vec<f64> = small.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        let cur: Vec<f64> = ev[..k].iter().map(|v| (v / n as f64).max(0.0)).collect();
        let converged = cur
            .iter()
            .zip(&prev)
            .all(|(a, b)| (a - b).abs() <= 1e-12 * cur[0].max(f64::MIN_POSITIVE));
        prev = cur;
        if converged {
            break;
        }
    }
    Ok(prev)
}
