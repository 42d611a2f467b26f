//! Hinge-loss minimization over RKHS balls and the regularized estimator.
//!
//! The ball-constrained problem `min_{‖f‖≤R} Σ_i w_i (1 − y_i f(x_i))₊`
//! over the span of the kernel sections is solved through its concave dual
//! `max_{0≤u≤w} Σ u_i − R √(uᵀQu)`, `Q_ij = y_i y_j k(x_i, x_j)`, by exact
//! coordinate ascent. Every dual point gives a lower bound and a primal
//! direction `Σ u_i y_i k(x_i, ·)`; the gap between the two stops the
//! iteration.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_param, Error, Result};
use crate::kernel::{KernelSpec, RepresenterFn};
use crate::synth::Sample;

/// Regularizing function φ applied to `M‖g‖_k`.
#[derive(Clone)]
pub enum Regularizer {
    /// `φ(x) = x`.
    Linear,
    /// `φ(x) = 2x²`.
    Quadratic,
    /// A user function; see [`Regularizer::custom`].
    Custom { name: String, f: Arc<dyn Fn(f64) -> f64 + Send + Sync> },
}

impl Regularizer {
    /// Wraps `f` after checking `φ(0) = 0`, monotonicity and `φ(x) ≥ x`
    /// for `x ≥ 1/2` on a grid of `[0, 1000]`.
    pub fn custom(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let r = Regularizer::Custom {
            name: name.into(),
            f: Arc::new(f),
        };
        r.validate()?;
        Ok(r)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Regularizer::Linear => x,
            Regularizer::Quadratic => 2.0 * x * x,
            Regularizer::Custom { f, .. } => f(x),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Regularizer::Linear => "linear",
            Regularizer::Quadratic => "quadratic",
            Regularizer::Custom { name, .. } => name,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let at0 = self.eval(0.0);
        if at0 != 0.0 {
            return Err(Error::InvalidParameter {
                name: "phi(0)",
                value: at0,
                reason: "regularizer must vanish at zero",
            });
        }
        let mut prev = 0.0;
        for i in 1..=4000 {
            let x = 1000.0 * (i as f64 / 4000.0).powi(3);
            let v = self.eval(x);
            if !(v >= prev) {
                return Err(Error::InvalidParameter {
                    name: "phi",
                    value: x,
                    reason: "regularizer must be nondecreasing",
                });
            }
            if x >= 0.5 && v < x {
                return Err(Error::InvalidParameter {
                    name: "phi",
                    value: x,
                    reason: "regularizer must satisfy phi(x) >= x for x >= 1/2",
                });
            }
            prev = v;
        }
        Ok(())
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "linear" => Ok(Regularizer::Linear),
            "quadratic" => Ok(Regularizer::Quadratic),
            other => Err(Error::Config(format!("unknown regularizer '{other}' (expected linear or quadratic)"))),
        }
    }
}

impl fmt::Debug for Regularizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl PartialEq for Regularizer {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Regularizer::Linear, Regularizer::Linear) | (Regularizer::Quadratic, Regularizer::Quadratic) => true,
            (Regularizer::Custom { f: a, .. }, Regularizer::Custom { f: b, .. }) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

impl Serialize for Regularizer {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Regularizer {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        Regularizer::parse(&name).map_err(serde::de::Error::custom)
    }
}

/// Settings of the constrained and regularized solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub phi: Regularizer,
    /// Regularization level Λ.
    pub lambda: f64,
    /// Duality-gap tolerance, relative to `max(objective, 0.01)`.
    pub tol: f64,
    /// Coordinate sweeps allowed per ball problem.
    pub max_sweeps: usize,
    /// Geometric radius grid size of the outer search.
    pub grid_points: usize,
    /// Golden-section steps refining the best grid bracket.
    pub refine_steps: usize,
}

impl TrainConfig {
    pub fn new(phi: Regularizer, lambda: f64) -> Self {
        Self {
            phi,
            lambda,
            tol: 1e-6,
            max_sweeps: 20_000,
            grid_points: 64,
            refine_steps: 48,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.phi.validate()?;
        check_param("lambda", self.lambda, self.lambda > 0.0 && self.lambda.is_finite(), "must be positive and finite")?;
        check_param("tol", self.tol, self.tol > 0.0, "must be positive")?;
        if self.max_sweeps == 0 {
            return Err(Error::Config("max_sweeps must be positive".into()));
        }
        Ok(())
    }
}

/// A weighted hinge problem on fixed points: `Σ_i w_i (1 − y_i f(x_i))₊`.
#[derive(Clone, Debug)]
pub struct HingeProblem {
    kernel: KernelSpec,
    xs: Vec<f64>,
    ys: Vec<f64>,
    weights: Vec<f64>,
    q: DMatrix<f64>,
}

/// Output of one ball-constrained solve.
#[derive(Clone, Debug, PartialEq)]
pub struct BallSolution {
    pub radius: f64,
    /// Best primal value found (an upper bound on the ball minimum).
    pub primal: f64,
    /// Dual value at the final iterate (a lower bound on the ball minimum).
    pub lower: f64,
    /// Coefficients `γ` of `f = Σ γ_i y_i k(x_i, ·)` attaining `primal`.
    pub gamma: Vec<f64>,
    /// RKHS norm of that `f`.
    pub norm: f64,
    /// Final dual iterate, usable as a warm start.
    pub dual: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    /// Stopped because the lower bound exceeded the cutoff.
    pub cut_off: bool,
}

impl HingeProblem {
    /// Uniform weights `1/n` on a sample.
    pub fn new(kernel: &KernelSpec, sample: &Sample) -> Result<Self> {
        let n = sample.len();
        if n == 0 {
            return Err(Error::Empty("sample"));
        }
        Self::weighted(kernel, &sample.xs, &sample.ys, vec![1.0 / n as f64; n])
    }

    pub fn weighted(kernel: &KernelSpec, xs: &[f64], ys: &[f64], weights: Vec<f64>) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::Empty("sample"));
        }
        if xs.len() != ys.len() || xs.len() != weights.len() {
            return Err(Error::LengthMismatch {
                what: "points, labels and weights",
                left: xs.len(),
                right: ys.len().min(weights.len()),
            });
        }
        if let Some(&w) = weights.iter().find(|&&w| !(w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter {
                name: "weight",
                value: w,
                reason: "weights must be nonnegative",
            });
        }
        let mut q = kernel.gram(xs)?;
        let n = xs.len();
        for j in 0..n {
            for i in 0..n {
                q[(i, j)] *= ys[i] * ys[j];
            }
        }
        if let Some(i) = (0..n).find(|&i| q[(i, i)] < -1e-12) {
            return Err(Error::NotPsd { radicand: q[(i, i)] });
        }
        let xs = xs.iter().map(|&x| kernel.check_point(x)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kernel: kernel.clone(),
            xs,
            ys: ys.to_vec(),
            weights,
            q,
        })
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Groups of coincident points as `(indices, weight of +1, weight of −1)`.
    fn coincident_groups(&self) -> Vec<(Vec<usize>, f64, f64)> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| self.xs[a].total_cmp(&self.xs[b]));
        order
            .chunk_by(|&a, &b| self.xs[a] == self.xs[b])
            .map(|group| {
                let (mut pos, mut neg) = (0.0, 0.0);
                for &i in group {
                    if self.ys[i] > 0.0 {
                        pos += self.weights[i];
                    } else {
                        neg += self.weights[i];
                    }
                }
                (group.to_vec(), pos, neg)
            })
            .collect()
    }

    /// Loss floor ignoring the norm: each group of coincident points pays
    /// at least `2 min(w₊, w₋)`.
    pub fn pointwise_floor(&self) -> f64 {
        self.coincident_groups().iter().map(|(_, pos, neg)| 2.0 * pos.min(*neg)).sum()
    }

    /// Points whose unit margins attain the floor: the heavier label of
    /// every group (both copies dropped on ties).
    fn floor_support(&self) -> Vec<usize> {
        let mut set: Vec<usize> = self
            .coincident_groups()
            .into_iter()
            .filter(|(_, pos, neg)| pos != neg)
            .flat_map(|(group, pos, neg)| {
                let sign = if pos > neg { 1.0 } else { -1.0 };
                group.into_iter().filter(move |&i| self.ys[i] == sign && self.weights[i] > 0.0)
            })
            .collect();
        set.sort_unstable();
        set
    }

    fn qv(&self, v: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n];
        for (j, &vj) in v.iter().enumerate() {
            if vj != 0.0 {
                let col = self.q.column(j);
                for i in 0..n {
                    out[i] += vj * col[i];
                }
            }
        }
        out
    }

    /// The function `Σ γ_i y_i k(x_i, ·)`.
    pub fn representer(&self, gamma: &[f64]) -> RepresenterFn {
        let coeffs = gamma.iter().zip(&self.ys).map(|(g, y)| g * y).collect();
        RepresenterFn {
            kernel: self.kernel.clone(),
            anchors: self.xs.clone(),
            coeffs,
        }
    }

    /// Weighted hinge loss of `t · Σ γ_i y_i k(x_i, ·)` minimized over
    /// `t ∈ [0, t_max]`, given the margins `s = Qγ` of the unscaled function.
    fn line_search(&self, s: &[f64], t_max: f64) -> (f64, f64) {
        let mut events: Vec<(f64, f64, f64)> = s
            .iter()
            .zip(&self.weights)
            .filter(|(&si, &w)| si > 0.0 && w > 0.0 && 1.0 / si < t_max)
            .map(|(&si, &w)| (1.0 / si, w, si))
            .collect();
        events.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut a0: f64 = self.weights.iter().sum();
        let mut a1: f64 = s.iter().zip(&self.weights).map(|(si, w)| si * w).sum();
        let mut best = (a0, 0.0);
        for (t, w, si) in events {
            let v = a0 - t * a1;
            if v < best.0 {
                best = (v, t);
            }
            a0 -= w;
            a1 -= w * si;
        }
        if t_max.is_finite() {
            let v = a0 - t_max * a1;
            if v < best.0 {
                best = (v, t_max);
            }
        }
        (best.0.max(0.0), best.1)
    }

    /// Best scaling of the direction `γ` inside the ball of radius R.
    fn primal_along(&self, gamma: &[f64], radius: f64) -> Option<(f64, Vec<f64>, f64)> {
        let s = self.qv(gamma);
        let quad: f64 = gamma.iter().zip(&s).map(|(g, si)| g * si).sum();
        if !(quad > 0.0) {
            return None;
        }
        let norm = quad.sqrt();
        let (value, t) = self.line_search(&s, radius / norm);
        Some((value, gamma.iter().map(|g| g * t).collect(), t * norm))
    }

    /// Hard-margin direction: `max Σ α_i − ½ αᵀQα` over `α ≥ 0` on the
    /// points with positive weight.
    fn hard_margin_direction(&self, sweeps: usize) -> Vec<f64> {
        let n = self.len();
        let mut alpha = vec![0.0; n];
        let mut s = vec![0.0; n];
        for _ in 0..sweeps {
            let mut moved = 0.0f64;
            for i in 0..n {
                let a = self.q[(i, i)];
                if self.weights[i] <= 0.0 || a <= 0.0 {
                    continue;
                }
                let t = (alpha[i] + (1.0 - s[i]) / a).max(0.0);
                let delta = t - alpha[i];
                if delta != 0.0 {
                    let col = self.q.column(i);
                    for j in 0..n {
                        s[j] += delta * col[j];
                    }
                    alpha[i] = t;
                    moved = moved.max(delta.abs() * a);
                }
            }
            if moved < 1e-13 {
                break;
            }
        }
        alpha
    }

    /// Minimal-norm direction in the span of `set` with unit margins on it.
    fn unit_margin_direction(&self, set: &[usize]) -> Option<Vec<f64>> {
        if set.is_empty() {
            return None;
        }
        let m = set.len();
        let qss = DMatrix::from_fn(m, m, |a, b| self.q[(set[a], set[b])]);
        let ones = DVector::from_element(m, 1.0);
        let sol = match qss.clone().cholesky() {
            Some(ch) => ch.solve(&ones),
            None => qss.svd(true, true).solve(&ones, 1e-12).ok()?,
        };
        let mut out = vec![0.0; self.len()];
        for (a, &i) in set.iter().enumerate() {
            out[i] = sol[a];
        }
        out.iter().all(|v| v.is_finite()).then_some(out)
    }

    /// Candidate supports for the unit-margin system: coordinates strictly
    /// inside their dual box, points where the current primal `gamma` has
    /// margin close to one and, if asked, the floor support.
    fn margin_sets(&self, u: &[f64], gamma: &[f64], with_floor: bool) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut sets = Vec::new();
        if with_floor {
            sets.push(self.floor_support());
        }
        for slack in [1e-9, 1e-6, 1e-3] {
            sets.push((0..n).filter(|&i| u[i] > slack * self.weights[i] && u[i] < (1.0 - slack) * self.weights[i]).collect());
        }
        let margins = self.qv(gamma);
        for band in [1e-6, 1e-4, 1e-2] {
            sets.push((0..n).filter(|&i| self.weights[i] > 0.0 && (margins[i] - 1.0).abs() <= band).collect());
        }
        sets.sort();
        sets.dedup();
        sets
    }

    /// Solves the ball problem of radius `radius`. `warm` is a previous
    /// dual iterate; `cutoff` stops the solve once the lower bound exceeds it.
    pub fn solve_ball(&self, radius: f64, tol: f64, max_sweeps: usize, warm: Option<&[f64]>, cutoff: Option<f64>) -> Result<BallSolution> {
        check_param("R", radius, radius >= 0.0 && radius.is_finite(), "must be nonnegative and finite")?;
        let n = self.len();
        let total = self.total_weight();
        let zero = BallSolution {
            radius,
            primal: total,
            lower: total,
            gamma: vec![0.0; n],
            norm: 0.0,
            dual: self.weights.clone(),
            sweeps: 0,
            converged: true,
            cut_off: false,
        };
        if radius == 0.0 {
            return Ok(zero);
        }
        // Cold starts at large radii go through a ladder of smaller balls:
        // near the radius where the ball stops binding the dual is nonsmooth
        // and a cold coordinate ascent creeps.
        let mut ladder_sweeps = 0;
        let mut u: Vec<f64> = match warm {
            Some(w) if w.len() == n => w.iter().zip(&self.weights).map(|(&v, &c)| v.clamp(0.0, c)).collect(),
            _ if radius * self.q.diagonal().max().max(0.0).sqrt() > 4.0 => {
                let rung = self.solve_ball(0.25 * radius, tol, max_sweeps, None, None)?;
                ladder_sweeps = rung.sweeps;
                rung.dual
            }
            _ => self.weights.clone(),
        };
        let mut s = self.qv(&u);
        let mut quad: f64 = u.iter().zip(&s).map(|(a, b)| a * b).sum();
        let r2 = radius * radius;
        let mut best = (total, vec![0.0; n], 0.0);
        let floor = self.pointwise_floor();
        let mut lower = floor;
        let mut tried_hard_margin = false;
        let mut sweeps = 0;
        let mut converged = false;
        let mut cut_off = matches!(cutoff, Some(cut) if lower > cut);
        while !cut_off && sweeps < max_sweeps {
            sweeps += 1;
            for i in 0..n {
                let a = self.q[(i, i)];
                let ui = u[i];
                let t = if a <= 0.0 || a * r2 <= 1.0 {
                    self.weights[i]
                } else {
                    let b = s[i] - a * ui;
                    let c = (quad - 2.0 * ui * s[i] + a * ui * ui).max(0.0);
                    let disc = (a * c - b * b).max(0.0);
                    let z = (disc / (a * r2 - 1.0)).sqrt();
                    ((z - b) / a).clamp(0.0, self.weights[i])
                };
                let delta = t - ui;
                if delta != 0.0 {
                    let b = s[i] - a * ui;
                    let c = (quad - 2.0 * ui * s[i] + a * ui * ui).max(0.0);
                    let col = self.q.column(i);
                    for j in 0..n {
                        s[j] += delta * col[j];
                    }
                    u[i] = t;
                    quad = c + 2.0 * t * b + a * t * t;
                }
            }
            if sweeps % 64 == 0 {
                s = self.qv(&u);
            }
            quad = u.iter().zip(&s).map(|(a, b)| a * b).sum::<f64>();
            if quad < -1e-9 * total * total * self.q.diagonal().max().max(1.0) {
                return Err(Error::NotPsd { radicand: quad });
            }
            quad = quad.max(0.0);
            lower = lower.max(u.iter().sum::<f64>() - radius * quad.sqrt());
            if let Some((v, g, norm)) = self.primal_along(&u, radius) {
                if v < best.0 {
                    best = (v, g, norm);
                }
            }
            // A vanishing dual iterate signals a (nearly) separable problem,
            // where the primal is better recovered from the hard-margin direction.
            let mass: f64 = u.iter().sum();
            if !tried_hard_margin && sweeps >= 16 && mass <= 1e-3 * total && best.0 > lower {
                tried_hard_margin = true;
                let dir = self.hard_margin_direction(max_sweeps.min(2000));
                if let Some((v, g, norm)) = self.primal_along(&dir, radius) {
                    if v < best.0 {
                        best = (v, g, norm);
                    }
                }
            }
            // When the ball is not binding the dual creeps towards `Qu = 0`,
            // where it is not differentiable, and `u` no longer points at the
            // primal. The primal is then a hinge minimizer with unit margins
            // on a support read off the dual box or the best primal so far.
            if sweeps >= 16 && sweeps.is_power_of_two() && mass > 1e-3 * total && best.0 > lower {
                for set in self.margin_sets(&u, &best.1, floor > 0.0) {
                    if let Some((v, g, norm)) = self.unit_margin_direction(&set).and_then(|d| self.primal_along(&d, radius)) {
                        if v < best.0 {
                            best = (v, g, norm);
                        }
                    }
                }
            }
            let gap = best.0 - lower;
            if gap <= tol * best.0.max(0.01 * total) {
                converged = true;
                break;
            }
            if let Some(cut) = cutoff {
                if lower > cut {
                    cut_off = true;
                    break;
                }
            }
        }
        let (primal, gamma, norm) = best;
        Ok(BallSolution {
            radius,
            primal,
            lower: lower.min(primal),
            gamma,
            norm,
            dual: u,
            sweeps: sweeps + ladder_sweeps,
            converged,
            cut_off,
        })
    }
}

/// Result of a ball-constrained fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstrainedFit {
    pub g: RepresenterFn,
    pub radius: f64,
    pub empirical_loss: f64,
    /// Certified lower bound on the ball minimum.
    pub lower_bound: f64,
    pub norm: f64,
    pub sweeps: usize,
    /// False when the sweep budget ran out before the gap closed.
    pub converged: bool,
}

/// `min_{‖f‖_k ≤ R} (1/n) Σ (1 − y_i f(x_i))₊` over the span of the sample.
pub fn train_constrained(sample: &Sample, kernel: &KernelSpec, radius: f64, cfg: &TrainConfig) -> Result<ConstrainedFit> {
    let problem = HingeProblem::new(kernel, sample)?;
    constrained_on(&problem, radius, cfg)
}

pub fn constrained_on(problem: &HingeProblem, radius: f64, cfg: &TrainConfig) -> Result<ConstrainedFit> {
    let sol = problem.solve_ball(radius, cfg.tol, cfg.max_sweeps, None, None)?;
    Ok(ConstrainedFit {
        g: problem.representer(&sol.gamma),
        radius,
        empirical_loss: sol.primal,
        lower_bound: sol.lower,
        norm: sol.norm,
        sweeps: sol.sweeps,
        converged: sol.converged,
    })
}

/// One evaluated radius of the outer search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InnerValue {
    pub radius: f64,
    /// Upper bound on the constrained empirical loss at this radius.
    pub loss: f64,
    /// Certified lower bound on it.
    pub lower: f64,
    pub sweeps: usize,
    pub converged: bool,
    pub cut_off: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub evaluations: usize,
    pub total_sweeps: usize,
    /// Every solved (not cut off) ball problem closed its gap.
    pub all_converged: bool,
}

/// The regularized estimator and the trace of its outer search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub g_hat: RepresenterFn,
    pub phi: Regularizer,
    pub lambda: f64,
    /// `P_n ℓ(ĝ) + Λ φ(M‖ĝ‖_k)`.
    pub objective: f64,
    pub empirical_loss: f64,
    /// `‖ĝ‖_k`.
    pub norm: f64,
    /// Radius of the ball problem that produced ĝ.
    pub radius: f64,
    /// Evaluated radii in increasing order.
    pub inner_values: Vec<InnerValue>,
    pub diagnostics: FitDiagnostics,
}

impl FitResult {
    /// Inner value record at exactly `radius`, if evaluated.
    pub fn inner_at(&self, radius: f64) -> Option<&InnerValue> {
        self.inner_values.iter().find(|v| v.radius == radius)
    }
}

struct OuterSearch<'a> {
    problem: &'a HingeProblem,
    cfg: &'a TrainConfig,
    m: f64,
    evaluated: Vec<(InnerValue, Vec<f64>)>,
    best: Option<(f64, f64, BallSolution)>,
    total_sweeps: usize,
}

impl OuterSearch<'_> {
    fn penalty(&self, radius: f64) -> f64 {
        self.cfg.lambda * self.cfg.phi.eval(self.m * radius)
    }

    fn warm(&self, radius: f64) -> Option<Vec<f64>> {
        self.evaluated
            .iter()
            .filter(|(v, _)| !v.cut_off)
            .min_by(|a, b| (a.0.radius - radius).abs().total_cmp(&(b.0.radius - radius).abs()))
            .map(|(_, u)| u.clone())
    }

    /// Solves at `radius` and returns its objective upper bound.
    fn eval(&mut self, radius: f64) -> Result<f64> {
        if let Some((v, _)) = self.evaluated.iter().find(|(v, _)| v.radius == radius) {
            return Ok(v.loss + self.penalty(radius));
        }
        let pen = self.penalty(radius);
        let cutoff = self.best.as_ref().map(|b| b.0 - pen);
        let warm = self.warm(radius);
        let sol = self.problem.solve_ball(radius, self.cfg.tol, self.cfg.max_sweeps, warm.as_deref(), cutoff)?;
        self.total_sweeps += sol.sweeps;
        // Feasible points of smaller balls bound this one from above.
        let nested = self
            .evaluated
            .iter()
            .filter(|(v, _)| v.radius < radius)
            .map(|(v, _)| v.loss)
            .fold(f64::INFINITY, f64::min);
        let value = InnerValue {
            radius,
            loss: sol.primal.min(nested),
            lower: sol.lower,
            sweeps: sol.sweeps,
            converged: sol.converged,
            cut_off: sol.cut_off,
        };
        let objective = sol.primal + self.cfg.lambda * self.cfg.phi.eval(self.m * sol.norm);
        let tie = self.cfg.tol * objective.abs().max(0.01);
        let better = match &self.best {
            None => true,
            Some((obj, r, _)) => objective < obj - tie || (objective <= obj + tie && radius < *r && objective <= *obj),
        };
        if better {
            self.best = Some((objective, radius, sol.clone()));
        }
        let pos = self.evaluated.partition_point(|(v, _)| v.radius < radius);
        self.evaluated.insert(pos, (value, sol.dual));
        Ok(value.loss + pen)
    }
}

/// Radii of the outer search: zero, a geometric grid up to `n/M` and any
/// extra radii requested.
pub fn outer_grid(n: usize, m: f64, points: usize, extra: &[f64]) -> Vec<f64> {
    let hi = n as f64 / m;
    let lo = 1e-3 / m;
    let mut grid = vec![0.0];
    if points >= 2 {
        grid.extend((0..points).map(|i| lo * (hi / lo).powf(i as f64 / (points - 1) as f64)));
    } else if points == 1 {
        grid.push(hi);
    }
    grid.extend(extra.iter().copied().filter(|&r| r >= 0.0 && r.is_finite()));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// `ĝ = argmin_g (1/n) Σ (1 − y_i g(x_i))₊ + Λ φ(M‖g‖_k)`, realized as an
/// outer search over ball radii.
pub fn train_regularized(sample: &Sample, kernel: &KernelSpec, cfg: &TrainConfig) -> Result<FitResult> {
    let problem = HingeProblem::new(kernel, sample)?;
    regularized_on(&problem, cfg, &[])
}

/// [`train_regularized`] on a prepared problem; `extra_radii` are always
/// evaluated (with the early cutoff) in addition to the default grid.
pub fn regularized_on(problem: &HingeProblem, cfg: &TrainConfig, extra_radii: &[f64]) -> Result<FitResult> {
    cfg.validate()?;
    let m = problem.kernel().sup_bound();
    let grid = outer_grid(problem.len(), m, cfg.grid_points, extra_radii);
    let mut search = OuterSearch {
        problem,
        cfg,
        m,
        evaluated: Vec::new(),
        best: None,
        total_sweeps: 0,
    };
    for &r in &grid {
        search.eval(r)?;
    }
    // Golden-section refinement inside the bracket around the best grid radius.
    let objs: Vec<f64> = search.evaluated.iter().map(|(v, _)| v.loss + search.penalty(v.radius)).collect();
    let best_idx = (0..objs.len()).fold(0, |b, i| if objs[i] < objs[b] { i } else { b });
    let radii: Vec<f64> = search.evaluated.iter().map(|(v, _)| v.radius).collect();
    let mut lo = radii[best_idx.saturating_sub(1)];
    let mut hi = radii[(best_idx + 1).min(radii.len() - 1)];
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = search.eval(x1)?;
    let mut f2 = search.eval(x2)?;
    for _ in 0..cfg.refine_steps {
        if hi - lo <= 1e-9 * hi.max(1e-12) {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = search.eval(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = search.eval(x2)?;
        }
    }
    let (objective, radius, sol) = search.best.take().expect("grid is nonempty");
    let inner_values: Vec<InnerValue> = search.evaluated.iter().map(|(v, _)| *v).collect();
    let all_converged = inner_values.iter().all(|v| v.converged || v.cut_off);
    Ok(FitResult {
        g_hat: problem.representer(&sol.gamma),
        phi: cfg.phi.clone(),
        lambda: cfg.lambda,
        objective,
        empirical_loss: sol.primal,
        norm: sol.norm,
        radius,
        diagnostics: FitDiagnostics {
            evaluations: inner_values.len(),
            total_sweeps: search.total_sweeps,
            all_converged,
        },
        inner_values,
    })
}

/// Outcome of the quadratic-regularizer dual check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualCheck {
    /// Primal objective of the function rebuilt from the dual variables.
    pub objective: f64,
    pub dual: f64,
    pub gap: f64,
    pub sweeps: usize,
}

/// Solves `min_f (1/n) Σ (1 − y_i f(x_i))₊ + 2ΛM²‖f‖_k²` through its box
/// dual `max_{0≤α≤1/n} Σ α_i − αᵀQα/(4μ)`, `μ = 2ΛM²`, by coordinate ascent
/// until the duality gap is at most `1e-8`.
pub fn dual_svm0_crosscheck(sample: &Sample, kernel: &KernelSpec, lambda: f64) -> Result<DualCheck> {
    check_param("lambda", lambda, lambda > 0.0, "must be positive")?;
    let problem = HingeProblem::new(kernel, sample)?;
    let n = problem.len();
    let m = kernel.sup_bound();
    let mu = 2.0 * lambda * m * m;
    let cap = 1.0 / n as f64;
    let mut alpha = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        for i in 0..n {
            let a = problem.q[(i, i)];
            if a <= 0.0 {
                alpha[i] = cap;
                continue;
            }
            let grad = 1.0 - s[i] / (2.0 * mu);
            let t = (alpha[i] + grad * 2.0 * mu / a).clamp(0.0, cap);
            let delta = t - alpha[i];
            if delta != 0.0 {
                let col = problem.q.column(i);
                for j in 0..n {
                    s[j] += delta * col[j];
                }
                alpha[i] = t;
            }
        }
        if sweeps % 64 == 0 {
            s = problem.qv(&alpha);
        }
        let quad: f64 = alpha.iter().zip(&s).map(|(a, b)| a * b).sum::<f64>().max(0.0);
        let dual = alpha.iter().sum::<f64>() - quad / (4.0 * mu);
        let loss: f64 = s.iter().map(|si| (1.0 - si / (2.0 * mu)).max(0.0)).sum::<f64>() / n as f64;
        let objective = loss + quad / (4.0 * mu);
        let gap = objective - dual;
        if gap <= 1e-8 || sweeps >= 1_000_000 {
            return Ok(DualCheck {
                objective,
                dual,
                gap,
                sweeps,
            });
        }
    }
}
