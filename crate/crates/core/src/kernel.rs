//! Kernels, Gram matrices and finite kernel expansions.
//!
//! Three families are supported:
//!
//! * `gaussian` on the real line, `k(x, x') = exp(-(x - x')² / (2σ²))`, with `M = 1`;
//! * `circle_fourier` on the unit circle [0, 1), a translation-invariant kernel
//!   `k(z) = a₀ + Σ_{k≥1} A k^{-2s} cos(2πkz)`. Integer smoothness up to 6 is
//!   evaluated exactly through Bernoulli polynomials; otherwise (or when a
//!   truncation is requested) the series is summed up to frequency `N`;
//! * `table`, explicit symmetric values on a finite set of grid points.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_param, Error, Result};
use crate::special::{periodic_cos_series, zeta, MAX_CLOSED_FORM_ORDER};

/// Frequency cut-off used when a circle kernel has no closed form.
pub const DEFAULT_TRUNCATION: usize = 100_000;

/// Relative PSD slack for Gram matrices (`λ_min ≥ -PSD_TOL · trace`).
pub const PSD_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum KernelFamily {
    Gaussian {
        bandwidth: f64,
    },
    CircleFourier {
        a0: f64,
        amplitude: f64,
        smoothness: f64,
        /// `None` means the full series in closed form.
        truncation: Option<usize>,
    },
    Table {
        points: Vec<f64>,
        /// Row-major `points.len()²` values.
        values: Vec<f64>,
    },
}

#[derive(Clone, Default)]
struct Coeffs(Option<Arc<[f64]>>);

impl fmt::Debug for Coeffs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Some(c) => write!(f, "<{} coefficients>", c.len()),
            None => write!(f, "<none>"),
        }
    }
}

impl PartialEq for Coeffs {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

/// A positive semi-definite kernel together with its sup bound `M`
/// (`k(x, x) ≤ M²`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelConfig", into = "KernelConfig")]
pub struct KernelSpec {
    family: KernelFamily,
    sup_bound: f64,
    coeffs: Coeffs,
}

impl KernelSpec {
    pub fn gaussian(bandwidth: f64) -> Result<Self> {
        check_param("bandwidth", bandwidth, bandwidth > 0.0, "must be positive")?;
        Ok(Self {
            family: KernelFamily::Gaussian { bandwidth },
            sup_bound: 1.0,
            coeffs: Coeffs::default(),
        })
    }

    /// Circle kernel with the default evaluation rule: exact closed form for
    /// integer `s ≤ 6`, otherwise a sum truncated at [`DEFAULT_TRUNCATION`].
    pub fn circle(a0: f64, amplitude: f64, smoothness: f64) -> Result<Self> {
        let truncation = if closed_form_order(smoothness).is_some() {
            None
        } else {
            Some(DEFAULT_TRUNCATION)
        };
        Self::circle_fourier(a0, amplitude, smoothness, truncation)
    }

    pub fn circle_fourier(a0: f64, amplitude: f64, smoothness: f64, truncation: Option<usize>) -> Result<Self> {
        check_param("a0", a0, a0 >= 0.0, "must be nonnegative")?;
        check_param("amplitude", amplitude, amplitude >= 0.0, "must be nonnegative")?;
        check_param("smoothness", smoothness, smoothness > 0.5, "must exceed 1/2")?;
        if truncation == Some(0) {
            return Err(Error::InvalidParameter {
                name: "truncation",
                value: 0.0,
                reason: "must be positive",
            });
        }
        if truncation.is_none() && closed_form_order(smoothness).is_none() {
            return Err(Error::InvalidParameter {
                name: "smoothness",
                value: smoothness,
                reason: "the untruncated series needs an integer smoothness ≤ 6",
            });
        }
        let coeffs = truncation.map(|n| {
            (1..=n)
                .map(|k| amplitude * (k as f64).powf(-2.0 * smoothness))
                .collect::<Arc<[f64]>>()
        });
        let diag = a0
            + match &coeffs {
                Some(c) => c.iter().rev().sum::<f64>(),
                None => amplitude * zeta(2.0 * smoothness),
            };
        Ok(Self {
            family: KernelFamily::CircleFourier {
                a0,
                amplitude,
                smoothness,
                truncation,
            },
            sup_bound: diag.sqrt(),
            coeffs: Coeffs(coeffs),
        })
    }

    pub fn table(points: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::Empty("table kernel points"));
        }
        if values.len() != n * n {
            return Err(Error::LengthMismatch {
                what: "table values vs points²",
                left: values.len(),
                right: n * n,
            });
        }
        let mut asym: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                asym = asym.max((values[i * n + j] - values[j * n + i]).abs());
            }
        }
        if asym > 1e-12 {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        let diag = (0..n).map(|i| values[i * n + i]).fold(0.0, f64::max);
        Ok(Self {
            family: KernelFamily::Table { points, values },
            sup_bound: diag.sqrt(),
            coeffs: Coeffs::default(),
        })
    }

    /// Overrides the sup bound; it may not be smaller than `√ max k(x,x)`.
    pub fn with_sup_bound(mut self, m: f64) -> Result<Self> {
        check_param("sup_bound", m, m > 0.0 && m >= self.sup_bound * (1.0 - 1e-12), "below sqrt(max k(x,x))")?;
        self.sup_bound = m;
        Ok(self)
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            KernelFamily::Gaussian { .. } => "gaussian",
            KernelFamily::CircleFourier { .. } => "circle_fourier",
            KernelFamily::Table { .. } => "table",
        }
    }

    /// `M` with `k(x, x) ≤ M²`.
    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    pub fn is_circle(&self) -> bool {
        matches!(self.family, KernelFamily::CircleFourier { .. })
    }

    /// Fourier coefficient `a_k` (k = 0 gives a₀).
    pub fn circle_coefficient(&self, k: u64) -> Result<f64> {
        match &self.family {
            KernelFamily::CircleFourier {
                a0,
                amplitude,
                smoothness,
                truncation,
            } => Ok(if k == 0 {
                *a0
            } else if truncation.is_some_and(|n| k as usize > n) {
                0.0
            } else {
                amplitude * (k as f64).powf(-2.0 * smoothness)
            }),
            _ => Err(Error::NonCircleKernel),
        }
    }

    /// Bound on the series remainder dropped by truncation,
    /// `A N^{1-2s} / (2s - 1)`; zero for closed-form and non-circle kernels.
    pub fn truncation_remainder(&self) -> f64 {
        match self.family {
            KernelFamily::CircleFourier {
                amplitude,
                smoothness,
                truncation: Some(n),
                ..
            } => amplitude * (n as f64).powf(1.0 - 2.0 * smoothness) / (2.0 * smoothness - 1.0),
            _ => 0.0,
        }
    }

    /// Whether expansions in this kernel have derivative kinks at their
    /// anchors (relevant for quadrature panel placement).
    pub fn kinked_at_anchors(&self) -> bool {
        self.is_circle()
    }

    /// Validates and normalizes an input point.
    pub fn check_point(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::Domain {
                family: self.family_name(),
                x,
            });
        }
        match &self.family {
            KernelFamily::Gaussian { .. } => Ok(x),
            KernelFamily::CircleFourier { .. } => Ok(x.rem_euclid(1.0)),
            KernelFamily::Table { points, .. } => {
                if points.iter().any(|&p| (p - x).abs() <= 1e-12) {
                    Ok(x)
                } else {
                    Err(Error::Domain { family: "table", x })
                }
            }
        }
    }

    pub fn eval(&self, x: f64, x2: f64) -> Result<f64> {
        let x = self.check_point(x)?;
        let x2 = self.check_point(x2)?;
        Ok(self.eval_unchecked(x, x2))
    }

    /// Evaluation for points already passed through [`Self::check_point`].
    pub(crate) fn eval_unchecked(&self, x: f64, x2: f64) -> f64 {
        match &self.family {
            KernelFamily::Gaussian { bandwidth } => {
                let d = x - x2;
                (-d * d / (2.0 * bandwidth * bandwidth)).exp()
            }
            KernelFamily::CircleFourier {
                a0,
                amplitude,
                smoothness,
                ..
            } => {
                let z = (x - x2).rem_euclid(1.0);
                let z = z.min(1.0 - z);
                match &self.coeffs.0 {
                    Some(c) => a0 + truncated_cos_series(c, z),
                    None => {
                        let s = closed_form_order(*smoothness).expect("validated at construction");
                        a0 + amplitude * periodic_cos_series(s, z)
                    }
                }
            }
            KernelFamily::Table { points, values } => {
                let n = points.len();
                let i = nearest(points, x);
                let j = nearest(points, x2);
                values[i * n + j]
            }
        }
    }

    /// Gram matrix `K_ij = k(x_i, x_j)`.
    pub fn gram(&self, xs: &[f64]) -> Result<DMatrix<f64>> {
        if xs.is_empty() {
            return Err(Error::Empty("gram input points"));
        }
        let pts = xs.iter().map(|&x| self.check_point(x)).collect::<Result<Vec<_>>>()?;
        let n = pts.len();
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.eval_unchecked(pts[i], pts[j]);
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        Ok(g)
    }

    /// Cross-kernel matrix `K_ij = k(xs_i, ys_j)`.
    pub fn cross(&self, xs: &[f64], ys: &[f64]) -> Result<DMatrix<f64>> {
        let a = xs.iter().map(|&x| self.check_point(x)).collect::<Result<Vec<_>>>()?;
        let b = ys.iter().map(|&x| self.check_point(x)).collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_fn(a.len(), b.len(), |i, j| self.eval_unchecked(a[i], b[j])))
    }

    /// Structured-text (TOML) form.
    pub fn to_toml(&self) -> String {
        toml::to_string(&KernelConfig::from(self.clone())).expect("kernel config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: KernelConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::try_from(cfg)
    }
}

fn nearest(points: &[f64], x: f64) -> usize {
    points
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - x).abs().total_cmp(&(b.1 - x).abs()))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

pub(crate) fn closed_form_order(s: f64) -> Option<u32> {
    let r = s.round();
    if (s - r).abs() < 1e-12 && r >= 1.0 && r <= f64::from(MAX_CLOSED_FORM_ORDER) {
        Some(r as u32)
    } else {
        None
    }
}

/// Σ_k c_k cos(2πkz) using a rotating phasor that is re-anchored every 64 terms.
fn truncated_cos_series(c: &[f64], z: f64) -> f64 {
    let (s1, c1) = (2.0 * PI * z).sin_cos();
    let mut acc = 0.0;
    for (block, chunk) in c.chunks(64).enumerate() {
        let k0 = (block * 64 + 1) as f64;
        let (mut sk, mut ck) = (2.0 * PI * (k0 * z).fract()).sin_cos();
        for &a in chunk {
            acc += a * ck;
            let next_c = ck * c1 - sk * s1;
            sk = sk * c1 + ck * s1;
            ck = next_c;
        }
    }
    acc
}

/// The serialized form of a kernel.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelConfig {
    pub family: String,
    #[serde(default)]
    pub parameters: KernelParameters,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sup_bound: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct KernelParameters {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

fn required(v: Option<f64>, name: &str) -> Result<f64> {
    v.ok_or_else(|| Error::Config(format!("missing kernel parameter `{name}`")))
}

impl TryFrom<KernelConfig> for KernelSpec {
    type Error = Error;

    fn try_from(cfg: KernelConfig) -> Result<Self> {
        let p = cfg.parameters;
        let spec = match cfg.family.as_str() {
            "gaussian" => KernelSpec::gaussian(required(p.bandwidth, "bandwidth")?)?,
            "circle_fourier" => {
                let a0 = p.a0.unwrap_or(1.0);
                let amplitude = required(p.amplitude, "amplitude")?;
                let s = required(p.smoothness, "smoothness")?;
                match cfg.truncation {
                    Some(n) => KernelSpec::circle_fourier(a0, amplitude, s, Some(n))?,
                    None => KernelSpec::circle(a0, amplitude, s)?,
                }
            }
            "table" => KernelSpec::table(
                p.points.ok_or_else(|| Error::Config("missing `points`".into()))?,
                p.values.ok_or_else(|| Error::Config("missing `values`".into()))?,
            )?,
            other => return Err(Error::Config(format!("unknown kernel family `{other}`"))),
        };
        match cfg.sup_bound {
            Some(m) => spec.with_sup_bound(m),
            None => Ok(spec),
        }
    }
}

impl From<KernelSpec> for KernelConfig {
    fn from(k: KernelSpec) -> Self {
        let mut parameters = KernelParameters::default();
        let mut truncation = None;
        let family = k.family_name();
        match k.family {
            KernelFamily::Gaussian { bandwidth } => parameters.bandwidth = Some(bandwidth),
            KernelFamily::CircleFourier {
                a0,
                amplitude,
                smoothness,
                truncation: t,
            } => {
                parameters.a0 = Some(a0);
                parameters.amplitude = Some(amplitude);
                parameters.smoothness = Some(smoothness);
                truncation = t;
            }
            KernelFamily::Table { points, values } => {
                parameters.points = Some(points);
                parameters.values = Some(values);
            }
        }
        KernelConfig {
            family: family.to_string(),
            parameters,
            sup_bound: Some(k.sup_bound),
            truncation,
        }
    }
}

/// A finite kernel expansion `f = Σ_i c_i k(x_i, ·)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepresenterFn {
    pub kernel: KernelSpec,
    pub anchors: Vec<f64>,
    pub coeffs: Vec<f64>,
}

impl RepresenterFn {
    pub fn new(kernel: KernelSpec, anchors: Vec<f64>, coeffs: Vec<f64>) -> Result<Self> {
        if anchors.len() != coeffs.len() {
            return Err(Error::LengthMismatch {
                what: "anchors vs coefficients",
                left: anchors.len(),
                right: coeffs.len(),
            });
        }
        let anchors = anchors
            .into_iter()
            .map(|x| kernel.check_point(x))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kernel,
            anchors,
            coeffs,
        })
    }

    pub fn zero(kernel: KernelSpec) -> Self {
        Self {
            kernel,
            anchors: Vec::new(),
            coeffs: Vec::new(),
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let x = self.kernel.check_point(x)?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: f64) -> f64 {
        self.anchors
            .iter()
            .zip(&self.coeffs)
            .filter(|(_, &c)| c != 0.0)
            .map(|(&a, &c)| c * self.kernel.eval_unchecked(a, x))
            .sum()
    }

    /// `cᵀ K c`, clamped at zero when within rounding of it.
    pub fn norm_sq(&self) -> Result<f64> {
        if self.anchors.is_empty() {
            return Ok(0.0);
        }
        let g = self.kernel.gram(&self.anchors)?;
        let c = nalgebra::DVector::from_column_slice(&self.coeffs);
        let q = c.dot(&(&g * &c));
        let scale = self.coeffs.iter().map(|v| v.abs()).sum::<f64>().powi(2) * self.kernel.sup_bound().powi(2);
        if q < -1e-9 * scale.max(1.0) {
            return Err(Error::NotPsd { radicand: q });
        }
        Ok(q.max(0.0))
    }

    pub fn norm(&self) -> Result<f64> {
        self.norm_sq().map(f64::sqrt)
    }

    /// `a·self + b·other` over the union of anchors.
    pub fn combine(&self, a: f64, other: &RepresenterFn, b: f64) -> Result<Self> {
        if self.kernel != other.kernel {
            return Err(Error::Config("cannot combine expansions in different kernels".into()));
        }
        let mut anchors = self.anchors.clone();
        let mut coeffs: Vec<f64> = self.coeffs.iter().map(|c| a * c).collect();
        for (&x, &c) in other.anchors.iter().zip(&other.coeffs) {
            match anchors.iter().position(|&y| y == x) {
                Some(i) => coeffs[i] += b * c,
                None => {
                    anchors.push(x);
                    coeffs.push(b * c);
                }
            }
        }
        Ok(Self {
            kernel: self.kernel.clone(),
            anchors,
            coeffs,
        })
    }
}

/// Smallest eigenvalue check `λ_min ≥ -PSD_TOL · trace`.
pub fn is_psd(g: &DMatrix<f64>) -> bool {
    let trace = g.trace();
    let eig = g.clone().symmetric_eigenvalues();
    eig.iter().all(|&l| l >= -PSD_TOL * trace.abs().max(f64::MIN_POSITIVE))
}
