//! Synthetic classification problems on the circle `[0, 1)` with uniform
//! marginal, a certified noise gap and a closed-form Bayes classifier.

use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_param, Error, Result};

/// Shape of the regression function `η(x) = P(Y = 1 | X = x)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum EtaForm {
    /// `1/2 + η₀ · sgn(sin 2πmx)`.
    HardGap { freq: u32, eta0: f64 },
    /// `1/2 + sgn(sin 2πmx) · (η₀ + (1/2 − η₁ − η₀)|sin 2πmx|)`.
    Banded { freq: u32, eta0: f64, eta1: f64 },
}

/// Uniform marginal on the circle with conditional law given by an [`EtaForm`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EtaForm", into = "EtaForm")]
pub struct SyntheticDist {
    form: EtaForm,
}

impl TryFrom<EtaForm> for SyntheticDist {
    type Error = Error;

    fn try_from(form: EtaForm) -> Result<Self> {
        match form {
            EtaForm::HardGap { freq, eta0 } => Self::hard_gap(freq, eta0),
            EtaForm::Banded { freq, eta0, eta1 } => Self::banded(freq, eta0, eta1),
        }
    }
}

impl From<SyntheticDist> for EtaForm {
    fn from(d: SyntheticDist) -> Self {
        d.form
    }
}

fn check_freq(freq: u32) -> Result<()> {
    check_param("m", f64::from(freq), freq >= 1, "frequency must be at least 1")
}

impl SyntheticDist {
    pub fn hard_gap(freq: u32, eta0: f64) -> Result<Self> {
        check_freq(freq)?;
        check_param("eta0", eta0, eta0 > 0.0 && eta0 <= 0.5, "must lie in (0, 1/2]")?;
        Ok(Self {
            form: EtaForm::HardGap { freq, eta0 },
        })
    }

    pub fn banded(freq: u32, eta0: f64, eta1: f64) -> Result<Self> {
        check_freq(freq)?;
        check_param("eta0", eta0, eta0 > 0.0 && eta0 <= 0.5, "must lie in (0, 1/2]")?;
        check_param("eta1", eta1, eta1 > 0.0 && eta1 <= 0.5, "must lie in (0, 1/2]")?;
        check_param("eta0 + eta1", eta0 + eta1, eta0 + eta1 <= 0.5, "must not exceed 1/2")?;
        Ok(Self {
            form: EtaForm::Banded { freq, eta0, eta1 },
        })
    }

    pub fn form(&self) -> EtaForm {
        self.form
    }

    pub fn freq(&self) -> u32 {
        match self.form {
            EtaForm::HardGap { freq, .. } | EtaForm::Banded { freq, .. } => freq,
        }
    }

    /// Gap η₀ with `|η − 1/2| ≥ η₀`.
    pub fn eta0(&self) -> f64 {
        match self.form {
            EtaForm::HardGap { eta0, .. } | EtaForm::Banded { eta0, .. } => eta0,
        }
    }

    /// Largest η₁ with `min(η, 1 − η) ≥ η₁`.
    pub fn eta1(&self) -> f64 {
        match self.form {
            EtaForm::HardGap { eta0, .. } => 0.5 - eta0,
            EtaForm::Banded { eta1, .. } => eta1,
        }
    }

    fn check(x: f64) -> Result<()> {
        if (0.0..1.0).contains(&x) {
            Ok(())
        } else {
            Err(Error::Domain {
                family: "circle distribution",
                x,
            })
        }
    }

    /// `sgn(sin 2πmx)` with `sgn(0) = +1`.
    fn wave_sign(&self, x: f64) -> f64 {
        let t = 2.0 * f64::from(self.freq()) * x;
        let k = t.floor();
        if t == k || k.rem_euclid(2.0) == 0.0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn eta(&self, x: f64) -> Result<f64> {
        Self::check(x)?;
        Ok(self.eta_unchecked(x))
    }

    pub(crate) fn eta_unchecked(&self, x: f64) -> f64 {
        let sign = self.wave_sign(x);
        match self.form {
            EtaForm::HardGap { eta0, .. } => 0.5 + eta0 * sign,
            EtaForm::Banded { freq, eta0, eta1 } => {
                let amp = (2.0 * PI * f64::from(freq) * x).sin().abs();
                0.5 + sign * (eta0 + (0.5 - eta1 - eta0) * amp)
            }
        }
    }

    /// Bayes classifier `s*(x) = sgn(η(x) − 1/2)`.
    pub fn bayes(&self, x: f64) -> Result<f64> {
        Self::check(x)?;
        Ok(self.wave_sign(x))
    }

    pub(crate) fn bayes_unchecked(&self, x: f64) -> f64 {
        self.wave_sign(x)
    }

    /// Sign changes of `s*` (and jumps of η): `k/(2m)` for `0 ≤ k ≤ 2m`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let m2 = 2 * self.freq();
        (0..=m2).map(|k| f64::from(k) / f64::from(m2)).collect()
    }

    /// `n` labelled points from the stream `stream` of `seed`.
    pub fn sample(&self, n: usize, seed: u64, stream: u64) -> Sample {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        self.sample_with(n, &mut rng)
    }

    pub fn sample_with<G: Rng>(&self, n: usize, rng: &mut G) -> Sample {
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let x: f64 = rng.gen();
            let u: f64 = rng.gen();
            xs.push(x);
            ys.push(if u < self.eta_unchecked(x) { 1.0 } else { -1.0 });
        }
        Sample { xs, ys }
    }
}

/// Labelled points with labels in `{−1, +1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl Sample {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::LengthMismatch {
                what: "sample inputs vs labels",
                left: xs.len(),
                right: ys.len(),
            });
        }
        if let Some(&y) = ys.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(Error::InvalidParameter {
                name: "label",
                value: y,
                reason: "labels must be -1 or +1",
            });
        }
        Ok(Self { xs, ys })
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// CSV with header `x,y`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,y")?;
        for (x, y) in self.xs.iter().zip(&self.ys) {
            writeln!(w, "{x},{y}")?;
        }
        Ok(())
    }
}
