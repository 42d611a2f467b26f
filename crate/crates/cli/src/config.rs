//! Experiment configuration: a flat TOML file with nested tables for the
//! kernels, the distribution and the entropy model.

use std::fmt;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use svmlab::complexity::{EntropyModel, Setting};
use svmlab::selection::TrailingTerm;
use svmlab::solver::Regularizer;
use svmlab::synth::SyntheticDist;
use svmlab::KernelSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Spectrum,
    Gamma,
    Calibrate,
    Train,
    Select,
    VerifyOracle,
    RateStudy,
    RademacherCheck,
    Risk,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::Gamma => "gamma",
            ExperimentKind::Calibrate => "calibrate",
            ExperimentKind::Train => "train",
            ExperimentKind::Select => "select",
            ExperimentKind::VerifyOracle => "verify-oracle",
            ExperimentKind::RateStudy => "rate-study",
            ExperimentKind::RademacherCheck => "rademacher-check",
            ExperimentKind::Risk => "risk",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Regularizer choice on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PhiChoice {
    Linear,
    Quadratic,
}

impl PhiChoice {
    pub fn regularizer(self) -> Regularizer {
        match self {
            PhiChoice::Linear => Regularizer::Linear,
            PhiChoice::Quadratic => Regularizer::Quadratic,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SettingChoice {
    S1,
    S2,
}

impl From<SettingChoice> for Setting {
    fn from(s: SettingChoice) -> Self {
        match s {
            SettingChoice::S1 => Setting::S1,
            SettingChoice::S2 => Setting::S2,
        }
    }
}

/// Grid of the rademacher-check experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RademacherGrid {
    /// Number of eigenfunctions.
    pub basis: usize,
    pub radii: Vec<f64>,
    pub levels: Vec<f64>,
    /// Sign vectors per Monte Carlo estimate when n exceeds the enumeration limit.
    pub mc_draws: usize,
}

impl Default for RademacherGrid {
    fn default() -> Self {
        Self {
            basis: 7,
            radii: vec![0.3, 1.0, 3.0],
            levels: vec![0.01, 0.1, 1.0],
            mc_draws: 2000,
        }
    }
}

/// Everything an experiment run depends on. Missing keys take the defaults
/// listed in `svmlab --help`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Optional; must match the subcommand when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<ExperimentKind>,
    pub seed: u64,
    pub replicates: usize,
    pub workers: usize,
    pub n: Vec<usize>,
    pub phi: Vec<PhiChoice>,
    pub setting: SettingChoice,
    pub delta: f64,
    pub c: f64,
    #[serde(rename = "K")]
    pub k_contrast: f64,
    pub eta0: f64,
    pub eta1: f64,
    pub trailing: TrailingTerm,
    /// Solver duality-gap tolerance.
    pub tol: f64,
    /// Gauss–Legendre nodes per smooth piece of η in the oracle reference design.
    pub reference_nodes: usize,
    /// Number of eigenvalues reported by the spectrum experiment.
    pub spectrum_count: usize,
    /// Monte Carlo draws of the risk experiment.
    pub mc_draws: usize,
    pub kernels: Vec<KernelSpec>,
    pub dist: SyntheticDist,
    /// Entropy model of the S2 setting; defaults to `ε^{-1/s}` with the
    /// smoothness of the first circle kernel (1 otherwise).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy: Option<EntropyModel>,
    pub rademacher: RademacherGrid,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: None,
            seed: 1,
            replicates: 1,
            workers: 1,
            n: vec![256],
            phi: vec![PhiChoice::Linear, PhiChoice::Quadratic],
            setting: SettingChoice::S1,
            delta: 0.05,
            c: 1.0,
            k_contrast: 3.0,
            eta0: 0.2,
            eta1: 0.3,
            trailing: TrailingTerm::InverseWeight,
            tol: 1e-6,
            reference_nodes: 64,
            spectrum_count: 20,
            mc_draws: 100_000,
            kernels: vec![KernelSpec::circle(1.0, 1.0, 1.0).expect("valid default kernel")],
            dist: SyntheticDist::hard_gap(1, 0.2).expect("valid default distribution"),
            entropy: None,
            rademacher: RademacherGrid::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub phi: Option<PhiChoice>,
    pub setting: Option<SettingChoice>,
    pub c: Option<f64>,
    pub delta: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).context("config: cannot parse TOML")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("config: cannot read {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("config: {}", path.display()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.workers {
            self.workers = v;
        }
        if let Some(v) = o.phi {
            self.phi = vec![v];
        }
        if let Some(v) = o.setting {
            self.setting = v;
        }
        if let Some(v) = o.c {
            self.c = v;
        }
        if let Some(v) = o.delta {
            self.delta = v;
        }
    }

    pub fn validate(&self, kind: ExperimentKind) -> Result<()> {
        if let Some(k) = self.kind {
            if k != kind {
                bail!("config: file declares kind `{k}` but the `{kind}` experiment was requested");
            }
        }
        if self.replicates == 0 {
            bail!("config: replicates must be at least 1");
        }
        if self.workers == 0 {
            bail!("config: workers must be at least 1");
        }
        if self.n.is_empty() || self.n.iter().any(|&n| n < 2) {
            bail!("config: every n must be at least 2 (got {:?})", self.n);
        }
        if self.phi.is_empty() {
            bail!("config: phi list is empty");
        }
        if self.kernels.is_empty() {
            bail!("config: at least one kernel is required");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            bail!("config: delta must lie in (0, 1), got {}", self.delta);
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            bail!("config: c must be positive, got {}", self.c);
        }
        if !(self.tol > 0.0) {
            bail!("config: tol must be positive");
        }
        if self.reference_nodes < 2 {
            bail!("config: reference_nodes must be at least 2");
        }
        if let Some(em) = &self.entropy {
            em.validate().context("config: entropy")?;
        }
        Ok(())
    }

    /// The configured entropy model or the Sobolev-type default.
    pub fn entropy_model(&self) -> Result<EntropyModel> {
        if let Some(em) = &self.entropy {
            return Ok(em.clone());
        }
        let s = match self.kernels[0].family() {
            svmlab::kernel::KernelFamily::CircleFourier { smoothness, .. } => *smoothness,
            _ => 1.0,
        };
        EntropyModel::sobolev(s).context("config: default entropy model")
    }
}

/// Defaults shown by `--help`.
pub const CONFIG_HELP: &str = "\
CONFIG FILE (TOML; every key optional)
  kind             experiment name; must match the subcommand if given
  seed             master seed                                   [default: 1]
  replicates       replicate count                               [default: 1]
  workers          worker threads                                [default: 1]
  n                sample sizes                                  [default: [256]]
  phi              regularizers, \"linear\" and/or \"quadratic\"     [default: both]
  setting          \"s1\" (spectral) or \"s2\" (entropy)             [default: s1]
  delta            confidence level                              [default: 0.05]
  c                penalty multiplier                            [default: 1]
  K                contrast constant of the sufficient penalty    [default: 3]
  eta0, eta1       margin and two-sided gaps                      [default: 0.2, 0.3]
  trailing         \"inverse_weight\" or \"weight\"                  [default: inverse_weight]
  tol              solver duality-gap tolerance                  [default: 1e-6]
  reference_nodes  oracle reference nodes per smooth piece        [default: 64]
  spectrum_count   eigenvalues listed by `spectrum`              [default: 20]
  mc_draws         Monte Carlo draws of `risk`                   [default: 100000]
  [[kernels]]      family = \"circle_fourier\" | \"gaussian\" | \"table\", with a
                   [kernels.parameters] table     [default: circle a0=1 amplitude=1 s=1]
  [dist]           form = \"hard_gap\" (freq, eta0) or \"banded\" (freq, eta0, eta1)
                                                  [default: hard_gap freq=1 eta0=0.2]
  [entropy]        form = \"power_law\" (smoothness, constant) or \"table\" (eps, h)
                                                  [default: power law of the kernel smoothness]
  [rademacher]     basis (7), radii ([0.3,1,3]), levels ([0.01,0.1,1]), mc_draws (2000)

OUTPUT
  <out>/rows.csv      one row per replicate or grid point, header included
  <out>/summary.json  aggregate statistics with a schema_version field";
