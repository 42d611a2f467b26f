//! Hinge-loss kernel machines treated as penalized model selection over RKHS
//! balls: kernels and spectra, complexity functionals, solvers, penalty
//! calibration and exact risk oracles on synthetic circle distributions.

pub mod complexity;
pub mod error;
pub mod kernel;
pub mod losses;
pub mod quad;
pub mod rademacher;
pub mod selection;
pub mod solver;
pub mod spectrum;
pub mod subroot;
pub mod synth;

mod special;

pub use error::{Error, Result};
pub use kernel::{KernelSpec, RepresenterFn};
pub use spectrum::SpectrumModel;
