//! Bayesian nonparametric quantum homodyne tomography.
//!
//! The crate covers the forward measurement model (Wigner functions,
//! quadrature densities, detector noise), orthonormal Wilson bases, two
//! nonparametric priors on wave functions, MCMC posterior sampling, and
//! numeric checks of the inequalities relating these objects.

pub mod diagnostics;
pub mod error;
pub mod forward;
pub mod grid;
pub mod infer;
pub mod numerics;
pub mod prior;
pub mod simulate;
pub mod states;
pub mod wilson;

pub use error::{Error, Result};
pub use forward::{noise_kernel, noisy_density, quadrature_density, radon_of_wigner, NoiseModel, QuadratureProfile};
pub use grid::{Grid1D, Grid2D};
pub use states::{eval_psi, inner_product, wigner, wigner_mixed, MixedState, WaveFunction, WignerGrid};
pub use wilson::{analyze, synthesize, truncate_normalize, LambdaZ, WilsonBasis, WilsonIndex, WilsonSeriesParams};
pub use prior::{sample_gamma_mixture, sample_wilson_prior, GammaMixtureConfig, WilsonPriorConfig};
pub use infer::{log_likelihood, mcmc_mixture, mcmc_wilson, Chain, Draw, McmcConfig};
