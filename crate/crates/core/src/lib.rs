//! Markovian corruption of finite supervised learning problems.
//!
//! Joint distributions on a finite `X × Y` are corrupted by column-stochastic
//! kernels. The crate provides the kernel algebra (chain, product,
//! superposition, partial chain), a classifier for corruption kernels,
//! exhaustive Bayes-risk computation, the data-processing equalities relating
//! corrupted problems to clean problems with transformed minimization sets,
//! Bayesian inversion, corrected losses, and the two non-Markov models
//! (mutually contaminated distributions, selection bias).
//!
//! ```
//! use kernelcorrupt::fixtures::recidivism;
//! use kernelcorrupt::scalar::BigRational;
//! use kernelcorrupt::taxonomy::corrupt;
//!
//! let fx = recidivism::<BigRational>();
//! let corrupted = corrupt(&fx.p1, &fx.spec).unwrap();
//! let rendered: Vec<String> = corrupted.weights().iter().map(|w| w.to_string()).collect();
//! assert_eq!(rendered, ["9/40", "11/40", "1/5", "3/10"]);
//! ```

pub mod decision;
pub mod dpe;
pub mod error;
pub mod finite_prob;
pub mod fixtures;
pub mod inversion;
pub mod kernel;
pub mod noncore;
pub mod random;
pub mod scalar;
pub mod taxonomy;

pub use error::{Error, Result};

/// Absolute tolerance on total mass and column sums.
pub const EPS_MASS: f64 = 1e-12;

/// Two risks within this distance are treated as tied minimizers.
pub const EPS_TIE: f64 = 1e-9;

/// Default tolerance for data-processing equality checks.
pub const EPS_DPE: f64 = 1e-9;

/// Role name of the attribute space.
pub const X: &str = "X";

/// Role name of the label space.
pub const Y: &str = "Y";
