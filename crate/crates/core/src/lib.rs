//! Constant step-size stochastic gradient descent for homogeneous linear
//! binary classifiers, with margin-based termination tests.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: seeded random streams, the standard normal CDF, quadrature
//!   and truncated-normal moments.
//! - [`losses`]: logistic and hinge losses, SGD directions and the population
//!   objective restricted to the ray through the class mean.
//! - [`theory`]: exact quantities under the folded Gaussian model (minimiser,
//!   accuracy, target sets, drift functions, stopping-time bounds).
//! - [`sgd`]: the SGD engine and its stopping rules.
//! - [`verify`]: Monte-Carlo estimators that check the bounds by simulation.
//! - [`data`]: synthetic generators, centering, IDX / CIFAR-10 / CSV readers.
//! - [`experiment`]: config-driven experiment commands emitting CSV and JSON.
//!
//! ```
//! use sgd_termination::losses::LossKind;
//! use sgd_termination::numerics::{RngState, Vector};
//! use sgd_termination::sgd::{run_zero_overhead, SgdConfig, StopRule};
//! use sgd_termination::theory::GaussianFoldedModel;
//!
//! let model = GaussianFoldedModel::new(Vector::basis(10, 0), 0.1).unwrap();
//! let config = SgdConfig::new(LossKind::Logistic, 0.1, 100_000, StopRule::ZeroOverhead).unwrap();
//! let mut source = model.source();
//! let run = run_zero_overhead(&mut source, &config, RngState::new(7, 0)).unwrap();
//! assert!(!run.censored);
//! assert!(model.accuracy(&run.theta_final).unwrap() > 0.99);
//! ```

pub mod data;
pub mod error;
pub mod experiment;
pub mod losses;
pub mod numerics;
pub mod sgd;
pub mod theory;
pub mod verify;

pub use error::{Error, Result};
