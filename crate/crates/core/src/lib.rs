//! Covariate-adjusted pseudovalue regression for the restricted mean survival
//! time (RMST) in randomized trials.
//!
//! The crate is organised bottom-up:
//!
//! - [`survival`]: Kaplan-Meier fitting, RMST integration and the unadjusted
//!   KM-based RMST difference.
//! - [`pseudo`]: jackknife pseudo-observations of the RMST, with an O(n²)
//!   reference path and an O(n log n) incremental path.
//! - [`regress`]: least squares on pseudovalues with sandwich (HC0/HC1)
//!   covariance and Wald inference for the treatment effect.
//! - [`design`]: closed-form variance-reduction prediction, measurement-error
//!   asymptotics and a sample-size planner.
//! - [`simkit`]: the Monte Carlo scenario engine.
//!
//! ```
//! use rmst_core::{Arm, SurvivalSample};
//! use rmst_core::survival::{km_fit, rmst};
//!
//! let data = vec![
//!     SurvivalSample::new(1.0, true, Arm::Control, vec![]),
//!     SurvivalSample::new(2.0, false, Arm::Control, vec![]),
//!     SurvivalSample::new(3.0, true, Arm::Control, vec![]),
//! ];
//! let curve = km_fit(&data).unwrap();
//! let est = rmst(&curve, 3.0).unwrap();
//! assert!((est.value - 7.0 / 3.0).abs() < 1e-12);
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod design;
pub mod error;
pub mod linalg;
pub mod normal;
pub mod pseudo;
pub mod regress;
pub mod sample;
pub mod simkit;
pub mod stats;
pub mod survival;

pub use error::{Result, RmstError};
pub use sample::{Arm, SurvivalSample};
