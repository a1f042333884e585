//! Boosting as ℓ¹-steepest coordinate descent, with the primal-dual tools
//! that explain its convergence: loss conjugates, Wolfe and exact line
//! searches, LP-based structure analysis (weak learnability, attainability,
//! hard core), classical weak learning rates and dual certificates.
//!
//! ```
//! use pdboost::{boost, fixtures, losses::{LossKind, LossSpec}, structure};
//!
//! let inst = fixtures::a2();
//! assert_eq!(structure::analyze(&inst).unwrap().regime, structure::Regime::WeakLearnable);
//!
//! let loss = LossSpec::new(LossKind::Exponential, inst.m()).unwrap();
//! let cfg = boost::RunConfig { target: Some(1e-6), ..Default::default() };
//! let trace = boost::run(&inst, &loss, &cfg).unwrap();
//! assert!(trace.final_state.objective <= 1e-6);
//! ```

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boost;
pub mod error;
pub mod fit;
pub mod fixtures;
pub mod instance;
pub mod linesearch;
pub mod losses;
pub mod lp;
pub mod matrix;
pub mod structure;

pub use error::{Error, Result};
pub use instance::BoostInstance;
pub use matrix::Matrix;
