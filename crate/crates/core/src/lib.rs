//! Fairness audits for ranking systems whose final score is the product of
//! several component scores.
//!
//! The crate measures two group-fairness metrics on rankings (exposure gap and
//! pairwise ranking gap), simulates per-component fixes without retraining
//! (marginal and label-conditional distribution matching, delta matching,
//! per-group normalization, constant `(p, 1-p)` probes) and answers
//! counterfactual headroom questions: if component `k` were fixed, how fair
//! would the composed system be?
//!
//! Everything here is pure computation over in-memory data and builds under
//! `no_std` with `alloc`. File formats and the command line live in the
//! `fairchain` crate.
//!
//! ```
//! use fairchain_core::datagen;
//! use fairchain_core::metrics::exposure_gap;
//! use fairchain_core::model::{compose, rank, TiePolicy, Utility};
//!
//! let data = datagen::motivating_example();
//! let composite = compose(&data, &[]).unwrap();
//! let ranking = rank(composite.values(), TiePolicy::RankShare, None).unwrap();
//! let report = exposure_gap(&ranking, &data, Utility::Power { w: 0.0 }, Some(2)).unwrap();
//! assert_eq!(report.abs_gap, 1.0);
//! ```
#![cfg_attr(not(test), no_std)]
#![warn(missing_debug_implementations, rust_2018_idioms)]

extern crate alloc;

pub mod counterfactual;
pub mod datagen;
mod error;
pub mod fixes;
pub mod metrics;
pub mod model;

pub use error::{Error, Result};
