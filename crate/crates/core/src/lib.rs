//! Time series ordinal classification.
//!
//! The crate is organised around the pipeline used by the convolutional
//! ordinal classifiers:
//!
//! * [`data`]: `.ts` file parsing, stratified resampling, flattening and
//!   label discretisation.
//! * [`transform`]: ROCKET, MiniROCKET and MultiROCKET feature transforms.
//! * [`clm`]: the LogisticAT all-threshold cumulative link model, feature
//!   standardisation, λ cross-validation and a multinomial logistic baseline.
//! * [`head`]: a small cumulative-link output head trained with the QWK loss.
//! * [`metrics`]: CCR, MAE, QWK and 1-OFF.
//! * [`stats`]: Wilcoxon signed-rank tests, Holm correction, mean ranks,
//!   cliques, multi-comparison matrices and relative MAE.
//! * [`harness`]: manifest-driven experiment runner and results ledger.

pub mod clm;
pub mod data;
mod error;
pub mod harness;
pub mod head;
pub mod matrix;
pub mod metrics;
mod rng;
pub mod stats;
pub mod transform;

pub use error::{Error, Result};
pub use matrix::Matrix;
