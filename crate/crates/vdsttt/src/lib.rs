//! Verifier-driven sample selection for test-time training, end to end on a
//! desk-scale stack: a character-level micro transformer with hand-written
//! backprop, low-rank adapters as the only trainable test-time parameters,
//! temperature sampling of candidate pools, pluggable verifiers, and an
//! experiment harness over a synthetic chained-arithmetic benchmark.
//!
//! The crate is organized along the pipeline:
//!
//! - [`numkit`] — dense f64 kernels and the finite-difference gradient oracle
//! - [`rng`] — counter-based random streams (reproducible, order-independent)
//! - [`tokenizer`] / [`model`] — the frozen base language model
//! - [`lora`] — adapter construction, application, and SGD updates
//! - [`sampler`] — temperature sampling of N candidates per query
//! - [`taskgen`] — synthetic benchmark generation, JSONL IO, answer extraction
//! - [`verifier`] — oracle / noisy-oracle / agreement scoring
//! - [`engine`] — best-of-N selection, per-query adaptation, streaming passes,
//!   and the iterative outer loop with plateau-based early stopping
//! - [`harness`] — evaluation protocols, accuracy reports, report emission

pub mod engine;
pub mod error;
pub mod harness;
pub mod lora;
pub mod model;
pub mod numkit;
pub mod rng;
pub mod sampler;
pub mod taskgen;
pub mod tokenizer;
pub mod verifier;

pub use error::{Error, Result};
