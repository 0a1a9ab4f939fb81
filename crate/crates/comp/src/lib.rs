//! Conditional VAE training with a contrastive mixture-of-posteriors
//! alignment penalty, plus the alignment metrics, counterfactual prediction,
//! and executable verifiers for the underlying theory.
//!
//! The crate is organised around a small tape-based autodiff engine
//! ([`tape`]), MLP layers and Adam ([`nn`]), the conditional VAE and its
//! training objective ([`cvae`]), the alignment penalties ([`penalties`]),
//! nearest-neighbour mixing metrics ([`metrics`]), encode-swap-decode
//! counterfactuals ([`counterfact`]), synthetic data generators with ground
//! truth ([`datagen`]), and statistical verifiers ([`theory`]).
//!
//! See the `examples/` directory for one runnable example per capability,
//! and the `comp` binary for the train/eval/counterfactual/verify/plot
//! command-line entry points.

pub mod check;
pub mod cli;
pub mod counterfact;
pub mod cvae;
pub mod datagen;
pub mod linalg;
pub mod metrics;
pub mod nn;
pub mod penalties;
pub mod plot;
pub mod stats;
pub mod tape;
pub mod tensor;
pub mod theory;

pub use tensor::{Tensor, TensorError};
