//! Multi-label classification with classifier chains whose label order is
//! learned from a Bayesian network over the training labels.
//!
//! The pipeline is: estimate pairwise dependence degrees between labels
//! ([`correlation`]), build a fully connected weighted digraph and break its
//! cycles ([`graph`]), greedily learn parent sets under a BIC-style score
//! ([`structure`]), then topologically sort the learned network to obtain
//! the chain order used by [`chain::train_bncc`].
//!
//! Baselines (binary relevance, random-order chains, ensembles of chains)
//! and the evaluation harness live in [`chain`] and [`metrics`].

pub mod chain;
pub mod correlation;
pub mod dataset;
mod error;
pub mod exec;
pub mod graph;
pub mod learner;
pub mod metrics;
pub mod structure;

pub use error::{Error, Result};
pub use exec::Execution;
