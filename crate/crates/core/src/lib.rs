//! Relational Bayesian networks with numeric input relations.
//!
//! Models are written in a small probability-formula language ([`formula`]),
//! grounded against relational data ([`data`]) into a likelihood graph
//! ([`graph`]) and fitted by multi-restart projected gradient ascent
//! ([`learn`]). The [`community`] module generates latent-feature network
//! models whose learned numeric relations act as community centrality degrees.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, parallel
//! restarts and the command-line front end live in the `rbn` crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod community;
pub mod data;
pub mod formula;
pub mod graph;
mod ground;
pub mod learn;
pub mod math;

pub use data::{DataSet, ObjectId, Truth};
pub use formula::{parse_model, Formula, Model};
pub use graph::{BuildOptions, Evaluator, LikelihoodGraph};
pub use learn::{fit, FitConfig, FitResult};
