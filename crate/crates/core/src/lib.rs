//! Wasserstein-continuity bounds for entropy.
//!
//! Exact optimal transport, Ornstein's d̄, 1-D quantile `W_p`, entropy and
//! divergence computations, the regularity calculus for smoothed densities,
//! the Gaussian interference channel outer bound and its corner points, the
//! discrete-alphabet bounds built on d̄, and a seeded harness that checks all
//! of them on random instances. All quantities are in nats.

// `!(x > 0.0)` is used throughout so that NaN is rejected with the rest.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod discrete_ic;
pub mod domain;
pub mod error;
pub mod gic;
pub mod infomeasures;
pub mod io;
pub mod quadrature;
pub mod regularity;
pub mod transport;
pub mod verify;

pub use domain::{
    Channel, Component, CouplingPlan, GaussianMixture1D, LogBase, Pmf, TwoInputChannel,
};
pub use error::{Error, Result};
