//! Numerical laboratory for the spatial degrees of freedom of line-of-sight
//! MIMO links between two square clusters of nodes.
//!
//! The crate builds the line-of-sight channel matrix `H`, its unit-SNR
//! normalization, the phase-factored quadratic approximation and the
//! kernel matrix `G` with entries `exp(-2πi m y_j z_k)`, then computes Gram
//! spectra and log-det capacities. The [`fredholm`] module discretizes the
//! sinc integral operator that governs `E[det(G_k G_k*)]`, and
//! [`montecarlo`] checks the resulting identities and scaling envelopes by
//! simulation.
//!
//! Module map:
//!
//! - [`model`]: scenario parameters, derived `m` and `P`, node sampling.
//! - [`channel`]: matrix builders.
//! - [`spectra`]: Hermitian Gram spectra, capacities, dof counts.
//! - [`fredholm`]: sinc kernel, Nyström discretization, traces, `d_k`.
//! - [`montecarlo`]: randomized experiments and sweeps.
//! - [`cli`]: configuration, subcommands and result files.

pub mod channel;
pub mod cli;
mod dd;
pub mod error;
pub mod fredholm;
pub mod linalg;
pub mod model;
pub mod montecarlo;
pub mod quadrature;
pub mod rng;
pub mod spectra;

pub use error::{Error, Result};

/// Version string embedded in every output file.
pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));
