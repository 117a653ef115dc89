//! Bayesian analysis of coded radar pulses scattered by an incoherent medium.
//!
//! The received signal is `z = A μ + √T w` where `A` is the circulant
//! operator of a transmitted code, `μ` a circular complex Gaussian
//! scatterer with structure operator `X` and `w` white noise. The crate
//! simulates such signals, computes their covariance `T I + A X A'`, and
//! studies the posterior of a constant scattering power under an
//! inverse-Wishart prior. Codes whose Fourier moduli agree produce the same
//! `AA'` and therefore the same posterior.
//!
//! Modules:
//! - [`complex_gaussian`]: circular complex Gaussian laws and samplers.
//! - [`pulse_codes`]: codes, their DFT spectra and random-phase twins.
//! - [`scatter_model`]: variance fields, partitions of unity, covariances.
//! - [`wishart`]: inverse-Wishart density, moments and Bartlett sampling.
//! - [`posterior`]: conjugate and grid posteriors, Monte Carlo harnesses.
//! - [`experiment`]: JSON-configured runs that write CSV tables.

// `!(x > 0.0)` also rejects NaN, which `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod complex_gaussian;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod posterior;
pub mod pulse_codes;
pub mod rng;
pub mod scatter_model;
pub mod table;
pub mod wishart;
