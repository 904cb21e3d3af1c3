//! Local power-law analysis of price series with Haar scale spectra.
//!
//! * [`ingest`]: CSV loading, log-prices and returns.
//! * [`spectrum`]: Haar detail/approximation coefficients, scale spectra.
//! * [`estimator`]: weighted log-log fits, rolling and generalized Hurst tracks.
//! * [`segment`]: regime segmentation by total spectral residual.
//! * [`xcorr`]: scale-by-scale cross-asset correlations.
//! * [`regularize`]: Gaussian marginal transform of increments.
//! * [`synth`]: fBm / mBm synthesis for validation.
//! * [`validate`]: Monte Carlo self-checks against synthetic ground truth.
//! * [`cli`]: the `fracspec` command line.

pub mod cli;
pub mod error;
pub mod estimator;
pub mod ingest;
pub mod regularize;
pub mod segment;
pub mod spectrum;
pub mod synth;
pub mod validate;
pub mod xcorr;

pub use error::{Error, Result};
