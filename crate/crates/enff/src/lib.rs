//! Ensemble short-term load forecasting.
//!
//! The pipeline decomposes an hourly load series with a discrete wavelet
//! transform, trains one swarm-optimized neural sub-network per spectral
//! component and per ensemble member, recombines component forecasts by
//! summation, and aggregates the members with a trimmed mean whose trim
//! fraction is picked on a validation day. ARIMA and backprop-trained
//! network baselines plus a MAPE comparison harness round out the toolkit.

pub mod ensemble;
pub mod error;
pub mod benchmarks;
pub mod dataio;
pub mod eval;
pub mod features;
pub mod nnet;
pub mod parallel;
pub mod trainer;
pub mod wavelet;

pub use error::{Error, Result};
