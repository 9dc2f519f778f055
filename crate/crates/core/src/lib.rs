//! Simulator and library for photonic blind source separation.
//!
//! A bank of thermally tuned micro-ring resonators weights several received
//! RF channels and sums them on a balanced photodetector. Starting from no
//! calibration at all, the separation engine tunes the ring currents from two
//! statistics of the detector output, its variance and excess kurtosis, until
//! each output isolates one independent source:
//!
//! 1. minimize variance over the current field to find the zero-weight point;
//! 2. maximize variance on a sphere around it to find principal components;
//! 3. minimize kurtosis on the whitened sphere to find independent components;
//! 4. minimize kurtosis over the field from each component to raise amplitude.
//!
//! Modules follow the pipeline: [`signal`] synthesizes BPSK sources and their
//! mixtures, [`weightbank`] models ring weights and the detector, [`stats`]
//! handles sub-Nyquist acquisition and estimators, [`optimize`] provides
//! Nelder-Mead in boxes and on constrained spheres, [`engine`] runs the
//! separation, and [`demod`] / [`sweep`] judge and sweep the results.

pub mod checks;
pub mod config;
pub mod demod;
pub mod engine;
pub mod error;
pub mod optimize;
pub mod signal;
pub mod stats;
pub mod sweep;
pub mod weightbank;

pub use error::{PbssError, Result};
