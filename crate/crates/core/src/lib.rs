//! Inhomogeneity of training data for Gaussian-process learning.
//!
//! Computes the inhomogeneity parameter `p_D` of a dataset (the fraction of
//! consecutive-output correlation distances whose tolerance bands meet no
//! other band), runs an augmented Dickey-Fuller test, fits stationary and
//! nested nonstationary SQE Gaussian processes by MCMC, and scores their
//! predictions by RMSE and the compatibility parameter `C`.


pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod gp;
pub mod inference;
pub mod inhomogeneity;
pub mod model;
pub mod report;
pub mod rng;
pub mod stationarity;
pub mod synth;

pub use error::{Error, Result};
