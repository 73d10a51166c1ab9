//! Momentum contrastive clustering (MCC), its two-stage federated variant
//! (FedMCC), and the memory-efficient gradient scheme that trains both.
//!
//! The numeric core is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix it to `f64`, which is what the experiment driver and
//! the gradient checks use.

// `!(x > 0.0)` is how the validators reject NaN along with the bad range
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod federated;
pub mod gradcheck;
pub mod grad;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod numerics;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Real = f64;
pub type RepBatchF64 = numerics::RepBatch<f64>;
pub type TemperatureF64 = losses::Temperature<f64>;
pub type FourViewBatchF64 = losses::FourViewBatch<f64>;
pub type AlphaCacheF64 = grad::AlphaCache<f64>;
pub type MlpParamsF64 = model::MlpParams<f64>;
pub type NetworkF64 = model::Network<f64>;
pub type MccModelF64 = model::MccModel<f64>;
pub type ParamGradF64 = model::ParamGrad<f64>;
