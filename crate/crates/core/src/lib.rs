//! Hybrid CTC / attention-decoder speech recognition on small synthetic
//! tasks, with the attention decoder's step posteriors fused into the CTC
//! branch during training.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the common `f64` instantiation.

pub mod aed;
pub mod config;
pub mod ctc;
pub mod data;
pub mod error;
pub mod fusion;
pub mod model;
pub mod numerics;
pub mod params;

pub use error::{Error, Result};
pub use numerics::Scalar;
pub use params::ParamSet;

pub type Real = f64;
pub type Matrix = numerics::Matrix<Real>;
pub type Matrix32 = numerics::Matrix<f32>;
pub type LogProb = numerics::LogProb<Real>;
pub type LogPosteriorGrid = ctc::LogPosteriorGrid<Real>;
pub type NBestList = ctc::NBestList<Real>;
pub type AedParams = aed::AedParams<Real>;
pub type ModelParams = model::ModelParams<Real>;
pub type ModelParams32 = model::ModelParams<f32>;
