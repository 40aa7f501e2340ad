//! Sentiment-driven asset price model: simulation, estimation and option pricing.

pub mod data;
pub mod diagnostics;
pub mod error;
pub mod model;
pub mod likelihood;
pub mod optim;
pub mod pricing;
pub mod quadrature;
pub mod simulate;
pub mod special;

pub use error::{ModelError, Result};
pub use model::{LevyLogNormal, ModelParams, MomentPair};
pub use simulate::{Measure, ReturnSample, SampledPath};
