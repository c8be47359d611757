//! SKU-level demand forecasting.
//!
//! The pipeline: parse order, COVID and holiday files ([`ingest`]), align
//! them onto per-SKU daily series ([`domain`]), build the sixteen external
//! regressors ([`features`]), fit a structural trend/seasonality/holiday
//! model with those regressors ([`model`]), tune its hyperparameters per
//! SKU by expanding-window cross-validation ([`tuning`]), and roll daily
//! forecasts up into month-indexed planning totals ([`aggregate`]).
//! [`synth`] generates datasets with known ground truth.

pub mod aggregate;
pub mod domain;
pub mod error;
pub mod exec;
pub mod features;
pub mod ingest;
pub mod metrics;
pub mod model;
pub mod presets;
pub mod synth;
pub mod tuning;

pub use domain::{align_series, CovidDaily, DateStamp, Observation, SkuId, SkuSeries};
pub use error::{Error, Result};
pub use exec::Execution;
