//! Structural demand model: piecewise-linear trend with L1-penalized
//! changepoints, Fourier seasonalities, holiday indicators and linear
//! external regressors, in additive or multiplicative-seasonality form.
//!
//! Additive:        `y = g + s + h + Σ βᵢxᵢ`
//! Multiplicative:  `y = g·(1 + s) + h + Σ βᵢxᵢ`
//!
//! Fitting is maximum a posteriori estimation written as penalized least
//! squares on targets scaled by their maximum: a Laplace(0, τ) prior on
//! each slope change is an L1 penalty of weight `1/τ`, Normal(0, σ)
//! priors on the other coefficients are L2 penalties `‖c‖²/(2σ²)`.

mod fit;
mod intervals;
pub mod io;
mod predict;
mod seasonality;
mod solver;
mod trend;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::DateStamp;
use crate::error::{Error, Result};
use crate::features::RegressorName;
use crate::ingest::HolidaySpec;

pub use fit::{fit, fit_traced, FitReport, ParamVector, PenalizedObjective};
pub use intervals::{sample_intervals, Interval, MIN_SAMPLES};
pub use predict::{predict, Prediction};
pub use seasonality::{fourier_basis, holiday_matrix, Seasonality};
pub use trend::{gammas, place_changepoints, trend_value, ChangepointGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeasonalityMode {
    Additive,
    Multiplicative,
}

impl fmt::Display for SeasonalityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SeasonalityMode::Additive => "additive",
            SeasonalityMode::Multiplicative => "multiplicative",
        })
    }
}

impl FromStr for SeasonalityMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "additive" => Ok(SeasonalityMode::Additive),
            "multiplicative" => Ok(SeasonalityMode::Multiplicative),
            other => Err(Error::Invalid(format!("unknown seasonality mode '{other}'"))),
        }
    }
}

/// The six tunable knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    /// Laplace scale τ of slope changes; the L1 weight is `1/τ`.
    pub changepoint_prior_scale: f64,
    pub seasonality_prior_scale: f64,
    pub holidays_prior_scale: f64,
    pub seasonality_mode: SeasonalityMode,
    /// Fraction of the training span eligible for changepoints.
    pub changepoint_range: f64,
    pub n_changepoints: usize,
}

/// Inclusive search bounds for each continuous/integer knob.
pub mod bounds {
    pub const CHANGEPOINT_PRIOR_SCALE: (f64, f64) = (0.001, 0.5);
    pub const SEASONALITY_PRIOR_SCALE: (f64, f64) = (1.0, 50.0);
    pub const HOLIDAYS_PRIOR_SCALE: (f64, f64) = (1.0, 25.0);
    pub const CHANGEPOINT_RANGE: (f64, f64) = (0.8, 0.97);
    pub const N_CHANGEPOINTS: (usize, usize) = (15, 55);
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            changepoint_prior_scale: 0.05,
            seasonality_prior_scale: 10.0,
            holidays_prior_scale: 10.0,
            seasonality_mode: SeasonalityMode::Additive,
            changepoint_range: 0.8,
            n_changepoints: 25,
        }
    }
}

impl Hyperparameters {
    /// Checks that any fit can use: positive scales, a range in `(0, 1]`.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("changepoint_prior_scale", self.changepoint_prior_scale),
            ("seasonality_prior_scale", self.seasonality_prior_scale),
            ("holidays_prior_scale", self.holidays_prior_scale),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.changepoint_range > 0.0 && self.changepoint_range <= 1.0) {
            return Err(Error::Invalid(format!(
                "changepoint_range must lie in (0, 1], got {}",
                self.changepoint_range
            )));
        }
        if self.n_changepoints == 0 {
            return Err(Error::Invalid("n_changepoints must be at least 1".into()));
        }
        Ok(())
    }

    /// Stricter check used by the search: every knob inside [`bounds`].
    pub fn validate_search_bounds(&self) -> Result<()> {
        self.validate()?;
        let within = |v: f64, (lo, hi): (f64, f64)| v >= lo && v <= hi;
        let checks = [
            ("changepoint_prior_scale", within(self.changepoint_prior_scale, bounds::CHANGEPOINT_PRIOR_SCALE)),
            ("seasonality_prior_scale", within(self.seasonality_prior_scale, bounds::SEASONALITY_PRIOR_SCALE)),
            ("holidays_prior_scale", within(self.holidays_prior_scale, bounds::HOLIDAYS_PRIOR_SCALE)),
            ("changepoint_range", within(self.changepoint_range, bounds::CHANGEPOINT_RANGE)),
            ("n_changepoints", (bounds::N_CHANGEPOINTS.0..=bounds::N_CHANGEPOINTS.1).contains(&self.n_changepoints)),
        ];
        match checks.iter().find(|(_, ok)| !ok) {
            Some((name, _)) => Err(Error::Invalid(format!("{name} is outside the search range"))),
            None => Ok(()),
        }
    }
}

/// Model structure that is not tuned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitOptions {
    pub seasonalities: Vec<Seasonality>,
    /// Normal prior scale on every external-regressor coefficient.
    pub regressor_prior_scale: f64,
    /// Cap on trend/seasonal alternations in multiplicative mode.
    pub max_alternations: usize,
    /// Relative objective change that ends the alternation.
    pub alternation_tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            seasonalities: vec![Seasonality::weekly(), Seasonality::yearly()],
            regressor_prior_scale: 10.0,
            max_alternations: 200,
            alternation_tolerance: 1e-8,
        }
    }
}

/// Coefficients of one fitted seasonality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonalComponent {
    pub seasonality: Seasonality,
    pub coefficients: Vec<f64>,
}

/// Every estimated parameter plus the structure needed to predict.
///
/// Trend, seasonal, holiday and regressor coefficients live on the scaled
/// axis `y / y_scale`; time is normalized so the first training day is 0
/// and the last is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub y_scale: f64,
    /// Base growth rate.
    pub k: f64,
    /// Base offset.
    pub m: f64,
    pub deltas: Vec<f64>,
    pub gammas: Vec<f64>,
    pub changepoints: ChangepointGrid,
    pub seasonal: Vec<SeasonalComponent>,
    pub holidays: Vec<HolidaySpec>,
    pub holiday_coeffs: BTreeMap<String, f64>,
    pub regressor_coeffs: BTreeMap<RegressorName, f64>,
    pub residual_sigma: f64,
    pub mode: SeasonalityMode,
    pub hyperparameters: Hyperparameters,
    pub training_start: DateStamp,
    pub training_end: DateStamp,
    /// Penalized objective at the returned parameters.
    pub objective: f64,
}

impl FittedModel {
    /// Normalized time of `date`.
    pub fn time_of(&self, date: DateStamp) -> f64 {
        let span = self.training_end.days_since(self.training_start).max(1) as f64;
        date.days_since(self.training_start) as f64 / span
    }

    /// Trend on the scaled axis at normalized time `t`.
    pub fn scaled_trend(&self, t: f64) -> f64 {
        trend_value(t, self.k, self.m, &self.changepoints, &self.deltas)
    }

    /// Base trend slope in original units per day.
    pub fn base_slope_per_day(&self) -> f64 {
        let span = self.training_end.days_since(self.training_start).max(1) as f64;
        self.k * self.y_scale / span
    }

    /// Regressor coefficient in original units per regressor unit.
    pub fn regressor_effect(&self, name: RegressorName) -> Option<f64> {
        self.regressor_coeffs.get(&name).map(|b| b * self.y_scale)
    }

    /// Training length in days, inclusive.
    pub fn training_days(&self) -> usize {
        self.training_end.days_since(self.training_start) as usize + 1
    }
}
