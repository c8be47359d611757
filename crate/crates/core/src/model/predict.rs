use std::collections::BTreeMap;

use nalgebra::DVector;

use super::fit::Basis;
use super::{FittedModel, Seasonality, SeasonalityMode};
use crate::domain::DateStamp;
use crate::error::{Error, Result};
use crate::features::DesignMatrix;

/// Point forecast and its components on the original axis.
///
/// In additive mode every component is in demand units and
/// `yhat = trend + Σ seasonal + holidays + regressors`. In multiplicative
/// mode seasonal components are fractions of the trend and
/// `yhat = trend·(1 + Σ seasonal) + holidays + regressors`.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub dates: Vec<DateStamp>,
    pub yhat: Vec<f64>,
    pub trend: Vec<f64>,
    pub seasonal: BTreeMap<String, Vec<f64>>,
    pub holidays: Vec<f64>,
    pub regressors: Vec<f64>,
    pub mode: SeasonalityMode,
}

impl Prediction {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Sum of all seasonal components at row `i`.
    pub fn seasonal_total(&self, i: usize) -> f64 {
        self.seasonal.values().map(|c| c[i]).sum()
    }

    /// Recombine the components at row `i` the way the model does.
    pub fn recombine(&self, i: usize) -> f64 {
        match self.mode {
            SeasonalityMode::Additive => self.trend[i] + self.seasonal_total(i) + self.holidays[i] + self.regressors[i],
            SeasonalityMode::Multiplicative => {
                self.trend[i] * (1.0 + self.seasonal_total(i)) + self.holidays[i] + self.regressors[i]
            }
        }
    }
}

pub(crate) fn future_basis(model: &FittedModel, future: &DesignMatrix) -> Result<Basis> {
    let mut regs = Vec::with_capacity(model.regressor_coeffs.len());
    for name in model.regressor_coeffs.keys() {
        let col = future
            .column(*name)
            .ok_or_else(|| Error::Contract(format!("future design is missing regressor column {name}")))?;
        regs.push(col);
    }
    let dates = future.dates();
    let t = dates.iter().map(|&d| model.time_of(d)).collect();
    let seasonalities: Vec<Seasonality> = model.seasonal.iter().map(|s| s.seasonality.clone()).collect();
    let names: Vec<String> = model.holiday_coeffs.keys().cloned().collect();
    Ok(Basis::build(&dates, t, &model.changepoints, &seasonalities, &model.holidays, &names, &regs))
}

/// Evaluate the model and its components on `future`'s dates.
pub fn predict(model: &FittedModel, future: &DesignMatrix) -> Result<Prediction> {
    let basis = future_basis(model, future)?;
    let n = basis.t.len();
    let scale = model.y_scale;

    let deltas = DVector::from_column_slice(&model.deltas);
    let hinge = &basis.hinge * deltas;
    let trend: Vec<f64> = (0..n).map(|i| (model.k * basis.t[i] + model.m + hinge[i]) * scale).collect();

    let seasonal_unit = match model.mode {
        SeasonalityMode::Additive => scale,
        SeasonalityMode::Multiplicative => 1.0,
    };
    let mut seasonal = BTreeMap::new();
    let mut col = 0;
    for comp in &model.seasonal {
        let w = comp.seasonality.width();
        let block = basis.fourier.columns(col, w) * DVector::from_column_slice(&comp.coefficients);
        seasonal.insert(comp.seasonality.name.clone(), block.iter().map(|v| v * seasonal_unit).collect());
        col += w;
    }

    let hc = DVector::from_iterator(model.holiday_coeffs.len(), model.holiday_coeffs.values().copied());
    let holidays: Vec<f64> = (&basis.holidays * hc).iter().map(|v| v * scale).collect();
    let rc = DVector::from_iterator(model.regressor_coeffs.len(), model.regressor_coeffs.values().copied());
    let regressors: Vec<f64> = (&basis.regressors * rc).iter().map(|v| v * scale).collect();

    let mut pred = Prediction {
        dates: future.dates(),
        yhat: vec![0.0; n],
        trend,
        seasonal,
        holidays,
        regressors,
        mode: model.mode,
    };
    for i in 0..n {
        pred.yhat[i] = pred.recombine(i);
    }
    Ok(pred)
}
