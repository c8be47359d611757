use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::predict::predict;
use super::{FittedModel, SeasonalityMode};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::features::DesignMatrix;

pub const MIN_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

/// Laplace(0, scale) by inverse CDF.
fn laplace(rng: &mut impl Rng, scale: f64) -> f64 {
    let u: f64 = rng.random::<f64>() - 0.5;
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// Linear-interpolated empirical quantile of sorted data.
pub(crate) fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Monte-Carlo prediction interval per future date.
///
/// Each sample draws new slope changes over the horizon, occurring on
/// each day with the historical changepoint rate and sized
/// Laplace(0, mean |δ|), then adds Normal(0, residual σ) noise. Bounds are
/// the `(1 − level)/2` and `(1 + level)/2` empirical quantiles. Sample `i`
/// uses stream `i` of a ChaCha8 generator seeded with `seed`, so output
/// does not depend on `exec`.
pub fn sample_intervals(
    model: &FittedModel,
    future: &DesignMatrix,
    n_samples: usize,
    level: f64,
    seed: u64,
    exec: Execution,
) -> Result<Vec<Interval>> {
    if n_samples < MIN_SAMPLES {
        return Err(Error::Contract(format!("need at least {MIN_SAMPLES} samples, got {n_samples}")));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Contract(format!("interval level must lie in (0, 1), got {level}")));
    }
    let base = predict(model, future)?;
    let n = base.len();
    let t: Vec<f64> = base.dates.iter().map(|&d| model.time_of(d)).collect();
    let seasonal: Vec<f64> = (0..n).map(|i| base.seasonal_total(i)).collect();

    let s = model.changepoints.len();
    let mean_delta = if s == 0 { 0.0 } else { model.deltas.iter().map(|d| d.abs()).sum::<f64>() / s as f64 };
    let rate = if s == 0 {
        0.0
    } else {
        (s as f64 / (model.hyperparameters.changepoint_range * model.training_days() as f64)).min(1.0)
    };
    let noise = Normal::new(0.0, model.residual_sigma).map_err(|e| Error::Invalid(e.to_string()))?;
    let scale = model.y_scale;

    let samples: Vec<Vec<f64>> = exec.map_indexed(n_samples, |k| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let mut changes: Vec<(f64, f64)> = Vec::new();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            if rate > 0.0 && rng.random::<f64>() < rate {
                changes.push((t[i], laplace(&mut rng, mean_delta)));
            }
            let extra: f64 = changes.iter().map(|(tc, d)| d * (t[i] - tc)).sum();
            let trend = base.trend[i] + extra * scale;
            let point = match model.mode {
                SeasonalityMode::Additive => trend + seasonal[i] + base.holidays[i] + base.regressors[i],
                SeasonalityMode::Multiplicative => trend * (1.0 + seasonal[i]) + base.holidays[i] + base.regressors[i],
            };
            out.push(point + noise.sample(&mut rng) * scale);
        }
        out
    });

    let lo_q = (1.0 - level) / 2.0;
    let hi_q = (1.0 + level) / 2.0;
    let mut column = vec![0.0; n_samples];
    Ok((0..n)
        .map(|i| {
            for (k, s) in samples.iter().enumerate() {
                column[k] = s[i];
            }
            column.sort_by(f64::total_cmp);
            Interval { lower: quantile_sorted(&column, lo_q), upper: quantile_sorted(&column, hi_q) }
        })
        .collect())
}
