use serde::{Deserialize, Serialize};

use super::splits::CvSplit;
use crate::aggregate::{monthly_totals, DailyPoint};
use crate::domain::{CovidDaily, DateStamp, SkuSeries};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::features::{assemble_design, project_future, DesignMatrix, FeatureOptions};
use crate::ingest::{merge_covid, HolidaySpec};
use crate::metrics::point_metrics;
use crate::model::{fit, predict, FitOptions, FittedModel, Hyperparameters};

/// Month buckets (relative to the cutoff month) scored by CV.
pub const CV_MONTHS: std::ops::RangeInclusive<i32> = 1..=3;

/// Everything a CV run needs besides data and hyperparameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvContext {
    pub features: FeatureOptions,
    pub fit: FitOptions,
    /// How splits of one evaluation are spread over threads.
    pub exec: Execution,
}

/// Last dates of every input a split's fit consumed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitAudit {
    pub cutoff: DateStamp,
    pub series_last: DateStamp,
    /// `None` when no COVID record precedes the cutoff.
    pub covid_last: Option<DateStamp>,
    pub design_last: DateStamp,
    pub future_first: DateStamp,
}

impl SplitAudit {
    pub fn is_clean(&self) -> bool {
        self.series_last <= self.cutoff
            && self.covid_last.is_none_or(|d| d <= self.cutoff)
            && self.design_last <= self.cutoff
            && self.future_first > self.cutoff
    }
}

/// A model trained on one split and the projected test-span design.
#[derive(Debug, Clone)]
pub struct SplitFit {
    pub model: FittedModel,
    pub history: DesignMatrix,
    pub future: DesignMatrix,
    pub audit: SplitAudit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitOutcome {
    pub split: CvSplit,
    /// Monthly MAPE as a fraction; `None` if the split failed.
    pub mape: Option<f64>,
    pub audit: Option<SplitAudit>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    /// Unweighted mean of the successful splits' MAPEs.
    pub mean_mape: f64,
    pub outcomes: Vec<SplitOutcome>,
}

/// Train on data up to the cutoff only, then project the test span.
pub fn fit_split(
    series: &SkuSeries,
    covid: &[CovidDaily],
    holidays: &[HolidaySpec],
    hp: &Hyperparameters,
    split: &CvSplit,
    ctx: &CvContext,
) -> Result<SplitFit> {
    let train = series.truncate_to(split.cutoff)?;
    let known: Vec<CovidDaily> = covid.iter().copied().filter(|c| c.date <= split.cutoff).collect();
    let history = assemble_design(&train, &merge_covid(&train, &known), &ctx.features)?;
    let model = fit(&history, hp, holidays, &ctx.fit)?;
    let horizon = split.test_end.days_since(split.cutoff) as usize;
    let future = project_future(&history, horizon, None)?;
    let audit = SplitAudit {
        cutoff: split.cutoff,
        series_last: train.end(),
        covid_last: known.iter().map(|c| c.date).max(),
        design_last: history.end(),
        future_first: future.start(),
    };
    Ok(SplitFit { model, history, future, audit })
}

/// MAPE between monthly totals of `actual` and `predicted`, both daily on
/// the axis starting at `start`, over the [`CV_MONTHS`] buckets.
pub(crate) fn monthly_mape(
    start: DateStamp,
    actual: &[f64],
    predicted: &[f64],
    cutoff: DateStamp,
) -> Result<Option<f64>> {
    let daily = |v: &[f64]| -> Vec<DailyPoint> {
        v.iter()
            .enumerate()
            .map(|(i, &y)| DailyPoint { date: start.add_days(i as i64), yhat: y, lower: y, upper: y })
            .collect()
    };
    let sku = crate::domain::SkuId::new("cv").expect("literal id");
    let bucket = |v: &[f64]| -> Result<Vec<f64>> {
        Ok(monthly_totals(&daily(v), &sku, cutoff)?
            .into_iter()
            .filter(|m| CV_MONTHS.contains(&m.month_diff))
            .map(|m| m.sales)
            .collect())
    };
    let (a, p) = (bucket(actual)?, bucket(predicted)?);
    if a.is_empty() {
        return Ok(None);
    }
    Ok(point_metrics(&a, &p)?.mape)
}

fn score_split(
    series: &SkuSeries,
    covid: &[CovidDaily],
    holidays: &[HolidaySpec],
    hp: &Hyperparameters,
    split: &CvSplit,
    ctx: &CvContext,
) -> Result<(f64, SplitAudit)> {
    let (Some(from), Some(to)) = (series.index_of(split.test_start), series.index_of(split.test_end)) else {
        return Err(Error::Contract(format!(
            "test span {}..{} is outside the series",
            split.test_start, split.test_end
        )));
    };
    let sf = fit_split(series, covid, holidays, hp, split, ctx)?;
    let prediction = predict(&sf.model, &sf.future)?;
    let mape = monthly_mape(split.test_start, &series.values()[from..=to], &prediction.yhat, split.cutoff)?
        .ok_or_else(|| Error::Invalid(format!("no nonzero monthly actuals after cutoff {}", split.cutoff)))?;
    if !mape.is_finite() {
        return Err(Error::Invalid(format!("non-finite MAPE after cutoff {}", split.cutoff)));
    }
    Ok((mape, sf.audit))
}

/// Mean monthly MAPE of `hp` across `splits`. Failing splits are skipped
/// with a warning.
pub fn cross_validate(
    series: &SkuSeries,
    covid: &[CovidDaily],
    holidays: &[HolidaySpec],
    hp: &Hyperparameters,
    splits: &[CvSplit],
    ctx: &CvContext,
) -> Result<CvReport> {
    let results = ctx.exec.map_indexed(splits.len(), |i| score_split(series, covid, holidays, hp, &splits[i], ctx));
    let mut outcomes = Vec::with_capacity(splits.len());
    let mut sum = 0.0;
    let mut ok = 0;
    for (split, r) in splits.iter().zip(results) {
        outcomes.push(match r {
            Ok((mape, audit)) => {
                sum += mape;
                ok += 1;
                SplitOutcome { split: *split, mape: Some(mape), audit: Some(audit), error: None }
            }
            Err(e) => {
                log::warn!("{}: skipping split with cutoff {}: {e}", series.sku(), split.cutoff);
                SplitOutcome { split: *split, mape: None, audit: None, error: Some(e.to_string()) }
            }
        });
    }
    if ok == 0 {
        return Err(Error::AllSplitsFailed(splits.len()));
    }
    Ok(CvReport { mean_mape: sum / ok as f64, outcomes })
}
