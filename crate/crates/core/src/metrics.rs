//! Forecast accuracy: MAPE, RMSE, MAE and month-over-month directional
//! accuracy.

use serde::{Deserialize, Serialize};

use crate::aggregate::{monthly_totals, DailyPoint, ForecastRow};
use crate::domain::{DateStamp, SkuId, SkuSeries};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMetrics {
    /// Mean absolute percentage error as a fraction, over pairs with a
    /// nonzero actual. `None` when every actual is zero.
    pub mape: Option<f64>,
    pub rmse: f64,
    pub mae: f64,
    pub n_points: usize,
    /// Pairs left out of MAPE because the actual was zero.
    pub mape_excluded: usize,
}

pub fn point_metrics(actual: &[f64], predicted: &[f64]) -> Result<PointMetrics> {
    if actual.len() != predicted.len() {
        return Err(Error::Contract(format!("actual has {} points, predicted has {}", actual.len(), predicted.len())));
    }
    if actual.is_empty() {
        return Err(Error::Contract("metrics need at least one point".into()));
    }
    let n = actual.len() as f64;
    let mut ape_sum = 0.0;
    let mut included = 0usize;
    let mut abs_sum = 0.0;
    let mut sq_sum = 0.0;
    for (&a, &p) in actual.iter().zip(predicted) {
        let e = a - p;
        abs_sum += e.abs();
        sq_sum += e * e;
        if a != 0.0 {
            ape_sum += e.abs() / a.abs();
            included += 1;
        }
    }
    Ok(PointMetrics {
        mape: (included > 0).then(|| ape_sum / included as f64),
        rmse: (sq_sum / n).sqrt(),
        mae: abs_sum / n,
        n_points: actual.len(),
        mape_excluded: actual.len() - included,
    })
}

/// Fraction of consecutive pairs where actual and predicted move in the
/// same direction. A flat step only matches a flat step.
pub fn directional_accuracy(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    if actual.len() != predicted.len() {
        return Err(Error::Contract(format!("actual has {} points, predicted has {}", actual.len(), predicted.len())));
    }
    if actual.len() < 2 {
        return Err(Error::Contract("directional accuracy needs at least 2 points".into()));
    }
    let sign = |d: f64| d.partial_cmp(&0.0);
    let hits =
        actual.windows(2).zip(predicted.windows(2)).filter(|(a, p)| sign(a[1] - a[0]) == sign(p[1] - p[0])).count();
    Ok(hits as f64 / (actual.len() - 1) as f64)
}

/// One row of the metrics report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub sku: SkuId,
    pub horizon_months: u32,
    pub mape: Option<f64>,
    pub rmse: f64,
    pub mae: f64,
    pub directional_accuracy: Option<f64>,
    pub n_points: usize,
    pub mape_excluded: usize,
}

pub const REPORT_COLUMNS: [&str; 8] =
    ["sku", "horizon_months", "mape", "rmse", "mae", "directional_accuracy", "n_points", "mape_excluded"];

/// Horizons reported by [`evaluate`], in months after the cutoff month.
pub const EVAL_HORIZONS: [u32; 3] = [1, 2, 3];

/// Score one SKU's daily forecast against observed demand.
///
/// The cutoff is the day before the first forecast date. Both sides are
/// summed per calendar month over the forecast's days; horizon `h` covers
/// months 1 through `h` after the cutoff month. Horizons the forecast does
/// not reach are omitted. Directional accuracy needs two months, so it is
/// undefined at horizon 1.
pub fn evaluate(forecast: &[ForecastRow], actual: &SkuSeries) -> Result<Vec<EvalReport>> {
    let Some(first) = forecast.first() else {
        return Ok(Vec::new());
    };
    let sku = &first.sku;
    if let Some(other) = forecast.iter().find(|r| &r.sku != sku) {
        return Err(Error::Contract(format!("forecast mixes SKUs {sku} and {}", other.sku)));
    }
    let cutoff: DateStamp = first.ds.add_days(-1);
    let predicted: Vec<DailyPoint> = forecast.iter().map(ForecastRow::point).collect();
    let predicted = monthly_totals(&predicted, sku, cutoff)?;
    let last_month = *EVAL_HORIZONS.last().expect("non-empty horizons") as i32;

    let mut observed = Vec::with_capacity(forecast.len());
    for r in forecast.iter().filter(|r| crate::aggregate::month_diff(r.ds, cutoff) <= last_month) {
        let i = actual
            .index_of(r.ds)
            .ok_or_else(|| Error::Invalid(format!("actuals for {sku} have no value on {}", r.ds)))?;
        let y = actual.values()[i];
        observed.push(DailyPoint { date: r.ds, yhat: y, lower: y, upper: y });
    }
    let observed = monthly_totals(&observed, sku, cutoff)?;

    let mut reports = Vec::new();
    for h in EVAL_HORIZONS {
        let window = |rows: &[crate::aggregate::MonthlyForecast]| -> Vec<f64> {
            rows.iter().filter(|m| (1..=h as i32).contains(&m.month_diff)).map(|m| m.sales).collect()
        };
        let (a, p) = (window(&observed), window(&predicted));
        if a.len() < h as usize {
            continue;
        }
        let m = point_metrics(&a, &p)?;
        reports.push(EvalReport {
            sku: sku.clone(),
            horizon_months: h,
            mape: m.mape,
            rmse: m.rmse,
            mae: m.mae,
            directional_accuracy: (a.len() >= 2).then(|| directional_accuracy(&a, &p)).transpose()?,
            n_points: m.n_points,
            mape_excluded: m.mape_excluded,
        });
    }
    Ok(reports)
}

/// Serialize reports; undefined values are written as empty fields.
pub fn write_reports(rows: &[EvalReport]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(REPORT_COLUMNS).expect("in-memory write");
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.sku.to_string(),
            r.horizon_months.to_string(),
            opt(r.mape),
            r.rmse.to_string(),
            r.mae.to_string(),
            opt(r.directional_accuracy),
            r.n_points.to_string(),
            r.mape_excluded.to_string(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn parse_reports(bytes: &[u8]) -> Result<Vec<EvalReport>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(bytes);
    let headers = rdr.headers().map_err(|e| Error::Format(format!("metrics file: {e}")))?.clone();
    if headers.iter().collect::<Vec<_>>() != REPORT_COLUMNS {
        return Err(Error::Format(format!("metrics file: expected header `{}`", REPORT_COLUMNS.join(","))));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Format(format!("metrics file: {e}")))?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |i: usize| Error::validation(line, format!("cannot parse {} value '{}'", REPORT_COLUMNS[i], &rec[i]));
        let opt = |i: usize| -> Result<Option<f64>> {
            if rec[i].is_empty() {
                Ok(None)
            } else {
                rec[i].parse().map(Some).map_err(|_| bad(i))
            }
        };
        out.push(EvalReport {
            sku: SkuId::new(&rec[0]).map_err(|e| Error::validation(line, e.to_string()))?,
            horizon_months: rec[1].parse().map_err(|_| bad(1))?,
            mape: opt(2)?,
            rmse: rec[3].parse().map_err(|_| bad(3))?,
            mae: rec[4].parse().map_err(|_| bad(4))?,
            directional_accuracy: opt(5)?,
            n_points: rec[6].parse().map_err(|_| bad(6))?,
            mape_excluded: rec[7].parse().map_err(|_| bad(7))?,
        });
    }
    Ok(out)
}
