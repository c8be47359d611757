//! Roll daily forecasts up into month-indexed totals for production
//! planning, and read/write the daily and monthly forecast files.
//!
//! Daily file components are in demand units in both seasonality modes
//! (a multiplicative seasonal column holds `trend · s(t)`), so
//! `yhat = trend + weekly + yearly + holidays + regressors` row by row.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::{DateStamp, SkuId};
use crate::error::{Error, Result};
use crate::model::{Interval, Prediction, SeasonalityMode};

/// Months from the cutoff's month to the forecast date's month; the
/// cutoff month itself is 0. Day of month is ignored.
pub fn month_diff(forecast: DateStamp, cutoff: DateStamp) -> i32 {
    12 * (forecast.year() - cutoff.year()) + forecast.month() as i32 - cutoff.month() as i32
}

/// One day of forecast with its interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DailyPoint {
    pub date: DateStamp,
    pub yhat: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlyForecast {
    pub sku: SkuId,
    pub year: i32,
    pub month: u32,
    pub month_diff: i32,
    /// Sum of daily point forecasts.
    pub sales: f64,
    /// Sum of daily lower bounds.
    pub lower: f64,
    /// Sum of daily upper bounds.
    pub upper: f64,
    /// Days of the month present in the daily input; less than the
    /// calendar length for partial edge months.
    pub days_covered: u32,
}

/// Group contiguous daily points by calendar month.
pub fn monthly_totals(daily: &[DailyPoint], sku: &SkuId, cutoff: DateStamp) -> Result<Vec<MonthlyForecast>> {
    if let Some(w) = daily.windows(2).find(|w| w[1].date.days_since(w[0].date) != 1) {
        return Err(Error::Contract(format!(
            "daily forecast is not contiguous between {} and {}",
            w[0].date, w[1].date
        )));
    }
    let mut months: BTreeMap<i32, MonthlyForecast> = BTreeMap::new();
    for p in daily {
        let md = month_diff(p.date, cutoff);
        let row = months.entry(md).or_insert_with(|| MonthlyForecast {
            sku: sku.clone(),
            year: p.date.year(),
            month: p.date.month(),
            month_diff: md,
            sales: 0.0,
            lower: 0.0,
            upper: 0.0,
            days_covered: 0,
        });
        row.sales += p.yhat;
        row.lower += p.lower;
        row.upper += p.upper;
        row.days_covered += 1;
    }
    Ok(months.into_values().collect())
}

pub const DAILY_COLUMNS: [&str; 10] =
    ["ds", "sku", "yhat", "yhat_lower", "yhat_upper", "trend", "weekly", "yearly", "holidays", "regressors"];

/// One row of the daily forecast file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRow {
    pub ds: DateStamp,
    pub sku: SkuId,
    pub yhat: f64,
    pub yhat_lower: f64,
    pub yhat_upper: f64,
    pub trend: f64,
    pub weekly: f64,
    pub yearly: f64,
    pub holidays: f64,
    pub regressors: f64,
}

impl ForecastRow {
    pub fn point(&self) -> DailyPoint {
        DailyPoint { date: self.ds, yhat: self.yhat, lower: self.yhat_lower, upper: self.yhat_upper }
    }
}

/// Daily rows from a prediction and its intervals.
pub fn forecast_rows(sku: &SkuId, prediction: &Prediction, intervals: &[Interval]) -> Result<Vec<ForecastRow>> {
    if intervals.len() != prediction.len() {
        return Err(Error::Contract(format!("{} intervals for {} predicted days", intervals.len(), prediction.len())));
    }
    let component = |name: &str, i: usize| {
        let s = prediction.seasonal.get(name).map_or(0.0, |c| c[i]);
        match prediction.mode {
            SeasonalityMode::Additive => s,
            SeasonalityMode::Multiplicative => prediction.trend[i] * s,
        }
    };
    Ok((0..prediction.len())
        .map(|i| ForecastRow {
            ds: prediction.dates[i],
            sku: sku.clone(),
            yhat: prediction.yhat[i],
            yhat_lower: intervals[i].lower,
            yhat_upper: intervals[i].upper,
            trend: prediction.trend[i],
            weekly: component("weekly", i),
            yearly: component("yearly", i),
            holidays: prediction.holidays[i],
            regressors: prediction.regressors[i],
        })
        .collect())
}

pub fn write_daily(rows: &[ForecastRow]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(DAILY_COLUMNS).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.ds.to_string(),
            r.sku.to_string(),
            r.yhat.to_string(),
            r.yhat_lower.to_string(),
            r.yhat_upper.to_string(),
            r.trend.to_string(),
            r.weekly.to_string(),
            r.yearly.to_string(),
            r.holidays.to_string(),
            r.regressors.to_string(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn parse_daily(bytes: &[u8]) -> Result<Vec<ForecastRow>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(bytes);
    let headers = rdr.headers().map_err(|e| Error::Format(format!("forecast file: {e}")))?.clone();
    if headers.iter().collect::<Vec<_>>() != DAILY_COLUMNS {
        return Err(Error::Format(format!("forecast file: expected header `{}`", DAILY_COLUMNS.join(","))));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Format(format!("forecast file: {e}")))?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse()
                .map_err(|_| Error::validation(line, format!("cannot parse {} value '{}'", DAILY_COLUMNS[i], &rec[i])))
        };
        out.push(ForecastRow {
            ds: rec[0].parse().map_err(|e| Error::validation(line, format!("ds: {e}")))?,
            sku: SkuId::new(&rec[1]).map_err(|e| Error::validation(line, e.to_string()))?,
            yhat: num(2)?,
            yhat_lower: num(3)?,
            yhat_upper: num(4)?,
            trend: num(5)?,
            weekly: num(6)?,
            yearly: num(7)?,
            holidays: num(8)?,
            regressors: num(9)?,
        });
    }
    Ok(out)
}

pub const MONTHLY_COLUMNS: [&str; 8] =
    ["sku", "year", "month", "month_diff", "sales", "lower", "upper", "days_covered"];

pub fn write_monthly(rows: &[MonthlyForecast]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(MONTHLY_COLUMNS).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.sku.to_string(),
            r.year.to_string(),
            r.month.to_string(),
            r.month_diff.to_string(),
            r.sales.to_string(),
            r.lower.to_string(),
            r.upper.to_string(),
            r.days_covered.to_string(),
        ])
        .expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn parse_monthly(bytes: &[u8]) -> Result<Vec<MonthlyForecast>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(bytes);
    let headers = rdr.headers().map_err(|e| Error::Format(format!("monthly file: {e}")))?.clone();
    if headers.iter().collect::<Vec<_>>() != MONTHLY_COLUMNS {
        return Err(Error::Format(format!("monthly file: expected header `{}`", MONTHLY_COLUMNS.join(","))));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Format(format!("monthly file: {e}")))?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |c: &str| Error::validation(line, format!("cannot parse {c}"));
        out.push(MonthlyForecast {
            sku: SkuId::new(&rec[0]).map_err(|e| Error::validation(line, e.to_string()))?,
            year: rec[1].parse().map_err(|_| bad("year"))?,
            month: rec[2].parse().map_err(|_| bad("month"))?,
            month_diff: rec[3].parse().map_err(|_| bad("month_diff"))?,
            sales: rec[4].parse().map_err(|_| bad("sales"))?,
            lower: rec[5].parse().map_err(|_| bad("lower"))?,
            upper: rec[6].parse().map_err(|_| bad("upper"))?,
            days_covered: rec[7].parse().map_err(|_| bad("days_covered"))?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn month_diff_examples() {
        assert_eq!(month_diff(DateStamp::ymd(2024, 7, 31), DateStamp::ymd(2024, 7, 1)), 0);
        assert_eq!(month_diff(DateStamp::ymd(2024, 9, 3), DateStamp::ymd(2024, 7, 15)), 2);
        assert_eq!(month_diff(DateStamp::ymd(2024, 1, 1), DateStamp::ymd(2023, 12, 31)), 1);
        assert_eq!(month_diff(DateStamp::ymd(2023, 11, 30), DateStamp::ymd(2024, 1, 5)), -2);
    }

    fn flat(start: DateStamp, n: usize, v: f64) -> Vec<DailyPoint> {
        (0..n).map(|i| DailyPoint { date: start.add_days(i as i64), yhat: v, lower: v - 1.0, upper: v + 1.0 }).collect()
    }

    #[test]
    fn daily_file_round_trip() {
        let row = ForecastRow {
            ds: DateStamp::ymd(2024, 2, 29),
            sku: SkuId::new("10-inch").unwrap(),
            yhat: 12.5,
            yhat_lower: 10.0,
            yhat_upper: 15.25,
            trend: 11.0,
            weekly: 0.75,
            yearly: -0.5,
            holidays: 1.0,
            regressors: 0.25,
        };
        let bytes = write_daily(std::slice::from_ref(&row));
        assert!(bytes.starts_with(b"ds,sku,yhat,yhat_lower,yhat_upper,trend,weekly,yearly,holidays,regressors\n"));
        assert_eq!(parse_daily(&bytes).unwrap(), vec![row]);
        assert!(matches!(parse_daily(b"ds,sku\n"), Err(Error::Format(_))));
    }

    #[test]
    fn ninety_days_from_august() {
        let sku = SkuId::new("A").unwrap();
        let rows =
            monthly_totals(&flat(DateStamp::ymd(2024, 8, 1), 90, 1.0), &sku, DateStamp::ymd(2024, 7, 31)).unwrap();
        let got: Vec<(i32, f64, u32)> = rows.iter().map(|r| (r.month_diff, r.sales, r.days_covered)).collect();
        assert_eq!(got, vec![(1, 31.0, 31), (2, 30.0, 30), (3, 29.0, 29)]);
        assert!(rows.iter().all(|r| r.lower <= r.sales && r.sales <= r.upper));
    }

    #[test]
    fn single_day() {
        let sku = SkuId::new("A").unwrap();
        let rows =
            monthly_totals(&flat(DateStamp::ymd(2024, 2, 29), 1, 4.5), &sku, DateStamp::ymd(2024, 2, 1)).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].sales, 4.5);
        assert_eq!(rows[0].month_diff, 0);
    }

    #[test]
    fn gaps_are_rejected() {
        let sku = SkuId::new("A").unwrap();
        let mut d = flat(DateStamp::ymd(2024, 2, 1), 5, 1.0);
        d.remove(2);
        assert!(monthly_totals(&d, &sku, DateStamp::ymd(2024, 2, 1)).is_err());
    }

    #[test]
    fn monthly_file_round_trip() {
        let sku = SkuId::new("14-inch").unwrap();
        let rows =
            monthly_totals(&flat(DateStamp::ymd(2024, 8, 17), 90, 2.25), &sku, DateStamp::ymd(2024, 8, 16)).unwrap();
        assert_eq!(parse_monthly(&write_monthly(&rows)).unwrap(), rows);
    }

    proptest! {
        #[test]
        fn mass_is_conserved(start in 0i64..3000, vals in proptest::collection::vec(-50.0f64..500.0, 1..200)) {
            let sku = SkuId::new("A").unwrap();
            let s = DateStamp::ymd(2018, 1, 1).add_days(start);
            let daily: Vec<DailyPoint> = vals.iter().enumerate()
                .map(|(i, &v)| DailyPoint { date: s.add_days(i as i64), yhat: v, lower: v, upper: v }).collect();
            let rows = monthly_totals(&daily, &sku, s).unwrap();
            let total: f64 = vals.iter().sum();
            let monthly: f64 = rows.iter().map(|r| r.sales).sum();
            prop_assert!((total - monthly).abs() <= 1e-9 * total.abs().max(1.0));
            prop_assert!(rows.windows(2).all(|w| w[1].month_diff == w[0].month_diff + 1));
            prop_assert_eq!(rows.iter().map(|r| r.days_covered as usize).sum::<usize>(), vals.len());
        }

        #[test]
        fn month_diff_is_reflexive(d in 0i64..4000) {
            let date = DateStamp::ymd(2016, 1, 1).add_days(d);
            prop_assert_eq!(month_diff(date, date), 0);
        }
    }
}
