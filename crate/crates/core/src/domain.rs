//! Domain types shared by the whole pipeline, plus alignment of raw order
//! rows onto contiguous per-SKU daily series.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A calendar date with no time-of-day component.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct DateStamp(NaiveDate);

impl DateStamp {
    pub fn from_ymd(year: i32, month: u32, day: u32) -> Result<Self> {
        NaiveDate::from_ymd_opt(year, month, day)
            .map(DateStamp)
            .ok_or_else(|| Error::Invalid(format!("{year:04}-{month:02}-{day:02} is not a calendar date")))
    }

    /// Infallible constructor for literals known to be valid.
    ///
    /// Panics on an impossible date.
    pub fn ymd(year: i32, month: u32, day: u32) -> Self {
        Self::from_ymd(year, month, day).expect("valid calendar date")
    }

    pub fn year(self) -> i32 {
        self.0.year()
    }

    pub fn month(self) -> u32 {
        self.0.month()
    }

    pub fn day(self) -> u32 {
        self.0.day()
    }

    pub fn weekday(self) -> Weekday {
        self.0.weekday()
    }

    pub fn naive(self) -> NaiveDate {
        self.0
    }

    pub fn add_days(self, days: i64) -> Self {
        DateStamp(self.0 + chrono::Duration::days(days))
    }

    /// Signed number of days from `earlier` to `self`.
    pub fn days_since(self, earlier: DateStamp) -> i64 {
        (self.0 - earlier.0).num_days()
    }

    /// Days since 1970-01-01; the absolute time axis used by Fourier terms.
    pub fn epoch_day(self) -> i64 {
        self.days_since(DateStamp::ymd(1970, 1, 1))
    }
}

impl From<NaiveDate> for DateStamp {
    fn from(d: NaiveDate) -> Self {
        DateStamp(d)
    }
}

impl FromStr for DateStamp {
    type Err = Error;

    /// Strict ISO-8601 `YYYY-MM-DD`.
    fn from_str(s: &str) -> Result<Self> {
        let b = s.as_bytes();
        let shape_ok = b.len() == 10
            && b[4] == b'-'
            && b[7] == b'-'
            && b.iter().enumerate().all(|(i, c)| i == 4 || i == 7 || c.is_ascii_digit());
        if !shape_ok {
            return Err(Error::Invalid(format!("'{s}' is not an ISO-8601 date (YYYY-MM-DD)")));
        }
        NaiveDate::parse_from_str(s, "%Y-%m-%d")
            .map(DateStamp)
            .map_err(|_| Error::Invalid(format!("'{s}' is not a calendar date")))
    }
}

impl TryFrom<String> for DateStamp {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DateStamp> for String {
    fn from(d: DateStamp) -> String {
        d.to_string()
    }
}

impl fmt::Display for DateStamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.format("%Y-%m-%d"))
    }
}

impl fmt::Debug for DateStamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// Product variant identifier, e.g. `"12-inch"`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SkuId(String);

impl SkuId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::Invalid("SKU id is empty".into()));
        }
        if id.trim() != id {
            return Err(Error::Invalid(format!("SKU id '{id}' has leading or trailing whitespace")));
        }
        Ok(SkuId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for SkuId {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        SkuId::new(s)
    }
}

impl From<SkuId> for String {
    fn from(s: SkuId) -> String {
        s.0
    }
}

impl FromStr for SkuId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SkuId::new(s)
    }
}

impl fmt::Display for SkuId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for SkuId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// One SKU's daily demand on a contiguous date axis starting at `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkuSeries {
    sku: SkuId,
    start: DateStamp,
    values: Vec<f64>,
}

impl SkuSeries {
    pub fn new(sku: SkuId, start: DateStamp, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Invalid(format!("series for {sku} is empty")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Invalid(format!(
                "series for {sku}: value {} on {} is not a finite non-negative quantity",
                values[i],
                start.add_days(i as i64)
            )));
        }
        Ok(SkuSeries { sku, start, values })
    }

    pub fn sku(&self) -> &SkuId {
        &self.sku
    }

    pub fn start(&self) -> DateStamp {
        self.start
    }

    pub fn end(&self) -> DateStamp {
        self.date_at(self.values.len() - 1)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn date_at(&self, index: usize) -> DateStamp {
        self.start.add_days(index as i64)
    }

    pub fn dates(&self) -> impl Iterator<Item = DateStamp> + '_ {
        (0..self.values.len()).map(|i| self.date_at(i))
    }

    /// Index of `date` on this series' axis, if covered.
    pub fn index_of(&self, date: DateStamp) -> Option<usize> {
        let d = date.days_since(self.start);
        (d >= 0 && (d as usize) < self.values.len()).then_some(d as usize)
    }

    /// The prefix of the series up to and including `cutoff`.
    pub fn truncate_to(&self, cutoff: DateStamp) -> Result<SkuSeries> {
        let idx = self
            .index_of(cutoff)
            .ok_or_else(|| Error::Contract(format!("cutoff {cutoff} is outside {}..{}", self.start, self.end())))?;
        SkuSeries::new(self.sku.clone(), self.start, self.values[..=idx].to_vec())
    }

    /// Same axis, values multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<SkuSeries> {
        SkuSeries::new(self.sku.clone(), self.start, self.values.iter().map(|v| v * factor).collect())
    }
}

/// One day of epidemic statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovidDaily {
    pub date: DateStamp,
    pub new_cases: f64,
    pub new_deaths: f64,
}

impl CovidDaily {
    pub fn new(date: DateStamp, new_cases: f64, new_deaths: f64) -> Result<Self> {
        for (name, v) in [("new_cases", new_cases), ("new_deaths", new_deaths)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Invalid(format!("{name} on {date} must be finite and non-negative, got {v}")));
            }
        }
        Ok(CovidDaily { date, new_cases, new_deaths })
    }
}

/// A raw order row.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub date: DateStamp,
    pub sku: SkuId,
    pub quantity: f64,
}

/// Partition observations by SKU into contiguous daily series. Missing days
/// are zero-sales days; duplicate `(date, sku)` rows are summed.
pub fn align_series(observations: &[Observation]) -> Result<BTreeMap<SkuId, SkuSeries>> {
    let mut by_sku: BTreeMap<&SkuId, BTreeMap<DateStamp, f64>> = BTreeMap::new();
    for (row, obs) in observations.iter().enumerate() {
        if !obs.quantity.is_finite() || obs.quantity < 0.0 {
            return Err(Error::Invalid(format!(
                "observation {} ({}, {}): quantity {} is negative or not finite",
                row + 1,
                obs.date,
                obs.sku,
                obs.quantity
            )));
        }
        *by_sku.entry(&obs.sku).or_default().entry(obs.date).or_insert(0.0) += obs.quantity;
    }

    by_sku
        .into_iter()
        .map(|(sku, days)| {
            let (&first, _) = days.first_key_value().expect("non-empty per-sku map");
            let (&last, _) = days.last_key_value().expect("non-empty per-sku map");
            let mut values = vec![0.0; last.days_since(first) as usize + 1];
            for (date, q) in days {
                values[date.days_since(first) as usize] = q;
            }
            Ok((sku.clone(), SkuSeries::new(sku.clone(), first, values)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(d: &str, sku: &str, q: f64) -> Observation {
        Observation { date: d.parse().unwrap(), sku: SkuId::new(sku).unwrap(), quantity: q }
    }

    #[test]
    fn gap_days_are_zero_filled() {
        let out = align_series(&[obs("2020-01-01", "A", 3.0), obs("2020-01-03", "A", 5.0)]).unwrap();
        let a = &out[&SkuId::new("A").unwrap()];
        assert_eq!(a.start(), DateStamp::ymd(2020, 1, 1));
        assert_eq!(a.values(), &[3.0, 0.0, 5.0]);
    }

    #[test]
    fn duplicates_are_summed() {
        let out = align_series(&[obs("2020-01-01", "A", 2.0), obs("2020-01-01", "A", 4.0)]).unwrap();
        assert_eq!(out[&SkuId::new("A").unwrap()].values(), &[6.0]);
    }

    #[test]
    fn skus_are_partitioned() {
        let out = align_series(&[obs("2020-01-01", "A", 1.0), obs("2020-01-01", "B", 7.0)]).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[&SkuId::new("B").unwrap()].values(), &[7.0]);
    }

    #[test]
    fn empty_input_is_empty_map() {
        assert!(align_series(&[]).unwrap().is_empty());
    }

    #[test]
    fn negative_quantity_names_row() {
        let err = align_series(&[obs("2020-01-01", "A", 1.0), obs("2020-01-02", "A", -1.0)]).unwrap_err();
        assert!(err.to_string().contains("observation 2"), "{err}");
    }

    #[test]
    fn sku_id_rejects_whitespace_and_empty() {
        assert!(SkuId::new("").is_err());
        assert!(SkuId::new(" 10-inch").is_err());
        assert!(SkuId::new("10-inch").is_ok());
    }

    #[test]
    fn date_parsing_is_strict() {
        assert!("2020-1-01".parse::<DateStamp>().is_err());
        assert!("2020-02-30".parse::<DateStamp>().is_err());
        assert!("01/02/2020".parse::<DateStamp>().is_err());
        assert_eq!("2024-02-29".parse::<DateStamp>().unwrap(), DateStamp::ymd(2024, 2, 29));
    }

    #[test]
    fn date_order_matches_calendar() {
        assert!(DateStamp::ymd(2019, 12, 31) < DateStamp::ymd(2020, 1, 1));
        assert_eq!(DateStamp::ymd(2020, 3, 1).days_since(DateStamp::ymd(2020, 2, 1)), 29);
    }
}
