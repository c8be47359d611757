//! Readers and writers for the three delimited input files (sales, COVID,
//! holidays), the optional future-COVID scenario file, and the join of
//! COVID statistics onto a sales date axis.
//!
//! All readers require an exact header naming their columns. Extra
//! columns are ignored with a warning. Line numbers in errors are 1-based
//! and count the header as line 1.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{CovidDaily, DateStamp, Observation, SkuId, SkuSeries};
use crate::error::{Error, Result};

/// Sales file header.
pub const SALES_COLUMNS: [&str; 3] = ["dt", "sku", "quantity"];
/// COVID file header.
pub const COVID_COLUMNS: [&str; 3] = ["dt", "new_cases", "new_deaths"];
/// Holiday file header.
pub const HOLIDAY_COLUMNS: [&str; 4] = ["name", "date", "lower_window", "upper_window"];
/// Future COVID scenario header.
pub const SCENARIO_COLUMNS: [&str; 3] = ["dt", "cases_7day_avg", "deaths_7day_avg"];

/// A named calendar event whose effect spans
/// `[date + lower_window, date + upper_window]` inclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HolidaySpec {
    pub name: String,
    pub date: DateStamp,
    pub lower_window: i32,
    pub upper_window: i32,
}

impl HolidaySpec {
    pub fn new(name: impl Into<String>, date: DateStamp, lower_window: i32, upper_window: i32) -> Result<Self> {
        let name = name.into();
        if name.trim().is_empty() {
            return Err(Error::Invalid("holiday name is empty".into()));
        }
        if lower_window > 0 {
            return Err(Error::Invalid(format!("holiday {name}: lower_window {lower_window} must be <= 0")));
        }
        if upper_window < 0 {
            return Err(Error::Invalid(format!("holiday {name}: upper_window {upper_window} must be >= 0")));
        }
        Ok(HolidaySpec { name, date, lower_window, upper_window })
    }

    /// First and last affected dates.
    pub fn span(&self) -> (DateStamp, DateStamp) {
        (self.date.add_days(self.lower_window as i64), self.date.add_days(self.upper_window as i64))
    }

    pub fn covers(&self, date: DateStamp) -> bool {
        let (a, b) = self.span();
        a <= date && date <= b
    }
}

/// Header-checked CSV reader yielding `(line, fields-in-required-order)`
/// plus any malformed records.
struct Table {
    line_fields: Vec<(u64, Vec<String>)>,
    errors: Vec<Error>,
}

impl Table {
    fn read(bytes: &[u8], required: &[&str], what: &str) -> Result<Table> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(bytes);
        let headers = rdr.headers().map_err(|e| Error::Format(format!("{what} file: {e}")))?.clone();
        if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
            return Err(Error::Format(format!("{what} file: missing header, expected `{}`", required.join(","))));
        }
        let mut positions = Vec::with_capacity(required.len());
        for col in required {
            match headers.iter().position(|h| h == *col) {
                Some(p) => positions.push(p),
                None => {
                    return Err(Error::Format(format!(
                        "{what} file: header `{}` lacks column `{col}` (expected `{}`)",
                        headers.iter().collect::<Vec<_>>().join(","),
                        required.join(",")
                    )))
                }
            }
        }
        let extra: Vec<&str> = headers.iter().filter(|h| !required.contains(h)).collect();
        if !extra.is_empty() {
            log::warn!("{what} file: ignoring extra columns {extra:?}");
        }

        let mut table = Table { line_fields: Vec::new(), errors: Vec::new() };
        for rec in rdr.records() {
            let rec = match rec {
                Ok(rec) => rec,
                Err(e) => {
                    let line = e.position().map(|p| p.line()).unwrap_or(0);
                    let fatal = !matches!(e.kind(), csv::ErrorKind::UnequalLengths { .. });
                    table.errors.push(Error::validation(line, format!("{what} file: {e}")));
                    if fatal {
                        break;
                    }
                    continue;
                }
            };
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            if rec.len() == 1 && rec[0].is_empty() {
                continue;
            }
            table.line_fields.push((line, positions.iter().map(|&p| rec[p].to_string()).collect()));
        }
        Ok(table)
    }

    /// Apply `row` to every record, collecting values and errors in line
    /// order.
    fn rows<T>(self, mut row: impl FnMut(u64, &[String]) -> Result<T>) -> (Vec<T>, Vec<Error>) {
        let mut errors = self.errors;
        let mut values = Vec::with_capacity(self.line_fields.len());
        for (line, f) in &self.line_fields {
            match row(*line, f) {
                Ok(v) => values.push(v),
                Err(e) => errors.push(e),
            }
        }
        errors.sort_by_key(|e| match e {
            Error::Validation { line, .. } => *line,
            _ => 0,
        });
        (values, errors)
    }
}

/// First error of a collected parse, or the values.
fn first_error<T>((values, errors): (Vec<T>, Vec<Error>)) -> Result<Vec<T>> {
    match errors.into_iter().next() {
        Some(e) => Err(e),
        None => Ok(values),
    }
}

/// Every problem in a file: a header error alone, or all row errors.
fn all_errors<T>(parsed: Result<(Vec<T>, Vec<Error>)>) -> Vec<Error> {
    match parsed {
        Ok((_, errors)) => errors,
        Err(e) => vec![e],
    }
}

fn parse_field<T: FromStr>(line: u64, column: &str, raw: &str) -> Result<T> {
    raw.parse::<T>().map_err(|_| Error::validation(line, format!("cannot parse {column} value '{raw}'")))
}

fn parse_date(line: u64, column: &str, raw: &str) -> Result<DateStamp> {
    raw.parse::<DateStamp>().map_err(|e| Error::validation(line, format!("{column}: {e}")))
}

fn parse_nonneg(line: u64, column: &str, raw: &str) -> Result<f64> {
    let v: f64 = parse_field(line, column, raw)?;
    if !v.is_finite() {
        return Err(Error::validation(line, format!("{column} value '{raw}' is not finite")));
    }
    if v < 0.0 {
        return Err(Error::validation(line, format!("{column} value {v} is negative")));
    }
    Ok(v)
}

fn sales_rows(bytes: &[u8]) -> Result<(Vec<Observation>, Vec<Error>)> {
    Ok(Table::read(bytes, &SALES_COLUMNS, "sales")?.rows(|line, f| {
        let date = parse_date(line, "dt", &f[0])?;
        let sku = SkuId::new(f[1].clone()).map_err(|e| Error::validation(line, e.to_string()))?;
        let quantity = parse_nonneg(line, "quantity", &f[2])?;
        Ok(Observation { date, sku, quantity })
    }))
}

fn covid_rows(bytes: &[u8]) -> Result<(Vec<CovidDaily>, Vec<Error>)> {
    let mut seen: BTreeMap<DateStamp, u64> = BTreeMap::new();
    let (mut rows, errors) = Table::read(bytes, &COVID_COLUMNS, "covid")?.rows(|line, f| {
        let date = parse_date(line, "dt", &f[0])?;
        let cases = parse_nonneg(line, "new_cases", &f[1])?;
        let deaths = parse_nonneg(line, "new_deaths", &f[2])?;
        if let Some(first) = seen.get(&date) {
            return Err(Error::validation(line, format!("duplicate date {date} (first seen on line {first})")));
        }
        seen.insert(date, line);
        CovidDaily::new(date, cases, deaths).map_err(|e| Error::validation(line, e.to_string()))
    });
    rows.sort_by_key(|r| r.date);
    Ok((rows, errors))
}

fn holiday_rows(bytes: &[u8]) -> Result<(Vec<HolidaySpec>, Vec<Error>)> {
    Ok(Table::read(bytes, &HOLIDAY_COLUMNS, "holidays")?.rows(|line, f| {
        let date = parse_date(line, "date", &f[1])?;
        let lower: i32 = parse_field(line, "lower_window", &f[2])?;
        let upper: i32 = parse_field(line, "upper_window", &f[3])?;
        HolidaySpec::new(f[0].clone(), date, lower, upper).map_err(|e| Error::validation(line, e.to_string()))
    }))
}

type ScenarioRow = (DateStamp, (f64, f64));

fn scenario_rows(bytes: &[u8]) -> Result<(Vec<ScenarioRow>, Vec<Error>)> {
    let mut seen = std::collections::BTreeSet::new();
    Ok(Table::read(bytes, &SCENARIO_COLUMNS, "scenario")?.rows(|line, f| {
        let date = parse_date(line, "dt", &f[0])?;
        let cases = parse_nonneg(line, "cases_7day_avg", &f[1])?;
        let deaths = parse_nonneg(line, "deaths_7day_avg", &f[2])?;
        if !seen.insert(date) {
            return Err(Error::validation(line, format!("duplicate date {date}")));
        }
        Ok((date, (cases, deaths)))
    }))
}

/// Parse a `dt,sku,quantity` sales table into raw observations.
pub fn parse_sales(bytes: &[u8]) -> Result<Vec<Observation>> {
    first_error(sales_rows(bytes)?)
}

/// Parse a `dt,new_cases,new_deaths` table, sorted ascending by date.
/// Duplicate dates are rejected.
pub fn parse_covid(bytes: &[u8]) -> Result<Vec<CovidDaily>> {
    first_error(covid_rows(bytes)?)
}

/// Parse a `name,date,lower_window,upper_window` holiday table.
pub fn parse_holidays(bytes: &[u8]) -> Result<Vec<HolidaySpec>> {
    first_error(holiday_rows(bytes)?)
}

/// Parse a future COVID scenario (`dt,cases_7day_avg,deaths_7day_avg`).
pub fn parse_scenario(bytes: &[u8]) -> Result<BTreeMap<DateStamp, (f64, f64)>> {
    Ok(first_error(scenario_rows(bytes)?)?.into_iter().collect())
}

/// Every problem in a sales file, in line order.
pub fn audit_sales(bytes: &[u8]) -> Vec<Error> {
    all_errors(sales_rows(bytes))
}

/// Every problem in a COVID file, in line order.
pub fn audit_covid(bytes: &[u8]) -> Vec<Error> {
    all_errors(covid_rows(bytes))
}

/// Every problem in a holiday file, in line order.
pub fn audit_holidays(bytes: &[u8]) -> Vec<Error> {
    all_errors(holiday_rows(bytes))
}

/// Every problem in a scenario file, in line order.
pub fn audit_scenario(bytes: &[u8]) -> Vec<Error> {
    all_errors(scenario_rows(bytes))
}

/// Join COVID statistics onto the series' date axis. Dates with no COVID
/// record (before coverage, after coverage, or gaps) get `(0, 0)`.
pub fn merge_covid(series: &SkuSeries, covid: &[CovidDaily]) -> Vec<(f64, f64)> {
    let mut out = vec![(0.0, 0.0); series.len()];
    for rec in covid {
        if let Some(i) = series.index_of(rec.date) {
            out[i] = (rec.new_cases, rec.new_deaths);
        }
    }
    out
}

fn write_rows(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Serialize observations in the sales file format.
pub fn write_sales(rows: &[Observation]) -> Vec<u8> {
    write_rows(&SALES_COLUMNS, rows.iter().map(|o| vec![o.date.to_string(), o.sku.to_string(), o.quantity.to_string()]))
}

/// Serialize a series as sales rows, one per day.
pub fn write_series(series: &SkuSeries) -> Vec<u8> {
    let rows: Vec<Observation> = series
        .dates()
        .zip(series.values())
        .map(|(date, &quantity)| Observation { date, sku: series.sku().clone(), quantity })
        .collect();
    write_sales(&rows)
}

pub fn write_covid(rows: &[CovidDaily]) -> Vec<u8> {
    write_rows(
        &COVID_COLUMNS,
        rows.iter().map(|r| vec![r.date.to_string(), r.new_cases.to_string(), r.new_deaths.to_string()]),
    )
}

pub fn write_holidays(rows: &[HolidaySpec]) -> Vec<u8> {
    write_rows(
        &HOLIDAY_COLUMNS,
        rows.iter()
            .map(|h| vec![h.name.clone(), h.date.to_string(), h.lower_window.to_string(), h.upper_window.to_string()]),
    )
}

pub fn write_scenario(rows: &BTreeMap<DateStamp, (f64, f64)>) -> Vec<u8> {
    write_rows(&SCENARIO_COLUMNS, rows.iter().map(|(d, (c, x))| vec![d.to_string(), c.to_string(), x.to_string()]))
}
