//! The sixteen external regressors: demand lags, lagged rolling means,
//! calendar flags and smoothed COVID signals. Also projects the regressors
//! over a forecast horizon.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::Weekday;
use serde::{Deserialize, Serialize};

use crate::domain::{DateStamp, SkuSeries};
use crate::error::{Error, Result};

/// Lag offsets, in days.
pub const LAGS: [usize; 5] = [1, 7, 14, 30, 60];
/// Rolling-mean windows, in days.
pub const ROLLING_WINDOWS: [usize; 3] = [7, 14, 30];
/// Rows dropped from the front of every training design: the longest lag.
pub const WARMUP_DAYS: usize = 60;
/// Smoothing window for COVID statistics.
pub const COVID_WINDOW: usize = 7;
/// Number of trailing rows averaged when projecting recursive columns.
pub const PROJECTION_ROWS: usize = 3;

/// One of the sixteen regressor columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressorName {
    Lag1,
    Lag7,
    Lag14,
    Lag30,
    Lag60,
    RollingMean7,
    RollingMean14,
    RollingMean30,
    IsWeekend,
    IsSummerPeak,
    IsBlackFriday,
    IsBackToSchool,
    IsHolidaySeason,
    Quarter,
    Cases7dayAvg,
    Deaths7dayAvg,
}

impl RegressorName {
    pub const ALL: [RegressorName; 16] = [
        RegressorName::Lag1,
        RegressorName::Lag7,
        RegressorName::Lag14,
        RegressorName::Lag30,
        RegressorName::Lag60,
        RegressorName::RollingMean7,
        RegressorName::RollingMean14,
        RegressorName::RollingMean30,
        RegressorName::IsWeekend,
        RegressorName::IsSummerPeak,
        RegressorName::IsBlackFriday,
        RegressorName::IsBackToSchool,
        RegressorName::IsHolidaySeason,
        RegressorName::Quarter,
        RegressorName::Cases7dayAvg,
        RegressorName::Deaths7dayAvg,
    ];

    pub const COVID: [RegressorName; 2] = [RegressorName::Cases7dayAvg, RegressorName::Deaths7dayAvg];

    pub fn as_str(self) -> &'static str {
        use RegressorName::*;
        match self {
            Lag1 => "lag_1",
            Lag7 => "lag_7",
            Lag14 => "lag_14",
            Lag30 => "lag_30",
            Lag60 => "lag_60",
            RollingMean7 => "rolling_mean_7",
            RollingMean14 => "rolling_mean_14",
            RollingMean30 => "rolling_mean_30",
            IsWeekend => "is_weekend",
            IsSummerPeak => "is_summer_peak",
            IsBlackFriday => "is_black_friday",
            IsBackToSchool => "is_back_to_school",
            IsHolidaySeason => "is_holiday_season",
            Quarter => "quarter",
            Cases7dayAvg => "cases_7day_avg",
            Deaths7dayAvg => "deaths_7day_avg",
        }
    }

    /// Columns derived from past values; projected with the trailing
    /// 3-row mean over a forecast horizon.
    pub fn is_recursive(self) -> bool {
        use RegressorName::*;
        !matches!(self, IsWeekend | IsSummerPeak | IsBlackFriday | IsBackToSchool | IsHolidaySeason | Quarter)
    }
}

impl fmt::Display for RegressorName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RegressorName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        RegressorName::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown regressor '{s}'")))
    }
}

/// Month and day, used for annually recurring windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MonthDay {
    pub month: u32,
    pub day: u32,
}

impl MonthDay {
    pub const fn new(month: u32, day: u32) -> Self {
        MonthDay { month, day }
    }

    fn of(date: DateStamp) -> Self {
        MonthDay { month: date.month(), day: date.day() }
    }
}

/// Inclusive annual date window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnualWindow {
    pub start: MonthDay,
    pub end: MonthDay,
}

impl AnnualWindow {
    pub const fn new(start: MonthDay, end: MonthDay) -> Self {
        AnnualWindow { start, end }
    }

    pub fn contains(&self, date: DateStamp) -> bool {
        let md = MonthDay::of(date);
        if self.start <= self.end {
            self.start <= md && md <= self.end
        } else {
            md >= self.start || md <= self.end
        }
    }
}

/// Spans of the seasonal flag regressors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeasonWindows {
    pub summer_peak: AnnualWindow,
    pub back_to_school: AnnualWindow,
    pub holiday_season: AnnualWindow,
    /// First day of the Black Friday window, in days after US Thanksgiving.
    pub black_friday_start: i64,
    /// Last day of the Black Friday window, in days after US Thanksgiving.
    pub black_friday_end: i64,
}

impl Default for SeasonWindows {
    fn default() -> Self {
        SeasonWindows {
            summer_peak: AnnualWindow::new(MonthDay::new(5, 15), MonthDay::new(7, 15)),
            back_to_school: AnnualWindow::new(MonthDay::new(8, 1), MonthDay::new(9, 15)),
            holiday_season: AnnualWindow::new(MonthDay::new(11, 15), MonthDay::new(12, 31)),
            black_friday_start: 1,
            black_friday_end: 4,
        }
    }
}

/// US Thanksgiving: the fourth Thursday of November.
pub fn thanksgiving(year: i32) -> DateStamp {
    let nov1 = DateStamp::ymd(year, 11, 1);
    let to_thursday =
        (Weekday::Thu.num_days_from_monday() as i64 - nov1.weekday().num_days_from_monday() as i64).rem_euclid(7);
    nov1.add_days(to_thursday + 21)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CalendarFlags {
    pub is_weekend: bool,
    pub is_summer_peak: bool,
    pub is_black_friday: bool,
    pub is_back_to_school: bool,
    pub is_holiday_season: bool,
    pub quarter: u32,
}

pub fn calendar_flags(date: DateStamp, windows: &SeasonWindows) -> CalendarFlags {
    let tg = thanksgiving(date.year());
    let bf = (tg.add_days(windows.black_friday_start), tg.add_days(windows.black_friday_end));
    CalendarFlags {
        is_weekend: matches!(date.weekday(), Weekday::Sat | Weekday::Sun),
        is_summer_peak: windows.summer_peak.contains(date),
        is_black_friday: bf.0 <= date && date <= bf.1,
        is_back_to_school: windows.back_to_school.contains(date),
        is_holiday_season: windows.holiday_season.contains(date),
        quarter: date.month().div_ceil(3),
    }
}

impl CalendarFlags {
    fn value(&self, name: RegressorName) -> Option<f64> {
        let b = |x: bool| if x { 1.0 } else { 0.0 };
        Some(match name {
            RegressorName::IsWeekend => b(self.is_weekend),
            RegressorName::IsSummerPeak => b(self.is_summer_peak),
            RegressorName::IsBlackFriday => b(self.is_black_friday),
            RegressorName::IsBackToSchool => b(self.is_back_to_school),
            RegressorName::IsHolidaySeason => b(self.is_holiday_season),
            RegressorName::Quarter => self.quarter as f64,
            _ => return None,
        })
    }
}

/// Trailing mean over `window` points; the first `window - 1` outputs
/// average however many points exist so far.
///
/// Panics if `window` is zero.
pub fn rolling_mean(values: &[f64], window: usize) -> Vec<f64> {
    assert!(window >= 1, "rolling window must be at least 1");
    (0..values.len())
        .map(|t| {
            let w = &values[(t + 1).saturating_sub(window)..=t];
            w.iter().sum::<f64>() / w.len() as f64
        })
        .collect()
}

/// `values` shifted forward by `offset`; the first `offset` positions are
/// undefined.
pub fn lag(values: &[f64], offset: usize) -> Vec<Option<f64>> {
    (0..values.len()).map(|t| t.checked_sub(offset).map(|s| values[s])).collect()
}

/// 7-day trailing means of cases and deaths.
pub fn covid_features(merged: &[(f64, f64)]) -> (Vec<f64>, Vec<f64>) {
    let cases: Vec<f64> = merged.iter().map(|p| p.0).collect();
    let deaths: Vec<f64> = merged.iter().map(|p| p.1).collect();
    (rolling_mean(&cases, COVID_WINDOW), rolling_mean(&deaths, COVID_WINDOW))
}

/// Options controlling regressor construction.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureOptions {
    pub windows: SeasonWindows,
    /// Replace both COVID columns with zeros (ablation).
    pub disable_covid: bool,
}

/// Regressor values on a contiguous date axis, with targets for training
/// rows.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    start: DateStamp,
    len: usize,
    columns: BTreeMap<RegressorName, Vec<f64>>,
    target: Option<Vec<f64>>,
    windows: SeasonWindows,
}

impl DesignMatrix {
    /// Build from explicit columns. Every column must match `len`.
    pub fn from_columns(
        start: DateStamp,
        len: usize,
        columns: BTreeMap<RegressorName, Vec<f64>>,
        target: Option<Vec<f64>>,
        windows: SeasonWindows,
    ) -> Result<Self> {
        for (name, col) in &columns {
            if col.len() != len {
                return Err(Error::Contract(format!("column {name} has {} rows, expected {len}", col.len())));
            }
        }
        if let Some(t) = &target {
            if t.len() != len {
                return Err(Error::Contract(format!("target has {} rows, expected {len}", t.len())));
            }
        }
        Ok(DesignMatrix { start, len, columns, target, windows })
    }

    pub fn start(&self) -> DateStamp {
        self.start
    }

    pub fn end(&self) -> DateStamp {
        self.start.add_days(self.len as i64 - 1)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn date_at(&self, i: usize) -> DateStamp {
        self.start.add_days(i as i64)
    }

    pub fn dates(&self) -> Vec<DateStamp> {
        (0..self.len).map(|i| self.date_at(i)).collect()
    }

    pub fn column(&self, name: RegressorName) -> Option<&[f64]> {
        self.columns.get(&name).map(Vec::as_slice)
    }

    pub fn columns(&self) -> &BTreeMap<RegressorName, Vec<f64>> {
        &self.columns
    }

    pub fn target(&self) -> Option<&[f64]> {
        self.target.as_deref()
    }

    pub fn windows(&self) -> &SeasonWindows {
        &self.windows
    }

    /// Replace or add a column.
    pub fn set_column(&mut self, name: RegressorName, values: Vec<f64>) -> Result<()> {
        if values.len() != self.len {
            return Err(Error::Contract(format!("column {name} has {} rows, expected {}", values.len(), self.len)));
        }
        self.columns.insert(name, values);
        Ok(())
    }

    pub fn remove_column(&mut self, name: RegressorName) -> Option<Vec<f64>> {
        self.columns.remove(&name)
    }

    pub fn set_target(&mut self, target: Option<Vec<f64>>) -> Result<()> {
        if let Some(t) = &target {
            if t.len() != self.len {
                return Err(Error::Contract(format!("target has {} rows, expected {}", t.len(), self.len)));
            }
        }
        self.target = target;
        Ok(())
    }

    /// Rows `[from, to)` as a new matrix.
    pub fn slice(&self, from: usize, to: usize) -> DesignMatrix {
        assert!(from <= to && to <= self.len, "slice {from}..{to} out of 0..{}", self.len);
        DesignMatrix {
            start: self.date_at(from),
            len: to - from,
            columns: self.columns.iter().map(|(k, v)| (*k, v[from..to].to_vec())).collect(),
            target: self.target.as_ref().map(|t| t[from..to].to_vec()),
            windows: self.windows,
        }
    }
}

/// Build the training design for one series: all sixteen columns, the
/// first [`WARMUP_DAYS`] rows dropped, targets attached.
///
/// Rolling means of demand are taken over the days strictly before each
/// row so the target never appears among its own regressors.
pub fn assemble_design(series: &SkuSeries, covid: &[(f64, f64)], options: &FeatureOptions) -> Result<DesignMatrix> {
    let n = series.len();
    if n <= WARMUP_DAYS {
        return Err(Error::InsufficientHistory { days: n, required: WARMUP_DAYS + 1 });
    }
    if covid.len() != n {
        return Err(Error::Contract(format!("covid signal has {} rows, series has {n}", covid.len())));
    }
    let y = series.values();
    let mut full: BTreeMap<RegressorName, Vec<f64>> = BTreeMap::new();

    let lag_names =
        [RegressorName::Lag1, RegressorName::Lag7, RegressorName::Lag14, RegressorName::Lag30, RegressorName::Lag60];
    for (name, offset) in lag_names.into_iter().zip(LAGS) {
        full.insert(name, lag(y, offset).into_iter().map(|v| v.unwrap_or(f64::NAN)).collect());
    }

    let roll_names = [RegressorName::RollingMean7, RegressorName::RollingMean14, RegressorName::RollingMean30];
    for (name, w) in roll_names.into_iter().zip(ROLLING_WINDOWS) {
        let mut col = vec![f64::NAN];
        col.extend(rolling_mean(&y[..n - 1], w));
        full.insert(name, col);
    }

    let flags: Vec<CalendarFlags> = series.dates().map(|d| calendar_flags(d, &options.windows)).collect();
    for name in RegressorName::ALL.into_iter().filter(|r| !r.is_recursive()) {
        full.insert(name, flags.iter().map(|f| f.value(name).expect("calendar column")).collect());
    }

    let (cases, deaths) = if options.disable_covid { (vec![0.0; n], vec![0.0; n]) } else { covid_features(covid) };
    full.insert(RegressorName::Cases7dayAvg, cases);
    full.insert(RegressorName::Deaths7dayAvg, deaths);

    let columns = full.into_iter().map(|(k, v)| (k, v[WARMUP_DAYS..].to_vec())).collect();
    DesignMatrix::from_columns(
        series.date_at(WARMUP_DAYS),
        n - WARMUP_DAYS,
        columns,
        Some(y[WARMUP_DAYS..].to_vec()),
        options.windows,
    )
}

/// Extend a design `horizon` days past its last row. Recursive columns
/// take the mean of their last three observed values; calendar columns are
/// computed from each future date. Dates present in `scenario` override
/// the projected COVID columns.
pub fn project_future(
    history: &DesignMatrix,
    horizon: usize,
    scenario: Option<&BTreeMap<DateStamp, (f64, f64)>>,
) -> Result<DesignMatrix> {
    if history.len() < PROJECTION_ROWS {
        return Err(Error::Contract(format!(
            "projection needs at least {PROJECTION_ROWS} history rows, got {}",
            history.len()
        )));
    }
    if horizon == 0 {
        return Err(Error::Contract("horizon must be at least 1 day".into()));
    }
    let start = history.end().add_days(1);
    let dates: Vec<DateStamp> = (0..horizon).map(|h| start.add_days(h as i64)).collect();
    let flags: Vec<CalendarFlags> = dates.iter().map(|&d| calendar_flags(d, &history.windows)).collect();

    let mut columns = BTreeMap::new();
    for (&name, col) in &history.columns {
        let values = if name.is_recursive() {
            let t = col.len() - 1;
            let projected = (col[t] + col[t - 1] + col[t - 2]) / PROJECTION_ROWS as f64;
            vec![projected; horizon]
        } else {
            flags.iter().map(|f| f.value(name).expect("calendar column")).collect()
        };
        columns.insert(name, values);
    }

    if let Some(scenario) = scenario {
        for (i, d) in dates.iter().enumerate() {
            if let Some(&(cases, deaths)) = scenario.get(d) {
                if let Some(c) = columns.get_mut(&RegressorName::Cases7dayAvg) {
                    c[i] = cases;
                }
                if let Some(c) = columns.get_mut(&RegressorName::Deaths7dayAvg) {
                    c[i] = deaths;
                }
            }
        }
    }

    DesignMatrix::from_columns(start, horizon, columns, None, history.windows)
}
