//! Synthetic demand datasets with known ground truth.
//!
//! Demand is built from an explicit trend, Fourier seasonalities, holiday
//! bumps and linear COVID effects, plus Normal noise floored at zero. The
//! COVID statistics follow a sum of log-normal epidemic waves. Output uses
//! the same file formats the ingest module reads, so a generated dataset
//! can be pushed through the whole pipeline and the fitted coefficients
//! compared against [`GroundTruth`].

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::domain::{CovidDaily, DateStamp, Observation, SkuId, SkuSeries};
use crate::error::{Error, Result};
use crate::features::covid_features;
use crate::ingest::{merge_covid, write_covid, write_holidays, write_sales, HolidaySpec};
use crate::model::{fourier_basis, SeasonalityMode};

pub const MIN_SPAN_DAYS: usize = 120;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendChange {
    /// Day index (0 = first day) where the slope changes.
    pub day: usize,
    /// Slope change in units per day.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct TrendSpec {
    /// Base slope in units per day.
    pub k: f64,
    /// Level on day 0.
    pub m: f64,
    pub changepoints: Vec<TrendChange>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SeasonalSpec {
    /// Fourier coefficients `[sin1, cos1, sin2, cos2, …]` over a 7-day
    /// period, evaluated on days since 1970-01-01. Units in additive mode,
    /// fractions of trend in multiplicative mode.
    pub weekly: Vec<f64>,
    /// As `weekly`, over a 365.25-day period.
    pub yearly: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolidayEffect {
    pub name: String,
    pub date: DateStamp,
    #[serde(default)]
    pub lower_window: i32,
    #[serde(default)]
    pub upper_window: i32,
    /// Additive demand on each covered day.
    pub effect: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpidemicWave {
    /// Days after coverage start at which the wave peaks.
    pub peak_day: f64,
    /// Log-scale width of the bump.
    pub width: f64,
    pub peak_cases: f64,
    /// Deaths per case.
    pub fatality: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CovidSpec {
    pub start: DateStamp,
    pub end: DateStamp,
    pub beta_cases: f64,
    pub beta_deaths: f64,
    pub waves: Vec<EpidemicWave>,
}

impl Default for CovidSpec {
    fn default() -> Self {
        CovidSpec {
            start: DateStamp::ymd(2020, 1, 21),
            end: DateStamp::ymd(2023, 3, 23),
            beta_cases: 0.0,
            beta_deaths: 0.0,
            waves: vec![
                EpidemicWave { peak_day: 90.0, width: 0.35, peak_cases: 60_000.0, fatality: 0.03 },
                EpidemicWave { peak_day: 350.0, width: 0.15, peak_cases: 200_000.0, fatality: 0.015 },
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub sku: SkuId,
    pub start: DateStamp,
    pub span_days: usize,
    pub mode: SeasonalityMode,
    pub trend: TrendSpec,
    pub seasonality: SeasonalSpec,
    pub holidays: Vec<HolidayEffect>,
    pub covid: CovidSpec,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            sku: SkuId::new("synthetic").expect("literal id"),
            start: DateStamp::ymd(2019, 1, 1),
            span_days: 900,
            mode: SeasonalityMode::Additive,
            trend: TrendSpec { k: 0.0, m: 100.0, changepoints: vec![] },
            seasonality: SeasonalSpec::default(),
            holidays: vec![],
            covid: CovidSpec::default(),
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.span_days < MIN_SPAN_DAYS {
            return Err(Error::Invalid(format!("span_days must be at least {MIN_SPAN_DAYS}, got {}", self.span_days)));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::Invalid(format!("noise_sigma must be finite and >= 0, got {}", self.noise_sigma)));
        }
        if self.covid.end < self.covid.start {
            return Err(Error::Invalid("covid.end precedes covid.start".into()));
        }
        for w in &self.covid.waves {
            if !(w.peak_day > 0.0 && w.width > 0.0 && w.peak_cases >= 0.0 && w.fatality >= 0.0) {
                return Err(Error::Invalid(format!("invalid epidemic wave {w:?}")));
            }
        }
        for h in &self.holidays {
            HolidaySpec::new(h.name.clone(), h.date, h.lower_window, h.upper_window)?;
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: SynthSpec = toml::from_str(text).map_err(|e| Error::Format(format!("synth spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("synth spec serializes")
    }
}

/// Everything that generated a dataset, plus per-day component values.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub spec: SynthSpec,
    /// Demand before noise and flooring.
    pub noiseless: Vec<f64>,
    pub trend: Vec<f64>,
    /// Total seasonal term (units in additive mode, fraction in
    /// multiplicative mode).
    pub seasonal: Vec<f64>,
    pub holiday: Vec<f64>,
    pub cases_7day_avg: Vec<f64>,
    pub deaths_7day_avg: Vec<f64>,
    /// Days where noise pushed demand below zero.
    pub floored_days: usize,
}

impl GroundTruth {
    /// Mean of the noiseless demand.
    pub fn mean_level(&self) -> f64 {
        self.noiseless.iter().sum::<f64>() / self.noiseless.len() as f64
    }

    /// `key=value` lines describing every generating parameter.
    pub fn to_key_values(&self) -> String {
        let s = &self.spec;
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let mut out = String::new();
        let mut kv = |k: &str, v: String| writeln!(out, "{k}={v}").expect("string write");
        kv("sku", s.sku.to_string());
        kv("start", s.start.to_string());
        kv("span_days", s.span_days.to_string());
        kv("seed", s.seed.to_string());
        kv("mode", s.mode.to_string());
        kv("trend_k", s.trend.k.to_string());
        kv("trend_m", s.trend.m.to_string());
        kv(
            "trend_changepoints",
            s.trend.changepoints.iter().map(|c| format!("{}:{}", c.day, c.delta)).collect::<Vec<_>>().join(","),
        );
        kv("weekly", join(&s.seasonality.weekly));
        kv("yearly", join(&s.seasonality.yearly));
        for h in &s.holidays {
            kv(
                &format!("holiday.{}.{}", h.name, h.date),
                format!("{}:{}:{}", h.lower_window, h.upper_window, h.effect),
            );
        }
        kv("covid_start", s.covid.start.to_string());
        kv("covid_end", s.covid.end.to_string());
        kv("covid_beta_cases", s.covid.beta_cases.to_string());
        kv("covid_beta_deaths", s.covid.beta_deaths.to_string());
        for (i, w) in s.covid.waves.iter().enumerate() {
            kv(&format!("wave.{i}"), format!("{}:{}:{}:{}", w.peak_day, w.width, w.peak_cases, w.fatality));
        }
        kv("noise_sigma", s.noise_sigma.to_string());
        kv("mean_level", self.mean_level().to_string());
        kv("floored_days", self.floored_days.to_string());
        out
    }
}

/// A generated dataset.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub series: SkuSeries,
    pub covid: Vec<CovidDaily>,
    pub holidays: Vec<HolidaySpec>,
    pub truth: GroundTruth,
}

impl SynthOutput {
    pub fn sales_bytes(&self) -> Vec<u8> {
        let rows: Vec<Observation> = self
            .series
            .dates()
            .zip(self.series.values())
            .map(|(date, &quantity)| Observation { date, sku: self.series.sku().clone(), quantity })
            .collect();
        write_sales(&rows)
    }

    pub fn covid_bytes(&self) -> Vec<u8> {
        write_covid(&self.covid)
    }

    pub fn holiday_bytes(&self) -> Vec<u8> {
        write_holidays(&self.holidays)
    }
}

/// Daily cases from the wave mixture, `d` days after coverage start.
fn epidemic_cases(waves: &[EpidemicWave], d: f64) -> (f64, f64) {
    let x = d + 1.0;
    waves.iter().fold((0.0, 0.0), |(c, k), w| {
        let z = (x / w.peak_day).ln() / w.width;
        let cases = w.peak_cases * (-0.5 * z * z).exp();
        (c + cases, k + cases * w.fatality)
    })
}

fn fourier_sum(coeffs: &[f64], day: f64, period: f64) -> f64 {
    if coeffs.is_empty() {
        return 0.0;
    }
    let order = coeffs.len().div_ceil(2);
    fourier_basis(day, period, order).iter().zip(coeffs).map(|(b, c)| b * c).sum()
}

pub fn generate(spec: &SynthSpec) -> Result<SynthOutput> {
    spec.validate()?;
    let n = spec.span_days;

    let covid: Vec<CovidDaily> = (0..=spec.covid.end.days_since(spec.covid.start))
        .map(|d| {
            let (c, k) = epidemic_cases(&spec.covid.waves, d as f64);
            CovidDaily::new(spec.covid.start.add_days(d), c.round(), k.round())
        })
        .collect::<Result<_>>()?;

    let axis = SkuSeries::new(spec.sku.clone(), spec.start, vec![0.0; n])?;
    let (cases_avg, deaths_avg) = covid_features(&merge_covid(&axis, &covid));

    let holidays: Vec<HolidaySpec> = spec
        .holidays
        .iter()
        .map(|h| HolidaySpec::new(h.name.clone(), h.date, h.lower_window, h.upper_window))
        .collect::<Result<_>>()?;

    let mut trend = Vec::with_capacity(n);
    let mut seasonal = Vec::with_capacity(n);
    let mut holiday = Vec::with_capacity(n);
    let mut noiseless = Vec::with_capacity(n);
    for i in 0..n {
        let date = axis.date_at(i);
        let t = i as f64;
        let g = spec.trend.k * t
            + spec.trend.m
            + spec.trend.changepoints.iter().filter(|c| c.day <= i).map(|c| c.delta * (t - c.day as f64)).sum::<f64>();
        let day = date.epoch_day() as f64;
        let s = fourier_sum(&spec.seasonality.weekly, day, 7.0) + fourier_sum(&spec.seasonality.yearly, day, 365.25);
        let h: f64 = spec.holidays.iter().zip(&holidays).filter(|(_, hs)| hs.covers(date)).map(|(e, _)| e.effect).sum();
        let x = spec.covid.beta_cases * cases_avg[i] + spec.covid.beta_deaths * deaths_avg[i];
        let y = match spec.mode {
            SeasonalityMode::Additive => g + s + h + x,
            SeasonalityMode::Multiplicative => g * (1.0 + s) + h + x,
        };
        trend.push(g);
        seasonal.push(s);
        holiday.push(h);
        noiseless.push(y);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::Invalid(e.to_string()))?;
    let mut floored = 0;
    let values: Vec<f64> = noiseless
        .iter()
        .map(|&y| {
            let v = y + noise.sample(&mut rng);
            if v < 0.0 {
                floored += 1;
                0.0
            } else {
                v
            }
        })
        .collect();

    Ok(SynthOutput {
        series: SkuSeries::new(spec.sku.clone(), spec.start, values)?,
        covid,
        holidays,
        truth: GroundTruth {
            spec: spec.clone(),
            noiseless,
            trend,
            seasonal,
            holiday,
            cases_7day_avg: cases_avg,
            deaths_7day_avg: deaths_avg,
            floored_days: floored,
        },
    })
}
