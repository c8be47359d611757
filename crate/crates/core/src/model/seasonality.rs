use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::domain::DateStamp;
use crate::ingest::HolidaySpec;

/// A Fourier-series seasonality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seasonality {
    pub name: String,
    /// Period in days.
    pub period: f64,
    pub order: usize,
}

impl Seasonality {
    pub fn weekly() -> Self {
        Seasonality { name: "weekly".into(), period: 7.0, order: 3 }
    }

    pub fn yearly() -> Self {
        Seasonality { name: "yearly".into(), period: 365.25, order: 10 }
    }

    pub fn width(&self) -> usize {
        2 * self.order
    }
}

/// `[sin(2π·1·t/P), cos(2π·1·t/P), …, sin(2π·N·t/P), cos(2π·N·t/P)]`.
pub fn fourier_basis(t: f64, period: f64, order: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * order);
    for n in 1..=order {
        let x = 2.0 * PI * n as f64 * t / period;
        out.push(x.sin());
        out.push(x.cos());
    }
    out
}

/// One 0/1 indicator column per distinct holiday name.
pub fn holiday_matrix(dates: &[DateStamp], holidays: &[HolidaySpec]) -> BTreeMap<String, Vec<f64>> {
    let mut out: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for h in holidays {
        let col = out.entry(h.name.clone()).or_insert_with(|| vec![0.0; dates.len()]);
        for (i, &d) in dates.iter().enumerate() {
            if h.covers(d) {
                col[i] = 1.0;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_at_zero() {
        assert_eq!(fourier_basis(0.0, 7.0, 3), vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn basis_is_periodic_and_phased() {
        let a = fourier_basis(365.25, 365.25, 1);
        assert!((a[0] - 0.0).abs() < 1e-12 && (a[1] - 1.0).abs() < 1e-12);
        let q = fourier_basis(7.0 / 4.0, 7.0, 1);
        assert!((q[0] - 1.0).abs() < 1e-12 && q[1].abs() < 1e-12);
    }

    fn axis(n: usize) -> Vec<DateStamp> {
        (0..n).map(|i| DateStamp::ymd(2022, 11, 1).add_days(i as i64)).collect()
    }

    #[test]
    fn holiday_columns() {
        let dates = axis(400);
        let single = HolidaySpec::new("a", DateStamp::ymd(2022, 11, 10), 0, 0).unwrap();
        let wide = HolidaySpec::new("bf", DateStamp::ymd(2022, 11, 25), -1, 3).unwrap();
        let m = holiday_matrix(&dates, &[single, wide]);
        assert_eq!(m["a"].iter().sum::<f64>(), 1.0);
        let bf = &m["bf"];
        assert_eq!(bf.iter().sum::<f64>(), 5.0);
        let first = bf.iter().position(|&v| v == 1.0).unwrap();
        assert!(bf[first..first + 5].iter().all(|&v| v == 1.0));
    }

    #[test]
    fn recurring_holiday_shares_a_column() {
        let dates = axis(430);
        let a = HolidaySpec::new("xmas", DateStamp::ymd(2022, 12, 25), 0, 1).unwrap();
        let b = HolidaySpec::new("xmas", DateStamp::ymd(2023, 12, 25), 0, 1).unwrap();
        let m = holiday_matrix(&dates, &[a, b]);
        assert_eq!(m.len(), 1);
        assert_eq!(m["xmas"].iter().sum::<f64>(), 4.0);
    }
}
