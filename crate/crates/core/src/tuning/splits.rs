use serde::{Deserialize, Serialize};

use crate::domain::DateStamp;
use crate::error::{Error, Result};
use crate::features::{PROJECTION_ROWS, WARMUP_DAYS};

/// Expanding-window cross-validation layout, in days.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvGeometry {
    /// Training days before the first cutoff; `None` means
    /// `max(365, 40% of the series span)`.
    pub initial_train_days: Option<usize>,
    pub period_days: usize,
    pub horizon_days: usize,
}

impl Default for CvGeometry {
    fn default() -> Self {
        CvGeometry { initial_train_days: None, period_days: 30, horizon_days: 90 }
    }
}

impl CvGeometry {
    pub fn initial_for(&self, span_days: usize) -> usize {
        self.initial_train_days.unwrap_or_else(|| 365.max(span_days * 2 / 5))
    }
}

/// One train/test split. Training covers the series start through
/// `cutoff`; testing covers `test_start..=test_end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CvSplit {
    /// 1-based day number of the cutoff within the series.
    pub cutoff_day: usize,
    pub cutoff: DateStamp,
    pub test_start: DateStamp,
    pub test_end: DateStamp,
}

/// Cutoffs at `initial, initial + period, …` whose test span still fits
/// inside the series.
pub fn make_cv_splits(series_start: DateStamp, span_days: usize, geometry: &CvGeometry) -> Result<Vec<CvSplit>> {
    let initial = geometry.initial_for(span_days);
    let min_initial = WARMUP_DAYS + PROJECTION_ROWS;
    if initial < min_initial {
        return Err(Error::Config(format!("initial_train_days must be at least {min_initial}, got {initial}")));
    }
    if geometry.horizon_days == 0 {
        return Err(Error::Config("horizon_days must be at least 1".into()));
    }
    if geometry.period_days == 0 {
        return Err(Error::Config("period_days must be at least 1".into()));
    }
    let splits: Vec<CvSplit> = (initial..)
        .step_by(geometry.period_days)
        .take_while(|c| c + geometry.horizon_days <= span_days)
        .map(|c| {
            let cutoff = series_start.add_days(c as i64 - 1);
            CvSplit {
                cutoff_day: c,
                cutoff,
                test_start: cutoff.add_days(1),
                test_end: cutoff.add_days(geometry.horizon_days as i64),
            }
        })
        .collect();
    if splits.is_empty() {
        return Err(Error::Config(format!(
            "no cross-validation splits fit in {span_days} days (initial {initial}, horizon {})",
            geometry.horizon_days
        )));
    }
    Ok(splits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn geo(initial: usize, period: usize, horizon: usize) -> CvGeometry {
        CvGeometry { initial_train_days: Some(initial), period_days: period, horizon_days: horizon }
    }

    #[test]
    fn hand_enumerated_cutoffs() {
        let start = DateStamp::ymd(2020, 1, 1);
        let s = make_cv_splits(start, 400, &geo(200, 50, 90)).unwrap();
        assert_eq!(s.iter().map(|s| s.cutoff_day).collect::<Vec<_>>(), vec![200, 250, 300]);
        assert_eq!(s[0].cutoff, start.add_days(199));
        assert_eq!(s[2].test_end, start.add_days(389));
    }

    #[test]
    fn no_room_is_a_config_error() {
        let err = make_cv_splits(DateStamp::ymd(2020, 1, 1), 400, &geo(400, 30, 90)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert!(make_cv_splits(DateStamp::ymd(2020, 1, 1), 400, &geo(62, 30, 90)).is_err());
        assert!(make_cv_splits(DateStamp::ymd(2020, 1, 1), 400, &geo(200, 30, 0)).is_err());
    }

    #[test]
    fn default_initial() {
        assert_eq!(CvGeometry::default().initial_for(500), 365);
        assert_eq!(CvGeometry::default().initial_for(1500), 600);
    }

    proptest! {
        #[test]
        fn splits_never_leak(span in 100usize..1500, initial in 63usize..800, period in 1usize..90, horizon in 1usize..120) {
            let start = DateStamp::ymd(2019, 3, 4);
            if let Ok(splits) = make_cv_splits(start, span, &geo(initial, period, horizon)) {
                prop_assert_eq!(splits[0].cutoff_day, initial);
                for w in splits.windows(2) {
                    prop_assert_eq!(w[1].cutoff_day - w[0].cutoff_day, period);
                }
                for s in &splits {
                    prop_assert!(s.cutoff < s.test_start);
                    prop_assert_eq!(s.test_end.days_since(s.cutoff), horizon as i64);
                    prop_assert!(s.test_end <= start.add_days(span as i64 - 1));
                }
            }
        }
    }
}
