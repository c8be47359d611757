use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::checkpoint::{sha256_hex, Checkpoint};
use super::cv::{cross_validate, CvContext};
use super::splits::CvSplit;
use crate::domain::{CovidDaily, SkuSeries};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::ingest::HolidaySpec;
use crate::model::{bounds, Hyperparameters, SeasonalityMode};

/// Ranges sampled by the random search. Prior scales are drawn
/// log-uniformly, the range uniformly, the changepoint count as a uniform
/// integer and the mode uniformly from the listed modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSpace {
    pub changepoint_prior_scale: (f64, f64),
    pub seasonality_prior_scale: (f64, f64),
    pub holidays_prior_scale: (f64, f64),
    pub changepoint_range: (f64, f64),
    pub n_changepoints: (usize, usize),
    pub seasonality_modes: Vec<SeasonalityMode>,
}

impl Default for SearchSpace {
    fn default() -> Self {
        SearchSpace {
            changepoint_prior_scale: bounds::CHANGEPOINT_PRIOR_SCALE,
            seasonality_prior_scale: bounds::SEASONALITY_PRIOR_SCALE,
            holidays_prior_scale: bounds::HOLIDAYS_PRIOR_SCALE,
            changepoint_range: bounds::CHANGEPOINT_RANGE,
            n_changepoints: bounds::N_CHANGEPOINTS,
            seasonality_modes: vec![SeasonalityMode::Additive, SeasonalityMode::Multiplicative],
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [
            ("changepoint_prior_scale", self.changepoint_prior_scale),
            ("seasonality_prior_scale", self.seasonality_prior_scale),
            ("holidays_prior_scale", self.holidays_prior_scale),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
                return Err(Error::Config(format!("{name} range [{lo}, {hi}] must be positive and ordered")));
            }
        }
        let (lo, hi) = self.changepoint_range;
        if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
            return Err(Error::Config(format!("changepoint_range [{lo}, {hi}] must be ordered within (0, 1]")));
        }
        let (lo, hi) = self.n_changepoints;
        if !(lo >= 1 && lo <= hi) {
            return Err(Error::Config(format!("n_changepoints [{lo}, {hi}] must be ordered and at least 1")));
        }
        if self.seasonality_modes.is_empty() {
            return Err(Error::Config("seasonality_modes is empty".into()));
        }
        Ok(())
    }

    /// Hash of the space together with everything else that changes a
    /// trial's score, stored in checkpoints.
    pub fn fingerprint(&self, splits: &[CvSplit], ctx: &CvContext) -> String {
        let cutoffs: Vec<String> = splits.iter().map(|s| format!("{}:{}", s.cutoff, s.test_end)).collect();
        let text = format!(
            "{}\n{}\n{}\n{}",
            toml::to_string(self).expect("space serializes"),
            toml::to_string(&ctx.features).expect("features serialize"),
            toml::to_string(&ctx.fit).expect("fit options serialize"),
            cutoffs.join(",")
        );
        sha256_hex(text.as_bytes())
    }
}

/// Hyperparameters of trial `index`. Trial 0 is always the default
/// configuration; later trials each draw from their own RNG stream.
pub fn sample_trial(space: &SearchSpace, seed: u64, index: usize) -> Hyperparameters {
    if index == 0 {
        return Hyperparameters::default();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let mut log_uniform = |(lo, hi): (f64, f64)| {
        let u: f64 = rng.random();
        (lo.ln() + u * (hi.ln() - lo.ln())).exp().clamp(lo, hi)
    };
    let changepoint_prior_scale = log_uniform(space.changepoint_prior_scale);
    let seasonality_prior_scale = log_uniform(space.seasonality_prior_scale);
    let holidays_prior_scale = log_uniform(space.holidays_prior_scale);
    let (lo, hi) = space.changepoint_range;
    let changepoint_range = lo + rng.random::<f64>() * (hi - lo);
    let n_changepoints = rng.random_range(space.n_changepoints.0..=space.n_changepoints.1);
    let seasonality_mode = space.seasonality_modes[rng.random_range(0..space.seasonality_modes.len())];
    Hyperparameters {
        changepoint_prior_scale,
        seasonality_prior_scale,
        holidays_prior_scale,
        seasonality_mode,
        changepoint_range,
        n_changepoints,
    }
}

/// One evaluated candidate. A trial whose every split failed scores
/// `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRecord {
    pub index: usize,
    pub hp: Hyperparameters,
    /// Mean monthly CV MAPE as a fraction.
    pub mape: f64,
}

pub const TRIAL_LOG_COLUMNS: [&str; 8] = [
    "trial",
    "changepoint_prior_scale",
    "seasonality_prior_scale",
    "holidays_prior_scale",
    "seasonality_mode",
    "changepoint_range",
    "n_changepoints",
    "mape",
];

#[derive(Debug, Clone)]
pub struct SearchSettings {
    pub budget: usize,
    pub seed: u64,
    pub checkpoint: Option<PathBuf>,
    /// How trials are spread over threads.
    pub exec: Execution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub best: TrialRecord,
    /// Every trial in index order.
    pub trials: Vec<TrialRecord>,
    /// Trials replayed from the checkpoint instead of evaluated.
    pub resumed: usize,
}

impl SearchOutcome {
    /// The trial log as CSV.
    pub fn trial_log(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(TRIAL_LOG_COLUMNS).expect("in-memory write");
        for t in &self.trials {
            let hp = &t.hp;
            w.write_record([
                t.index.to_string(),
                hp.changepoint_prior_scale.to_string(),
                hp.seasonality_prior_scale.to_string(),
                hp.holidays_prior_scale.to_string(),
                hp.seasonality_mode.to_string(),
                hp.changepoint_range.to_string(),
                hp.n_changepoints.to_string(),
                t.mape.to_string(),
            ])
            .expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// Random search over `space`, scoring each trial by [`cross_validate`].
/// Trials run under `settings.exec` but are committed to the checkpoint
/// strictly in index order; a rerun with the same checkpoint skips the
/// trials it already holds.
pub fn search(
    series: &SkuSeries,
    covid: &[CovidDaily],
    holidays: &[HolidaySpec],
    space: &SearchSpace,
    splits: &[CvSplit],
    ctx: &CvContext,
    settings: &SearchSettings,
) -> Result<SearchOutcome> {
    space.validate()?;
    if settings.budget == 0 {
        return Err(Error::Config("trial budget must be at least 1".into()));
    }
    let seed = settings.seed;
    let (mut checkpoint, mut trials) = match &settings.checkpoint {
        Some(path) => {
            let (ck, done) = Checkpoint::open(path, series.sku(), seed, &space.fingerprint(splits, ctx))?;
            if let Some(bad) = done.iter().find(|t| t.hp != sample_trial(space, seed, t.index)) {
                return Err(Error::Checkpoint {
                    path: path.clone(),
                    message: format!("trial {} does not match this seed's draw", bad.index),
                });
            }
            (Some(ck), done)
        }
        None => (None, Vec::new()),
    };
    trials.truncate(settings.budget);
    let resumed = trials.len();
    if resumed > 0 {
        log::info!("{}: resuming after {resumed} checkpointed trials", series.sku());
    }

    let pending: Vec<usize> = (resumed..settings.budget).collect();
    let evaluate = |&index: &usize| {
        let hp = sample_trial(space, seed, index);
        let mape = match cross_validate(series, covid, holidays, &hp, splits, ctx) {
            Ok(report) => report.mean_mape,
            Err(e) => {
                log::warn!("{}: trial {index} failed: {e}", series.sku());
                f64::INFINITY
            }
        };
        TrialRecord { index, hp, mape }
    };
    settings.exec.for_each_ordered(&pending, evaluate, |_, record| {
        if let Some(ck) = checkpoint.as_mut() {
            ck.append(&record)?;
        }
        log::debug!("{}: trial {} mape {}", series.sku(), record.index, record.mape);
        trials.push(record);
        Ok::<(), Error>(())
    })?;

    let mut best = trials[0];
    for t in &trials[1..] {
        if t.mape < best.mape {
            best = *t;
        }
    }
    if !best.mape.is_finite() {
        return Err(Error::AllSplitsFailed(splits.len()));
    }
    Ok(SearchOutcome { best, trials, resumed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn trial_zero_is_default() {
        for seed in [0, 1, 99] {
            assert_eq!(sample_trial(&SearchSpace::default(), seed, 0), Hyperparameters::default());
        }
    }

    #[test]
    fn draws_are_deterministic_and_distinct() {
        let s = SearchSpace::default();
        assert_eq!(sample_trial(&s, 5, 3), sample_trial(&s, 5, 3));
        assert_ne!(sample_trial(&s, 5, 3), sample_trial(&s, 5, 4));
        assert_ne!(sample_trial(&s, 5, 3), sample_trial(&s, 6, 3));
    }

    #[test]
    fn both_modes_are_drawn() {
        let s = SearchSpace::default();
        let multi =
            (1..200).filter(|&i| sample_trial(&s, 1, i).seasonality_mode == SeasonalityMode::Multiplicative).count();
        assert!((60..140).contains(&multi), "{multi}");
    }

    #[test]
    fn invalid_spaces() {
        let bad = [
            SearchSpace { changepoint_prior_scale: (0.0, 1.0), ..Default::default() },
            SearchSpace { seasonality_prior_scale: (5.0, 1.0), ..Default::default() },
            SearchSpace { changepoint_range: (0.5, 1.5), ..Default::default() },
            SearchSpace { n_changepoints: (0, 3), ..Default::default() },
            SearchSpace { seasonality_modes: vec![], ..Default::default() },
        ];
        for s in bad {
            assert!(s.validate().is_err(), "{s:?}");
        }
    }

    proptest! {
        #[test]
        fn draws_stay_in_bounds(seed in any::<u64>(), index in 1usize..10_000) {
            let hp = sample_trial(&SearchSpace::default(), seed, index);
            prop_assert!(hp.validate_search_bounds().is_ok(), "{:?}", hp);
        }
    }
}
