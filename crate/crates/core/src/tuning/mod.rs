//! Per-SKU hyperparameter tuning.
//!
//! Candidates are scored by expanding-window cross-validation on monthly
//! totals ([`cross_validate`]) and drawn by seeded random search
//! ([`search`]), with an append-only checkpoint so an interrupted search
//! resumes to the same result.

mod checkpoint;
mod cv;
mod search;
mod splits;

pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
pub use cv::{cross_validate, fit_split, CvContext, CvReport, SplitAudit, SplitFit, SplitOutcome, CV_MONTHS};
pub use search::{sample_trial, search, SearchOutcome, SearchSettings, SearchSpace, TrialRecord, TRIAL_LOG_COLUMNS};
pub use splits::{make_cv_splits, CvGeometry, CvSplit};
