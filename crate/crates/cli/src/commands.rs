use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use serde::{Deserialize, Serialize};
use skucast::aggregate::{forecast_rows, monthly_totals, parse_daily, write_daily, write_monthly, ForecastRow};
use skucast::features::{assemble_design, project_future, FeatureOptions};
use skucast::ingest::{
    audit_covid, audit_holidays, audit_sales, audit_scenario, merge_covid, parse_covid, parse_holidays, parse_sales,
    parse_scenario, HolidaySpec,
};
use skucast::metrics::{evaluate as score, write_reports};
use skucast::model::{self, fit as fit_model, predict, sample_intervals, FitOptions, Hyperparameters};
use skucast::synth::{generate, SynthSpec};
use skucast::tuning::{make_cv_splits, search, CvContext, SearchSettings, SearchSpace};
use skucast::{align_series, presets, CovidDaily, DateStamp, Execution, SkuId, SkuSeries};

use crate::config::RunConfig;
use crate::{DataArgs, InputError};

fn read(path: &Path) -> anyhow::Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| InputError(format!("cannot read {}: {e}", path.display())).into())
}

fn write(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    std::fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn with_path<T>(path: &Path, r: skucast::Result<T>) -> anyhow::Result<T> {
    r.with_context(|| path.display().to_string())
}

/// Inputs shared by the modelling commands.
struct Inputs {
    series: BTreeMap<SkuId, SkuSeries>,
    covid: Vec<CovidDaily>,
    holidays: Vec<HolidaySpec>,
}

impl Inputs {
    fn load(cfg: &RunConfig, data: &DataArgs) -> anyhow::Result<Inputs> {
        let sales = data
            .sales
            .as_ref()
            .or(cfg.paths.sales.as_ref())
            .ok_or_else(|| InputError("no sales file: pass --sales or set paths.sales".into()))?;
        let series = with_path(sales, parse_sales(&read(sales)?).and_then(|rows| align_series(&rows)))?;
        let covid = match data.covid.as_ref().or(cfg.paths.covid.as_ref()) {
            Some(p) => with_path(p, parse_covid(&read(p)?))?,
            None => {
                log::warn!("no COVID file given; COVID regressors are zero");
                Vec::new()
            }
        };
        let holidays = match data.holidays.as_ref().or(cfg.paths.holidays.as_ref()) {
            Some(p) => with_path(p, parse_holidays(&read(p)?))?,
            None => Vec::new(),
        };
        Ok(Inputs { series, covid, holidays })
    }

    fn series(&self, sku: &SkuId) -> anyhow::Result<&SkuSeries> {
        self.series.get(sku).ok_or_else(|| {
            let known: Vec<&str> = self.series.keys().map(SkuId::as_str).collect();
            InputError(format!("SKU '{sku}' not in sales file (found: {})", known.join(", "))).into()
        })
    }
}

fn features(cfg: &RunConfig) -> FeatureOptions {
    FeatureOptions { windows: cfg.windows, ..FeatureOptions::default() }
}

fn parse_sku(s: &str) -> anyhow::Result<SkuId> {
    SkuId::new(s).map_err(|e| InputError(e.to_string()).into())
}

pub fn validate(cfg: &RunConfig, args: &DataArgs) -> anyhow::Result<u8> {
    type Audit = fn(&[u8]) -> Vec<skucast::Error>;
    let files: [(&str, Option<&PathBuf>, Audit); 4] = [
        ("sales", args.sales.as_ref().or(cfg.paths.sales.as_ref()), audit_sales),
        ("covid", args.covid.as_ref().or(cfg.paths.covid.as_ref()), audit_covid),
        ("holidays", args.holidays.as_ref().or(cfg.paths.holidays.as_ref()), audit_holidays),
        ("scenario", cfg.paths.scenario.as_ref(), audit_scenario),
    ];
    if files.iter().all(|(_, p, _)| p.is_none()) {
        return Err(InputError("nothing to validate: pass --sales, --covid or --holidays".into()).into());
    }
    let mut problems = 0;
    for (what, path, audit) in files {
        let Some(path) = path else { continue };
        let bytes = read(path)?;
        let errors = audit(&bytes);
        for e in &errors {
            eprintln!("{}: {e}", path.display());
        }
        problems += errors.len();
        if !errors.is_empty() {
            continue;
        }
        match what {
            "sales" => {
                let series = with_path(path, parse_sales(&bytes).and_then(|r| align_series(&r)))?;
                for (sku, s) in &series {
                    let zeros = s.values().iter().filter(|v| **v == 0.0).count();
                    println!("sales: {sku} {} to {} ({} days, {zeros} zero days)", s.start(), s.end(), s.len());
                }
            }
            "covid" => {
                let rows = with_path(path, parse_covid(&bytes))?;
                match (rows.first(), rows.last()) {
                    (Some(a), Some(b)) => println!("covid: {} to {} ({} rows)", a.date, b.date, rows.len()),
                    _ => println!("covid: no rows"),
                }
            }
            "holidays" => {
                let rows = with_path(path, parse_holidays(&bytes))?;
                let mut names: Vec<&str> = rows.iter().map(|h| h.name.as_str()).collect();
                names.sort();
                names.dedup();
                println!("holidays: {} occurrences of {} names", rows.len(), names.len());
            }
            _ => {
                let rows = with_path(path, parse_scenario(&bytes))?;
                println!("scenario: {} dates", rows.len());
            }
        }
    }
    if problems > 0 {
        eprintln!("{problems} problem(s) found");
        return Ok(2);
    }
    Ok(0)
}

/// Result of `tune`; `fit --params` reads the `hyperparameters` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsFile {
    pub sku: SkuId,
    pub seed: u64,
    pub trials: usize,
    pub best_trial: usize,
    /// Mean monthly CV MAPE of the best trial, as a fraction.
    pub cv_mape: f64,
    /// Mean monthly CV MAPE of trial 0 (the library defaults).
    pub default_cv_mape: f64,
    pub hyperparameters: Hyperparameters,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[arg(long)]
    sku: String,
    /// Trials to run, including the default trial 0.
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Append-only trial checkpoint; an existing file is resumed.
    #[arg(long, value_name = "FILE")]
    checkpoint: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// Evaluate trials on one thread.
    #[arg(long)]
    sequential: bool,
    #[command(flatten)]
    data: DataArgs,
}

pub fn tune(cfg: &RunConfig, args: &TuneArgs) -> anyhow::Result<u8> {
    let sku = parse_sku(&args.sku)?;
    let inputs = Inputs::load(cfg, &args.data)?;
    let series = inputs.series(&sku)?;
    let out = args.out_dir.clone().unwrap_or_else(|| cfg.output_dir());
    let checkpoint = args
        .checkpoint
        .clone()
        .or_else(|| cfg.paths.checkpoint.clone())
        .unwrap_or_else(|| out.join(format!("{sku}.checkpoint")));
    if let Some(dir) = checkpoint.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let exec = if args.sequential { Execution::Sequential } else { Execution::default() };
    let settings = SearchSettings {
        budget: args.budget.unwrap_or(cfg.budget),
        seed: args.seed.unwrap_or(cfg.seed),
        checkpoint: Some(checkpoint),
        exec,
    };
    let splits = make_cv_splits(series.start(), series.len(), &cfg.cv)?;
    let ctx = CvContext { features: features(cfg), fit: FitOptions::default(), exec };
    log::info!("tuning {sku}: {} trials over {} splits", settings.budget, splits.len());
    let outcome = search(series, &inputs.covid, &inputs.holidays, &SearchSpace::default(), &splits, &ctx, &settings)?;
    if outcome.resumed > 0 {
        log::info!("resumed {} trials from the checkpoint", outcome.resumed);
    }

    let params = ParamsFile {
        sku: sku.clone(),
        seed: settings.seed,
        trials: outcome.trials.len(),
        best_trial: outcome.best.index,
        cv_mape: outcome.best.mape,
        default_cv_mape: outcome.trials[0].mape,
        hyperparameters: outcome.best.hp,
    };
    write(&out.join(format!("{sku}.params.toml")), toml::to_string(&params)?.as_bytes())?;
    write(&out.join(format!("{sku}.trials.csv")), &outcome.trial_log())?;
    println!(
        "{sku}: best trial {} of {} with CV MAPE {:.2}% (default {:.2}%)",
        params.best_trial,
        params.trials,
        100.0 * params.cv_mape,
        100.0 * params.default_cv_mape
    );
    Ok(0)
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    sku: String,
    /// Params file written by `tune`.
    #[arg(long, value_name = "FILE", conflicts_with = "preset")]
    params: Option<PathBuf>,
    /// Shipped preset name.
    #[arg(long)]
    preset: Option<String>,
    /// Last training day; defaults to the last day of sales.
    #[arg(long)]
    cutoff: Option<DateStamp>,
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
}

fn hyperparameters(cfg: &RunConfig, sku: &SkuId, args: &FitArgs) -> anyhow::Result<Hyperparameters> {
    if let Some(path) = &args.params {
        let text =
            String::from_utf8(read(path)?).map_err(|_| InputError(format!("{} is not UTF-8", path.display())))?;
        let file: ParamsFile =
            toml::from_str(&text).map_err(|e| InputError(format!("params file {}: {e}", path.display())))?;
        if &file.sku != sku {
            log::warn!("params file was tuned for {}, fitting {sku}", file.sku);
        }
        file.hyperparameters.validate()?;
        return Ok(file.hyperparameters);
    }
    if let Some(name) = &args.preset {
        return Ok(presets::by_name(name)?);
    }
    cfg.hyperparameters(sku)
}

pub fn fit(cfg: &RunConfig, args: &FitArgs) -> anyhow::Result<u8> {
    let sku = parse_sku(&args.sku)?;
    let hp = hyperparameters(cfg, &sku, args)?;
    let inputs = Inputs::load(cfg, &args.data)?;
    let full = inputs.series(&sku)?;
    let series = match args.cutoff {
        Some(c) => full.truncate_to(c)?,
        None => full.clone(),
    };
    let design = assemble_design(&series, &merge_covid(&series, &inputs.covid), &features(cfg))?;
    let model = fit_model(&design, &hp, &inputs.holidays, &FitOptions::default())?;
    let out = args.out_dir.clone().unwrap_or_else(|| cfg.output_dir());
    write(&out.join(format!("{sku}.model.toml")), model::io::to_string(&sku, &model)?.as_bytes())?;
    println!(
        "{sku}: fitted {} to {} ({} mode, residual sigma {:.4})",
        design.start(),
        design.end(),
        hp.seasonality_mode,
        model.residual_sigma * model.y_scale
    );
    Ok(0)
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    /// Defaults to the SKU recorded in the model file.
    #[arg(long)]
    sku: Option<String>,
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    /// Days to forecast past the cutoff.
    #[arg(long)]
    horizon: Option<usize>,
    /// Last observed day; defaults to the model's last training day.
    #[arg(long)]
    cutoff: Option<DateStamp>,
    /// Central interval probability.
    #[arg(long)]
    level: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte-Carlo draws per interval.
    #[arg(long)]
    samples: Option<usize>,
    /// Future COVID averages overriding the projection.
    #[arg(long, value_name = "FILE")]
    scenario: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    #[command(flatten)]
    data: DataArgs,
}

pub fn forecast(cfg: &RunConfig, args: &ForecastArgs) -> anyhow::Result<u8> {
    let text = String::from_utf8(read(&args.model)?)
        .map_err(|_| InputError(format!("{} is not UTF-8", args.model.display())))?;
    let file = with_path(&args.model, model::io::from_str(&text))?;
    let sku = match &args.sku {
        Some(s) => parse_sku(s)?,
        None => file.sku.clone(),
    };
    if sku != file.sku {
        return Err(InputError(format!("model file is for {}, not {sku}", file.sku)).into());
    }
    let model = file.model;
    let trained_to = model.training_end;
    let cutoff = args.cutoff.unwrap_or(trained_to);
    if cutoff < trained_to {
        return Err(InputError(format!("cutoff {cutoff} precedes the model's last training day {trained_to}")).into());
    }
    let horizon = args.horizon.unwrap_or(cfg.horizon);
    if horizon == 0 {
        return Err(InputError("horizon must be at least 1 day".into()).into());
    }
    let level = args.level.unwrap_or(cfg.level);
    if !(level > 0.0 && level < 1.0) {
        return Err(InputError(format!("level must lie in (0, 1), got {level}")).into());
    }
    let samples = args.samples.unwrap_or(cfg.samples);
    if samples < model::MIN_SAMPLES {
        return Err(InputError(format!("need at least {} samples, got {samples}", model::MIN_SAMPLES)).into());
    }
    let seed = args.seed.unwrap_or(cfg.seed);

    let inputs = Inputs::load(cfg, &args.data)?;
    let series = inputs.series(&sku)?;
    if series.end() < cutoff {
        return Err(InputError(format!("sales for {sku} end on {}, before the cutoff {cutoff}", series.end())).into());
    }
    let history = series.truncate_to(cutoff)?;
    let known: Vec<CovidDaily> = inputs.covid.iter().copied().filter(|c| c.date <= cutoff).collect();
    let design = assemble_design(&history, &merge_covid(&history, &known), &features(cfg))?;
    let scenario = match args.scenario.as_ref().or(cfg.paths.scenario.as_ref()) {
        Some(p) => Some(with_path(p, parse_scenario(&read(p)?))?),
        None => None,
    };
    let future = project_future(&design, horizon, scenario.as_ref())?;
    let prediction = predict(&model, &future)?;
    let bands = sample_intervals(&model, &future, samples, level, seed, Execution::Sequential)?;
    let rows = forecast_rows(&sku, &prediction, &bands)?;
    let points: Vec<_> = rows.iter().map(ForecastRow::point).collect();
    let monthly = monthly_totals(&points, &sku, cutoff)?;

    let out = args.out_dir.clone().unwrap_or_else(|| cfg.output_dir());
    write(&out.join(format!("{sku}.forecast.csv")), &write_daily(&rows))?;
    write(&out.join(format!("{sku}.monthly.csv")), &write_monthly(&monthly))?;
    println!("{sku}: {horizon} days from {} to {}, {} months", future.start(), future.end(), monthly.len());
    Ok(0)
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Daily forecast file written by `forecast`.
    #[arg(long, value_name = "FILE")]
    forecast: PathBuf,
    /// Observed sales in the sales file format.
    #[arg(long, value_name = "FILE")]
    actuals: PathBuf,
    /// Report path; defaults to `metrics.csv` in the output directory.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

pub fn evaluate(cfg: &RunConfig, args: &EvaluateArgs) -> anyhow::Result<u8> {
    let rows = with_path(&args.forecast, parse_daily(&read(&args.forecast)?))?;
    let actuals = with_path(&args.actuals, parse_sales(&read(&args.actuals)?).and_then(|r| align_series(&r)))?;
    let mut by_sku: BTreeMap<SkuId, Vec<ForecastRow>> = BTreeMap::new();
    for r in rows {
        by_sku.entry(r.sku.clone()).or_default().push(r);
    }
    let mut reports = Vec::new();
    for (sku, mut rows) in by_sku {
        rows.sort_by_key(|r| r.ds);
        let actual = actuals.get(&sku).ok_or_else(|| InputError(format!("actuals have no rows for {sku}")))?;
        let scored = score(&rows, actual)?;
        if scored.is_empty() {
            log::warn!("{sku}: forecast does not reach a full month after its cutoff");
        }
        reports.extend(scored);
    }
    let out = args.out.clone().unwrap_or_else(|| cfg.output_dir().join("metrics.csv"));
    write(&out, &write_reports(&reports))?;
    for r in &reports {
        let pct = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{:.2}%", 100.0 * x));
        println!(
            "{} {}-month: MAPE {} RMSE {:.2} direction {}",
            r.sku,
            r.horizon_months,
            pct(r.mape),
            r.rmse,
            pct(r.directional_accuracy)
        );
    }
    Ok(0)
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Generator spec (TOML).
    #[arg(long, value_name = "FILE")]
    spec: PathBuf,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

pub fn synth(args: &SynthArgs) -> anyhow::Result<u8> {
    let text = String::from_utf8(read(&args.spec)?)
        .map_err(|_| InputError(format!("{} is not UTF-8", args.spec.display())))?;
    let spec = with_path(&args.spec, SynthSpec::from_toml(&text))?;
    let out = generate(&spec)?;
    write(&args.out.join("sales.csv"), &out.sales_bytes())?;
    write(&args.out.join("covid.csv"), &out.covid_bytes())?;
    write(&args.out.join("holidays.csv"), &out.holiday_bytes())?;
    write(&args.out.join("truth.txt"), out.truth.to_key_values().as_bytes())?;
    println!(
        "{}: {} days from {} ({} floored at zero)",
        spec.sku,
        out.series.len(),
        out.series.start(),
        out.truth.floored_days
    );
    Ok(0)
}
