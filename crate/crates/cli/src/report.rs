//! Plain-text planning and accuracy tables.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use skucast::aggregate::{parse_monthly, MonthlyForecast};
use skucast::metrics::{parse_reports, EvalReport};
use skucast::DateStamp;

use crate::commands::ParamsFile;
use crate::InputError;

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("tables").required(true).multiple(true))]
pub struct ReportArgs {
    /// Monthly forecast file written by `forecast`.
    #[arg(long, value_name = "FILE", group = "tables")]
    monthly: Option<PathBuf>,
    /// Metrics file written by `evaluate`.
    #[arg(long, value_name = "FILE", group = "tables")]
    metrics: Option<PathBuf>,
    /// Params files written by `tune` (repeatable).
    #[arg(long, value_name = "FILE", group = "tables")]
    params: Vec<PathBuf>,
    /// Also write the report to this file.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

fn read_text(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).map_err(|e| InputError(format!("cannot read {}: {e}", path.display())).into())
}

fn days_in_month(year: i32, month: u32) -> i64 {
    let first = DateStamp::ymd(year, month, 1);
    let next = if month == 12 { DateStamp::ymd(year + 1, 1, 1) } else { DateStamp::ymd(year, month + 1, 1) };
    next.days_since(first)
}

pub fn monthly_table(rows: &[MonthlyForecast]) -> String {
    let mut s = String::from("Monthly demand plan\n");
    let _ = writeln!(
        s,
        "{:<12} {:<8} {:>6} {:>12} {:>12} {:>12}  days",
        "sku", "month", "m_diff", "sales", "lower", "upper"
    );
    for r in rows {
        let full = days_in_month(r.year, r.month);
        let days = if i64::from(r.days_covered) < full {
            format!("{}/{full} partial", r.days_covered)
        } else {
            format!("{}", r.days_covered)
        };
        let _ = writeln!(
            s,
            "{:<12} {:04}-{:02}  {:>6} {:>12.1} {:>12.1} {:>12.1}  {days}",
            r.sku.as_str(),
            r.year,
            r.month,
            r.month_diff,
            r.sales,
            r.lower,
            r.upper
        );
    }
    s
}

pub fn metrics_table(rows: &[EvalReport]) -> String {
    let pct = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{:.2}", 100.0 * x));
    let mut s = String::from("Forecast accuracy by horizon\n");
    let _ = writeln!(s, "{:<12} {:>8} {:>9} {:>12} {:>13}", "sku", "horizon", "MAPE (%)", "RMSE", "direction (%)");
    for r in rows {
        let _ = writeln!(
            s,
            "{:<12} {:>6} m {:>9} {:>12.2} {:>13}",
            r.sku.as_str(),
            r.horizon_months,
            pct(r.mape),
            r.rmse,
            pct(r.directional_accuracy)
        );
    }
    s
}

pub fn tuning_table(rows: &[ParamsFile]) -> String {
    let mut s = String::from("Tuned against default hyperparameters (CV MAPE)\n");
    let _ = writeln!(
        s,
        "{:<12} {:>12} {:>12} {:>13}  {:<14} {:>6} {:>6} {:>6} {:>5} {:>4}",
        "sku", "default (%)", "tuned (%)", "improvement", "mode", "cps", "sps", "hps", "range", "n_cp"
    );
    for p in rows {
        let hp = &p.hyperparameters;
        let improvement = if p.default_cv_mape.is_finite() && p.default_cv_mape > 0.0 {
            format!("{:.1}%", 100.0 * (1.0 - p.cv_mape / p.default_cv_mape))
        } else {
            "n/a".to_string()
        };
        let _ = writeln!(
            s,
            "{:<12} {:>12.2} {:>12.2} {:>13}  {:<14} {:>6.3} {:>6.1} {:>6.1} {:>5.2} {:>4}",
            p.sku.as_str(),
            100.0 * p.default_cv_mape,
            100.0 * p.cv_mape,
            improvement,
            hp.seasonality_mode.to_string(),
            hp.changepoint_prior_scale,
            hp.seasonality_prior_scale,
            hp.holidays_prior_scale,
            hp.changepoint_range,
            hp.n_changepoints
        );
    }
    s
}

pub fn run(args: &ReportArgs) -> anyhow::Result<u8> {
    let mut sections = Vec::new();
    if !args.params.is_empty() {
        let mut files = Vec::new();
        for path in &args.params {
            let file: ParamsFile = toml::from_str(&read_text(path)?)
                .map_err(|e| InputError(format!("params file {}: {e}", path.display())))?;
            files.push(file);
        }
        sections.push(tuning_table(&files));
    }
    if let Some(path) = &args.monthly {
        let rows = parse_monthly(read_text(path)?.as_bytes())
            .map_err(|e| anyhow::Error::from(e).context(path.display().to_string()))?;
        sections.push(monthly_table(&rows));
    }
    if let Some(path) = &args.metrics {
        let rows = parse_reports(read_text(path)?.as_bytes())
            .map_err(|e| anyhow::Error::from(e).context(path.display().to_string()))?;
        sections.push(metrics_table(&rows));
    }
    let text = sections.join("\n");
    print!("{text}");
    if let Some(out) = &args.out {
        std::fs::write(out, &text).map_err(|e| anyhow::anyhow!("cannot write {}: {e}", out.display()))?;
    }
    Ok(0)
}
