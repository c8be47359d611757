use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use super::seasonality::{fourier_basis, holiday_matrix, Seasonality};
use super::solver::{ridge, solve_l1_block};
use super::trend::{gammas, hinge, place_changepoints, ChangepointGrid};
use super::{FitOptions, FittedModel, Hyperparameters, SeasonalComponent, SeasonalityMode};
use crate::domain::DateStamp;
use crate::error::{Error, Result};
use crate::features::{DesignMatrix, RegressorName};
use crate::ingest::HolidaySpec;

const MAX_BACKTRACKS: usize = 10;

/// Column blocks of the model evaluated on a date axis.
pub(crate) struct Basis {
    pub t: Vec<f64>,
    pub hinge: DMatrix<f64>,
    pub fourier: DMatrix<f64>,
    pub holidays: DMatrix<f64>,
    pub regressors: DMatrix<f64>,
}

impl Basis {
    pub(crate) fn build(
        dates: &[DateStamp],
        t: Vec<f64>,
        grid: &ChangepointGrid,
        seasonalities: &[Seasonality],
        holiday_specs: &[HolidaySpec],
        holiday_names: &[String],
        regressors: &[&[f64]],
    ) -> Basis {
        let n = dates.len();
        let hinge = DMatrix::from_fn(n, grid.len(), |i, j| hinge(t[i], grid.locations[j]));

        let width: usize = seasonalities.iter().map(Seasonality::width).sum();
        let mut fourier = DMatrix::zeros(n, width);
        for (i, d) in dates.iter().enumerate() {
            let day = d.epoch_day() as f64;
            let mut col = 0;
            for s in seasonalities {
                for v in fourier_basis(day, s.period, s.order) {
                    fourier[(i, col)] = v;
                    col += 1;
                }
            }
        }

        let hm = holiday_matrix(dates, holiday_specs);
        let holidays = DMatrix::from_fn(n, holiday_names.len(), |i, j| hm.get(&holiday_names[j]).map_or(0.0, |c| c[i]));

        let regressors = DMatrix::from_fn(n, regressors.len(), |i, j| regressors[j][i]);
        Basis { t, hinge, fourier, holidays, regressors }
    }

    fn n(&self) -> usize {
        self.t.len()
    }
}

/// Parameters in solver layout, on the scaled axis.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    pub k: f64,
    pub m: f64,
    pub deltas: Vec<f64>,
    pub seasonal: Vec<f64>,
    pub holidays: Vec<f64>,
    pub regressors: Vec<f64>,
}

impl ParamVector {
    /// `self + alpha (other - self)`, coordinate-wise.
    fn lerp(&self, other: &ParamVector, alpha: f64) -> ParamVector {
        let mix = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + alpha * (y - x)).collect();
        ParamVector {
            k: self.k + alpha * (other.k - self.k),
            m: self.m + alpha * (other.m - self.m),
            deltas: mix(&self.deltas, &other.deltas),
            seasonal: mix(&self.seasonal, &other.seasonal),
            holidays: mix(&self.holidays, &other.holidays),
            regressors: mix(&self.regressors, &other.regressors),
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![self.k, self.m];
        v.extend(&self.deltas);
        v.extend(&self.seasonal);
        v.extend(&self.holidays);
        v.extend(&self.regressors);
        v
    }
}

/// The penalized objective over a training design. Public so the smooth
/// part's gradient can be audited against finite differences.
pub struct PenalizedObjective {
    basis: Basis,
    y: DVector<f64>,
    y_scale: f64,
    mode: SeasonalityMode,
    lambda: f64,
    seasonal_penalty: f64,
    holiday_penalty: f64,
    regressor_penalty: f64,
    grid: ChangepointGrid,
    seasonalities: Vec<Seasonality>,
    holiday_specs: Vec<HolidaySpec>,
    holiday_names: Vec<String>,
    regressor_names: Vec<RegressorName>,
    training_start: DateStamp,
    training_end: DateStamp,
    hp: Hyperparameters,
    options: FitOptions,
}

impl PenalizedObjective {
    pub fn new(
        design: &DesignMatrix,
        hp: &Hyperparameters,
        holidays: &[HolidaySpec],
        options: &FitOptions,
    ) -> Result<Self> {
        hp.validate()?;
        let target = design.target().ok_or_else(|| Error::Contract("fit needs a design with targets".into()))?;
        if design.len() < 2 {
            return Err(Error::Contract(format!("fit needs at least 2 dated rows, got {}", design.len())));
        }
        if let Some(i) = target.iter().position(|v| !v.is_finite()) {
            return Err(Error::Contract(format!("target on {} is not finite", design.date_at(i))));
        }
        for (name, col) in design.columns() {
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::Contract(format!("regressor {name} on {} is not finite", design.date_at(i))));
            }
        }
        if !(options.regressor_prior_scale.is_finite() && options.regressor_prior_scale > 0.0) {
            return Err(Error::Invalid("regressor_prior_scale must be positive".into()));
        }

        let max = target.iter().cloned().fold(0.0_f64, f64::max);
        let y_scale = if max > 0.0 { max } else { 1.0 };
        let y = DVector::from_iterator(target.len(), target.iter().map(|v| v / y_scale));

        let dates = design.dates();
        let span = (design.len() - 1) as f64;
        let t: Vec<f64> = (0..design.len()).map(|i| i as f64 / span).collect();
        let grid = place_changepoints(hp.n_changepoints, hp.changepoint_range);

        let mut holiday_names: Vec<String> = holidays.iter().map(|h| h.name.clone()).collect();
        holiday_names.sort();
        holiday_names.dedup();
        let regressor_names: Vec<RegressorName> = design.columns().keys().copied().collect();
        let regressor_cols: Vec<&[f64]> = design.columns().values().map(Vec::as_slice).collect();

        let basis = Basis::build(&dates, t, &grid, &options.seasonalities, holidays, &holiday_names, &regressor_cols);
        Ok(PenalizedObjective {
            basis,
            y,
            y_scale,
            mode: hp.seasonality_mode,
            lambda: 1.0 / hp.changepoint_prior_scale,
            seasonal_penalty: 1.0 / (2.0 * hp.seasonality_prior_scale.powi(2)),
            holiday_penalty: 1.0 / (2.0 * hp.holidays_prior_scale.powi(2)),
            regressor_penalty: 1.0 / (2.0 * options.regressor_prior_scale.powi(2)),
            grid,
            seasonalities: options.seasonalities.clone(),
            holiday_specs: holidays.to_vec(),
            holiday_names,
            regressor_names,
            training_start: design.start(),
            training_end: design.end(),
            hp: *hp,
            options: options.clone(),
        })
    }

    /// Number of parameters: `k, m, δ…, seasonal…, holiday…, β…`.
    pub fn dim(&self) -> usize {
        2 + self.basis.hinge.ncols()
            + self.basis.fourier.ncols()
            + self.basis.holidays.ncols()
            + self.basis.regressors.ncols()
    }

    pub fn unflatten(&self, theta: &[f64]) -> ParamVector {
        assert_eq!(theta.len(), self.dim());
        let (s, f, h) = (self.basis.hinge.ncols(), self.basis.fourier.ncols(), self.basis.holidays.ncols());
        let mut at = 2;
        let mut take = |n: usize| {
            let v = theta[at..at + n].to_vec();
            at += n;
            v
        };
        let deltas = take(s);
        let seasonal = take(f);
        let holidays = take(h);
        let regressors = take(self.basis.regressors.ncols());
        ParamVector { k: theta[0], m: theta[1], deltas, seasonal, holidays, regressors }
    }

    fn parts(&self, p: &ParamVector) -> (DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>) {
        let b = &self.basis;
        let t = DVector::from_column_slice(&b.t);
        let g = t * p.k + DVector::repeat(b.n(), p.m) + &b.hinge * DVector::from_column_slice(&p.deltas);
        let s = &b.fourier * DVector::from_column_slice(&p.seasonal);
        let h = &b.holidays * DVector::from_column_slice(&p.holidays);
        let x = &b.regressors * DVector::from_column_slice(&p.regressors);
        (g, s, h, x)
    }

    fn residual(&self, p: &ParamVector) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let (g, s, h, x) = self.parts(p);
        let fitted = match self.mode {
            SeasonalityMode::Additive => &g + &s + h + x,
            SeasonalityMode::Multiplicative => g.component_mul(&s.add_scalar(1.0)) + h + x,
        };
        (&self.y - fitted, g, s)
    }

    fn penalty_l2(&self, p: &ParamVector) -> f64 {
        let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
        self.seasonal_penalty * sq(&p.seasonal)
            + self.holiday_penalty * sq(&p.holidays)
            + self.regressor_penalty * sq(&p.regressors)
    }

    fn value_of(&self, p: &ParamVector) -> f64 {
        let (r, _, _) = self.residual(p);
        r.norm_squared() + self.penalty_l2(p) + self.lambda * p.deltas.iter().map(|d| d.abs()).sum::<f64>()
    }

    /// Full objective including the L1 term.
    pub fn value(&self, theta: &[f64]) -> f64 {
        self.value_of(&self.unflatten(theta))
    }

    /// Squared error plus the L2 penalties (everything except `λ‖δ‖₁`).
    pub fn smooth_value(&self, theta: &[f64]) -> f64 {
        let p = self.unflatten(theta);
        let (r, _, _) = self.residual(&p);
        r.norm_squared() + self.penalty_l2(&p)
    }

    /// Analytic gradient of [`smooth_value`](Self::smooth_value).
    pub fn smooth_gradient(&self, theta: &[f64]) -> Vec<f64> {
        let p = self.unflatten(theta);
        let (r, g, s) = self.residual(&p);
        let b = &self.basis;
        // d(fitted)/d(trend params) carries a (1+s) weight in multiplicative mode.
        let (rt, rs) = match self.mode {
            SeasonalityMode::Additive => (r.clone(), r.clone()),
            SeasonalityMode::Multiplicative => (r.component_mul(&s.add_scalar(1.0)), r.component_mul(&g)),
        };
        let mut grad = Vec::with_capacity(self.dim());
        grad.push(-2.0 * rt.iter().zip(&b.t).map(|(r, t)| r * t).sum::<f64>());
        grad.push(-2.0 * rt.sum());
        grad.extend((b.hinge.tr_mul(&rt) * -2.0).iter());
        let gs = b.fourier.tr_mul(&rs) * -2.0;
        grad.extend(gs.iter().zip(&p.seasonal).map(|(g, c)| g + 2.0 * self.seasonal_penalty * c));
        let gh = b.holidays.tr_mul(&r) * -2.0;
        grad.extend(gh.iter().zip(&p.holidays).map(|(g, c)| g + 2.0 * self.holiday_penalty * c));
        let gx = b.regressors.tr_mul(&r) * -2.0;
        grad.extend(gx.iter().zip(&p.regressors).map(|(g, c)| g + 2.0 * self.regressor_penalty * c));
        grad
    }

    fn penalties(&self, seasonal: bool) -> Vec<f64> {
        let b = &self.basis;
        let mut p = vec![0.0, 0.0];
        if seasonal {
            p.extend(std::iter::repeat_n(self.seasonal_penalty, b.fourier.ncols()));
        }
        p.extend(std::iter::repeat_n(self.holiday_penalty, b.holidays.ncols()));
        p.extend(std::iter::repeat_n(self.regressor_penalty, b.regressors.ncols()));
        p
    }

    /// `[t·w, w, (F), H, X]` with the trend columns weighted by `w`.
    fn smooth_block(&self, weight: Option<&DVector<f64>>, with_fourier: bool) -> DMatrix<f64> {
        let b = &self.basis;
        let n = b.n();
        let f = if with_fourier { b.fourier.ncols() } else { 0 };
        let (h, r) = (b.holidays.ncols(), b.regressors.ncols());
        let mut a = DMatrix::zeros(n, 2 + f + h + r);
        for i in 0..n {
            let w = weight.map_or(1.0, |w| w[i]);
            a[(i, 0)] = b.t[i] * w;
            a[(i, 1)] = w;
        }
        if with_fourier {
            a.columns_mut(2, f).copy_from(&b.fourier);
        }
        a.columns_mut(2 + f, h).copy_from(&b.holidays);
        a.columns_mut(2 + f + h, r).copy_from(&b.regressors);
        a
    }

    fn solve_additive(&self) -> ParamVector {
        let b = &self.basis;
        let a = self.smooth_block(None, true);
        let sol =
            solve_l1_block(&a, &self.penalties(true), &b.hinge, &self.y, self.lambda, &vec![0.0; b.hinge.ncols()]);
        self.unpack(sol.smooth.as_slice(), sol.sparse)
    }

    /// Split a `[k, m, seasonal, holidays, regressors]` solution.
    fn unpack(&self, c: &[f64], deltas: Vec<f64>) -> ParamVector {
        let (f, h) = (self.basis.fourier.ncols(), self.basis.holidays.ncols());
        ParamVector {
            k: c[0],
            m: c[1],
            deltas,
            seasonal: c[2..2 + f].to_vec(),
            holidays: c[2 + f..2 + f + h].to_vec(),
            regressors: c[2 + f + h..].to_vec(),
        }
    }

    /// Joint step on the model linearized around `p`: the trend columns
    /// carry the weight `1 + s` and the Fourier columns the weight `g`.
    /// Penalties apply to the new parameters exactly.
    fn gauss_newton_step(&self, p: &ParamVector) -> ParamVector {
        let b = &self.basis;
        let (g, s, _, _) = self.parts(p);
        let w = s.add_scalar(1.0);
        let mut a = self.smooth_block(Some(&w), true);
        let f = b.fourier.ncols();
        for j in 0..f {
            for i in 0..b.n() {
                a[(i, 2 + j)] *= g[i];
            }
        }
        let mut hinge_w = b.hinge.clone();
        for j in 0..hinge_w.ncols() {
            for i in 0..hinge_w.nrows() {
                hinge_w[(i, j)] *= w[i];
            }
        }
        let target = &self.y + g.component_mul(&s);
        let sol = solve_l1_block(&a, &self.penalties(true), &hinge_w, &target, self.lambda, &p.deltas);
        self.unpack(sol.smooth.as_slice(), sol.sparse)
    }

    /// Trend/holiday/regressor step with seasonal coefficients fixed.
    fn trend_step(&self, p: &mut ParamVector) {
        let b = &self.basis;
        let w = (&b.fourier * DVector::from_column_slice(&p.seasonal)).add_scalar(1.0);
        let a = self.smooth_block(Some(&w), false);
        let mut hinge_w = b.hinge.clone();
        for j in 0..hinge_w.ncols() {
            for i in 0..hinge_w.nrows() {
                hinge_w[(i, j)] *= w[i];
            }
        }
        let sol = solve_l1_block(&a, &self.penalties(false), &hinge_w, &self.y, self.lambda, &p.deltas);
        let h = b.holidays.ncols();
        let c = sol.smooth.as_slice();
        p.k = c[0];
        p.m = c[1];
        p.deltas = sol.sparse;
        p.holidays = c[2..2 + h].to_vec();
        p.regressors = c[2 + h..].to_vec();
    }

    /// Seasonal step with everything else fixed: ridge on `g·F`.
    fn seasonal_step(&self, p: &mut ParamVector) {
        let b = &self.basis;
        if b.fourier.ncols() == 0 {
            return;
        }
        let (g, _, h, x) = self.parts(p);
        let mut gf = b.fourier.clone();
        for j in 0..gf.ncols() {
            for i in 0..gf.nrows() {
                gf[(i, j)] *= g[i];
            }
        }
        let target = &self.y - &g - h - x;
        let penalty = vec![self.seasonal_penalty; b.fourier.ncols()];
        p.seasonal = ridge(&gf, &penalty, &target).as_slice().to_vec();
    }

    /// Additive solution with the regressor block left out (`β = 0`).
    fn solve_structural(&self) -> ParamVector {
        let b = &self.basis;
        let full = self.smooth_block(None, true);
        let keep = full.ncols() - b.regressors.ncols();
        let a = full.columns(0, keep).into_owned();
        let penalty = &self.penalties(true)[..keep];
        let sol = solve_l1_block(&a, penalty, &b.hinge, &self.y, self.lambda, &vec![0.0; b.hinge.ncols()]);
        let mut c = sol.smooth.as_slice().to_vec();
        c.resize(keep + b.regressors.ncols(), 0.0);
        self.unpack(&c, sol.sparse)
    }

    /// Refine from two additive starts, one with and one without the
    /// regressors, and keep the lower objective. Seasonal terms of each
    /// start are re-expressed relative to its mean trend level.
    fn solve_multiplicative(&self, trace: &mut Vec<f64>) -> Result<ParamVector> {
        let mut best: Option<(ParamVector, f64, Vec<f64>)> = None;
        let mut failure = None;
        for mut start in [self.solve_additive(), self.solve_structural()] {
            let (g, _, _, _) = self.parts(&start);
            let level = g.mean();
            if level.abs() > 1e-9 {
                start.seasonal.iter_mut().for_each(|c| *c /= level);
            } else {
                start.seasonal.iter_mut().for_each(|c| *c = 0.0);
            }
            let mut run = Vec::new();
            match self.refine_multiplicative(start, &mut run) {
                Ok(p) => {
                    let v = self.value_of(&p);
                    if best.as_ref().is_none_or(|(_, b, _)| v < *b) {
                        best = Some((p, v, run));
                    }
                }
                Err(e) => failure = Some(e),
            }
        }
        match (best, failure) {
            (Some((p, _, run)), _) => {
                trace.extend(run);
                Ok(p)
            }
            (None, Some(e)) => Err(e),
            (None, None) => unreachable!("at least one start runs"),
        }
    }

    fn refine_multiplicative(&self, mut p: ParamVector, trace: &mut Vec<f64>) -> Result<ParamVector> {
        let mut prev = self.value_of(&p);
        for _ in 0..self.options.max_alternations {
            // Take the Gauss-Newton step if some fraction of it improves
            // the objective; otherwise fall back to one exact block
            // alternation, which never increases it.
            let step = self.gauss_newton_step(&p);
            let mut accepted = None;
            let mut alpha = 1.0;
            for _ in 0..MAX_BACKTRACKS {
                let cand = p.lerp(&step, alpha);
                let v = self.value_of(&cand);
                if v < prev {
                    accepted = Some((cand, v));
                    break;
                }
                alpha *= 0.5;
            }
            let obj = match accepted {
                Some((cand, v)) => {
                    p = cand;
                    v
                }
                None => {
                    self.trend_step(&mut p);
                    self.seasonal_step(&mut p);
                    self.value_of(&p)
                }
            };
            trace.push(obj);
            if (prev - obj).abs() <= self.options.alternation_tolerance * prev.abs().max(f64::EPSILON) {
                return Ok(p);
            }
            prev = obj;
        }
        Err(Error::NotConverged { iterations: self.options.max_alternations, objective: prev })
    }

    fn into_model(self, p: ParamVector) -> FittedModel {
        let (r, _, _) = self.residual(&p);
        let n = r.len();
        let mean = r.mean();
        let sd = if n > 1 { (r.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() } else { 0.0 };
        let objective = self.value_of(&p);

        let mut seasonal = Vec::new();
        let mut at = 0;
        for s in &self.seasonalities {
            seasonal.push(SeasonalComponent {
                seasonality: s.clone(),
                coefficients: p.seasonal[at..at + s.width()].to_vec(),
            });
            at += s.width();
        }
        FittedModel {
            y_scale: self.y_scale,
            k: p.k,
            m: p.m,
            gammas: gammas(&self.grid, &p.deltas),
            deltas: p.deltas,
            changepoints: self.grid,
            seasonal,
            holiday_coeffs: self.holiday_names.into_iter().zip(p.holidays).collect::<BTreeMap<_, _>>(),
            holidays: self.holiday_specs,
            regressor_coeffs: self.regressor_names.into_iter().zip(p.regressors).collect(),
            residual_sigma: sd.max(1e-12),
            mode: self.mode,
            hyperparameters: self.hp,
            training_start: self.training_start,
            training_end: self.training_end,
            objective,
        }
    }
}

/// A fitted model plus solver diagnostics.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub model: FittedModel,
    /// Objective after each trend/seasonal alternation (multiplicative
    /// mode); a single entry in additive mode.
    pub objective_trace: Vec<f64>,
}

/// Fit the model to a training design.
pub fn fit(
    design: &DesignMatrix,
    hp: &Hyperparameters,
    holidays: &[HolidaySpec],
    options: &FitOptions,
) -> Result<FittedModel> {
    fit_traced(design, hp, holidays, options).map(|r| r.model)
}

pub fn fit_traced(
    design: &DesignMatrix,
    hp: &Hyperparameters,
    holidays: &[HolidaySpec],
    options: &FitOptions,
) -> Result<FitReport> {
    let problem = PenalizedObjective::new(design, hp, holidays, options)?;
    let mut trace = Vec::new();
    let params = match problem.mode {
        SeasonalityMode::Additive => {
            let p = problem.solve_additive();
            trace.push(problem.value_of(&p));
            p
        }
        SeasonalityMode::Multiplicative => problem.solve_multiplicative(&mut trace)?,
    };
    Ok(FitReport { model: problem.into_model(params), objective_trace: trace })
}
