//! Baseline models the ensemble is measured against: a univariate ARIMA
//! fitted by conditional-sum-of-squares, and a single backprop-trained
//! feedforward network on the same features (no wavelet stage).
//!
//! ARIMA here is deliberately desk-scale: CSS instead of full maximum
//! likelihood, a hand-rolled Nelder–Mead from a zero coefficient start, and
//! stationarity/invertibility reported as flags rather than enforced. That
//! is adequate for a benchmark and keeps the crate dependency-free.

use std::io::{BufRead, Read, Write};

use chrono::NaiveDate;

use crate::dataio::{SplitSpec, TaggedSeries};
use crate::ensemble::{component_forecast, train_span_slice, SubNetwork};
use crate::error::{Error, Result};
use crate::features::{self, Dataset, FeatureVector, NormalizationParams};
use crate::nnet::NetworkSpec;
use crate::parallel::map_ordered;
use crate::trainer::{train_backprop, BackpropConfig, TrainingTrace};

/// ARIMA(p, d, q) order. `p + q ≥ 1` is required to *fit* (there must be
/// something to estimate), but a pure-integration model such as (0,1,0) can
/// still be represented and forecast — it is the random walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArimaOrder {
    pub p: usize,
    pub d: usize,
    pub q: usize,
}

impl ArimaOrder {
    /// Default order when selection is skipped: small, handles trend via
    /// d = 1, and stable in practice.
    pub const DEFAULT: ArimaOrder = ArimaOrder { p: 2, d: 1, q: 2 };

    pub fn new(p: usize, d: usize, q: usize) -> Result<Self> {
        if d > 2 {
            return Err(Error::InvalidOrder {
                message: format!("differencing order {d} not supported; use 0, 1, or 2"),
            });
        }
        Ok(Self { p, d, q })
    }

    fn validate_for_fit(&self) -> Result<()> {
        if self.d > 2 {
            return Err(Error::InvalidOrder {
                message: format!("differencing order {} not supported; use 0, 1, or 2", self.d),
            });
        }
        if self.p + self.q == 0 {
            return Err(Error::InvalidOrder {
                message: "nothing to estimate: p + q must be at least 1".to_string(),
            });
        }
        Ok(())
    }

    fn param_count(&self) -> usize {
        self.p + self.q + 1 // plus the intercept
    }
}

/// A fitted ARIMA model with the state needed to forecast from the end of
/// its training series.
#[derive(Debug, Clone, PartialEq)]
pub struct ArimaModel {
    pub order: ArimaOrder,
    /// AR coefficients φ_1..φ_p on the differenced series.
    pub ar: Vec<f64>,
    /// MA coefficients θ_1..θ_q (plus convention: w_t = c + Σφw + ε + Σθε).
    pub ma: Vec<f64>,
    pub intercept: f64,
    /// CSS / n on the differenced series.
    pub residual_variance: f64,
    pub css: f64,
    /// Best CSS after each optimizer iteration; nonincreasing.
    pub css_trace: Vec<f64>,
    /// False when the iteration cap was hit before the simplex collapsed;
    /// the best-so-far fit is still returned.
    pub converged: bool,
    pub stationary: bool,
    pub invertible: bool,
    /// Last p differenced values, chronological.
    pub recent_diff: Vec<f64>,
    /// Last q in-sample residuals, chronological.
    pub recent_residuals: Vec<f64>,
    /// Last observed value at each differencing level 0..d, chronological
    /// per level; anchors the integration of forecasts back to MW.
    pub level_tails: Vec<f64>,
}

/// d-fold first differencing. Returns the differenced series and the d
/// leading values consumed by differencing (one per level), which
/// [`integrate`] uses to rebuild the original exactly.
pub fn difference(series: &[f64], d: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if series.len() <= d {
        return Err(Error::SeriesTooShort {
            needed: d + 1,
            got: series.len(),
        });
    }
    let mut current = series.to_vec();
    let mut anchors = Vec::with_capacity(d);
    for _ in 0..d {
        anchors.push(current[0]);
        current = current.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok((current, anchors))
}

/// Invert [`difference`]: prepend each anchor and take running sums, one
/// level at a time.
pub fn integrate(differenced: &[f64], anchors: &[f64]) -> Vec<f64> {
    let mut current = differenced.to_vec();
    for &anchor in anchors.iter().rev() {
        let mut rebuilt = Vec::with_capacity(current.len() + 1);
        let mut running = anchor;
        rebuilt.push(running);
        for v in &current {
            running += v;
            rebuilt.push(running);
        }
        current = rebuilt;
    }
    current
}

/// Conditional sum of squares of the ARMA(p, q) recursion on `w`.
/// Pre-sample values are held at the series mean and pre-sample residuals
/// at zero. When `residuals` is given, the per-step errors are written out.
fn css_objective(
    w: &[f64],
    mean: f64,
    p: usize,
    q: usize,
    params: &[f64],
    mut residuals: Option<&mut Vec<f64>>,
) -> f64 {
    let (phi, rest) = params.split_at(p);
    let (theta, c) = rest.split_at(q);
    let c = c[0];
    if let Some(buf) = residuals.as_deref_mut() {
        buf.clear();
    }
    let mut eps = vec![0.0; w.len()];
    let mut css = 0.0;
    for t in 0..w.len() {
        let mut prediction = c;
        for (i, f) in phi.iter().enumerate() {
            let lag = t as isize - (i + 1) as isize;
            prediction += f * if lag < 0 { mean } else { w[lag as usize] };
        }
        for (j, th) in theta.iter().enumerate() {
            let lag = t as isize - (j + 1) as isize;
            prediction += th * if lag < 0 { 0.0 } else { eps[lag as usize] };
        }
        let e = w[t] - prediction;
        eps[t] = e;
        css += e * e;
    }
    if let Some(buf) = residuals {
        buf.extend_from_slice(&eps);
    }
    css
}

/// Nelder–Mead minimization from `start`, with per-dimension initial steps.
/// Returns (best point, best value, best-so-far trace, converged flag).
fn nelder_mead<F: Fn(&[f64]) -> f64>(
    objective: F,
    start: &[f64],
    steps: &[f64],
    max_iterations: usize,
) -> (Vec<f64>, f64, Vec<f64>, bool) {
    let dim = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((start.to_vec(), objective(start)));
    for i in 0..dim {
        let mut vertex = start.to_vec();
        vertex[i] += steps[i];
        let value = objective(&vertex);
        simplex.push((vertex, value));
    }
    let mut trace = Vec::with_capacity(max_iterations);
    let mut converged = false;
    for _ in 0..max_iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[dim].1;
        trace.push(best);
        if (worst - best).abs() <= 1e-12 + 1e-9 * best.abs() {
            converged = true;
            break;
        }
        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; dim];
        for (vertex, _) in &simplex[..dim] {
            for (c, v) in centroid.iter_mut().zip(vertex) {
                *c += v;
            }
        }
        for c in centroid.iter_mut() {
            *c /= dim as f64;
        }
        let point = |scale: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[dim].0)
                .map(|(c, w)| c + scale * (c - w))
                .collect()
        };
        let reflected = point(1.0);
        let fr = objective(&reflected);
        if fr < simplex[0].1 {
            let expanded = point(2.0);
            let fe = objective(&expanded);
            simplex[dim] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (reflected, fr);
        } else {
            let (contracted, fc) = if fr < simplex[dim].1 {
                let outside = point(0.5);
                let f = objective(&outside);
                (outside, f)
            } else {
                let inside = point(-0.5);
                let f = objective(&inside);
                (inside, f)
            };
            if fc < simplex[dim].1.min(fr) {
                simplex[dim] = (contracted, fc);
            } else {
                // Shrink toward the best vertex (which is retained, so the
                // best-so-far value never worsens).
                let best_vertex = simplex[0].0.clone();
                for (vertex, value) in simplex[1..].iter_mut() {
                    for (v, b) in vertex.iter_mut().zip(&best_vertex) {
                        *v = b + 0.5 * (*v - b);
                    }
                    *value = objective(vertex);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    trace.push(simplex[0].1);
    (simplex[0].0.clone(), simplex[0].1, trace, converged)
}

/// Schur–Cohn stability test by the step-down (reverse Levinson) recursion:
/// the process x_t = Σ a_i·x_{t−i} + ε is stationary iff every reflection
/// coefficient has magnitude below one.
fn step_down_stable(coeffs: &[f64]) -> bool {
    let mut a = coeffs.to_vec();
    for m in (1..=a.len()).rev() {
        let k = a[m - 1];
        if k.abs() >= 1.0 || !k.is_finite() {
            return false;
        }
        if m == 1 {
            break;
        }
        let denom = 1.0 - k * k;
        let prev: Vec<f64> = (0..m - 1)
            .map(|i| (a[i] + k * a[m - 2 - i]) / denom)
            .collect();
        a = prev;
    }
    true
}

/// Fit by CSS: difference by d, then minimize the conditional sum of
/// squares over (φ, θ, c) with Nelder–Mead from a zero start, restarting
/// the simplex from the best point (up to three rounds, each capped at
/// `max_css_iterations`, with shrinking initial steps) until a restart
/// stops improving. The best point found is always returned; `converged`
/// records whether the final simplex collapsed before its iteration cap.
pub fn fit_arima(series: &[f64], order: ArimaOrder, max_css_iterations: usize) -> Result<ArimaModel> {
    order.validate_for_fit()?;
    let needed = 10 * order.param_count();
    if series.len() < needed {
        return Err(Error::SeriesTooShort {
            needed,
            got: series.len(),
        });
    }
    let (w, _) = difference(series, order.d)?;
    let n = w.len() as f64;
    let mean = w.iter().sum::<f64>() / n;
    let sd = (w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let dim = order.param_count();
    // Coefficients live in roughly (−1, 1); the intercept's natural scale
    // is the spread of the differenced series.
    let mut steps = vec![0.25; dim];
    steps[dim - 1] = (0.5 * sd).max(0.25);
    let objective =
        |params: &[f64]| css_objective(&w, mean, order.p, order.q, params, None);
    let mut params = vec![0.0; dim];
    let mut css = f64::INFINITY;
    let mut css_trace: Vec<f64> = Vec::new();
    let mut converged = false;
    for round in 0..3 {
        let round_steps: Vec<f64> = steps.iter().map(|s| s * 0.3f64.powi(round)).collect();
        let (p, c, trace, collapsed) =
            nelder_mead(&objective, &params, &round_steps, max_css_iterations);
        for v in trace {
            // Across restarts only the best-so-far is reported, keeping the
            // published trace nonincreasing.
            css_trace.push(v.min(css_trace.last().copied().unwrap_or(f64::INFINITY)));
        }
        let improved = c < css - 1e-9 * (1.0 + css.abs());
        if c < css {
            css = c;
            params = p;
        }
        converged = collapsed;
        if !improved && round > 0 {
            break;
        }
    }
    let ar = params[..order.p].to_vec();
    let ma = params[order.p..order.p + order.q].to_vec();
    let intercept = params[dim - 1];
    let mut residuals = Vec::with_capacity(w.len());
    css_objective(&w, mean, order.p, order.q, &params, Some(&mut residuals));
    let mut level_tails = Vec::with_capacity(order.d);
    let mut level = series.to_vec();
    for _ in 0..order.d {
        level_tails.push(*level.last().unwrap());
        level = level.windows(2).map(|pair| pair[1] - pair[0]).collect();
    }
    Ok(ArimaModel {
        order,
        stationary: step_down_stable(&ar),
        invertible: step_down_stable(&ma.iter().map(|t| -t).collect::<Vec<_>>()),
        ar,
        ma,
        intercept,
        residual_variance: css / n,
        css,
        css_trace,
        converged,
        recent_diff: w[w.len() - order.p..].to_vec(),
        recent_residuals: residuals[residuals.len() - order.q..].to_vec(),
        level_tails,
    })
}

/// Iterated one-step forecasts with future shocks at zero, then d-fold
/// integration back to the level scale.
pub fn forecast_arima(model: &ArimaModel, horizon: usize) -> Vec<f64> {
    assert!(horizon >= 1, "forecast horizon must be at least 1");
    let p = model.order.p;
    let q = model.order.q;
    let mut w = model.recent_diff.clone();
    let mut eps = model.recent_residuals.clone();
    let mut forecasts = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let mut value = model.intercept;
        for (i, phi) in model.ar.iter().enumerate() {
            value += phi * w[w.len() - 1 - i];
        }
        for (j, theta) in model.ma.iter().enumerate() {
            value += theta * eps[eps.len() - 1 - j];
        }
        w.push(value);
        eps.push(0.0);
        forecasts.push(value);
    }
    // w and eps only ever need their last p (resp. q) entries; trimming is
    // unnecessary for a 24-hour horizon, so keep the loop simple.
    let _ = (p, q);
    let mut level = forecasts;
    for &tail in model.level_tails.iter().rev() {
        let mut running = tail;
        for v in level.iter_mut() {
            running += *v;
            *v = running;
        }
    }
    level
}

/// The order grid the selection example uses by default.
pub fn default_order_grid() -> Vec<ArimaOrder> {
    let mut grid = Vec::new();
    for d in [0, 1] {
        for p in 0..=4 {
            for q in 0..=4 {
                if p + q >= 1 {
                    grid.push(ArimaOrder { p, d, q });
                }
            }
        }
    }
    grid
}

/// Pick the order minimizing AIC = n·ln(CSS/n) + 2(p+q+1) over `grid`,
/// fitting each candidate independently (concurrently under the parallel
/// feature). Ties and near-ties resolve to the earliest grid entry.
pub fn select_order(
    series: &[f64],
    grid: &[ArimaOrder],
    max_css_iterations: usize,
) -> Result<ArimaOrder> {
    if grid.is_empty() {
        return Err(Error::InvalidOrder {
            message: "empty order grid".to_string(),
        });
    }
    let fits: Vec<Result<f64>> = map_ordered(grid, |&order| {
        let model = fit_arima(series, order, max_css_iterations)?;
        let n = (series.len() - order.d) as f64;
        Ok(n * (model.css / n).ln() + 2.0 * order.param_count() as f64)
    });
    let mut best: Option<(usize, f64)> = None;
    for (i, aic) in fits.into_iter().enumerate() {
        let aic = aic?;
        if aic.is_nan() {
            continue;
        }
        best = match best {
            None => Some((i, aic)),
            Some((_, b)) if aic < b => Some((i, aic)),
            keep => keep,
        };
    }
    match best {
        Some((i, _)) => Ok(grid[i]),
        None => Err(Error::DegenerateVariance),
    }
}

/// Dump a model as `name,value` rows, forecast state included, so a saved
/// model can be reloaded and used to forecast.
pub fn write_arima_model<W: Write>(model: &ArimaModel, out: &mut W) -> Result<()> {
    writeln!(out, "name,value")?;
    writeln!(out, "p,{}", model.order.p)?;
    writeln!(out, "d,{}", model.order.d)?;
    writeln!(out, "q,{}", model.order.q)?;
    for (i, v) in model.ar.iter().enumerate() {
        writeln!(out, "phi_{},{v}", i + 1)?;
    }
    for (j, v) in model.ma.iter().enumerate() {
        writeln!(out, "theta_{},{v}", j + 1)?;
    }
    writeln!(out, "intercept,{}", model.intercept)?;
    writeln!(out, "residual_variance,{}", model.residual_variance)?;
    writeln!(out, "css,{}", model.css)?;
    writeln!(out, "converged,{}", model.converged)?;
    writeln!(out, "stationary,{}", model.stationary)?;
    writeln!(out, "invertible,{}", model.invertible)?;
    for (i, v) in model.recent_diff.iter().enumerate() {
        writeln!(out, "recent_diff_{},{v}", i + 1)?;
    }
    for (i, v) in model.recent_residuals.iter().enumerate() {
        writeln!(out, "recent_residual_{},{v}", i + 1)?;
    }
    for (i, v) in model.level_tails.iter().enumerate() {
        writeln!(out, "level_tail_{},{v}", i + 1)?;
    }
    Ok(())
}

/// Parse a [`write_arima_model`] dump. The convergence trace is not stored;
/// it comes back empty.
pub fn parse_arima_model<R: Read>(source: R) -> Result<ArimaModel> {
    let reader = std::io::BufReader::new(source);
    let mut fields = std::collections::BTreeMap::new();
    for (number, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if number == 0 || line.is_empty() {
            continue;
        }
        let (name, value) = line.split_once(',').ok_or(Error::MalformedRow {
            line: number + 1,
            message: "expected `name,value`".to_string(),
        })?;
        fields.insert(name.to_string(), value.to_string());
    }
    let take = |name: &str| -> Result<String> {
        fields.get(name).cloned().ok_or(Error::MalformedRow {
            line: 0,
            message: format!("model dump is missing `{name}`"),
        })
    };
    let number = |name: &str| -> Result<f64> {
        take(name)?.parse().map_err(|_| Error::MalformedRow {
            line: 0,
            message: format!("malformed number for `{name}`"),
        })
    };
    let flag = |name: &str| -> Result<bool> {
        match take(name)?.as_str() {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(Error::MalformedRow {
                line: 0,
                message: format!("malformed flag for `{name}`: `{other}`"),
            }),
        }
    };
    let order = ArimaOrder::new(
        number("p")? as usize,
        number("d")? as usize,
        number("q")? as usize,
    )?;
    let series_of = |prefix: &str, count: usize| -> Result<Vec<f64>> {
        (1..=count)
            .map(|i| number(&format!("{prefix}_{i}")))
            .collect()
    };
    Ok(ArimaModel {
        order,
        ar: series_of("phi", order.p)?,
        ma: series_of("theta", order.q)?,
        intercept: number("intercept")?,
        residual_variance: number("residual_variance")?,
        css: number("css")?,
        css_trace: Vec::new(),
        converged: flag("converged")?,
        stationary: flag("stationary")?,
        invertible: flag("invertible")?,
        recent_diff: series_of("recent_diff", order.p)?,
        recent_residuals: series_of("recent_residual", order.q)?,
        level_tails: series_of("level_tail", order.d)?,
    })
}

/// The plain-backprop benchmark: one feedforward network on raw normalized
/// features, no wavelet stage.
#[derive(Debug, Clone)]
pub struct BpnnBaseline {
    pub spec: NetworkSpec,
    pub weights: Vec<f64>,
    pub norm: NormalizationParams,
}

/// Train the BPNN baseline on the split's training span. Rows, scaling,
/// and the span requirement match ensemble training; only the wavelet
/// stage is absent.
pub fn train_bpnn_baseline(
    series: &TaggedSeries,
    split: &SplitSpec,
    spec: &NetworkSpec,
    config: &BackpropConfig,
) -> Result<(BpnnBaseline, TrainingTrace)> {
    let train = train_span_slice(series, split)?;
    let rows = features::build_all(&train)?;
    let vectors: Vec<FeatureVector> = rows.iter().map(|(_, v)| v.clone()).collect();
    let norm = features::fit_normalization(&vectors)?;
    let data = Dataset::build(&rows, &norm);
    let (weights, trace) = train_backprop(spec, &data, config)?;
    Ok((
        BpnnBaseline {
            spec: *spec,
            weights,
            norm,
        },
        trace,
    ))
}

/// Day-ahead BPNN forecast with the same recursive-lag protocol as the
/// ensemble, applied to the raw load instead of wavelet components.
pub fn forecast_bpnn(
    baseline: &BpnnBaseline,
    series: &TaggedSeries,
    day: NaiveDate,
) -> Result<Vec<f64>> {
    let idx0 = series
        .index_of(day.and_hms_opt(0, 0, 0).unwrap())
        .ok_or_else(|| Error::RangeOutOfData {
            message: format!("day {day} is not covered by the series"),
        })?;
    if idx0 < features::MIN_HISTORY {
        return Err(Error::InsufficientHistory {
            needed: features::MIN_HISTORY,
            got: idx0,
        });
    }
    if idx0 + 24 > series.len() {
        return Err(Error::RangeOutOfData {
            message: format!("day {day} is truncated in the series"),
        });
    }
    let loads: Vec<f64> = series.records()[..idx0]
        .iter()
        .map(|r| r.record.load_mw)
        .collect();
    let subnet = SubNetwork {
        spec: baseline.spec,
        weights: baseline.weights.clone(),
    };
    component_forecast(&subnet, &baseline.norm, series, &loads, idx0, false)
}
