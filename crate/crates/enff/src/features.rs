//! Input analysis (ACF, Pearson correlation) and construction of the
//! nine-value model rows: eight predictors plus the target load.
//!
//! The predictor set is fixed — three load lags (previous hour, previous
//! day, previous week), day of week, day type, hour of day, dew point, and
//! dry bulb. Analysis functions exist to report on a dataset, not to select
//! inputs. Min-max scaling is fit on training rows only; rows outside the
//! training span may legitimately fall outside [0, 1] and are not clamped.

use std::io::{BufRead, BufReader, Read, Write};

use chrono::NaiveDateTime;

use crate::dataio::{DayType, TaggedSeries};
use crate::error::{Error, Result};

/// Number of predictor inputs per row.
pub const INPUT_DIM: usize = 8;

/// One hour of history is never enough: lags reach back a full week.
pub const MIN_HISTORY: usize = 168;

/// Predictor names in layout order, with the target last.
pub const FEATURE_NAMES: [&str; INPUT_DIM + 1] = [
    "lag_prev_hour",
    "lag_prev_day",
    "lag_prev_week",
    "day_of_week",
    "day_type",
    "hour_of_day",
    "dew_point",
    "dry_bulb",
    "target",
];

/// Raw (unnormalized) model row. Calendar fields are stored as numbers:
/// day_of_week 1–7, day_type 0 (working) / 1 (off), hour_of_day 0–23.
///
/// When rows are built from a wavelet component instead of the raw load,
/// the lag fields and target carry component values, which may be negative.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub lag_prev_hour: f64,
    pub lag_prev_day: f64,
    pub lag_prev_week: f64,
    pub day_of_week: f64,
    pub day_type: f64,
    pub hour_of_day: f64,
    pub dew_point: f64,
    pub dry_bulb: f64,
    pub target: f64,
}

impl FeatureVector {
    pub fn inputs(&self) -> [f64; INPUT_DIM] {
        [
            self.lag_prev_hour,
            self.lag_prev_day,
            self.lag_prev_week,
            self.day_of_week,
            self.day_type,
            self.hour_of_day,
            self.dew_point,
            self.dry_bulb,
        ]
    }
}

/// Per-feature (min, max) scaling bounds, target included as the last slot.
///
/// Calendar fields use fixed civil ranges — day_of_week (0, 7), day_type
/// (0, 1), hour_of_day (0, 23) — so their encodings do not drift with the
/// training span. A degenerate feature (max = min) maps to 0.5.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizationParams {
    bounds: [(f64, f64); INPUT_DIM + 1],
}

fn scale(value: f64, (min, max): (f64, f64)) -> f64 {
    if max > min {
        (value - min) / (max - min)
    } else {
        0.5
    }
}

fn unscale(value: f64, (min, max): (f64, f64)) -> f64 {
    if max > min {
        min + value * (max - min)
    } else {
        min
    }
}

impl NormalizationParams {
    pub fn apply_inputs(&self, row: &FeatureVector) -> [f64; INPUT_DIM] {
        let raw = row.inputs();
        std::array::from_fn(|i| scale(raw[i], self.bounds[i]))
    }

    pub fn apply_target(&self, target: f64) -> f64 {
        scale(target, self.bounds[INPUT_DIM])
    }

    pub fn invert_inputs(&self, row: &[f64; INPUT_DIM]) -> [f64; INPUT_DIM] {
        std::array::from_fn(|i| unscale(row[i], self.bounds[i]))
    }

    pub fn invert_target(&self, value: f64) -> f64 {
        unscale(value, self.bounds[INPUT_DIM])
    }

    pub fn bounds(&self) -> &[(f64, f64); INPUT_DIM + 1] {
        &self.bounds
    }
}

/// Normalized rows ready for training, with the scaling that produced them
/// and the timestamp of each row's target hour.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub inputs: Vec<[f64; INPUT_DIM]>,
    pub targets: Vec<f64>,
    pub params: NormalizationParams,
    pub timestamps: Vec<NaiveDateTime>,
}

impl Dataset {
    /// Normalize `rows` with `params`. Row count always equals target count
    /// by construction.
    pub fn build(
        rows: &[(NaiveDateTime, FeatureVector)],
        params: &NormalizationParams,
    ) -> Self {
        let mut inputs = Vec::with_capacity(rows.len());
        let mut targets = Vec::with_capacity(rows.len());
        let mut timestamps = Vec::with_capacity(rows.len());
        for (ts, row) in rows {
            inputs.push(params.apply_inputs(row));
            targets.push(params.apply_target(row.target));
            timestamps.push(*ts);
        }
        Self {
            inputs,
            targets,
            params: params.clone(),
            timestamps,
        }
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Biased sample autocorrelation for lags 0..=max_lag. The denominator sums
/// over all N samples, so ACF(0) is exactly 1 and |ACF(k)| ≤ 1.
pub fn autocorrelation(values: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if values.len() <= max_lag {
        return Err(Error::SeriesTooShort {
            needed: max_lag + 1,
            got: values.len(),
        });
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let denom: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    if denom == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    let mut acf = Vec::with_capacity(max_lag + 1);
    for k in 0..=max_lag {
        let num: f64 = (k..n)
            .map(|t| (values[t] - mean) * (values[t - k] - mean))
            .sum();
        acf.push(num / denom);
    }
    Ok(acf)
}

/// Pearson correlation coefficient.
pub fn correlation(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::SeriesTooShort {
            needed: 2,
            got: x.len(),
        });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Row at `index` with caller-supplied lag values. The forecast path uses
/// this to substitute model outputs for observations in the lag slots while
/// keeping the calendar encoding identical to training. `target` is left 0.
pub(crate) fn vector_with_lags(
    series: &TaggedSeries,
    index: usize,
    lag_prev_hour: f64,
    lag_prev_day: f64,
    lag_prev_week: f64,
) -> FeatureVector {
    let here = &series.records()[index];
    FeatureVector {
        lag_prev_hour,
        lag_prev_day,
        lag_prev_week,
        day_of_week: here.tag.day_of_week as f64,
        day_type: match here.tag.day_type {
            DayType::Working => 0.0,
            DayType::Off => 1.0,
        },
        hour_of_day: here.tag.hour_of_day as f64,
        dew_point: here.record.dew_point_f,
        dry_bulb: here.record.dry_bulb_f,
        target: 0.0,
    }
}

fn vector_at(
    series: &TaggedSeries,
    value_at: &dyn Fn(usize) -> f64,
    index: usize,
) -> Result<FeatureVector> {
    if index < MIN_HISTORY {
        return Err(Error::InsufficientHistory {
            needed: MIN_HISTORY,
            got: index,
        });
    }
    if index >= series.len() {
        return Err(Error::InsufficientHistory {
            needed: index + 1,
            got: series.len(),
        });
    }
    let mut row = vector_with_lags(
        series,
        index,
        value_at(index - 1),
        value_at(index - 24),
        value_at(index - 168),
    );
    row.target = value_at(index);
    Ok(row)
}

/// Build the model row targeting hour `index`, with lags and target read
/// from the raw load.
pub fn build_features(series: &TaggedSeries, index: usize) -> Result<FeatureVector> {
    vector_at(series, &|i| series.records()[i].record.load_mw, index)
}

/// Same as [`build_features`], but lag/target values come from `values`
/// (one per series hour) — used to target a wavelet component while keeping
/// the calendar and weather context of the raw series.
pub fn build_features_from(
    series: &TaggedSeries,
    values: &[f64],
    index: usize,
) -> Result<FeatureVector> {
    if values.len() != series.len() {
        return Err(Error::LengthMismatch {
            expected: series.len(),
            got: values.len(),
        });
    }
    vector_at(series, &|i| values[i], index)
}

/// All buildable rows of a series: one per hour from index 168 onward.
pub fn build_all(series: &TaggedSeries) -> Result<Vec<(NaiveDateTime, FeatureVector)>> {
    (MIN_HISTORY..series.len())
        .map(|i| Ok((series.records()[i].record.timestamp, build_features(series, i)?)))
        .collect()
}

/// [`build_all`] over substitute target values (see [`build_features_from`]).
pub fn build_all_from(
    series: &TaggedSeries,
    values: &[f64],
) -> Result<Vec<(NaiveDateTime, FeatureVector)>> {
    if values.len() != series.len() {
        return Err(Error::LengthMismatch {
            expected: series.len(),
            got: values.len(),
        });
    }
    (MIN_HISTORY..series.len())
        .map(|i| {
            Ok((
                series.records()[i].record.timestamp,
                vector_at(series, &|j| values[j], i)?,
            ))
        })
        .collect()
}

/// Fit min-max bounds on training rows. Calendar fields keep their fixed
/// civil ranges; everything else takes the observed training min/max.
pub fn fit_normalization(rows: &[FeatureVector]) -> Result<NormalizationParams> {
    if rows.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let mut bounds = [(f64::INFINITY, f64::NEG_INFINITY); INPUT_DIM + 1];
    for row in rows {
        let raw = row.inputs();
        for i in 0..INPUT_DIM {
            bounds[i].0 = bounds[i].0.min(raw[i]);
            bounds[i].1 = bounds[i].1.max(raw[i]);
        }
        bounds[INPUT_DIM].0 = bounds[INPUT_DIM].0.min(row.target);
        bounds[INPUT_DIM].1 = bounds[INPUT_DIM].1.max(row.target);
    }
    // Fixed ranges for the calendar encodings (indices 3, 4, 5).
    bounds[3] = (0.0, 7.0);
    bounds[4] = (0.0, 1.0);
    bounds[5] = (0.0, 23.0);
    Ok(NormalizationParams { bounds })
}

/// Serialize scaling bounds as `feature,min,max` CSV.
pub fn write_normalization<W: Write>(params: &NormalizationParams, out: &mut W) -> Result<()> {
    writeln!(out, "feature,min,max")?;
    for (name, (min, max)) in FEATURE_NAMES.iter().zip(params.bounds.iter()) {
        writeln!(out, "{name},{min},{max}")?;
    }
    Ok(())
}

pub fn parse_normalization<R: Read>(source: R) -> Result<NormalizationParams> {
    let reader = BufReader::new(source);
    let mut lines = reader.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != "feature,min,max" {
        return Err(Error::MalformedRow {
            line: 1,
            message: "expected header `feature,min,max`".to_string(),
        });
    }
    let mut bounds = [(0.0, 0.0); INPUT_DIM + 1];
    let mut seen = [false; INPUT_DIM + 1];
    for (offset, line) in lines.enumerate() {
        let line_no = offset + 2;
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let fields: Vec<&str> = text.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::MalformedRow {
                line: line_no,
                message: format!("expected 3 fields, got {}", fields.len()),
            });
        }
        let slot = FEATURE_NAMES
            .iter()
            .position(|n| *n == fields[0])
            .ok_or_else(|| Error::MalformedRow {
                line: line_no,
                message: format!("unknown feature `{}`", fields[0]),
            })?;
        let min: f64 = fields[1].parse().map_err(|_| Error::MalformedRow {
            line: line_no,
            message: format!("bad min `{}`", fields[1]),
        })?;
        let max: f64 = fields[2].parse().map_err(|_| Error::MalformedRow {
            line: line_no,
            message: format!("bad max `{}`", fields[2]),
        })?;
        bounds[slot] = (min, max);
        seen[slot] = true;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::InvalidConfig {
            message: format!("normalization file is missing `{}`", FEATURE_NAMES[missing]),
        });
    }
    Ok(NormalizationParams { bounds })
}
