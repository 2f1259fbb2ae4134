//! Ensemble training and day-ahead forecasting.
//!
//! A *member* is one predictor architecture (feedforward, recurrent, or
//! radial-basis) trained four times — once per multiresolution component of
//! the training load. A member's forecast for an hour is the sum of its four
//! denormalized component forecasts; the ensemble output is the α-trimmed
//! mean of the member forecasts at that hour, with α picked on validation
//! days when not fixed up front.
//!
//! Forecasting is recursive by default: only history up to the day boundary
//! is decomposed, and each member feeds its own previous-hour component
//! forecast back into the lag slot. Teacher-forced mode (diagnostics only)
//! instead decomposes through the end of the target day and always reads
//! observed component values.

use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};

use crate::dataio::{DayType, SplitSpec, TaggedSeries};
use crate::error::{Error, Result};
use crate::eval::mape;
use crate::features::{self, Dataset, FeatureVector, NormalizationParams, INPUT_DIM, MIN_HISTORY};
use crate::nnet::{self, ElmanState, NetworkKind, NetworkSpec};
use crate::parallel::map_ordered;
use crate::trainer::{derive_seed, train_gpso, SwarmConfig, TrainingTrace};
use crate::wavelet::{decompose3, WaveletFamily, WaveletFilterPair, COMPONENTS};

const HOURS_PER_DAY: usize = 24;

/// Hours of Elman context warm-up run before the first forecast hour.
pub const WARMUP_HOURS: usize = 168;

/// History a forecast day needs: a week of warm-up on top of the week-deep
/// lag window those warm-up rows reach back into.
pub const MIN_FORECAST_HISTORY: usize = WARMUP_HOURS + MIN_HISTORY;

/// Candidate trim fractions (percent) scanned during validation.
pub const DEFAULT_ALPHA_GRID: [u32; 6] = [0, 10, 20, 30, 40, 50];

/// The standard member line-up: one feedforward, one Elman, and one
/// radial-basis predictor per instance, in that order.
pub fn default_members(instances_per_kind: usize) -> Vec<NetworkSpec> {
    assert!(instances_per_kind >= 1, "need at least one instance per kind");
    let base = [
        NetworkSpec::new(NetworkKind::Fnn, INPUT_DIM, 12).unwrap(),
        NetworkSpec::new(NetworkKind::Elman, INPUT_DIM, 10).unwrap(),
        NetworkSpec::new(NetworkKind::Rbf, INPUT_DIM, 15).unwrap(),
    ];
    let mut specs = Vec::with_capacity(3 * instances_per_kind);
    for _ in 0..instances_per_kind {
        specs.extend_from_slice(&base);
    }
    specs
}

/// Everything [`train_ensemble`] needs besides the data.
#[derive(Debug, Clone)]
pub struct EnsembleConfig {
    pub member_specs: Vec<NetworkSpec>,
    pub family: WaveletFamily,
    /// Swarm hyperparameters; the seed field is overridden per sub-network
    /// from `seed`.
    pub swarm: SwarmConfig,
    pub alpha_grid: Vec<u32>,
    /// Skip validation-based selection and use this trim fraction directly.
    pub fixed_alpha: Option<u32>,
    /// Feed observed component values into the previous-hour lag during
    /// forecasting instead of the member's own output (diagnostic mode).
    pub teacher_forced: bool,
    /// Master seed; sub-network i of member m trains with the derived
    /// seed for stream m·4 + i, so members stay independent and runs stay
    /// reproducible.
    pub seed: u64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            member_specs: default_members(1),
            family: WaveletFamily::Daubechies4,
            swarm: SwarmConfig::default(),
            alpha_grid: DEFAULT_ALPHA_GRID.to_vec(),
            fixed_alpha: None,
            teacher_forced: false,
            seed: 42,
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.member_specs.is_empty() {
            return Err(Error::InvalidConfig {
                message: "ensemble needs at least one member".to_string(),
            });
        }
        for spec in &self.member_specs {
            if spec.input_dim != INPUT_DIM {
                return Err(Error::DimensionMismatch {
                    expected: INPUT_DIM,
                    got: spec.input_dim,
                    what: "member input width",
                });
            }
        }
        for &alpha in self.alpha_grid.iter().chain(&self.fixed_alpha) {
            if alpha >= 100 {
                return Err(Error::InvalidConfig {
                    message: format!("trim fraction {alpha} must be below 100 percent"),
                });
            }
        }
        if self.fixed_alpha.is_none() && self.alpha_grid.is_empty() {
            return Err(Error::InvalidConfig {
                message: "empty trim-fraction grid with no fixed override".to_string(),
            });
        }
        self.swarm.validate()
    }
}

/// One trained sub-network: architecture plus its flat weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SubNetwork {
    pub spec: NetworkSpec,
    pub weights: Vec<f64>,
}

/// One ensemble member: a sub-network per wavelet component, in
/// [`COMPONENTS`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedMember {
    pub subnets: Vec<SubNetwork>,
}

/// A trained ensemble, self-contained for forecasting and persistence.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedEnsemble {
    pub family: WaveletFamily,
    pub members: Vec<TrainedMember>,
    /// Per-component normalization in [`COMPONENTS`] order, shared by all
    /// members (they train on the same component datasets).
    pub norms: Vec<NormalizationParams>,
    /// Selected trim fraction, percent.
    pub alpha: u32,
    pub teacher_forced: bool,
}

/// One day-ahead ensemble forecast with its member breakdown.
#[derive(Debug, Clone)]
pub struct EnsembleForecast {
    /// `member_values[hour][member]`, MW.
    pub member_values: Vec<Vec<f64>>,
    /// Trimmed-mean output per hour, MW.
    pub combined: Vec<f64>,
    pub alpha: u32,
    /// Members discarded per hour (half from each tail).
    pub trim_count: usize,
}

/// Members dropped before averaging: 2·⌊α·N/200⌋, i.e. ⌊α·N/200⌋ from each
/// tail. Always less than N for α < 100.
pub fn compute_trim_count(alpha: u32, member_count: usize) -> usize {
    assert!(alpha < 100, "trim fraction is a percentage below 100");
    2 * (alpha as usize * member_count / 200)
}

/// α-trimmed mean: sort ascending, drop half the trim count from each end,
/// average the rest. α = 0 is exactly the plain mean (no reordering, so the
/// summation order matches a direct mean bit for bit).
pub fn trimmed_mean(values: &[f64], alpha: u32) -> f64 {
    assert!(!values.is_empty(), "trimmed mean of no values");
    let trim = compute_trim_count(alpha, values.len());
    if trim == 0 {
        return values.iter().sum::<f64>() / values.len() as f64;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let kept = &sorted[trim / 2..sorted.len() - trim / 2];
    kept.iter().sum::<f64>() / kept.len() as f64
}

/// Pick the trim fraction whose trimmed output scores the lowest MAPE over
/// the validation rows; ties go to the smaller α. Each row pairs an observed
/// load with the member forecasts for that hour.
pub fn select_alpha(rows: &[(f64, Vec<f64>)], grid: &[u32]) -> Result<u32> {
    if rows.is_empty() {
        return Err(Error::EmptyValidation);
    }
    if grid.is_empty() {
        return Err(Error::InvalidConfig {
            message: "empty trim-fraction grid".to_string(),
        });
    }
    let actual: Vec<f64> = rows.iter().map(|(a, _)| *a).collect();
    let mut best: Option<(u32, f64)> = None;
    for &alpha in grid {
        let predicted: Vec<f64> = rows
            .iter()
            .map(|(_, members)| trimmed_mean(members, alpha))
            .collect();
        let score = mape(&actual, &predicted)?;
        best = match best {
            None => Some((alpha, score)),
            Some((ba, bs)) if score < bs || (score == bs && alpha < ba) => Some((alpha, score)),
            keep => keep,
        };
    }
    Ok(best.unwrap().0)
}

fn day_start(day: NaiveDate) -> NaiveDateTime {
    day.and_hms_opt(0, 0, 0).unwrap()
}

fn locate_day(series: &TaggedSeries, day: NaiveDate) -> Result<usize> {
    series
        .index_of(day_start(day))
        .ok_or_else(|| Error::RangeOutOfData {
            message: format!("day {day} is not covered by the series"),
        })
}

/// Validation days for α selection: off days (weekends and holidays) when
/// the span has any — the ensemble targets anomalous days, so the trim
/// fraction should be scored on the closest thing available — otherwise
/// every day in the span.
fn validation_days(series: &TaggedSeries, from: NaiveDate, to: NaiveDate) -> Result<Vec<NaiveDate>> {
    let mut all = Vec::new();
    let mut off = Vec::new();
    let mut day = from;
    while day <= to {
        let idx = locate_day(series, day)?;
        if idx + HOURS_PER_DAY > series.len() {
            return Err(Error::RangeOutOfData {
                message: format!("validation day {day} is truncated in the series"),
            });
        }
        all.push(day);
        if series.records()[idx].tag.day_type == DayType::Off {
            off.push(day);
        }
        day = day.succ_opt().unwrap();
    }
    if all.is_empty() {
        return Err(Error::EmptyValidation);
    }
    Ok(if off.is_empty() { all } else { off })
}

/// Train every sub-network and select the trim fraction.
///
/// The training span is decomposed once; each component's values become the
/// lag/target source for that component's dataset, normalized with bounds
/// fit on the same rows. Sub-network jobs run through [`map_ordered`], so
/// parallel and sequential builds produce identical results. Returns the
/// ensemble alongside one named convergence trace per sub-network.
/// Resolve the training span of `split` to a contiguous sub-series, checking
/// it is fully covered and long enough (two weeks) for lagged rows.
pub(crate) fn train_span_slice(series: &TaggedSeries, split: &SplitSpec) -> Result<TaggedSeries> {
    let (from, to) = split.train;
    let i0 = locate_day(series, from)?;
    let i1 = locate_day(series, to)? + HOURS_PER_DAY - 1;
    if i1 >= series.len() {
        return Err(Error::RangeOutOfData {
            message: format!("training day {to} is truncated in the series"),
        });
    }
    let train_len = i1 - i0 + 1;
    if train_len < 2 * MIN_HISTORY {
        return Err(Error::InsufficientData {
            message: format!(
                "training span covers {train_len} hours; need at least {}",
                2 * MIN_HISTORY
            ),
        });
    }
    Ok(series.slice(i0, i1 + 1))
}

pub fn train_ensemble(
    config: &EnsembleConfig,
    series: &TaggedSeries,
    split: &SplitSpec,
) -> Result<(TrainedEnsemble, Vec<(String, TrainingTrace)>)> {
    config.validate()?;
    let train = train_span_slice(series, split)?;
    let filters = WaveletFilterPair::new(config.family);
    let decomp = decompose3(&train.loads(), &filters)?;

    let mut norms = Vec::with_capacity(COMPONENTS.len());
    let mut datasets = Vec::with_capacity(COMPONENTS.len());
    for &component in &COMPONENTS {
        let rows = features::build_all_from(&train, decomp.component(component))?;
        let vectors: Vec<FeatureVector> = rows.iter().map(|(_, v)| v.clone()).collect();
        let norm = features::fit_normalization(&vectors)?;
        datasets.push(Dataset::build(&rows, &norm));
        norms.push(norm);
    }

    let jobs: Vec<(usize, usize)> = (0..config.member_specs.len())
        .flat_map(|m| (0..COMPONENTS.len()).map(move |c| (m, c)))
        .collect();
    let outcomes: Vec<Result<(Vec<f64>, TrainingTrace)>> = map_ordered(&jobs, |&(m, c)| {
        let mut swarm = config.swarm.clone();
        swarm.seed = derive_seed(config.seed, (m * COMPONENTS.len() + c) as u64);
        train_gpso(&config.member_specs[m], &datasets[c], &swarm)
    });

    let mut members: Vec<TrainedMember> = config
        .member_specs
        .iter()
        .map(|_| TrainedMember { subnets: Vec::with_capacity(COMPONENTS.len()) })
        .collect();
    let mut traces = Vec::with_capacity(jobs.len());
    for (&(m, c), outcome) in jobs.iter().zip(outcomes) {
        let (weights, trace) = outcome?;
        members[m].subnets.push(SubNetwork {
            spec: config.member_specs[m],
            weights,
        });
        traces.push((
            format!(
                "member{}_{}_{}",
                m + 1,
                config.member_specs[m].kind.name(),
                COMPONENTS[c].name()
            ),
            trace,
        ));
    }

    let mut ensemble = TrainedEnsemble {
        family: config.family,
        members,
        norms,
        alpha: 0,
        teacher_forced: config.teacher_forced,
    };
    ensemble.alpha = match config.fixed_alpha {
        Some(alpha) => alpha,
        None => {
            let (v0, v1) = split.validation.ok_or(Error::EmptyValidation)?;
            let days = validation_days(series, v0, v1)?;
            let mut rows = Vec::with_capacity(days.len() * HOURS_PER_DAY);
            for day in days {
                let matrix = forecast_members(&ensemble, series, day)?;
                let d0 = locate_day(series, day)?;
                for (h, member_row) in matrix.into_iter().enumerate() {
                    rows.push((series.records()[d0 + h].record.load_mw, member_row));
                }
            }
            select_alpha(&rows, &config.alpha_grid)?
        }
    };
    Ok((ensemble, traces))
}

/// Forecast one component of one member across the 24 target hours.
///
/// `values` holds the component's history (through the day boundary in
/// recursive mode, through the end of the day when teacher-forced). Elman
/// members first roll their context forward over the preceding week. The
/// BPNN baseline reuses this with the raw load as the value stream.
pub(crate) fn component_forecast(
    subnet: &SubNetwork,
    norm: &NormalizationParams,
    series: &TaggedSeries,
    values: &[f64],
    idx0: usize,
    teacher_forced: bool,
) -> Result<Vec<f64>> {
    let spec = &subnet.spec;
    let weights = &subnet.weights;
    let mut state = ElmanState::zeros(spec);
    if spec.kind == NetworkKind::Elman {
        for si in idx0 - WARMUP_HOURS..idx0 {
            let row = features::vector_with_lags(
                series,
                si,
                values[si - 1],
                values[si - 24],
                values[si - 168],
            );
            let (_, next) = nnet::elman_forward(spec, weights, &norm.apply_inputs(&row), &state)?;
            state = next;
        }
    }
    let mut out: Vec<f64> = Vec::with_capacity(HOURS_PER_DAY);
    for h in 0..HOURS_PER_DAY {
        let si = idx0 + h;
        let lag_prev_hour = if h == 0 || teacher_forced {
            values[si - 1]
        } else {
            out[h - 1]
        };
        let row =
            features::vector_with_lags(series, si, lag_prev_hour, values[si - 24], values[si - 168]);
        let x = norm.apply_inputs(&row);
        let y = match spec.kind {
            NetworkKind::Fnn => nnet::fnn_forward(spec, weights, &x)?,
            NetworkKind::Rbf => nnet::rbf_forward(spec, weights, &x)?,
            NetworkKind::Elman => {
                let (y, next) = nnet::elman_forward(spec, weights, &x, &state)?;
                state = next;
                y
            }
        };
        out.push(norm.invert_target(y));
    }
    Ok(out)
}

fn member_forecast(
    member: &TrainedMember,
    ensemble: &TrainedEnsemble,
    series: &TaggedSeries,
    components: &[&[f64]],
    idx0: usize,
) -> Result<Vec<f64>> {
    let mut total = vec![0.0; HOURS_PER_DAY];
    for (c, values) in components.iter().enumerate() {
        let part = component_forecast(
            &member.subnets[c],
            &ensemble.norms[c],
            series,
            values,
            idx0,
            ensemble.teacher_forced,
        )?;
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    Ok(total)
}

/// Day-ahead member forecasts: `result[hour][member]` in MW.
///
/// History before the day (and nothing later, unless teacher-forced) is
/// decomposed fresh, each member forecasts every component recursively,
/// and component forecasts sum to the member's hourly output.
pub fn forecast_members(
    ensemble: &TrainedEnsemble,
    series: &TaggedSeries,
    day: NaiveDate,
) -> Result<Vec<Vec<f64>>> {
    let idx0 = locate_day(series, day)?;
    if idx0 < MIN_FORECAST_HISTORY {
        return Err(Error::InsufficientHistory {
            needed: MIN_FORECAST_HISTORY,
            got: idx0,
        });
    }
    if idx0 + HOURS_PER_DAY > series.len() {
        return Err(Error::RangeOutOfData {
            message: format!("day {day} is truncated in the series"),
        });
    }
    let history_end = if ensemble.teacher_forced {
        idx0 + HOURS_PER_DAY
    } else {
        idx0
    };
    let loads: Vec<f64> = series.records()[..history_end]
        .iter()
        .map(|r| r.record.load_mw)
        .collect();
    let filters = WaveletFilterPair::new(ensemble.family);
    let decomp = decompose3(&loads, &filters)?;
    let components: Vec<&[f64]> = COMPONENTS.iter().map(|&c| decomp.component(c)).collect();

    let outputs: Vec<Result<Vec<f64>>> = map_ordered(&ensemble.members, |member| {
        member_forecast(member, ensemble, series, &components, idx0)
    });
    let mut matrix = vec![vec![0.0; ensemble.members.len()]; HOURS_PER_DAY];
    for (j, output) in outputs.into_iter().enumerate() {
        for (h, value) in output?.into_iter().enumerate() {
            matrix[h][j] = value;
        }
    }
    Ok(matrix)
}

/// Full ensemble forecast for one day: member matrix plus trimmed output.
pub fn ensemble_forecast(
    ensemble: &TrainedEnsemble,
    series: &TaggedSeries,
    day: NaiveDate,
) -> Result<EnsembleForecast> {
    let member_values = forecast_members(ensemble, series, day)?;
    let combined = member_values
        .iter()
        .map(|row| trimmed_mean(row, ensemble.alpha))
        .collect();
    Ok(EnsembleForecast {
        trim_count: compute_trim_count(ensemble.alpha, ensemble.members.len()),
        member_values,
        combined,
        alpha: ensemble.alpha,
    })
}

const MANIFEST_FORMAT: &str = "enff-ensemble-v1";

/// Write the ensemble to `dir`: a manifest, one model file per
/// (member, component), and one normalization file per component.
pub fn save_ensemble(ensemble: &TrainedEnsemble, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir.join("models"))?;
    fs::create_dir_all(dir.join("normalization"))?;
    let mut manifest = String::new();
    manifest.push_str(&format!("format = {MANIFEST_FORMAT}\n"));
    manifest.push_str(&format!("family = {}\n", ensemble.family.name()));
    manifest.push_str(&format!("alpha = {}\n", ensemble.alpha));
    manifest.push_str(&format!("teacher_forced = {}\n", ensemble.teacher_forced));
    manifest.push_str(&format!("members = {}\n", ensemble.members.len()));
    fs::write(dir.join("manifest.txt"), manifest)?;
    for (norm, component) in ensemble.norms.iter().zip(COMPONENTS) {
        let path = dir.join("normalization").join(format!("{}.csv", component.name()));
        let mut out = BufWriter::new(fs::File::create(path)?);
        features::write_normalization(norm, &mut out)?;
    }
    for (m, member) in ensemble.members.iter().enumerate() {
        for (subnet, component) in member.subnets.iter().zip(COMPONENTS) {
            let path = dir
                .join("models")
                .join(format!("member{}_{}.csv", m + 1, component.name()));
            let mut out = BufWriter::new(fs::File::create(path)?);
            nnet::write_model(&subnet.spec, &subnet.weights, &mut out)?;
        }
    }
    Ok(())
}

fn manifest_value<'a>(manifest: &'a str, key: &str) -> Result<&'a str> {
    for line in manifest.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some((k, v)) = line.split_once('=') {
            if k.trim() == key {
                return Ok(v.trim());
            }
        }
    }
    Err(Error::InvalidConfig {
        message: format!("ensemble manifest is missing `{key}`"),
    })
}

/// Load an ensemble saved by [`save_ensemble`]. Weights round-trip exactly.
/// Open a persisted artifact with the path carried in the error message.
fn open_artifact(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("`{}`: {e}", path.display()),
        ))
    })
}

pub fn load_ensemble(dir: &Path) -> Result<TrainedEnsemble> {
    let manifest = std::io::read_to_string(open_artifact(&dir.join("manifest.txt"))?)?;
    let format = manifest_value(&manifest, "format")?;
    if format != MANIFEST_FORMAT {
        return Err(Error::InvalidConfig {
            message: format!("unsupported ensemble format `{format}`"),
        });
    }
    let family = WaveletFamily::parse(manifest_value(&manifest, "family")?)?;
    let alpha: u32 = manifest_value(&manifest, "alpha")?
        .parse()
        .map_err(|_| Error::InvalidConfig {
            message: "ensemble manifest has a malformed alpha".to_string(),
        })?;
    if alpha >= 100 {
        return Err(Error::InvalidConfig {
            message: format!("trim fraction {alpha} must be below 100 percent"),
        });
    }
    let teacher_forced = match manifest_value(&manifest, "teacher_forced")? {
        "true" => true,
        "false" => false,
        other => {
            return Err(Error::InvalidConfig {
                message: format!("malformed teacher_forced flag `{other}`"),
            })
        }
    };
    let member_count: usize = manifest_value(&manifest, "members")?
        .parse()
        .map_err(|_| Error::InvalidConfig {
            message: "ensemble manifest has a malformed member count".to_string(),
        })?;
    let mut norms = Vec::with_capacity(COMPONENTS.len());
    for component in COMPONENTS {
        let path = dir.join("normalization").join(format!("{}.csv", component.name()));
        norms.push(features::parse_normalization(BufReader::new(
            open_artifact(&path)?,
        ))?);
    }
    let mut members = Vec::with_capacity(member_count);
    for m in 1..=member_count {
        let mut subnets = Vec::with_capacity(COMPONENTS.len());
        for component in COMPONENTS {
            let path = dir
                .join("models")
                .join(format!("member{m}_{}.csv", component.name()));
            let (spec, weights) = nnet::parse_model(BufReader::new(open_artifact(&path)?))?;
            subnets.push(SubNetwork { spec, weights });
        }
        members.push(TrainedMember { subnets });
    }
    Ok(TrainedEnsemble {
        family,
        members,
        norms,
        alpha,
        teacher_forced,
    })
}

/// Write a day-ahead forecast as `timestamp,forecast_mw[,member_1..N]` rows.
/// Baseline models pass `None` for the member breakdown; the shape is then
/// identical minus the member columns.
pub fn write_forecast_csv<W: std::io::Write>(
    day: NaiveDate,
    values: &[f64],
    member_values: Option<&[Vec<f64>]>,
    out: &mut W,
) -> Result<()> {
    write!(out, "timestamp,forecast_mw")?;
    if let Some(members) = member_values {
        for j in 1..=members.first().map_or(0, Vec::len) {
            write!(out, ",member_{j}")?;
        }
    }
    writeln!(out)?;
    for (h, value) in values.iter().enumerate() {
        let ts = day_start(day) + chrono::Duration::hours(h as i64);
        write!(out, "{},{value}", ts.format(crate::dataio::TIMESTAMP_FMT))?;
        if let Some(members) = member_values {
            for v in &members[h] {
                write!(out, ",{v}")?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::{synthesize, tag_calendar, SynthParams};
    use proptest::prelude::*;

    fn test_series(seed: u64) -> TaggedSeries {
        let params = SynthParams {
            years: 1,
            seed,
            ..SynthParams::default()
        };
        let (series, holidays) = synthesize(&params);
        tag_calendar(&series, &holidays)
    }

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    #[test]
    fn trim_count_hand_checks() {
        assert_eq!(compute_trim_count(0, 7), 0);
        assert_eq!(compute_trim_count(20, 10), 2);
        assert_eq!(compute_trim_count(40, 3), 0);
        assert_eq!(compute_trim_count(50, 4), 2);
        assert_eq!(compute_trim_count(40, 6), 2);
        assert_eq!(compute_trim_count(30, 6), 0);
        for alpha in 0..100 {
            for n in 1..40 {
                assert!(compute_trim_count(alpha, n) < n, "alpha={alpha} n={n}");
            }
        }
    }

    #[test]
    fn zero_alpha_is_exactly_the_plain_mean() {
        let values = [15_432.25, 15_011.5, 16_999.75, 14_500.125, 15_777.0];
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        // Bit-exact, not approximately equal: no reordering happens at α=0.
        assert_eq!(trimmed_mean(&values, 0), mean);
    }

    #[test]
    fn trimming_drops_the_extremes() {
        assert_eq!(trimmed_mean(&[10.0, 11.0, 12.0, 13.0, 130.0], 40), 12.0);
        assert_eq!(trimmed_mean(&[10.0, 12.0, 50.0, 11.0], 50), 11.5);
        assert_eq!(trimmed_mean(&[7.5; 9], 40), 7.5);
    }

    #[test]
    fn one_wild_member_cannot_move_a_trimmed_forecast() {
        // Four members agree within a few MW; the fifth is 10× off.
        let values = [100.0, 101.0, 102.0, 103.0, 1020.0];
        let trimmed = trimmed_mean(&values, 40); // drops 1 per tail
        assert_eq!(trimmed, 102.0);
        let plain = trimmed_mean(&values, 0);
        assert!((plain - 285.2).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn trimmed_mean_stays_in_the_member_hull(
            values in proptest::collection::vec(-1e4..1e4f64, 1..9),
            alpha in 0u32..100,
        ) {
            let t = trimmed_mean(&values, alpha);
            let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(t >= min - 1e-9 && t <= max + 1e-9, "{t} outside [{min}, {max}]");
        }

        #[test]
        fn trimmed_mean_ignores_member_order(
            mut values in proptest::collection::vec(-1e4..1e4f64, 2..9),
            alpha in 0u32..100,
        ) {
            let before = trimmed_mean(&values, alpha);
            values.reverse();
            values.swap(0, 1);
            let after = trimmed_mean(&values, alpha);
            prop_assert!((before - after).abs() <= 1e-9 * (1.0 + before.abs()));
        }

        #[test]
        fn trim_count_grows_with_alpha(n in 1usize..40, a in 0u32..99) {
            prop_assert!(compute_trim_count(a, n) <= compute_trim_count(a + 1, n));
        }
    }

    /// Validation rows where five members track the actual closely and a
    /// sixth is 50% high.
    fn corrupted_rows() -> Vec<(f64, Vec<f64>)> {
        let deltas = [0.01, -0.01, 0.005, -0.005, 0.002, 0.5];
        (0..48)
            .map(|i| {
                let actual = 10_000.0 + 10.0 * i as f64;
                (actual, deltas.iter().map(|d| actual * (1.0 + d)).collect())
            })
            .collect()
    }

    #[test]
    fn corrupted_member_pushes_alpha_positive() {
        let alpha = select_alpha(&corrupted_rows(), &DEFAULT_ALPHA_GRID).unwrap();
        // With 6 members only α ≥ 34 trims anything; 40 and 50 tie (both
        // drop one per tail) and the tie goes to the smaller.
        assert_eq!(alpha, 40);
    }

    #[test]
    fn alpha_ties_resolve_toward_the_smaller_value() {
        // One member: every α trims nothing, so every score ties.
        let rows: Vec<(f64, Vec<f64>)> =
            (0..24).map(|i| (100.0 + i as f64, vec![101.0 + i as f64])).collect();
        assert_eq!(select_alpha(&rows, &DEFAULT_ALPHA_GRID).unwrap(), 0);
        // Unsorted grid: the smaller α still wins the tie.
        assert_eq!(select_alpha(&rows, &[30, 0, 10]).unwrap(), 0);
    }

    #[test]
    fn alpha_selection_guards_its_inputs() {
        assert!(matches!(
            select_alpha(&[], &DEFAULT_ALPHA_GRID),
            Err(Error::EmptyValidation)
        ));
        let rows = vec![(100.0, vec![100.0])];
        assert!(matches!(
            select_alpha(&rows, &[]),
            Err(Error::InvalidConfig { .. })
        ));
    }

    #[test]
    fn default_member_lineup_repeats_per_instance() {
        let one = default_members(1);
        assert_eq!(one.len(), 3);
        assert_eq!(
            one.iter().map(|s| s.kind).collect::<Vec<_>>(),
            [NetworkKind::Fnn, NetworkKind::Elman, NetworkKind::Rbf]
        );
        assert!(one.iter().all(|s| s.input_dim == INPUT_DIM));
        let two = default_members(2);
        assert_eq!(two.len(), 6);
        assert_eq!(&two[..3], &two[3..]);
    }

    #[test]
    fn config_validation_rejects_bad_shapes() {
        let mut config = EnsembleConfig::default();
        assert!(config.validate().is_ok());
        config.member_specs.clear();
        assert!(matches!(config.validate(), Err(Error::InvalidConfig { .. })));
        let mut config = EnsembleConfig::default();
        config.member_specs[0] = NetworkSpec::new(NetworkKind::Fnn, 5, 4).unwrap();
        assert!(matches!(
            config.validate(),
            Err(Error::DimensionMismatch { .. })
        ));
        let mut config = EnsembleConfig::default();
        config.alpha_grid.push(100);
        assert!(matches!(config.validate(), Err(Error::InvalidConfig { .. })));
        let mut config = EnsembleConfig::default();
        config.alpha_grid.clear();
        assert!(matches!(config.validate(), Err(Error::InvalidConfig { .. })));
        config.fixed_alpha = Some(20);
        assert!(config.validate().is_ok());
    }

    /// A sub-network whose every weight is zero except the output bias —
    /// its output is `bias` regardless of input.
    fn constant_subnet(kind: NetworkKind, hidden: usize, bias: f64) -> SubNetwork {
        let spec = NetworkSpec::new(kind, INPUT_DIM, hidden).unwrap();
        let mut weights = vec![0.0; spec.param_count()];
        *weights.last_mut().unwrap() = bias;
        SubNetwork { spec, weights }
    }

    /// Normalization whose target bounds are (0, 1), so denormalization is
    /// the identity on network outputs.
    fn identity_norms() -> Vec<NormalizationParams> {
        let row = |v: f64| FeatureVector {
            lag_prev_hour: v,
            lag_prev_day: v,
            lag_prev_week: v,
            day_of_week: v,
            day_type: v,
            hour_of_day: v,
            dew_point: v,
            dry_bulb: v,
            target: v,
        };
        let norm = features::fit_normalization(&[row(0.0), row(1.0)]).unwrap();
        vec![norm.clone(), norm.clone(), norm.clone(), norm]
    }

    fn constant_ensemble(kind: NetworkKind, biases: [f64; 4]) -> TrainedEnsemble {
        TrainedEnsemble {
            family: WaveletFamily::Daubechies4,
            members: vec![TrainedMember {
                subnets: biases
                    .iter()
                    .map(|&b| constant_subnet(kind, 2, b))
                    .collect(),
            }],
            norms: identity_norms(),
            alpha: 0,
            teacher_forced: false,
        }
    }

    #[test]
    fn member_forecast_sums_its_component_forecasts() {
        let series = test_series(3);
        // Component biases 0.25 + 0.5 + 0.25 + 0.5 (exact in binary) must
        // appear summed in every hour of the member forecast.
        for kind in [NetworkKind::Fnn, NetworkKind::Elman, NetworkKind::Rbf] {
            let ensemble = constant_ensemble(kind, [0.25, 0.5, 0.25, 0.5]);
            let matrix = forecast_members(&ensemble, &series, date(2004, 3, 1)).unwrap();
            assert_eq!(matrix.len(), 24);
            for row in &matrix {
                assert_eq!(row.len(), 1);
                assert_eq!(row[0], 1.5, "kind {:?}", kind);
            }
        }
    }

    #[test]
    fn identical_members_forecast_identical_columns() {
        let series = test_series(4);
        let mut ensemble = constant_ensemble(NetworkKind::Fnn, [0.25, 0.5, 0.25, 0.5]);
        ensemble.members = vec![ensemble.members[0].clone(); 3];
        ensemble.alpha = 40;
        let forecast = ensemble_forecast(&ensemble, &series, date(2004, 3, 1)).unwrap();
        for row in &forecast.member_values {
            assert!(row.iter().all(|v| *v == row[0]));
        }
        assert!(forecast.combined.iter().all(|v| *v == 1.5));
        assert_eq!(forecast.trim_count, 0); // 2·⌊40·3/200⌋
    }

    #[test]
    fn forecasting_needs_two_weeks_of_history_and_a_whole_day() {
        let series = test_series(5);
        let ensemble = constant_ensemble(NetworkKind::Fnn, [0.0; 4]);
        // 2004-01-14 00:00 sits at index 312 < 336.
        assert!(matches!(
            forecast_members(&ensemble, &series, date(2004, 1, 14)),
            Err(Error::InsufficientHistory { needed: 336, got: 312 })
        ));
        assert!(matches!(
            forecast_members(&ensemble, &series, date(2005, 6, 1)),
            Err(Error::RangeOutOfData { .. })
        ));
        // The last covered day is fine; the series ends at its hour 23.
        assert!(forecast_members(&ensemble, &series, date(2004, 12, 31)).is_ok());
    }

    /// A feedforward net that responds only to the previous-hour lag:
    /// y = 2·σ(3·lag − 1.5) − 0.3.
    fn lag_sensitive_subnet() -> SubNetwork {
        let spec = NetworkSpec::new(NetworkKind::Fnn, INPUT_DIM, 1).unwrap();
        let mut weights = vec![0.0; spec.param_count()];
        weights[0] = 3.0; // hidden weight on lag_prev_hour
        weights[INPUT_DIM] = -1.5; // hidden bias
        weights[INPUT_DIM + 1] = 2.0; // output weight
        weights[INPUT_DIM + 2] = -0.3; // output bias
        SubNetwork { spec, weights }
    }

    #[test]
    fn recursive_and_teacher_forced_forecasts_diverge() {
        let series = test_series(6);
        // Fit realistic per-component bounds so the lag input lands on the
        // responsive part of the sigmoid.
        let filters = WaveletFilterPair::new(WaveletFamily::Daubechies4);
        let decomp = decompose3(&series.loads(), &filters).unwrap();
        let mut norms = Vec::new();
        for &component in &COMPONENTS {
            let rows = features::build_all_from(&series, decomp.component(component)).unwrap();
            let vectors: Vec<FeatureVector> = rows.into_iter().map(|(_, v)| v).collect();
            norms.push(features::fit_normalization(&vectors).unwrap());
        }
        let member = TrainedMember {
            subnets: (0..4).map(|_| lag_sensitive_subnet()).collect(),
        };
        let recursive = TrainedEnsemble {
            family: WaveletFamily::Daubechies4,
            members: vec![member],
            norms,
            alpha: 0,
            teacher_forced: false,
        };
        let mut teacher = recursive.clone();
        teacher.teacher_forced = true;
        let day = date(2004, 7, 15);
        let r = forecast_members(&recursive, &series, day).unwrap();
        let t = forecast_members(&teacher, &series, day).unwrap();
        let late_divergence = (1..24)
            .map(|h| (r[h][0] - t[h][0]).abs())
            .fold(0.0, f64::max);
        assert!(
            late_divergence > 1e-6,
            "feeding forecasts back must change later hours, max diff {late_divergence}"
        );
        assert!(r.iter().chain(&t).all(|row| row[0].is_finite()));
    }

    #[test]
    fn validation_days_prefer_weekends_and_holidays() {
        let series = test_series(7);
        // 2004-05-24 Mon .. 2004-05-30 Sun: two weekend days, plus the
        // synthetic Memorial Day holiday on the 25th.
        let days = validation_days(&series, date(2004, 5, 24), date(2004, 5, 30)).unwrap();
        assert_eq!(
            days,
            vec![date(2004, 5, 25), date(2004, 5, 29), date(2004, 5, 30)]
        );
        // A weekday-only span falls back to every day.
        let days = validation_days(&series, date(2004, 3, 1), date(2004, 3, 3)).unwrap();
        assert_eq!(days.len(), 3);
        // Days outside the series are an error, not silently dropped.
        assert!(matches!(
            validation_days(&series, date(2003, 12, 30), date(2004, 1, 2)),
            Err(Error::RangeOutOfData { .. })
        ));
    }

    fn fast_config(seed: u64) -> EnsembleConfig {
        EnsembleConfig {
            member_specs: vec![
                NetworkSpec::new(NetworkKind::Fnn, INPUT_DIM, 4).unwrap(),
                NetworkSpec::new(NetworkKind::Elman, INPUT_DIM, 3).unwrap(),
                NetworkSpec::new(NetworkKind::Rbf, INPUT_DIM, 4).unwrap(),
            ],
            swarm: SwarmConfig {
                swarm_size: 6,
                max_iterations: 6,
                ..SwarmConfig::default()
            },
            seed,
            ..EnsembleConfig::default()
        }
    }

    fn fast_split() -> SplitSpec {
        SplitSpec {
            train: (date(2004, 1, 8), date(2004, 1, 28)),
            validation: Some((date(2004, 1, 29), date(2004, 2, 4))),
            test_days: vec![date(2004, 2, 5)],
        }
    }

    #[test]
    fn training_builds_the_full_grid_reproducibly() {
        let series = test_series(8);
        let config = fast_config(11);
        let split = fast_split();
        let (ensemble, traces) = train_ensemble(&config, &series, &split).unwrap();

        // Structure: 3 members × 4 components, weights sized per spec.
        assert_eq!(ensemble.members.len(), 3);
        assert_eq!(ensemble.norms.len(), 4);
        assert_eq!(traces.len(), 12);
        for (member, spec) in ensemble.members.iter().zip(&config.member_specs) {
            assert_eq!(member.subnets.len(), 4);
            for subnet in &member.subnets {
                assert_eq!(subnet.spec, *spec);
                assert_eq!(subnet.weights.len(), spec.param_count());
            }
        }
        assert!(config.alpha_grid.contains(&ensemble.alpha));
        assert!(traces.iter().any(|(name, _)| name == "member2_elman_d2"));
        for (name, trace) in &traces {
            assert!(
                trace.final_mse() <= trace.gbest_mse[0],
                "{name} got worse while training"
            );
        }

        // Forecasts stay inside the member hull (3 members never trim, so
        // the combined value is their plain mean).
        let forecast = ensemble_forecast(&ensemble, &series, split.test_days[0]).unwrap();
        assert_eq!(forecast.trim_count, 0);
        for (row, combined) in forecast.member_values.iter().zip(&forecast.combined) {
            let min = row.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(*combined >= min - 1e-9 && *combined <= max + 1e-9);
        }

        // Same config, same data: bit-identical weights and forecast.
        let (again, _) = train_ensemble(&config, &series, &split).unwrap();
        assert_eq!(again.alpha, ensemble.alpha);
        for (a, b) in ensemble.members.iter().zip(&again.members) {
            assert_eq!(a, b);
        }
        let forecast_again = ensemble_forecast(&again, &series, split.test_days[0]).unwrap();
        assert_eq!(forecast.combined, forecast_again.combined);

        // A different master seed changes the trained weights.
        let (other, _) = train_ensemble(&fast_config(12), &series, &split).unwrap();
        assert_ne!(other.members[0].subnets[0].weights, ensemble.members[0].subnets[0].weights);

        // Save/load round trip is exact.
        let dir = std::env::temp_dir().join(format!("enff-ensemble-rt-{}", std::process::id()));
        save_ensemble(&ensemble, &dir).unwrap();
        let loaded = load_ensemble(&dir).unwrap();
        std::fs::remove_dir_all(&dir).unwrap();
        assert_eq!(loaded.family, ensemble.family);
        assert_eq!(loaded.alpha, ensemble.alpha);
        assert_eq!(loaded.teacher_forced, ensemble.teacher_forced);
        for (a, b) in ensemble.members.iter().zip(&loaded.members) {
            assert_eq!(a, b);
        }
        for (a, b) in ensemble.norms.iter().zip(&loaded.norms) {
            assert_eq!(a.bounds(), b.bounds());
        }
        let forecast_loaded = ensemble_forecast(&loaded, &series, split.test_days[0]).unwrap();
        assert_eq!(forecast.combined, forecast_loaded.combined);
    }

    #[test]
    fn training_without_validation_needs_a_fixed_alpha() {
        let series = test_series(9);
        let mut config = fast_config(13);
        // Shrink to a single tiny member; this test only exercises the α path.
        config.member_specs = vec![NetworkSpec::new(NetworkKind::Fnn, INPUT_DIM, 2).unwrap()];
        config.swarm.swarm_size = 3;
        config.swarm.max_iterations = 2;
        let mut split = fast_split();
        split.validation = None;
        assert!(matches!(
            train_ensemble(&config, &series, &split),
            Err(Error::EmptyValidation)
        ));
        config.fixed_alpha = Some(30);
        let (ensemble, traces) = train_ensemble(&config, &series, &split).unwrap();
        assert_eq!(ensemble.alpha, 30);
        assert_eq!(traces.len(), 4);
    }

    #[test]
    fn training_rejects_a_short_span() {
        let series = test_series(10);
        let config = fast_config(14);
        let mut split = fast_split();
        split.train = (date(2004, 1, 8), date(2004, 1, 17)); // 240 h < 336
        assert!(matches!(
            train_ensemble(&config, &series, &split),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn loading_from_an_empty_directory_fails_cleanly() {
        let dir = std::env::temp_dir().join(format!("enff-ensemble-missing-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let result = load_ensemble(&dir);
        std::fs::remove_dir_all(&dir).unwrap();
        assert!(matches!(result, Err(Error::Io(_))));
    }

    #[test]
    fn forecast_csv_lists_the_day_hourly() {
        let series = test_series(15);
        let mut ensemble = constant_ensemble(NetworkKind::Fnn, [0.25, 0.5, 0.25, 0.5]);
        ensemble.members = vec![ensemble.members[0].clone(); 2];
        let forecast = ensemble_forecast(&ensemble, &series, date(2004, 3, 1)).unwrap();
        let mut buf = Vec::new();
        write_forecast_csv(
            date(2004, 3, 1),
            &forecast.combined,
            Some(&forecast.member_values),
            &mut buf,
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 25);
        assert_eq!(lines[0], "timestamp,forecast_mw,member_1,member_2");
        assert!(lines[1].starts_with("2004-03-01T00:00:00,1.5,"));
        assert!(lines[24].starts_with("2004-03-01T23:00:00,"));
        let mut buf = Vec::new();
        write_forecast_csv(date(2004, 3, 1), &forecast.combined, None, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().lines().next().unwrap() == "timestamp,forecast_mw");
    }
}
