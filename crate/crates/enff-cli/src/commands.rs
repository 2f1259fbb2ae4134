//! The five batch workflows behind the subcommands. All of them resolve
//! their inputs from [`RunConfig`] plus the shared flags, write their
//! artifacts under the output directory, and leave stdout to a short
//! summary so reruns stay scriptable.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use enff::benchmarks::{
    default_order_grid, fit_arima, forecast_arima, forecast_bpnn, parse_arima_model,
    select_order, train_bpnn_baseline, write_arima_model, ArimaOrder, BpnnBaseline,
};
use enff::dataio::{parse_csv, parse_holidays, synthesize, tag_calendar, write_csv,
    write_holidays, TaggedSeries};
use enff::ensemble::{
    ensemble_forecast, load_ensemble, save_ensemble, train_ensemble, write_forecast_csv,
    EnsembleConfig, TrainedEnsemble,
};
use enff::eval::{
    comparison_report, evaluate_day, render_report_text, write_report_csv, write_scatter_csv,
    write_series_csv, DayForecastResult,
};
use enff::features::{autocorrelation, correlation, parse_normalization, write_normalization};
use enff::nnet::{parse_model, write_model};
use enff::trainer::{derive_seed, write_trace};
use enff::{Error, Result};

use crate::config::{ArimaSetting, DataSource, RunConfig};

/// Seed stream for the backprop benchmark, past any ensemble sub-network
/// stream (those are member·4 + component).
const BPNN_SEED_STREAM: u64 = 64;

/// Nelder–Mead evaluation budget per restart round for every ARIMA fit the
/// commands run.
const ARIMA_FIT_ITERATIONS: usize = 400;

fn invalid(message: impl Into<String>) -> Error {
    Error::InvalidConfig {
        message: message.into(),
    }
}

/// Open with the path in the error; a bare "file not found" helps nobody.
fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("`{}`: {e}", path.display()),
        ))
    })
}

fn require_seed(seed: Option<u64>) -> Result<u64> {
    seed.ok_or_else(|| invalid("this command needs a seed; pass --seed or set run.seed"))
}

/// Refuse to clobber existing artifacts unless `--force` was given.
fn ensure_writable(paths: &[PathBuf], force: bool) -> Result<()> {
    if force {
        return Ok(());
    }
    for path in paths {
        if path.exists() {
            return Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::AlreadyExists,
                format!("output `{}` exists; pass --force to overwrite", path.display()),
            )));
        }
    }
    Ok(())
}

/// Build the file in memory, then write it in one go.
fn write_file(path: &Path, build: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut bytes = Vec::new();
    build(&mut bytes)?;
    fs::write(path, bytes)?;
    Ok(())
}

/// Materialize the configured data source. Synthetic sources take their
/// generator seed from the run seed so every command sees the same series.
fn load_series(config: &RunConfig, seed: Option<u64>) -> Result<TaggedSeries> {
    match &config.source {
        DataSource::Files {
            load_csv,
            holiday_csv,
        } => {
            let series = parse_csv(std::io::BufReader::new(open(load_csv)?))?;
            let holidays = parse_holidays(std::io::BufReader::new(open(holiday_csv)?))?;
            Ok(tag_calendar(&series, &holidays))
        }
        DataSource::Synth(params) => {
            let mut params = params.clone();
            params.seed = require_seed(seed)?;
            let (series, holidays) = synthesize(&params);
            Ok(tag_calendar(&series, &holidays))
        }
    }
}

pub fn cmd_synth(config: &RunConfig, out: &Path, force: bool, seed: Option<u64>) -> Result<()> {
    let DataSource::Synth(params) = &config.source else {
        return Err(invalid("the synth command needs synth.* keys in the config"));
    };
    let mut params = params.clone();
    params.seed = require_seed(seed)?;
    let load_path = out.join("load.csv");
    let holiday_path = out.join("holidays.csv");
    ensure_writable(&[load_path.clone(), holiday_path.clone()], force)?;
    let (series, holidays) = synthesize(&params);
    write_file(&load_path, |buf| write_csv(&series, buf))?;
    write_file(&holiday_path, |buf| write_holidays(&holidays, buf))?;
    println!(
        "wrote {} hourly records to `{}` and {} holidays to `{}`",
        series.records().len(),
        load_path.display(),
        holidays.len(),
        holiday_path.display()
    );
    Ok(())
}

pub fn cmd_analyze(config: &RunConfig, out: &Path, force: bool, seed: Option<u64>) -> Result<()> {
    let series = load_series(config, seed)?;
    let acf_path = out.join("acf.csv");
    let corr_path = out.join("correlation.csv");
    ensure_writable(&[acf_path.clone(), corr_path.clone()], force)?;

    let loads = series.loads();
    let acf = autocorrelation(&loads, config.analyze_max_lag)?;
    write_file(&acf_path, |buf| {
        use std::io::Write;
        writeln!(buf, "lag,acf")?;
        for (lag, value) in acf.iter().enumerate() {
            writeln!(buf, "{lag},{value}")?;
        }
        Ok(())
    })?;

    let dew: Vec<f64> = series.records().iter().map(|r| r.record.dew_point_f).collect();
    let dry: Vec<f64> = series.records().iter().map(|r| r.record.dry_bulb_f).collect();
    write_file(&corr_path, |buf| {
        use std::io::Write;
        writeln!(buf, "variable,pearson_r")?;
        writeln!(buf, "dew_point_f,{}", correlation(&loads, &dew)?)?;
        writeln!(buf, "dry_bulb_f,{}", correlation(&loads, &dry)?)?;
        Ok(())
    })?;
    println!(
        "wrote `{}` (lags 0..={}) and `{}`",
        acf_path.display(),
        config.analyze_max_lag,
        corr_path.display()
    );
    Ok(())
}

pub fn cmd_train(config: &RunConfig, out: &Path, force: bool, seed: Option<u64>) -> Result<()> {
    let master = require_seed(seed)?;
    let series = load_series(config, Some(master))?;
    let split = config.split_required()?;
    ensure_writable(
        &[
            out.join("ensemble").join("manifest.txt"),
            out.join("benchmarks").join("bpnn_model.csv"),
            out.join("benchmarks").join("arima_model.csv"),
        ],
        force,
    )?;

    let ensemble_config = EnsembleConfig {
        member_specs: config.members.clone(),
        family: config.family,
        swarm: config.swarm.clone(),
        alpha_grid: config.alpha_grid.clone(),
        fixed_alpha: config.fixed_alpha,
        teacher_forced: config.teacher_forced,
        seed: master,
    };
    let (ensemble, traces) = train_ensemble(&ensemble_config, &series, split)?;
    save_ensemble(&ensemble, &out.join("ensemble"))?;
    for (name, trace) in &traces {
        write_file(&out.join("traces").join(format!("{name}.csv")), |buf| {
            write_trace(trace, buf)
        })?;
    }

    let mut bpnn_config = config.bpnn.clone();
    bpnn_config.seed = derive_seed(master, BPNN_SEED_STREAM);
    let (baseline, bpnn_trace) =
        train_bpnn_baseline(&series, split, &config.bpnn_spec, &bpnn_config)?;
    write_file(&out.join("benchmarks").join("bpnn_model.csv"), |buf| {
        write_model(&baseline.spec, &baseline.weights, buf)
    })?;
    write_file(
        &out.join("benchmarks").join("bpnn_normalization.csv"),
        |buf| write_normalization(&baseline.norm, buf),
    )?;
    write_file(&out.join("traces").join("bpnn.csv"), |buf| {
        write_trace(&bpnn_trace, buf)
    })?;

    // The persisted ARIMA model records the order (and the train-span fit
    // for reference); forecasting refits the coefficients on each day's
    // trailing history.
    let (train_records, _, _) = enff::dataio::split(&series, split)?;
    let train_loads: Vec<f64> = train_records.iter().map(|r| r.record.load_mw).collect();
    let order = match config.arima {
        ArimaSetting::Fixed(order) => order,
        ArimaSetting::Auto => {
            select_order(&train_loads, &default_order_grid(), ARIMA_FIT_ITERATIONS)?
        }
    };
    let arima = fit_arima(&train_loads, order, ARIMA_FIT_ITERATIONS)?;
    write_file(&out.join("benchmarks").join("arima_model.csv"), |buf| {
        write_arima_model(&arima, buf)
    })?;

    println!(
        "trained {} sub-networks (trim fraction {}%), backprop baseline, and \
         ARIMA({},{},{}); artifacts in `{}`",
        traces.len(),
        ensemble.alpha,
        order.p,
        order.d,
        order.q,
        out.display()
    );
    Ok(())
}

struct Models {
    ensemble: TrainedEnsemble,
    bpnn: BpnnBaseline,
    arima_order: ArimaOrder,
}

/// Load what `train` persisted under `out`.
fn load_models(out: &Path) -> Result<Models> {
    let ensemble = load_ensemble(&out.join("ensemble"))?;
    let model_path = out.join("benchmarks").join("bpnn_model.csv");
    let (spec, weights) = parse_model(open(&model_path)?)?;
    let norm_path = out.join("benchmarks").join("bpnn_normalization.csv");
    let norm = parse_normalization(open(&norm_path)?)?;
    let arima_path = out.join("benchmarks").join("arima_model.csv");
    let arima = parse_arima_model(open(&arima_path)?)?;
    Ok(Models {
        ensemble,
        bpnn: BpnnBaseline { spec, weights, norm },
        arima_order: arima.order,
    })
}

/// All three models' 24-hour forecasts for one day. The ensemble member
/// breakdown rides along for the forecast CSVs.
fn forecast_day(
    models: &Models,
    series: &TaggedSeries,
    config: &RunConfig,
    day: NaiveDate,
) -> Result<(Vec<(String, Vec<f64>)>, Vec<Vec<f64>>)> {
    let ensemble = ensemble_forecast(&models.ensemble, series, day)?;
    let bpnn = forecast_bpnn(&models.bpnn, series, day)?;
    let idx0 = series
        .index_of(day.and_hms_opt(0, 0, 0).unwrap())
        .ok_or_else(|| Error::RangeOutOfData {
            message: format!("day {day} is not covered by the series"),
        })?;
    let loads = series.loads();
    let start = idx0.saturating_sub(config.arima_history_hours);
    let arima = fit_arima(&loads[start..idx0], models.arima_order, ARIMA_FIT_ITERATIONS)?;
    let arima_values = forecast_arima(&arima, 24);
    Ok((
        vec![
            ("ENFF".to_string(), ensemble.combined),
            ("BPNN".to_string(), bpnn),
            ("ARIMA".to_string(), arima_values),
        ],
        ensemble.member_values,
    ))
}

fn resolve_days(config: &RunConfig, days: &[NaiveDate]) -> Result<Vec<NaiveDate>> {
    if !days.is_empty() {
        return Ok(days.to_vec());
    }
    let from_split = config
        .split
        .as_ref()
        .map(|s| s.test_days.clone())
        .unwrap_or_default();
    if from_split.is_empty() {
        return Err(invalid(
            "give forecast days as arguments or set split.test_days",
        ));
    }
    Ok(from_split)
}

pub fn cmd_forecast(
    config: &RunConfig,
    out: &Path,
    force: bool,
    seed: Option<u64>,
    days: &[NaiveDate],
) -> Result<()> {
    let series = load_series(config, seed)?;
    let models = load_models(out)?;
    let days = resolve_days(config, days)?;
    let dir = out.join("forecasts");
    let mut paths = Vec::new();
    for day in &days {
        for model in ["ENFF", "BPNN", "ARIMA"] {
            paths.push(dir.join(format!("forecast_{day}_{model}.csv")));
        }
    }
    ensure_writable(&paths, force)?;

    for &day in &days {
        let (forecasts, member_values) = forecast_day(&models, &series, config, day)?;
        for (model, values) in &forecasts {
            let members = (model.as_str() == "ENFF").then_some(member_values.as_slice());
            write_file(&dir.join(format!("forecast_{day}_{model}.csv")), |buf| {
                write_forecast_csv(day, values, members, buf)
            })?;
        }
    }
    println!(
        "wrote {} forecast files ({} days x 3 models) in `{}`",
        days.len() * 3,
        days.len(),
        dir.display()
    );
    Ok(())
}

pub fn cmd_evaluate(
    config: &RunConfig,
    out: &Path,
    force: bool,
    seed: Option<u64>,
    days: &[NaiveDate],
) -> Result<()> {
    let series = load_series(config, seed)?;
    let models = load_models(out)?;
    let days = resolve_days(config, days)?;
    let mut paths = vec![
        out.join("report.txt"),
        out.join("report.csv"),
        out.join("scatter.csv"),
    ];
    for day in &days {
        for model in ["ENFF", "BPNN", "ARIMA"] {
            paths.push(out.join(format!("series_{day}_{model}.csv")));
        }
    }
    ensure_writable(&paths, force)?;

    let mut results: Vec<DayForecastResult> = Vec::new();
    for &day in &days {
        let idx0 = series
            .index_of(day.and_hms_opt(0, 0, 0).unwrap())
            .ok_or_else(|| Error::RangeOutOfData {
                message: format!("day {day} is not covered by the series"),
            })?;
        let loads = series.loads();
        if idx0 + 24 > loads.len() {
            return Err(Error::RangeOutOfData {
                message: format!("day {day} is truncated in the series"),
            });
        }
        let actual = &loads[idx0..idx0 + 24];
        let (forecasts, _) = forecast_day(&models, &series, config, day)?;
        results.extend(evaluate_day(day, actual, &forecasts)?);
    }
    let report = comparison_report(&results, "ENFF")?;
    let text = render_report_text(&report);
    write_file(&out.join("report.txt"), |buf| {
        use std::io::Write;
        buf.write_all(text.as_bytes())?;
        Ok(())
    })?;
    write_file(&out.join("report.csv"), |buf| write_report_csv(&report, buf))?;
    write_file(&out.join("scatter.csv"), |buf| write_scatter_csv(&results, buf))?;
    for result in &results {
        let name = format!("series_{}_{}.csv", result.date, result.model);
        write_file(&out.join(name), |buf| write_series_csv(result, buf))?;
    }
    print!("{text}");
    Ok(())
}
