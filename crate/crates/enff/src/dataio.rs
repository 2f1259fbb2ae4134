//! Hourly load/weather ingestion, calendar tagging, dataset splitting, and a
//! deterministic synthetic generator for desk-scale runs.
//!
//! Timestamps are naive local civil time. Real data containing DST artifacts
//! must be cleaned upstream; anything that breaks strict hourly continuity is
//! reported as a gap or duplicate rather than papered over.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// One observed hour: demand plus the two temperature drivers.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlyRecord {
    pub timestamp: NaiveDateTime,
    /// System demand in MW; strictly positive.
    pub load_mw: f64,
    pub dry_bulb_f: f64,
    pub dew_point_f: f64,
}

/// A gap-free hourly series, sorted ascending.
#[derive(Debug, Clone)]
pub struct LoadSeries {
    records: Vec<HourlyRecord>,
}

impl LoadSeries {
    /// Sort the records and validate hourly continuity, positivity, and
    /// finiteness. When a value check fails, `line` in the error is the
    /// 1-based position of the offending record in the input order.
    pub fn from_records(mut records: Vec<HourlyRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyInput);
        }
        for (i, r) in records.iter().enumerate() {
            if !r.load_mw.is_finite() || r.load_mw <= 0.0 {
                return Err(Error::MalformedRow {
                    line: i + 1,
                    message: format!("load_mw must be finite and positive, got {}", r.load_mw),
                });
            }
            if !r.dry_bulb_f.is_finite() || !r.dew_point_f.is_finite() {
                return Err(Error::MalformedRow {
                    line: i + 1,
                    message: "temperatures must be finite".to_string(),
                });
            }
        }
        records.sort_by_key(|r| r.timestamp);
        for w in records.windows(2) {
            let expected = w[0].timestamp + chrono::Duration::hours(1);
            if w[1].timestamp == w[0].timestamp {
                return Err(Error::DuplicateTimestamp {
                    timestamp: w[0].timestamp,
                });
            }
            if w[1].timestamp != expected {
                return Err(Error::GapDetected { expected });
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[HourlyRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn start(&self) -> NaiveDateTime {
        self.records[0].timestamp
    }

    pub fn end(&self) -> NaiveDateTime {
        self.records[self.records.len() - 1].timestamp
    }

    /// Index of `timestamp`, computable in O(1) thanks to hourly continuity.
    pub fn index_of(&self, timestamp: NaiveDateTime) -> Option<usize> {
        let hours = (timestamp - self.start()).num_hours();
        if hours < 0 || timestamp < self.start() {
            return None;
        }
        let idx = hours as usize;
        if idx < self.records.len() && self.records[idx].timestamp == timestamp {
            Some(idx)
        } else {
            None
        }
    }

    pub fn loads(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.load_mw).collect()
    }
}

/// Working/off-day classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DayType {
    Working,
    Off,
}

/// Calendar attributes attached to each hour.
#[derive(Debug, Clone, PartialEq)]
pub struct CalendarTag {
    /// 1 = Monday … 7 = Sunday.
    pub day_of_week: u8,
    pub day_type: DayType,
    pub hour_of_day: u8,
    /// Holiday name when the day is anomalous.
    pub anomalous: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaggedRecord {
    pub record: HourlyRecord,
    pub tag: CalendarTag,
}

/// A load series with calendar tags; inherits the continuity of the source.
#[derive(Debug, Clone)]
pub struct TaggedSeries {
    records: Vec<TaggedRecord>,
}

impl TaggedSeries {
    pub fn records(&self) -> &[TaggedRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn start(&self) -> NaiveDateTime {
        self.records[0].record.timestamp
    }

    pub fn end(&self) -> NaiveDateTime {
        self.records[self.records.len() - 1].record.timestamp
    }

    pub fn index_of(&self, timestamp: NaiveDateTime) -> Option<usize> {
        let hours = (timestamp - self.start()).num_hours();
        if timestamp < self.start() || hours < 0 {
            return None;
        }
        let idx = hours as usize;
        if idx < self.records.len() && self.records[idx].record.timestamp == timestamp {
            Some(idx)
        } else {
            None
        }
    }

    pub fn loads(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.record.load_mw).collect()
    }

    /// Contiguous sub-series over record indices `start..end`.
    ///
    /// Panics when the range is out of bounds, like slice indexing.
    pub fn slice(&self, start: usize, end: usize) -> TaggedSeries {
        TaggedSeries {
            records: self.records[start..end].to_vec(),
        }
    }
}

/// Named special day from the holiday file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Holiday {
    pub date: NaiveDate,
    pub name: String,
}

/// Train/validation/test partition by calendar date.
#[derive(Debug, Clone)]
pub struct SplitSpec {
    /// Inclusive date span used for training.
    pub train: (NaiveDate, NaiveDate),
    /// Optional inclusive validation span; `None` means no validation set
    /// (the trim fraction must then be given explicitly).
    pub validation: Option<(NaiveDate, NaiveDate)>,
    /// Individual forecast-target days.
    pub test_days: Vec<NaiveDate>,
}

impl SplitSpec {
    fn check(&self) -> Result<()> {
        let (t0, t1) = self.train;
        if t0 > t1 {
            return Err(Error::InvalidConfig {
                message: format!("train range {t0}..{t1} is reversed"),
            });
        }
        if let Some((v0, v1)) = self.validation {
            if v0 > v1 {
                return Err(Error::InvalidConfig {
                    message: format!("validation range {v0}..{v1} is reversed"),
                });
            }
            if v0 <= t1 && t0 <= v1 {
                return Err(Error::InvalidConfig {
                    message: "validation range overlaps train range".to_string(),
                });
            }
        }
        for d in &self.test_days {
            if *d >= t0 && *d <= t1 {
                return Err(Error::InvalidConfig {
                    message: format!("test day {d} falls inside the train range"),
                });
            }
        }
        Ok(())
    }
}

pub(crate) const TIMESTAMP_FMT: &str = "%Y-%m-%dT%H:%M:%S";

fn parse_timestamp(text: &str) -> Option<NaiveDateTime> {
    let ts = NaiveDateTime::parse_from_str(text, TIMESTAMP_FMT)
        .or_else(|_| NaiveDateTime::parse_from_str(text, "%Y-%m-%d %H:%M:%S"))
        .ok()?;
    if ts.minute() != 0 || ts.second() != 0 {
        return None;
    }
    Some(ts)
}

/// Parse `timestamp,load_mw,dry_bulb_f,dew_point_f` CSV into a validated
/// series. Rows may arrive out of order; the result is sorted.
pub fn parse_csv<R: Read>(source: R) -> Result<LoadSeries> {
    let reader = BufReader::new(source);
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => return Err(Error::EmptyInput),
    };
    if header.trim() != "timestamp,load_mw,dry_bulb_f,dew_point_f" {
        return Err(Error::MalformedRow {
            line: 1,
            message: format!(
                "expected header `timestamp,load_mw,dry_bulb_f,dew_point_f`, got `{}`",
                header.trim()
            ),
        });
    }
    let mut records = Vec::new();
    // Remember each record's source line so from_records value errors could
    // be mapped back; value checks here make that mapping exact.
    for (offset, line) in lines.enumerate() {
        let line_no = offset + 2;
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let fields: Vec<&str> = text.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::MalformedRow {
                line: line_no,
                message: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        let timestamp = parse_timestamp(fields[0]).ok_or_else(|| Error::MalformedRow {
            line: line_no,
            message: format!("bad timestamp `{}` (expected ISO-8601 on the hour)", fields[0]),
        })?;
        let mut nums = [0.0_f64; 3];
        for (slot, field) in nums.iter_mut().zip(&fields[1..]) {
            *slot = field.parse().map_err(|_| Error::MalformedRow {
                line: line_no,
                message: format!("bad numeric field `{field}`"),
            })?;
        }
        let [load_mw, dry_bulb_f, dew_point_f] = nums;
        if !load_mw.is_finite() || load_mw <= 0.0 {
            return Err(Error::MalformedRow {
                line: line_no,
                message: format!("load_mw must be finite and positive, got {load_mw}"),
            });
        }
        if !dry_bulb_f.is_finite() || !dew_point_f.is_finite() {
            return Err(Error::MalformedRow {
                line: line_no,
                message: "temperatures must be finite".to_string(),
            });
        }
        records.push(HourlyRecord {
            timestamp,
            load_mw,
            dry_bulb_f,
            dew_point_f,
        });
    }
    LoadSeries::from_records(records)
}

/// Serialize a series in the exact schema `parse_csv` accepts. Floats use
/// the shortest round-trip representation, so parse ∘ write is the identity.
pub fn write_csv<W: Write>(series: &LoadSeries, out: &mut W) -> Result<()> {
    writeln!(out, "timestamp,load_mw,dry_bulb_f,dew_point_f")?;
    for r in series.records() {
        writeln!(
            out,
            "{},{},{},{}",
            r.timestamp.format(TIMESTAMP_FMT),
            r.load_mw,
            r.dry_bulb_f,
            r.dew_point_f
        )?;
    }
    Ok(())
}

/// Parse the `date,name` holiday file.
pub fn parse_holidays<R: Read>(source: R) -> Result<Vec<Holiday>> {
    let reader = BufReader::new(source);
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => return Err(Error::EmptyInput),
    };
    if header.trim() != "date,name" {
        return Err(Error::MalformedRow {
            line: 1,
            message: format!("expected header `date,name`, got `{}`", header.trim()),
        });
    }
    let mut holidays = Vec::new();
    for (offset, line) in lines.enumerate() {
        let line_no = offset + 2;
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let (date_text, name) = text.split_once(',').ok_or_else(|| Error::MalformedRow {
            line: line_no,
            message: "expected `date,name`".to_string(),
        })?;
        let date = NaiveDate::parse_from_str(date_text, "%Y-%m-%d").map_err(|_| {
            Error::MalformedRow {
                line: line_no,
                message: format!("bad date `{date_text}`"),
            }
        })?;
        holidays.push(Holiday {
            date,
            name: name.trim().to_string(),
        });
    }
    Ok(holidays)
}

pub fn write_holidays<W: Write>(holidays: &[Holiday], out: &mut W) -> Result<()> {
    writeln!(out, "date,name")?;
    for h in holidays {
        writeln!(out, "{},{}", h.date.format("%Y-%m-%d"), h.name)?;
    }
    Ok(())
}

/// Attach day-of-week, day-type, hour, and holiday tags to every record.
/// Holiday dates outside the series span are silently ignored.
pub fn tag_calendar(series: &LoadSeries, holidays: &[Holiday]) -> TaggedSeries {
    let by_date: BTreeMap<NaiveDate, &str> = holidays
        .iter()
        .map(|h| (h.date, h.name.as_str()))
        .collect();
    let records = series
        .records()
        .iter()
        .map(|r| {
            let date = r.timestamp.date();
            let day_of_week = date.weekday().number_from_monday() as u8;
            let anomalous = by_date.get(&date).map(|name| name.to_string());
            let day_type = if day_of_week >= 6 || anomalous.is_some() {
                DayType::Off
            } else {
                DayType::Working
            };
            TaggedRecord {
                record: r.clone(),
                tag: CalendarTag {
                    day_of_week,
                    day_type,
                    hour_of_day: r.timestamp.hour() as u8,
                    anomalous,
                },
            }
        })
        .collect();
    TaggedSeries { records }
}

fn day_covered(series: &TaggedSeries, date: NaiveDate) -> bool {
    let first = date.and_hms_opt(0, 0, 0).unwrap();
    let last = date.and_hms_opt(23, 0, 0).unwrap();
    series.index_of(first).is_some() && series.index_of(last).is_some()
}

/// Partition a tagged series into train/validation/test subsets.
///
/// The test subset holds exactly the 24 hourly records of each test day, in
/// the order the days are listed.
pub fn split(
    series: &TaggedSeries,
    spec: &SplitSpec,
) -> Result<(Vec<TaggedRecord>, Vec<TaggedRecord>, Vec<TaggedRecord>)> {
    spec.check()?;
    let (t0, t1) = spec.train;
    if !day_covered(series, t0) || !day_covered(series, t1) {
        return Err(Error::RangeOutOfData {
            message: format!("train range {t0}..{t1} is not covered by the series"),
        });
    }
    if let Some((v0, v1)) = spec.validation {
        if !day_covered(series, v0) || !day_covered(series, v1) {
            return Err(Error::RangeOutOfData {
                message: format!("validation range {v0}..{v1} is not covered by the series"),
            });
        }
    }
    for d in &spec.test_days {
        if !day_covered(series, *d) {
            return Err(Error::RangeOutOfData {
                message: format!("test day {d} is not covered by the series"),
            });
        }
    }

    let in_span = |date: NaiveDate, span: (NaiveDate, NaiveDate)| date >= span.0 && date <= span.1;
    let mut train = Vec::new();
    let mut validation = Vec::new();
    for r in series.records() {
        let date = r.record.timestamp.date();
        if in_span(date, spec.train) {
            train.push(r.clone());
        } else if let Some(span) = spec.validation {
            if in_span(date, span) {
                validation.push(r.clone());
            }
        }
    }
    let mut test = Vec::new();
    for d in &spec.test_days {
        let start = series.index_of(d.and_hms_opt(0, 0, 0).unwrap()).unwrap();
        test.extend_from_slice(&series.records()[start..start + 24]);
    }
    Ok((train, validation, test))
}

/// Knobs for the synthetic generator. The defaults produce a plausible
/// mid-size system: ~15 GW mean demand with summer peaks.
#[derive(Debug, Clone)]
pub struct SynthParams {
    pub start_year: i32,
    pub years: u32,
    pub seed: u64,
    /// Fractional load suppression on synthetic holidays, in [0, 1).
    pub holiday_effect: f64,
    pub base_mw: f64,
    pub noise_sd_mw: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            start_year: 2004,
            years: 6,
            seed: 42,
            holiday_effect: 0.35,
            base_mw: 15_000.0,
            noise_sd_mw: 150.0,
        }
    }
}

/// Fixed-date synthetic holidays, one entry per (month, day, name).
const SYNTH_HOLIDAYS: [(u32, u32, &str); 5] = [
    (1, 1, "New Year"),
    (5, 25, "Memorial Day"),
    (7, 4, "Independence Day"),
    (9, 1, "Labor Day"),
    (12, 25, "Christmas"),
];

/// Two-bump working-day demand profile, roughly zero-mean over 24 h.
fn daily_shape(hour: f64) -> f64 {
    let morning = 1200.0 * (-((hour - 9.0) / 2.5).powi(2)).exp();
    let evening = 1600.0 * (-((hour - 19.0) / 3.0).powi(2)).exp();
    morning + evening - 900.0
}

/// Generate `years` calendar years of hourly data, deterministically for a
/// fixed seed, together with the matching holiday list.
///
/// The load is base + annual cycle + weekend dip + daily double-peak + a
/// temperature-coupled term, scaled down by `holiday_effect` on holidays,
/// plus Gaussian noise. Temperatures follow annual and diurnal cycles, so
/// load and dry-bulb temperature are strongly correlated by construction.
pub fn synthesize(params: &SynthParams) -> (LoadSeries, Vec<Holiday>) {
    assert!(params.years >= 1, "need at least one year");
    assert!(
        (0.0..1.0).contains(&params.holiday_effect),
        "holiday_effect must be in [0, 1)"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let temp_noise = Normal::new(0.0, 4.0).unwrap();
    let dew_noise = Normal::new(0.0, 3.0).unwrap();
    let load_noise = Normal::new(0.0, params.noise_sd_mw).unwrap();

    let mut records = Vec::new();
    let mut holidays = Vec::new();
    for year in params.start_year..params.start_year + params.years as i32 {
        for (m, d, name) in SYNTH_HOLIDAYS {
            holidays.push(Holiday {
                date: NaiveDate::from_ymd_opt(year, m, d).unwrap(),
                name: name.to_string(),
            });
        }
    }

    let first = NaiveDate::from_ymd_opt(params.start_year, 1, 1).unwrap();
    let last = NaiveDate::from_ymd_opt(params.start_year + params.years as i32, 1, 1).unwrap();
    let mut date = first;
    while date < last {
        let doy = date.ordinal() as f64;
        let annual_phase = 2.0 * std::f64::consts::PI * (doy - 196.0) / 365.25;
        let dow = date.weekday().number_from_monday();
        let weekend = if dow >= 6 { -800.0 } else { 0.0 };
        let is_holiday = SYNTH_HOLIDAYS
            .iter()
            .any(|(m, d, _)| date.month() == *m && date.day() == *d);
        for hour in 0..24u32 {
            let h = hour as f64;
            let diurnal_phase = 2.0 * std::f64::consts::PI * (h - 15.0) / 24.0;
            let dry_bulb =
                55.0 + 25.0 * annual_phase.cos() + 8.0 * diurnal_phase.cos()
                    + temp_noise.sample(&mut rng);
            let dew_point = dry_bulb - 12.0 + dew_noise.sample(&mut rng);
            let coupling = 25.0 * (dry_bulb - 45.0).max(0.0);
            let mut load = params.base_mw
                + 1500.0 * annual_phase.cos()
                + weekend
                + daily_shape(h)
                + coupling;
            if is_holiday {
                load *= 1.0 - params.holiday_effect;
            }
            load += load_noise.sample(&mut rng);
            records.push(HourlyRecord {
                timestamp: date.and_hms_opt(hour, 0, 0).unwrap(),
                load_mw: load.max(1.0),
                dry_bulb_f: dry_bulb,
                dew_point_f: dew_point,
            });
        }
        date = date.succ_opt().unwrap();
    }
    let series = LoadSeries::from_records(records).expect("generator output is contiguous");
    (series, holidays)
}
