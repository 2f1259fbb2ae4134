//! Run configuration: a flat `key = value` text file with dotted section
//! keys.
//!
//! Grammar, in full:
//!   - one `key = value` pair per line, split on the first `=`;
//!   - keys are lowercase dotted paths (`section.field`);
//!   - leading/trailing whitespace around key and value is ignored;
//!   - blank lines and lines whose first non-blank character is `#` are
//!     ignored (there are no inline comments);
//!   - every key is optional unless the command needs it, no key may appear
//!     twice, and unknown keys are errors.
//!
//! Value forms: integers, floats, `true`/`false`, dates as `YYYY-MM-DD`,
//! inclusive date ranges as `YYYY-MM-DD..YYYY-MM-DD`, comma-separated lists,
//! and network members as `kind:hidden` (e.g. `fnn:12`).
//!
//! Recognized keys:
//!   data.load_csv, data.holiday_csv        hourly load + holiday files
//!   synth.start_year, synth.years,         synthetic-data source (mutually
//!     synth.base_mw, synth.noise_sd_mw,    exclusive with data.*); the
//!     synth.holiday_effect                 generator seed is the run seed
//!   split.train, split.validation          date ranges
//!   split.test_days                        date list
//!   ensemble.members                       e.g. `fnn:12, elman:10, rbf:15`
//!   ensemble.family                        `haar` or `db4`
//!   ensemble.alpha_grid                    trim percentages to try
//!   ensemble.fixed_alpha                   skip selection, use this value
//!   ensemble.teacher_forced                diagnostic forecasting mode
//!   swarm.size, swarm.iterations, swarm.inertia, swarm.cognitive,
//!     swarm.social, swarm.v_max, swarm.target_error
//!   bpnn.hidden, bpnn.learning_rate, bpnn.epochs
//!   arima.order                            `p,d,q` or `auto`
//!   arima.history_hours                    trailing refit window
//!   analyze.max_lag                        ACF depth
//!   run.seed                               master seed (flag overrides)
//!   run.out                                output directory (flag overrides)

use std::collections::BTreeMap;
use std::path::PathBuf;

use chrono::NaiveDate;

use enff::benchmarks::ArimaOrder;
use enff::dataio::{SplitSpec, SynthParams};
use enff::ensemble::DEFAULT_ALPHA_GRID;
use enff::features::INPUT_DIM;
use enff::nnet::{NetworkKind, NetworkSpec};
use enff::trainer::{BackpropConfig, SwarmConfig};
use enff::wavelet::WaveletFamily;
use enff::{Error, Result};

#[derive(Debug, Clone)]
pub enum DataSource {
    Files { load_csv: PathBuf, holiday_csv: PathBuf },
    Synth(SynthParams),
}

#[derive(Debug, Clone, Copy)]
pub enum ArimaSetting {
    Fixed(ArimaOrder),
    /// Pick the order by information criterion over the default grid.
    Auto,
}

/// Everything a command can need, resolved from one config file. Fields a
/// command does not use may hold defaults; fields it does use are validated
/// at dispatch.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub source: DataSource,
    pub split: Option<SplitSpec>,
    pub members: Vec<NetworkSpec>,
    pub family: WaveletFamily,
    pub alpha_grid: Vec<u32>,
    pub fixed_alpha: Option<u32>,
    pub teacher_forced: bool,
    pub swarm: SwarmConfig,
    pub bpnn_spec: NetworkSpec,
    pub bpnn: BackpropConfig,
    pub arima: ArimaSetting,
    /// Hours of trailing history the ARIMA benchmark is refit on per
    /// forecast day.
    pub arima_history_hours: usize,
    pub analyze_max_lag: usize,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

fn bad(key: &str, value: &str, wanted: &str) -> Error {
    Error::InvalidConfig {
        message: format!("key `{key}`: cannot read `{value}` as {wanted}"),
    }
}

struct Pairs {
    values: BTreeMap<String, String>,
}

impl Pairs {
    fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (number, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::InvalidConfig {
                    message: format!("config line {}: expected `key = value`", number + 1),
                });
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if values.insert(key.clone(), value).is_some() {
                return Err(Error::InvalidConfig {
                    message: format!("config key `{key}` given twice"),
                });
            }
        }
        Ok(Self { values })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.values.remove(key)
    }

    fn take_parsed<T: std::str::FromStr>(&mut self, key: &str, wanted: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| bad(key, &v, wanted)),
        }
    }

    fn take_range(&mut self, key: &str) -> Result<Option<(NaiveDate, NaiveDate)>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => {
                let wanted = "a date range (YYYY-MM-DD..YYYY-MM-DD)";
                let (a, b) = v.split_once("..").ok_or_else(|| bad(key, &v, wanted))?;
                let start = parse_date(a.trim()).map_err(|_| bad(key, &v, wanted))?;
                let end = parse_date(b.trim()).map_err(|_| bad(key, &v, wanted))?;
                Ok(Some((start, end)))
            }
        }
    }
}

fn parse_date(text: &str) -> std::result::Result<NaiveDate, chrono::ParseError> {
    NaiveDate::parse_from_str(text, "%Y-%m-%d")
}

fn parse_list<T>(
    key: &str,
    value: &str,
    wanted: &str,
    item: impl Fn(&str) -> Option<T>,
) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| item(s).ok_or_else(|| bad(key, value, wanted)))
        .collect()
}

fn parse_members(key: &str, value: &str) -> Result<Vec<NetworkSpec>> {
    let wanted = "a member list like `fnn:12, elman:10, rbf:15`";
    let specs = parse_list(key, value, wanted, |item| {
        let (kind, hidden) = item.split_once(':')?;
        let kind = NetworkKind::parse(kind.trim()).ok()?;
        let hidden: usize = hidden.trim().parse().ok()?;
        NetworkSpec::new(kind, INPUT_DIM, hidden).ok()
    })?;
    if specs.is_empty() {
        return Err(bad(key, value, wanted));
    }
    Ok(specs)
}

impl RunConfig {
    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidConfig {
            message: format!("cannot read config `{}`: {e}", path.display()),
        })?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut pairs = Pairs::parse(text)?;

        let load_csv: Option<PathBuf> = pairs.take("data.load_csv").map(PathBuf::from);
        let holiday_csv: Option<PathBuf> = pairs.take("data.holiday_csv").map(PathBuf::from);
        let mut synth = SynthParams::default();
        let mut synth_given = false;
        if let Some(v) = pairs.take_parsed("synth.start_year", "an integer year")? {
            synth.start_year = v;
            synth_given = true;
        }
        if let Some(v) = pairs.take_parsed("synth.years", "a year count")? {
            synth.years = v;
            synth_given = true;
        }
        if let Some(v) = pairs.take_parsed("synth.base_mw", "a number")? {
            synth.base_mw = v;
            synth_given = true;
        }
        if let Some(v) = pairs.take_parsed("synth.noise_sd_mw", "a number")? {
            synth.noise_sd_mw = v;
            synth_given = true;
        }
        if let Some(v) = pairs.take_parsed("synth.holiday_effect", "a number")? {
            synth.holiday_effect = v;
            synth_given = true;
        }
        let source = match (load_csv, holiday_csv, synth_given) {
            (Some(_), Some(_), true) | (Some(_), None, _) | (None, Some(_), _) => {
                return Err(Error::InvalidConfig {
                    message: "give either both data.load_csv and data.holiday_csv, or only \
                              synth.* keys"
                        .to_string(),
                })
            }
            (Some(load), Some(holidays), false) => DataSource::Files {
                load_csv: load,
                holiday_csv: holidays,
            },
            (None, None, true) => DataSource::Synth(synth),
            (None, None, false) => {
                return Err(Error::InvalidConfig {
                    message: "configure a data source: data.* file paths or synth.* parameters"
                        .to_string(),
                })
            }
        };

        let train = pairs.take_range("split.train")?;
        let validation = pairs.take_range("split.validation")?;
        let test_days = match pairs.take("split.test_days") {
            None => Vec::new(),
            Some(v) => parse_list("split.test_days", &v, "a comma-separated date list", |s| {
                parse_date(s).ok()
            })?,
        };
        let split = match train {
            Some(train) => Some(SplitSpec {
                train,
                validation,
                test_days,
            }),
            None if validation.is_some() || !test_days.is_empty() => {
                return Err(Error::InvalidConfig {
                    message: "split.validation/split.test_days need split.train".to_string(),
                })
            }
            None => None,
        };

        let members = match pairs.take("ensemble.members") {
            Some(v) => parse_members("ensemble.members", &v)?,
            None => enff::ensemble::default_members(1),
        };
        let family = match pairs.take("ensemble.family") {
            Some(v) => WaveletFamily::parse(&v)?,
            None => WaveletFamily::Daubechies4,
        };
        let alpha_grid = match pairs.take("ensemble.alpha_grid") {
            Some(v) => parse_list("ensemble.alpha_grid", &v, "a list of percentages", |s| {
                s.parse::<u32>().ok()
            })?,
            None => DEFAULT_ALPHA_GRID.to_vec(),
        };
        let fixed_alpha = pairs.take_parsed("ensemble.fixed_alpha", "a percentage")?;
        let teacher_forced = pairs
            .take_parsed("ensemble.teacher_forced", "true or false")?
            .unwrap_or(false);

        let mut swarm = SwarmConfig::default();
        if let Some(v) = pairs.take_parsed("swarm.size", "a particle count")? {
            swarm.swarm_size = v;
        }
        if let Some(v) = pairs.take_parsed("swarm.iterations", "an iteration count")? {
            swarm.max_iterations = v;
        }
        if let Some(v) = pairs.take_parsed("swarm.inertia", "a number")? {
            swarm.inertia = v;
        }
        if let Some(v) = pairs.take_parsed("swarm.cognitive", "a number")? {
            swarm.cognitive = v;
        }
        if let Some(v) = pairs.take_parsed("swarm.social", "a number")? {
            swarm.social = v;
        }
        if let Some(v) = pairs.take_parsed("swarm.v_max", "a number")? {
            swarm.v_max = v;
        }
        if let Some(v) = pairs.take_parsed("swarm.target_error", "a number")? {
            swarm.target_error = v;
        }

        let bpnn_hidden = pairs
            .take_parsed("bpnn.hidden", "a unit count")?
            .unwrap_or(12);
        let bpnn_spec = NetworkSpec::new(NetworkKind::Fnn, INPUT_DIM, bpnn_hidden)?;
        let mut bpnn = BackpropConfig::default();
        if let Some(v) = pairs.take_parsed("bpnn.learning_rate", "a number")? {
            bpnn.learning_rate = v;
        }
        if let Some(v) = pairs.take_parsed("bpnn.epochs", "an epoch count")? {
            bpnn.epochs = v;
        }

        let arima = match pairs.take("arima.order") {
            None => ArimaSetting::Fixed(ArimaOrder::DEFAULT),
            Some(v) if v == "auto" => ArimaSetting::Auto,
            Some(v) => {
                let parts =
                    parse_list("arima.order", &v, "`p,d,q` or `auto`", |s| s.parse::<usize>().ok())?;
                if parts.len() != 3 {
                    return Err(bad("arima.order", &v, "`p,d,q` or `auto`"));
                }
                ArimaSetting::Fixed(ArimaOrder::new(parts[0], parts[1], parts[2])?)
            }
        };
        let arima_history_hours = pairs
            .take_parsed("arima.history_hours", "an hour count")?
            .unwrap_or(2 * 8760);
        let analyze_max_lag = pairs
            .take_parsed("analyze.max_lag", "a lag count")?
            .unwrap_or(200);

        let seed = pairs.take_parsed("run.seed", "an integer seed")?;
        let out = pairs.take("run.out").map(PathBuf::from);

        if let Some(unknown) = pairs.values.keys().next() {
            return Err(Error::InvalidConfig {
                message: format!("unknown config key `{unknown}`"),
            });
        }

        Ok(Self {
            source,
            split,
            members,
            family,
            alpha_grid,
            fixed_alpha,
            teacher_forced,
            swarm,
            bpnn_spec,
            bpnn,
            arima,
            arima_history_hours,
            analyze_max_lag,
            seed,
            out,
        })
    }

    pub fn split_required(&self) -> Result<&SplitSpec> {
        self.split.as_ref().ok_or_else(|| Error::InvalidConfig {
            message: "this command needs split.train (and friends) in the config".to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    #[test]
    fn full_config_round_trips_every_section() {
        let text = "\
# full example
synth.start_year = 2004
synth.years = 2
synth.base_mw = 12000
synth.noise_sd_mw = 100
synth.holiday_effect = 0.3

split.train = 2004-01-01..2004-12-31
split.validation = 2005-01-01..2005-01-21
split.test_days = 2005-05-25, 2005-12-25

ensemble.members = fnn:12, elman:10, rbf:15
ensemble.family = haar
ensemble.alpha_grid = 0, 20, 40
ensemble.teacher_forced = true

swarm.size = 10
swarm.iterations = 50
swarm.target_error = 0

bpnn.hidden = 8
bpnn.learning_rate = 0.05
bpnn.epochs = 100

arima.order = 1,1,1
arima.history_hours = 8760
analyze.max_lag = 48
run.seed = 7
run.out = scratch/run1
";
        let config = RunConfig::from_text(text).unwrap();
        let DataSource::Synth(params) = &config.source else {
            panic!("expected synth source");
        };
        assert_eq!(params.years, 2);
        assert_eq!(params.base_mw, 12000.0);
        let split = config.split_required().unwrap();
        assert_eq!(split.train, (date(2004, 1, 1), date(2004, 12, 31)));
        assert_eq!(split.validation, Some((date(2005, 1, 1), date(2005, 1, 21))));
        assert_eq!(split.test_days, [date(2005, 5, 25), date(2005, 12, 25)]);
        assert_eq!(config.members.len(), 3);
        assert_eq!(config.members[1].kind, NetworkKind::Elman);
        assert_eq!(config.members[1].hidden_units, 10);
        assert_eq!(config.family, WaveletFamily::Haar);
        assert_eq!(config.alpha_grid, [0, 20, 40]);
        assert!(config.teacher_forced);
        assert_eq!(config.swarm.swarm_size, 10);
        assert_eq!(config.swarm.max_iterations, 50);
        assert_eq!(config.swarm.target_error, 0.0);
        assert_eq!(config.bpnn_spec.hidden_units, 8);
        assert_eq!(config.bpnn.learning_rate, 0.05);
        assert_eq!(config.bpnn.epochs, 100);
        let ArimaSetting::Fixed(order) = config.arima else {
            panic!("expected fixed order");
        };
        assert_eq!((order.p, order.d, order.q), (1, 1, 1));
        assert_eq!(config.arima_history_hours, 8760);
        assert_eq!(config.analyze_max_lag, 48);
        assert_eq!(config.seed, Some(7));
        assert_eq!(config.out, Some(PathBuf::from("scratch/run1")));
    }

    #[test]
    fn defaults_cover_everything_but_the_source() {
        let config = RunConfig::from_text("synth.years = 1\n").unwrap();
        assert!(config.split.is_none());
        assert_eq!(config.members.len(), 3);
        assert_eq!(config.family, WaveletFamily::Daubechies4);
        assert_eq!(config.alpha_grid, DEFAULT_ALPHA_GRID);
        assert_eq!(config.swarm.swarm_size, 30);
        assert!(matches!(config.arima, ArimaSetting::Fixed(o) if (o.p, o.d, o.q) == (2, 1, 2)));
        assert!(config.seed.is_none());
        // a source must be configured explicitly, so the empty config is out
        assert!(RunConfig::from_text("").is_err());
    }

    #[test]
    fn file_source_excludes_synth_keys_and_needs_both_paths() {
        let both = "data.load_csv = a.csv\ndata.holiday_csv = b.csv\n";
        let config = RunConfig::from_text(both).unwrap();
        assert!(matches!(config.source, DataSource::Files { .. }));

        assert!(RunConfig::from_text("data.load_csv = a.csv\n").is_err());
        assert!(RunConfig::from_text(
            "data.load_csv = a.csv\ndata.holiday_csv = b.csv\nsynth.years = 1\n"
        )
        .is_err());
    }

    #[test]
    fn malformed_input_is_rejected_with_the_key_name() {
        for text in [
            "split.train = 2004-01-01\n",          // not a range
            "ensemble.members = fnn\n",            // no hidden count
            "ensemble.members =\n",                // empty list
            "arima.order = 2,1\n",                 // missing q
            "swarm.size = many\n",                 // not a number
            "run.seed = 7\nrun.seed = 8\n",        // duplicate (pre-typed)
            "mystery.key = 1\n",                   // unknown
            "just some words\n",                   // no `=`
        ] {
            // prefix a valid source so each case reaches its own check
            let text = format!("synth.years = 1\n{text}");
            let err = RunConfig::from_text(&text).unwrap_err();
            let message = err.to_string();
            assert!(
                message.contains("invalid configuration"),
                "unexpected error for {text:?}: {message}"
            );
        }
        // validation without train is called out specifically
        let err =
            RunConfig::from_text("synth.years = 1\nsplit.validation = 2004-01-01..2004-01-02\n")
                .unwrap_err();
        assert!(err.to_string().contains("split.train"));
    }
}
