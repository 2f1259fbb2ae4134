//! Compares the data-parallel build against the sequential fallback on the
//! two hot paths that fan out across workers: swarm training (one fitness
//! evaluation per particle) and day-ahead forecasting (one recursive pass
//! per member).
//!
//! Run `cargo bench` for the parallel numbers and
//! `cargo bench --no-default-features` for the sequential ones; group names
//! carry the active mode so reports line up. The wavelet decomposition is
//! included as a mode-independent anchor: it is sequential by nature, so
//! its timings should match across builds.

use chrono::NaiveDate;
use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use enff::dataio::{synthesize, tag_calendar, SynthParams, TaggedSeries};
use enff::ensemble::{default_members, forecast_members, SubNetwork, TrainedEnsemble, TrainedMember};
use enff::features::{build_all_from, fit_normalization, Dataset, FeatureVector, NormalizationParams};
use enff::nnet::{NetworkKind, NetworkSpec};
use enff::trainer::{train_gpso, SwarmConfig};
use enff::wavelet::{decompose3, WaveletFamily, WaveletFilterPair, COMPONENTS};

const MODE: &str = if cfg!(feature = "parallel") {
    "parallel"
} else {
    "sequential"
};

fn fixture_series() -> TaggedSeries {
    let params = SynthParams {
        years: 1,
        seed: 77,
        ..SynthParams::default()
    };
    let (series, holidays) = synthesize(&params);
    tag_calendar(&series, &holidays)
}

/// Approximation-component training data over a four-week span.
fn fixture_dataset(series: &TaggedSeries) -> Dataset {
    let train = series.slice(0, 672);
    let filters = WaveletFilterPair::new(WaveletFamily::Daubechies4);
    let decomp = decompose3(&train.loads(), &filters).unwrap();
    let rows = build_all_from(&train, decomp.component(COMPONENTS[0])).unwrap();
    let vectors: Vec<FeatureVector> = rows.iter().map(|(_, v)| v.clone()).collect();
    let norm = fit_normalization(&vectors).unwrap();
    Dataset::build(&rows, &norm)
}

fn swarm_training(c: &mut Criterion) {
    let series = fixture_series();
    let data = fixture_dataset(&series);
    let spec = NetworkSpec::new(NetworkKind::Fnn, 8, 10).unwrap();
    let config = SwarmConfig {
        swarm_size: 30,
        max_iterations: 20,
        target_error: 0.0, // run every iteration, regardless of fit quality
        ..SwarmConfig::default()
    };
    c.benchmark_group("swarm_training")
        .sample_size(10)
        .bench_function(format!("fnn10_30x20_{MODE}"), |b| {
            b.iter(|| train_gpso(&spec, &data, &config).unwrap())
        });
}

/// Six members with random (untrained) weights — forecast cost does not
/// depend on weight quality.
fn fixture_ensemble(series: &TaggedSeries) -> TrainedEnsemble {
    let filters = WaveletFilterPair::new(WaveletFamily::Daubechies4);
    let decomp = decompose3(&series.loads(), &filters).unwrap();
    let norms: Vec<NormalizationParams> = COMPONENTS
        .iter()
        .map(|&component| {
            let rows = build_all_from(series, decomp.component(component)).unwrap();
            let vectors: Vec<FeatureVector> = rows.into_iter().map(|(_, v)| v).collect();
            fit_normalization(&vectors).unwrap()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    let members = default_members(2)
        .into_iter()
        .map(|spec| TrainedMember {
            subnets: (0..COMPONENTS.len())
                .map(|_| SubNetwork {
                    spec,
                    weights: (0..spec.param_count())
                        .map(|_| rng.random_range(-1.0..1.0))
                        .collect(),
                })
                .collect(),
        })
        .collect();
    TrainedEnsemble {
        family: WaveletFamily::Daubechies4,
        members,
        norms,
        alpha: 20,
        teacher_forced: false,
    }
}

fn day_ahead_forecast(c: &mut Criterion) {
    let series = fixture_series();
    let ensemble = fixture_ensemble(&series);
    let day = NaiveDate::from_ymd_opt(2004, 7, 15).unwrap();
    c.benchmark_group("day_ahead_forecast")
        .sample_size(20)
        .bench_function(format!("six_members_{MODE}"), |b| {
            b.iter(|| forecast_members(&ensemble, &series, day).unwrap())
        });
}

fn wavelet_anchor(c: &mut Criterion) {
    let series = fixture_series();
    let loads = series.loads();
    let filters = WaveletFilterPair::new(WaveletFamily::Daubechies4);
    c.benchmark_group("wavelet_anchor")
        .bench_function(format!("decompose3_one_year_{MODE}"), |b| {
            b.iter(|| decompose3(&loads, &filters).unwrap())
        });
}

criterion_group!(benches, swarm_training, day_ahead_forecast, wavelet_anchor);
criterion_main!(benches);
