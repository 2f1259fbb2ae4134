//! Global-best particle-swarm training for any predictor family, plus
//! full-batch gradient descent for the backprop benchmark.
//!
//! The swarm update is synchronous: all fitness evaluations first (these may
//! run in parallel), then the pbest/gbest reduction, then every velocity and
//! position update. Randomness is reproducible by contract:
//!
//! * initialization draws come from `ChaCha8Rng::seed_from_u64(seed)` on its
//!   default stream 0, drawing each particle's position coordinates then its
//!   velocity coordinates, particle by particle;
//! * particle `i` owns an identically seeded generator moved to stream
//!   `i + 1`, from which it draws `r1` then `r2` per dimension each update.
//!
//! Because no draw depends on evaluation order, parallel and sequential
//! builds produce bit-identical results for the same seed.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::Dataset;
use crate::nnet::{self, NetworkKind, NetworkSpec};
use crate::parallel::map_ordered;

/// Swarm hyperparameters. Defaults follow the constriction-style settings
/// common for global-best PSO: w = 0.729, c1 = c2 = 1.494, with velocities
/// clamped to half the initialization-range width.
#[derive(Debug, Clone)]
pub struct SwarmConfig {
    pub swarm_size: usize,
    pub inertia: f64,
    pub cognitive: f64,
    pub social: f64,
    /// Componentwise velocity bound; applied after every update.
    pub v_max: f64,
    pub max_iterations: usize,
    /// Stop as soon as the best MSE reaches this threshold.
    pub target_error: f64,
    /// Uniform initialization range for positions.
    pub init_range: (f64, f64),
    pub seed: u64,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        Self {
            swarm_size: 30,
            inertia: 0.729,
            cognitive: 1.494,
            social: 1.494,
            v_max: 1.0,
            max_iterations: 300,
            target_error: 1e-4,
            init_range: (-1.0, 1.0),
            seed: 42,
        }
    }
}

impl SwarmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.swarm_size == 0 {
            return Err(Error::InvalidConfig {
                message: "swarm_size must be at least 1".to_string(),
            });
        }
        if self.cognitive < 0.0 || self.social < 0.0 {
            return Err(Error::InvalidConfig {
                message: "c1 and c2 must be nonnegative".to_string(),
            });
        }
        if !(self.v_max > 0.0) {
            return Err(Error::InvalidConfig {
                message: "v_max must be positive".to_string(),
            });
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig {
                message: "max_iterations must be at least 1".to_string(),
            });
        }
        if !(self.init_range.0 < self.init_range.1) {
            return Err(Error::InvalidConfig {
                message: "init_range must be a nonempty interval".to_string(),
            });
        }
        Ok(())
    }
}

/// One swarm member: current state plus its personal best.
#[derive(Debug, Clone)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub best_position: Vec<f64>,
    pub best_fitness: f64,
}

/// Best-so-far MSE per iteration; nonincreasing by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTrace {
    pub gbest_mse: Vec<f64>,
}

impl TrainingTrace {
    pub fn final_mse(&self) -> f64 {
        *self.gbest_mse.last().expect("trace has at least one entry")
    }
}

/// Dump a trace as `iteration,gbest_mse` CSV (iterations 1-based).
pub fn write_trace<W: Write>(trace: &TrainingTrace, out: &mut W) -> Result<()> {
    writeln!(out, "iteration,gbest_mse")?;
    for (i, v) in trace.gbest_mse.iter().enumerate() {
        writeln!(out, "{},{v}", i + 1)?;
    }
    Ok(())
}

/// Mean squared error of a network over a normalized dataset. Elman rows are
/// evaluated in order with context carried across rows and zeroed at the
/// start, so the value depends on row order for that family.
pub fn fitness(spec: &NetworkSpec, weights: &[f64], data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if weights.len() != spec.param_count() {
        return Err(Error::DimensionMismatch {
            expected: spec.param_count(),
            got: weights.len(),
            what: "weight length",
        });
    }
    if spec.input_dim != data.inputs[0].len() {
        return Err(Error::DimensionMismatch {
            expected: data.inputs[0].len(),
            got: spec.input_dim,
            what: "input length",
        });
    }
    let mut acc = 0.0;
    match spec.kind {
        NetworkKind::Fnn => {
            for (x, t) in data.inputs.iter().zip(&data.targets) {
                let e = nnet::fnn_apply(spec, weights, x) - t;
                acc += e * e;
            }
        }
        NetworkKind::Rbf => {
            for (x, t) in data.inputs.iter().zip(&data.targets) {
                let e = nnet::rbf_apply(spec, weights, x) - t;
                acc += e * e;
            }
        }
        NetworkKind::Elman => {
            let mut context = vec![0.0; spec.hidden_units];
            let mut hidden = vec![0.0; spec.hidden_units];
            for (x, t) in data.inputs.iter().zip(&data.targets) {
                let e = nnet::elman_apply(spec, weights, x, &context, &mut hidden) - t;
                acc += e * e;
                std::mem::swap(&mut context, &mut hidden);
            }
        }
    }
    Ok(acc / data.len() as f64)
}

/// Velocity update: v' = w·v + c1·r1∘(pbest − x) + c2·r2∘(gbest − x),
/// clamped componentwise to ±v_max.
pub fn update_velocity(
    particle: &Particle,
    gbest: &[f64],
    config: &SwarmConfig,
    r1: &[f64],
    r2: &[f64],
) -> Vec<f64> {
    let mut v = Vec::with_capacity(particle.velocity.len());
    for k in 0..particle.velocity.len() {
        let cognitive = config.cognitive * r1[k] * (particle.best_position[k] - particle.position[k]);
        let social = config.social * r2[k] * (gbest[k] - particle.position[k]);
        let raw = config.inertia * particle.velocity[k] + cognitive + social;
        v.push(raw.clamp(-config.v_max, config.v_max));
    }
    v
}

/// Position update: x' = x + v, with no position clamping.
pub fn update_position(particle: &Particle) -> Vec<f64> {
    particle
        .position
        .iter()
        .zip(&particle.velocity)
        .map(|(x, v)| x + v)
        .collect()
}

/// Global-best PSO over an arbitrary objective. This is the full training
/// loop minus the network plumbing, so closed-form objectives (sphere and
/// friends) can exercise it directly.
///
/// Each iteration evaluates all particles (in parallel when the `parallel`
/// feature is on), refreshes pbest/gbest, records the gbest value, then —
/// unless a termination criterion fired — applies the velocity and position
/// updates. Ties in the gbest reduction keep the lowest particle index.
pub fn optimize<F>(dim: usize, objective: F, config: &SwarmConfig) -> Result<(Vec<f64>, TrainingTrace)>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    config.validate()?;
    if dim == 0 {
        return Err(Error::InvalidConfig {
            message: "objective dimension must be at least 1".to_string(),
        });
    }
    let (lo, hi) = config.init_range;
    let mut master = ChaCha8Rng::seed_from_u64(config.seed);
    let mut particles: Vec<Particle> = (0..config.swarm_size)
        .map(|_| {
            let position: Vec<f64> = (0..dim).map(|_| master.random_range(lo..hi)).collect();
            let velocity: Vec<f64> = (0..dim)
                .map(|_| master.random_range(-config.v_max..config.v_max))
                .collect();
            Particle {
                best_position: position.clone(),
                best_fitness: f64::INFINITY,
                position,
                velocity,
            }
        })
        .collect();
    let mut rngs: Vec<ChaCha8Rng> = (0..config.swarm_size)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(i as u64 + 1);
            rng
        })
        .collect();

    let mut gbest_position = particles[0].position.clone();
    let mut gbest_fitness = f64::INFINITY;
    let mut trace = Vec::new();
    let mut r1 = vec![0.0; dim];
    let mut r2 = vec![0.0; dim];
    for iteration in 0..config.max_iterations {
        let fitnesses = map_ordered(&particles, |p| objective(&p.position));
        for (p, fit) in particles.iter_mut().zip(&fitnesses) {
            if *fit < p.best_fitness {
                p.best_fitness = *fit;
                p.best_position.copy_from_slice(&p.position);
            }
        }
        for p in &particles {
            if p.best_fitness < gbest_fitness {
                gbest_fitness = p.best_fitness;
                gbest_position.copy_from_slice(&p.best_position);
            }
        }
        trace.push(gbest_fitness);
        if gbest_fitness <= config.target_error || iteration + 1 == config.max_iterations {
            break;
        }
        for (p, rng) in particles.iter_mut().zip(&mut rngs) {
            for r in r1.iter_mut() {
                *r = rng.random_range(0.0..1.0);
            }
            for r in r2.iter_mut() {
                *r = rng.random_range(0.0..1.0);
            }
            p.velocity = update_velocity(p, &gbest_position, config, &r1, &r2);
            p.position = update_position(p);
        }
    }
    Ok((gbest_position, TrainingTrace { gbest_mse: trace }))
}

/// Train a network by swarm search on its dataset MSE.
pub fn train_gpso(
    spec: &NetworkSpec,
    data: &Dataset,
    config: &SwarmConfig,
) -> Result<(Vec<f64>, TrainingTrace)> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let spec = *spec;
    optimize(
        spec.param_count(),
        move |weights| fitness(&spec, weights, data).expect("dimensions fixed by optimizer"),
        config,
    )
}

/// Hyperparameters for the gradient-descent benchmark trainer.
#[derive(Debug, Clone)]
pub struct BackpropConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for BackpropConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epochs: 500,
            seed: 42,
        }
    }
}

/// Full-batch gradient descent on the MSE of a feedforward network.
/// Initial weights are drawn uniformly from [−0.5, 0.5] with the config
/// seed. The trace holds the initial MSE followed by one value per epoch;
/// unlike the swarm trace it need not be monotone.
pub fn train_backprop(
    spec: &NetworkSpec,
    data: &Dataset,
    config: &BackpropConfig,
) -> Result<(Vec<f64>, TrainingTrace)> {
    if spec.kind != NetworkKind::Fnn {
        return Err(Error::UnsupportedKind {
            kind: spec.kind.name(),
            operation: "train_backprop",
        });
    }
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut weights: Vec<f64> = (0..spec.param_count())
        .map(|_| rng.random_range(-0.5..0.5))
        .collect();
    let inputs: Vec<Vec<f64>> = data.inputs.iter().map(|x| x.to_vec()).collect();
    let mut trace = vec![fitness(spec, &weights, data)?];
    for _ in 0..config.epochs {
        let grad = nnet::backprop_gradient(spec, &weights, &inputs, &data.targets)?;
        for (w, g) in weights.iter_mut().zip(&grad) {
            *w -= config.learning_rate * g;
        }
        trace.push(fitness(spec, &weights, data)?);
    }
    Ok((weights, TrainingTrace { gbest_mse: trace }))
}

/// Derive a child seed from a master seed and a stream index (splitmix64
/// finalizer), so every sub-network trains on its own reproducible stream.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
