//! Weighted-particle simulation of the scaled velocity-jump process.
//!
//! Particles live in the scaled variables `(ξ, τ)`: they fly with velocity
//! `v/ε`, turn at rate `λ/ε²` with `λ = λ₀(ρ,S) + ελ₁(v,S,∇S)`, reflect at
//! the walls and gain weight at rate `growth·S`. The chemical lives on a
//! grid and is updated explicitly from the deposited density.

pub mod boundary;
pub mod chemical;
pub mod deposit;
pub mod ensemble;
pub mod environment;
pub mod run;
pub mod step;
pub mod thinning;

use rayon::prelude::*;
use thiserror::Error;

use crate::grid::GridError;
use crate::turning::{TurningError, TurningModel};

pub use boundary::{reflect_velocity, Domain, Flight, ReflectionMode};
pub use chemical::{chemical_stable_dt, update_chemical, ChemicalParams};
pub use deposit::{deposit_density, deposit_with_variance};
pub use ensemble::{init_ensemble, init_point_source, EnsembleSummary, Particle, ParticleEnsemble};
pub use environment::{Environment, FrozenEnvironment, GridEnvironment, Probe};
pub use run::{run_kinetic, KineticRun, KineticSnapshot};
pub use step::{step_kinetic, StepStats};
pub use thinning::{sample_run_length, ThinningClock};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KineticError {
    #[error("ensemble needs at least one particle")]
    NoParticles,
    #[error("initial density has zero total mass")]
    ZeroMass,
    #[error("initial density is negative or not finite in cell {cell}: {value}")]
    BadDensity { cell: usize, value: f64 },
    #[error("dt = {dt} violates the thinning bound dt·λ_max ≤ 0.5 (λ_max = {lambda_max})")]
    ThinningBound { dt: f64, lambda_max: f64 },
    #[error("dt = {dt} exceeds the stable chemical step {limit}")]
    ChemicalUnstable { dt: f64, limit: f64 },
    #[error("particle {id} reflected {count} times in one step; the flight is degenerate")]
    TooManyReflections { id: u64, count: u32 },
    #[error("particle {id} left the domain at ({x}, {y})")]
    Escaped { id: u64, x: f64, y: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("kinetic parameter {name} out of range: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("worker pool: {0}")]
    Workers(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Turning(#[from] TurningError),
}

/// Static parameters of the particle dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticParams {
    pub dim: usize,
    pub speed: f64,
    pub epsilon: f64,
    pub model: TurningModel,
    pub reflection: ReflectionMode,
    /// Weight growth per unit chemical and unit time; zero disables growth.
    pub growth_rate: f64,
    /// Halve particles whose weight exceeds twice the initial weight.
    pub splitting: bool,
}

impl KineticParams {
    pub fn new(dim: usize, speed: f64, epsilon: f64, model: TurningModel) -> Self {
        Self {
            dim,
            speed,
            epsilon,
            model,
            reflection: ReflectionMode::Specular,
            growth_rate: 0.0,
            splitting: false,
        }
    }

    pub fn validate(&self) -> Result<(), KineticError> {
        if !(self.dim == 1 || self.dim == 2) {
            return Err(KineticError::InvalidParameter {
                name: "dim",
                value: self.dim as f64,
            });
        }
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            return Err(KineticError::InvalidParameter {
                name: "speed",
                value: self.speed,
            });
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(KineticError::InvalidParameter {
                name: "epsilon",
                value: self.epsilon,
            });
        }
        if !(self.growth_rate >= 0.0 && self.growth_rate.is_finite()) {
            return Err(KineticError::InvalidParameter {
                name: "growth_rate",
                value: self.growth_rate,
            });
        }
        self.model.clone().validated()?;
        Ok(())
    }

    /// Largest step allowed by the thinning bound.
    pub fn max_dt(&self) -> f64 {
        0.5 / self.model.lambda_max
    }
}

/// Runs chunked work serially or on a fixed-size pool. Chunk boundaries do
/// not depend on the worker count, so ordered reductions over chunk results
/// are bitwise identical for any number of workers.
#[derive(Debug)]
pub struct Executor {
    pool: Option<rayon::ThreadPool>,
}

impl Executor {
    pub fn serial() -> Self {
        Self { pool: None }
    }

    pub fn new(workers: usize) -> Result<Self, KineticError> {
        if workers <= 1 {
            return Ok(Self::serial());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| KineticError::Workers(e.to_string()))?;
        Ok(Self { pool: Some(pool) })
    }

    pub fn workers(&self) -> usize {
        self.pool.as_ref().map_or(1, |p| p.current_num_threads())
    }

    /// `f(offset, chunk)` for consecutive chunks of `data`, results in chunk order.
    pub fn map_chunks_mut<T, R, F>(&self, data: &mut [T], chunk: usize, f: F) -> Vec<R>
    where
        T: Send,
        R: Send,
        F: Fn(usize, &mut [T]) -> R + Sync + Send,
    {
        let chunk = chunk.max(1);
        match &self.pool {
            None => data.chunks_mut(chunk).enumerate().map(|(c, s)| f(c * chunk, s)).collect(),
            Some(pool) => pool.install(|| {
                data.par_chunks_mut(chunk)
                    .enumerate()
                    .map(|(c, s)| f(c * chunk, s))
                    .collect()
            }),
        }
    }

    pub fn map_chunks<T, R, F>(&self, data: &[T], chunk: usize, f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(usize, &[T]) -> R + Sync + Send,
    {
        let chunk = chunk.max(1);
        match &self.pool {
            None => data.chunks(chunk).enumerate().map(|(c, s)| f(c * chunk, s)).collect(),
            Some(pool) => pool.install(|| {
                data.par_chunks(chunk)
                    .enumerate()
                    .map(|(c, s)| f(c * chunk, s))
                    .collect()
            }),
        }
    }
}

impl Default for Executor {
    fn default() -> Self {
        Self::serial()
    }
}

/// Chunk length for particle loops: at least 16384 particles and at most
/// 64 chunks.
pub fn particle_chunk(n: usize) -> usize {
    16_384usize.max(n.div_ceil(64))
}
