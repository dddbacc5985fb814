//! Weighted particle ensembles and their random streams.
//!
//! Every particle owns a ChaCha8 stream selected by its id; the step index
//! picks a disjoint window of that stream. The draws a particle sees are
//! therefore fixed by `(seed, id, step)` and do not depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Executor, KineticError};
use crate::grid::Grid;

/// Each step gets a window of 2⁴⁰ 32-bit words of the particle's stream.
const STEP_WINDOW_BITS: u32 = 40;
/// Offset inside a step window reserved for draws made when a particle splits.
pub(crate) const SPLIT_OFFSET: u128 = 1 << 39;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub id: u64,
    pub pos: [f64; 2],
    pub vel: [f64; 2],
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    pub particles: Vec<Particle>,
    pub dim: usize,
    pub speed: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// Weight each particle carried at initialization.
    pub initial_weight: f64,
    /// Index of the next step; step 0 is used for initialization.
    pub step: u64,
    pub next_id: u64,
    key: [u8; 32],
}

/// Aggregate description of an ensemble for run reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSummary {
    pub count: usize,
    pub total_weight: f64,
    pub mean_position: [f64; 2],
    pub max_speed_error: f64,
}

pub(crate) fn derive_key(seed: u64) -> [u8; 32] {
    let mut key = [0u8; 32];
    ChaCha8Rng::seed_from_u64(seed).fill(&mut key);
    key
}

/// Stream of particle `id` positioned at the start of `step`'s window.
#[inline]
pub(crate) fn stream(key: &[u8; 32], id: u64, step: u64, offset: u128) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::from_seed(*key);
    rng.set_stream(id);
    rng.set_word_pos(((step as u128) << STEP_WINDOW_BITS) + offset);
    rng
}

/// Velocity uniform on `s·S^{n−1}`.
#[inline]
pub fn sample_velocity<R: Rng + ?Sized>(rng: &mut R, dim: usize, speed: f64) -> [f64; 2] {
    if dim == 1 {
        if rng.random::<bool>() {
            [speed, 0.0]
        } else {
            [-speed, 0.0]
        }
    } else {
        let theta = std::f64::consts::TAU * rng.random::<f64>();
        let (sin, cos) = theta.sin_cos();
        [speed * cos, speed * sin]
    }
}

impl ParticleEnsemble {
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.particles.iter().map(|p| p.weight).sum()
    }

    pub(crate) fn key(&self) -> &[u8; 32] {
        &self.key
    }

    pub fn summary(&self) -> EnsembleSummary {
        let total_weight = self.total_weight();
        let n = self.len().max(1) as f64;
        let mut mean = [0.0; 2];
        let mut err: f64 = 0.0;
        for p in &self.particles {
            mean[0] += p.pos[0];
            mean[1] += p.pos[1];
            let speed = (p.vel[0] * p.vel[0] + p.vel[1] * p.vel[1]).sqrt();
            err = err.max((speed - self.speed).abs() / self.speed);
        }
        EnsembleSummary {
            count: self.len(),
            total_weight,
            mean_position: [mean[0] / n, mean[1] / n],
            max_speed_error: err,
        }
    }
}

fn empty(dim: usize, speed: f64, epsilon: f64, seed: u64, n: usize, weight: f64) -> ParticleEnsemble {
    ParticleEnsemble {
        particles: Vec::with_capacity(n),
        dim,
        speed,
        epsilon,
        seed,
        initial_weight: weight,
        step: 1,
        next_id: n as u64,
        key: derive_key(seed),
    }
}

/// Samples `n` particles from the cell density `u0`: the cell is drawn with
/// probability proportional to its mass, the position uniformly inside it
/// and the velocity uniformly on the sphere. Each weight is `∫u0/n`.
#[allow(clippy::too_many_arguments)]
pub fn init_ensemble(
    grid: &Grid,
    u0: &[f64],
    n: usize,
    speed: f64,
    epsilon: f64,
    seed: u64,
    exec: &Executor,
) -> Result<ParticleEnsemble, KineticError> {
    grid.check(u0)?;
    if n == 0 {
        return Err(KineticError::NoParticles);
    }
    for (cell, &value) in u0.iter().enumerate() {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(KineticError::BadDensity { cell, value });
        }
    }
    let mut cdf = Vec::with_capacity(u0.len());
    let mut acc = 0.0;
    for &x in u0 {
        acc += x;
        cdf.push(acc);
    }
    if acc <= 0.0 {
        return Err(KineticError::ZeroMass);
    }
    let mass = grid.integral(u0);
    let dim = grid.dim();
    let mut ens = empty(dim, speed, epsilon, seed, n, mass / n as f64);
    ens.particles = (0..n as u64)
        .map(|id| Particle {
            id,
            pos: [0.0; 2],
            vel: [0.0; 2],
            weight: mass / n as f64,
        })
        .collect();
    let key = ens.key;
    let h = grid.h();
    let origin = grid.origin();
    let nx = grid.nx();
    exec.map_chunks_mut(&mut ens.particles, super::particle_chunk(n), |_, chunk| {
        for p in chunk {
            let mut rng = stream(&key, p.id, 0, 0);
            let target = rng.random::<f64>() * acc;
            // first cell whose cumulative mass exceeds the target; never an empty cell
            let cell = cdf.partition_point(|&c| c <= target).min(cdf.len() - 1);
            let (i, j) = (cell % nx, cell / nx);
            let x = origin[0] + (i as f64 + rng.random::<f64>()) * h;
            let y = if dim == 2 {
                origin[1] + (j as f64 + rng.random::<f64>()) * h
            } else {
                0.0
            };
            p.pos = [x, y];
            p.vel = sample_velocity(&mut rng, dim, speed);
        }
    });
    Ok(ens)
}

/// `n` particles of unit total mass at one point, velocities uniform.
pub fn init_point_source(
    dim: usize,
    n: usize,
    at: [f64; 2],
    speed: f64,
    epsilon: f64,
    seed: u64,
) -> Result<ParticleEnsemble, KineticError> {
    if n == 0 {
        return Err(KineticError::NoParticles);
    }
    if !(dim == 1 || dim == 2) {
        return Err(KineticError::InvalidParameter {
            name: "dim",
            value: dim as f64,
        });
    }
    let w = 1.0 / n as f64;
    let mut ens = empty(dim, speed, epsilon, seed, n, w);
    let at = if dim == 1 { [at[0], 0.0] } else { at };
    for id in 0..n as u64 {
        let mut rng = stream(&ens.key, id, 0, 0);
        ens.particles.push(Particle {
            id,
            pos: at,
            vel: sample_velocity(&mut rng, dim, speed),
            weight: w,
        });
    }
    Ok(ens)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_mass_cell_holds_every_particle() {
        let g = Grid::centered(2, 8.0, 1.0).unwrap();
        let mut u0 = vec![0.0; g.len()];
        let k = g.index(5, 2);
        u0[k] = 3.0;
        let ens = init_ensemble(&g, &u0, 1000, 1.0, 0.1, 9, &Executor::serial()).unwrap();
        let c = g.center(5, 2);
        for p in &ens.particles {
            assert!((p.pos[0] - c.x).abs() <= 0.5 && (p.pos[1] - c.y).abs() <= 0.5);
        }
        assert!((ens.total_weight() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn total_weight_is_initial_mass() {
        let g = Grid::centered(2, 40.0, 1.0).unwrap();
        let u0 = g.sample(|p| 0.71 * (-(p.norm_squared()) / 6.25).exp());
        let ens = init_ensemble(&g, &u0, 5000, 1.0, 0.1, 1, &Executor::serial()).unwrap();
        let mass = g.integral(&u0);
        assert!((ens.total_weight() - mass).abs() <= 1e-12 * mass);
    }

    #[test]
    fn rejects_empty_and_zero_mass() {
        let g = Grid::centered(1, 4.0, 1.0).unwrap();
        let exec = Executor::serial();
        assert_eq!(
            init_ensemble(&g, &[0.0; 4], 10, 1.0, 0.1, 0, &exec),
            Err(KineticError::ZeroMass)
        );
        assert_eq!(
            init_ensemble(&g, &[1.0; 4], 0, 1.0, 0.1, 0, &exec),
            Err(KineticError::NoParticles)
        );
        assert!(matches!(
            init_ensemble(&g, &[1.0, -1.0, 0.0, 0.0], 10, 1.0, 0.1, 0, &exec),
            Err(KineticError::BadDensity { cell: 1, .. })
        ));
    }

    #[test]
    fn velocity_angles_are_uniform() {
        let ens = init_point_source(2, 100_000, [0.0, 0.0], 1.0, 0.1, 4).unwrap();
        let mut bins = [0usize; 8];
        for p in &ens.particles {
            let a = p.vel[1].atan2(p.vel[0]).rem_euclid(std::f64::consts::TAU);
            bins[((a / std::f64::consts::TAU) * 8.0) as usize % 8] += 1;
        }
        let expected = 100_000.0 / 8.0;
        let sd = (100_000.0f64 * (1.0 / 8.0) * (7.0 / 8.0)).sqrt();
        let mut chi2 = 0.0;
        for b in bins {
            assert!((b as f64 - expected).abs() < 4.0 * sd, "{bins:?}");
            chi2 += (b as f64 - expected).powi(2) / expected;
        }
        // 7 degrees of freedom, 0.1% critical value
        assert!(chi2 < 24.32, "chi2 {chi2}");
    }

    #[test]
    fn streams_depend_only_on_seed_id_and_step() {
        let key = derive_key(42);
        let a: u64 = stream(&key, 7, 3, 0).random();
        let b: u64 = stream(&key, 7, 3, 0).random();
        let c: u64 = stream(&key, 8, 3, 0).random();
        let d: u64 = stream(&key, 7, 4, 0).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn initialization_independent_of_workers() {
        let g = Grid::centered(2, 20.0, 1.0).unwrap();
        let u0 = g.sample(|p| (-(p.norm_squared()) / 10.0).exp());
        let a = init_ensemble(&g, &u0, 40_000, 1.0, 0.1, 5, &Executor::serial()).unwrap();
        let b = init_ensemble(&g, &u0, 40_000, 1.0, 0.1, 5, &Executor::new(3).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}
