//! One transport step of the particle ensemble.

use std::ops::AddAssign;

use rand::Rng;

use super::boundary::{fly_free, Domain, HARD_REFLECTION_LIMIT};
use super::ensemble::{sample_velocity, stream, Particle, ParticleEnsemble, SPLIT_OFFSET};
use super::environment::Environment;
use super::thinning::ThinningClock;
use super::{particle_chunk, Executor, KineticError, KineticParams};
use crate::turning::Clamp;
use crate::velocity::Vec2;

/// Particles with more wall hits than this in one step are flagged.
pub const MAX_REFLECTIONS_PER_STEP: u32 = 4;

/// Event counts of one or more steps.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub candidates: u64,
    pub turns: u64,
    pub clamp_low: u64,
    pub clamp_high: u64,
    pub reflections: u64,
    pub max_reflections: u32,
    /// Particle-steps with more than `MAX_REFLECTIONS_PER_STEP` wall hits.
    pub reflection_flags: u64,
    pub splits: u64,
}

impl StepStats {
    pub fn clamp_events(&self) -> u64 {
        self.clamp_low + self.clamp_high
    }

    /// Fraction of kept turning events at which a clamp fired.
    pub fn clamp_fraction(&self) -> f64 {
        if self.candidates == 0 {
            0.0
        } else {
            self.clamp_events() as f64 / self.turns.max(1) as f64
        }
    }
}

impl AddAssign for StepStats {
    fn add_assign(&mut self, o: Self) {
        self.candidates += o.candidates;
        self.turns += o.turns;
        self.clamp_low += o.clamp_low;
        self.clamp_high += o.clamp_high;
        self.reflections += o.reflections;
        self.max_reflections = self.max_reflections.max(o.max_reflections);
        self.reflection_flags += o.reflection_flags;
        self.splits += o.splits;
    }
}

struct Ctx<'a, E: Environment> {
    env: &'a E,
    params: &'a KineticParams,
    clock: ThinningClock,
    domain: Option<&'a Domain>,
    dt: f64,
    key: &'a [u8; 32],
    step: u64,
}

#[inline]
fn advance<E: Environment>(p: &mut Particle, ctx: &Ctx<'_, E>, stats: &mut StepStats) -> Result<(), KineticError> {
    let params = ctx.params;
    let eps = params.epsilon;
    let scale = 1.0 / eps;
    let mut rng = stream(ctx.key, p.id, ctx.step, 0);
    let mut reflections = 0u32;
    let mut t = 0.0;
    loop {
        let gap = ctx.clock.gap(&mut rng);
        let remaining = ctx.dt - t;
        let flight = gap.min(remaining);
        match ctx.domain {
            Some(d) => reflections += d.fly(&mut p.pos, &mut p.vel, scale, flight, params.reflection),
            None => fly_free(&mut p.pos, &p.vel, scale, flight),
        }
        if gap >= remaining {
            break;
        }
        t += gap;
        stats.candidates += 1;
        let probe = ctx.env.probe(&p.pos);
        let v = Vec2::new(p.vel[0], p.vel[1]);
        let (rate, clamp) = params.model.total_rate(probe.rho, probe.s, &v, &probe.grad_s, eps);
        if ctx.clock.accept(&mut rng, rate) {
            stats.turns += 1;
            match clamp {
                Clamp::Low => stats.clamp_low += 1,
                Clamp::High => stats.clamp_high += 1,
                Clamp::None => {}
            }
            p.vel = sample_velocity(&mut rng, params.dim, params.speed);
        } else if clamp == Clamp::High {
            // the true rate exceeds the bound: the candidate should have been kept
            stats.clamp_high += 1;
        }
    }
    stats.reflections += reflections as u64;
    stats.max_reflections = stats.max_reflections.max(reflections);
    if reflections > MAX_REFLECTIONS_PER_STEP {
        stats.reflection_flags += 1;
    }
    if reflections >= HARD_REFLECTION_LIMIT {
        return Err(KineticError::TooManyReflections {
            id: p.id,
            count: reflections,
        });
    }
    if let Some(d) = ctx.domain {
        if !d.contains(&p.pos) {
            return Err(KineticError::Escaped {
                id: p.id,
                x: p.pos[0],
                y: p.pos[1],
            });
        }
    }
    if params.growth_rate > 0.0 {
        p.weight *= 1.0 + ctx.dt * params.growth_rate * ctx.env.chemical(&p.pos);
    }
    if !(p.pos[0].is_finite() && p.pos[1].is_finite() && p.weight.is_finite()) {
        return Err(KineticError::NonFinite("particle state"));
    }
    Ok(())
}

/// Advances every particle by `dt` of scaled time: free flight at `v/ε`,
/// thinned turning at candidate rate `λ_max/ε²`, reflection at the walls of
/// `domain` (free space if `None`) and weight growth.
pub fn step_kinetic<E: Environment>(
    ens: &mut ParticleEnsemble,
    env: &E,
    params: &KineticParams,
    domain: Option<&Domain>,
    dt: f64,
    exec: &Executor,
) -> Result<StepStats, KineticError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(KineticError::InvalidParameter { name: "dt", value: dt });
    }
    let lambda_max = params.model.lambda_max;
    if dt * lambda_max > 0.5 * (1.0 + 1e-12) {
        return Err(KineticError::ThinningBound { dt, lambda_max });
    }
    let key = *ens.key();
    let step = ens.step;
    let ctx = Ctx {
        env,
        params,
        clock: ThinningClock::new(lambda_max, params.epsilon),
        domain,
        dt,
        key: &key,
        step,
    };
    let chunk = particle_chunk(ens.len());
    let results = exec.map_chunks_mut(&mut ens.particles, chunk, |_, particles| {
        let mut stats = StepStats::default();
        for p in particles {
            advance(p, &ctx, &mut stats)?;
        }
        Ok::<_, KineticError>(stats)
    });
    let mut stats = StepStats::default();
    for r in results {
        stats += r?;
    }
    if params.splitting {
        stats.splits = split_heavy(ens, params, step);
    }
    ens.step += 1;
    Ok(stats)
}

/// Halves every particle heavier than twice the initial weight. The child
/// starts at the parent's position with a fresh velocity.
fn split_heavy(ens: &mut ParticleEnsemble, params: &KineticParams, step: u64) -> u64 {
    let threshold = 2.0 * ens.initial_weight;
    let key = *ens.key();
    let mut children = Vec::new();
    for p in ens.particles.iter_mut() {
        if p.weight > threshold {
            p.weight *= 0.5;
            let mut rng = stream(&key, p.id, step, SPLIT_OFFSET);
            let _: u32 = rng.random();
            children.push(Particle {
                id: 0,
                pos: p.pos,
                vel: sample_velocity(&mut rng, params.dim, params.speed),
                weight: p.weight,
            });
        }
    }
    let count = children.len() as u64;
    for mut c in children {
        c.id = ens.next_id;
        ens.next_id += 1;
        ens.particles.push(c);
    }
    count
}
