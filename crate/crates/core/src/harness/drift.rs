//! Chemotactic drift of particles in a frozen linear chemical profile.

use std::time::Instant;

use super::HarnessError;
use crate::kinetic::{init_point_source, step_kinetic, Executor, FrozenEnvironment, KineticParams, StepStats};
use crate::turning::{chemotactic_velocity_closed_form, Sensitivity, TurningModel};
use crate::velocity::Vec2;

#[derive(Debug, Clone, PartialEq)]
pub struct DriftConfig {
    pub speed: f64,
    pub mu0: f64,
    pub chi0: f64,
    pub kd: f64,
    pub sensitivity: Sensitivity,
    /// Frozen density and chemical seen by the turning rate.
    pub rho: f64,
    pub s: f64,
    pub grad_s: Vec2,
    pub epsilon: f64,
    pub lambda_max: f64,
    pub particles: usize,
    pub end_time: f64,
    pub seed: u64,
    /// Clamp events above this fraction of turns are flagged.
    pub clamp_tolerance: f64,
}

impl DriftConfig {
    pub fn new() -> Self {
        Self {
            speed: 1.0,
            mu0: 1.0,
            chi0: 2.5,
            kd: 1.0,
            sensitivity: Sensitivity::Constant,
            rho: 1.0,
            s: 1.0,
            grad_s: Vec2::new(0.1, 0.0),
            epsilon: 0.1,
            lambda_max: 1.1,
            particles: 100_000,
            end_time: 10.0,
            seed: 1,
            clamp_tolerance: 1e-3,
        }
    }
}

impl Default for DriftConfig {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftReport {
    /// Mean velocity along `∇S`.
    pub measured: f64,
    pub std_err: f64,
    /// Closed-form limit `−σκρS|∇S|`.
    pub closed_form: f64,
    /// Stationary mean velocity of the scaled process at this `ε`.
    pub exact: f64,
    /// `measured/std_err`; positive means up the gradient.
    pub z_score: f64,
    pub stats: StepStats,
    pub clamp_flag: bool,
    pub runtime_s: f64,
}

impl DriftReport {
    pub fn relative_error(&self) -> f64 {
        (self.measured - self.closed_form).abs() / self.closed_form.abs()
    }

    pub fn sign_ok(&self, sigmas: f64) -> bool {
        self.z_score * self.closed_form.signum() > sigmas
    }
}

/// Stationary mean velocity along `∇S` of a 2-D process with rate
/// `λ₀ + b cos θ`, `b = εκs|∇S|`, flying at `s/ε`.
pub fn drift_exact(speed: f64, epsilon: f64, lambda0: f64, kappa: f64, grad: f64) -> f64 {
    let b = epsilon * kappa * speed * grad;
    if b == 0.0 {
        return 0.0;
    }
    (speed / epsilon) * ((lambda0 * lambda0 - b * b).sqrt() - lambda0) / b
}

pub fn drift_experiment(cfg: &DriftConfig, exec: &Executor) -> Result<DriftReport, HarnessError> {
    let start = Instant::now();
    let g = cfg.grad_s.norm();
    if !(g > 0.0) || !(cfg.end_time > 0.0) || cfg.particles < 2 {
        return Err(HarnessError::Invalid("drift needs |∇S| > 0, T > 0 and two particles".into()));
    }
    let model = TurningModel::new(cfg.mu0, cfg.chi0, cfg.kd, cfg.sensitivity.clone())?.with_clamps(0.0, cfg.lambda_max)?;
    let params = KineticParams::new(2, cfg.speed, cfg.epsilon, model.clone());
    params.validate()?;
    let env = FrozenEnvironment::linear(cfg.rho, cfg.s, cfg.grad_s);
    let mut ens = init_point_source(2, cfg.particles, [0.0; 2], cfg.speed, cfg.epsilon, cfg.seed)?;
    let mut stats = StepStats::default();
    let mut t = 0.0;
    while t < cfg.end_time {
        let remaining = cfg.end_time - t;
        let dt = params.max_dt().min(remaining);
        stats += step_kinetic(&mut ens, &env, &params, None, dt, exec)?;
        t = if dt == remaining { cfg.end_time } else { t + dt };
    }
    let dir = cfg.grad_s / g;
    let proj: Vec<f64> = ens
        .particles
        .iter()
        .map(|p| (p.pos[0] * dir.x + p.pos[1] * dir.y) / cfg.end_time)
        .collect();
    let n = proj.len() as f64;
    let mean = proj.iter().sum::<f64>() / n;
    let var = proj.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    let kappa = model.kappa(cfg.s)?;
    let closed = chemotactic_velocity_closed_form(cfg.speed, cfg.mu0, 2, kappa, cfg.rho, cfg.s, &cfg.grad_s).dot(&dir);
    let lambda0 = model.lambda0(cfg.rho, cfg.s);
    Ok(DriftReport {
        measured: mean,
        std_err: se,
        closed_form: closed,
        exact: drift_exact(cfg.speed, cfg.epsilon, lambda0, kappa, g),
        z_score: mean / se,
        clamp_flag: stats.clamp_fraction() > cfg.clamp_tolerance,
        stats,
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_drift_tends_to_closed_form() {
        // σ = 1/2, κ = −2.5, |∇S| = 0.1
        for eps in [1e-2, 1e-3, 1e-4] {
            let w = drift_exact(1.0, eps, 1.0, -2.5, 0.1);
            assert!((w - 0.125).abs() < 0.2 * eps, "{eps} {w}");
        }
        assert_eq!(drift_exact(1.0, 0.1, 1.0, 0.0, 0.1), 0.0);
    }

    #[test]
    fn small_run_drifts_up_the_gradient() {
        let mut cfg = DriftConfig::new();
        cfg.particles = 20_000;
        cfg.end_time = 5.0;
        let rep = drift_experiment(&cfg, &Executor::serial()).unwrap();
        assert!((rep.closed_form - 0.125).abs() < 1e-15);
        assert!(rep.sign_ok(3.0), "{rep:?}");
        assert!((rep.measured - rep.exact).abs() < 4.0 * rep.std_err, "{rep:?}");
        assert!(!rep.clamp_flag);
    }
}
