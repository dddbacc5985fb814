//! Effective diffusion coefficient from the mean squared displacement of an
//! unbiased ensemble in free space.

use std::time::Instant;

use super::HarnessError;
use crate::kinetic::{init_point_source, step_kinetic, Executor, FrozenEnvironment, KineticParams};
use crate::turning::{Sensitivity, TurningModel};

#[derive(Debug, Clone, PartialEq)]
pub struct MsdConfig {
    pub dim: usize,
    pub speed: f64,
    pub lambda0: f64,
    pub epsilon: f64,
    pub particles: usize,
    pub end_time: f64,
    /// Start of the fit window; `None` means `10/λ₀`.
    pub window_start: Option<f64>,
    /// Number of equally spaced sample times in the window.
    pub samples: usize,
    /// Thinning bound as a multiple of `λ₀`.
    pub lambda_max_factor: f64,
    pub seed: u64,
}

impl MsdConfig {
    pub fn new(dim: usize, speed: f64, lambda0: f64) -> Self {
        Self {
            dim,
            speed,
            lambda0,
            epsilon: 0.5,
            particles: 100_000,
            end_time: 100.0,
            window_start: None,
            samples: 64,
            lambda_max_factor: 1.25,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MsdReport {
    pub d_eff: f64,
    pub std_err: f64,
    /// `d_eff ± 3·std_err`.
    pub interval: (f64, f64),
    /// `s²/(nλ₀)`.
    pub target: f64,
    pub window: (f64, f64),
    /// The fit window starts after many mean run times (`ε²/λ₀` in scaled time).
    pub ballistic_cleared: bool,
    pub particles: usize,
    pub seed: u64,
    pub runtime_s: f64,
}

impl MsdReport {
    pub fn relative_error(&self) -> f64 {
        (self.d_eff - self.target).abs() / self.target
    }
}

/// Fits `MSD(t) = 2n D t + c` per particle over the window and averages
/// the slopes; the spread of the per-particle slopes gives the error bar.
pub fn msd_experiment(cfg: &MsdConfig, exec: &Executor) -> Result<MsdReport, HarnessError> {
    let start = Instant::now();
    if cfg.samples < 2 || !(cfg.end_time > 0.0) || !(cfg.lambda0 > 0.0) || cfg.lambda_max_factor < 1.0 {
        return Err(HarnessError::Invalid("msd needs ≥2 samples, T > 0, λ₀ > 0 and a bound ≥ λ₀".into()));
    }
    let t0 = cfg.window_start.unwrap_or(10.0 / cfg.lambda0);
    if !(t0 < cfg.end_time) {
        return Err(HarnessError::Invalid(format!(
            "fit window [{t0}, {}] is empty",
            cfg.end_time
        )));
    }
    let lambda_max = cfg.lambda_max_factor * cfg.lambda0;
    // μ₀ = λ₀ with ρ = S = 1 gives the constant rate λ₀
    let model = TurningModel::new(cfg.lambda0, 0.0, 1.0, Sensitivity::Constant)?.with_clamps(0.0, lambda_max)?;
    let params = KineticParams::new(cfg.dim, cfg.speed, cfg.epsilon, model);
    params.validate()?;
    let env = FrozenEnvironment::uniform(1.0, 1.0);
    let mut ens = init_point_source(cfg.dim, cfg.particles, [0.0; 2], cfg.speed, cfg.epsilon, cfg.seed)?;
    let times: Vec<f64> = (0..cfg.samples)
        .map(|k| t0 + (cfg.end_time - t0) * k as f64 / (cfg.samples - 1) as f64)
        .collect();
    let t_mean = times.iter().sum::<f64>() / times.len() as f64;
    let sxx: f64 = times.iter().map(|t| (t - t_mean).powi(2)).sum();
    let mut sxy = vec![0.0; cfg.particles];
    let max_dt = params.max_dt();
    let mut t = 0.0;
    for &target in &times {
        while t < target {
            let remaining = target - t;
            let dt = max_dt.min(remaining);
            step_kinetic(&mut ens, &env, &params, None, dt, exec)?;
            t = if dt == remaining { target } else { t + dt };
        }
        let w = target - t_mean;
        for (acc, p) in sxy.iter_mut().zip(&ens.particles) {
            *acc += w * (p.pos[0] * p.pos[0] + p.pos[1] * p.pos[1]);
        }
    }
    let scale = 1.0 / (2.0 * cfg.dim as f64 * sxx);
    let n = cfg.particles as f64;
    let mean = sxy.iter().sum::<f64>() * scale / n;
    let var = sxy.iter().map(|s| (s * scale - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    let se = (var / n).sqrt();
    let run_time = cfg.epsilon * cfg.epsilon / cfg.lambda0;
    Ok(MsdReport {
        d_eff: mean,
        std_err: se,
        interval: (mean - 3.0 * se, mean + 3.0 * se),
        target: cfg.speed * cfg.speed / (cfg.dim as f64 * cfg.lambda0),
        window: (t0, cfg.end_time),
        ballistic_cleared: t0 >= 10.0 * run_time,
        particles: cfg.particles,
        seed: cfg.seed,
        runtime_s: start.elapsed().as_secs_f64(),
    })
}
