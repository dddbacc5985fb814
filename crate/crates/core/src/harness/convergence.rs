//! Distance between the particle density and the continuum limit as `ε → 0`.

use std::time::Instant;

use super::HarnessError;
use crate::grid::{FieldState, Grid};
use crate::kinetic::{
    deposit_with_variance, init_ensemble, run_kinetic, ChemicalParams, Executor, KineticParams, KineticRun, StepStats,
};
use crate::pde::{run_pde, PdeParams};
use crate::profile::Profile;
use crate::turning::{Sensitivity, TurningModel};

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSetup {
    pub dim: usize,
    pub length: f64,
    /// Comparison (and particle deposit) grid spacing.
    pub h: f64,
    /// The continuum solution is computed on a grid `refine` times finer.
    pub refine: usize,
    pub sigma0: f64,
    pub mu0: f64,
    pub chi0: f64,
    pub sensitivity: Sensitivity,
    pub u0: Profile,
    pub v0: Profile,
    pub end_time: f64,
    pub epsilons: Vec<f64>,
    pub particles: usize,
    pub lambda_max: f64,
    pub kinetic_dt: f64,
    pub pde_dt_max: Option<f64>,
    pub seed: u64,
}

impl ConvergenceSetup {
    /// One-dimensional default ladder.
    pub fn ladder() -> Self {
        Self {
            dim: 1,
            length: 8.0,
            h: 0.1,
            refine: 4,
            sigma0: 1.0,
            mu0: 0.1,
            chi0: 2.0,
            sensitivity: Sensitivity::ReceptorLaw,
            u0: Profile::Bump {
                base: 0.8,
                amp: 0.6,
                width2: 0.5,
                center: [0.0, 0.0],
            },
            v0: Profile::Cosine {
                mean: 1.0,
                amp: 0.3,
                waves: 1.0,
            },
            end_time: 1.0,
            epsilons: vec![0.4, 0.2, 0.1],
            particles: 400_000,
            lambda_max: 1.0,
            kinetic_dt: 0.01,
            pde_dt_max: None,
            seed: 1,
        }
    }

    /// `s̃ = √(nσ₀μ̃₀)`, the speed that makes the limit coefficient `σ₀`.
    pub fn speed(&self) -> f64 {
        (self.dim as f64 * self.sigma0 * self.mu0).sqrt()
    }

    pub fn grid(&self) -> Result<Grid, HarnessError> {
        Ok(Grid::centered(self.dim, self.length, self.h)?)
    }

    pub fn fine_grid(&self) -> Result<Grid, HarnessError> {
        Ok(Grid::centered(self.dim, self.length, self.h / self.refine as f64)?)
    }

    fn validate(&self) -> Result<(), HarnessError> {
        if self.refine == 0 || self.epsilons.is_empty() || self.particles == 0 || !(self.end_time > 0.0) {
            return Err(HarnessError::Invalid(
                "convergence needs refine ≥ 1, at least one ε, particles and T > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub epsilon: f64,
    /// `Σ|ρ − E[ρ]| / Σ E[ρ]` on the comparison grid.
    pub l1_error: f64,
    /// `max|ρ − E[ρ]| / max E[ρ]`.
    pub linf_error: f64,
    /// Expected L1 size of the Monte Carlo noise alone.
    pub noise_l1: f64,
    pub stats: StepStats,
    pub particles: usize,
    pub seed: u64,
    pub runtime_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// The limit solution seen through the deposit kernel.
    pub reference: Vec<f64>,
    pub pde_steps: u64,
}

impl ConvergenceReport {
    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].l1_error < w[0].l1_error)
    }

    pub fn final_error(&self) -> f64 {
        self.rows.last().map_or(f64::NAN, |r| r.l1_error)
    }

    /// Least-squares slope of `log error` against `log ε`.
    pub fn observed_rate(&self) -> f64 {
        let pts: Vec<(f64, f64)> = self.rows.iter().map(|r| (r.epsilon.ln(), r.l1_error.ln())).collect();
        let n = pts.len() as f64;
        if pts.len() < 2 {
            return f64::NAN;
        }
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    }
}

/// Mean deposit that an exact sample of the fine-grid field `u` would
/// produce on `grid`: each fine cell is split into `sub` points per axis
/// and deposited with the same cloud-in-cell kernel as the particles.
pub fn expected_deposit(fine: &Grid, u: &[f64], grid: &Grid, sub: usize) -> Vec<f64> {
    let mut out = vec![0.0; grid.len()];
    let hf = fine.h();
    let sub = sub.max(1);
    let ny_sub = if fine.dim() == 1 { 1 } else { sub };
    let w = fine.cell_volume() / (sub * ny_sub) as f64;
    for j in 0..fine.ny() {
        for i in 0..fine.nx() {
            let m = u[fine.index(i, j)] * w;
            if m == 0.0 {
                continue;
            }
            let c = fine.center(i, j);
            for b in 0..ny_sub {
                for a in 0..sub {
                    let x = c.x + hf * ((a as f64 + 0.5) / sub as f64 - 0.5);
                    let y = if fine.dim() == 1 {
                        c.y
                    } else {
                        c.y + hf * ((b as f64 + 0.5) / sub as f64 - 0.5)
                    };
                    let (idx, wt) = grid.cic(&[x, y]);
                    for k in 0..4 {
                        out[idx[k]] += m * wt[k];
                    }
                }
            }
        }
    }
    let vol = grid.cell_volume();
    out.iter_mut().for_each(|x| *x /= vol);
    out
}

pub fn convergence_study(setup: &ConvergenceSetup, exec: &Executor) -> Result<ConvergenceReport, HarnessError> {
    setup.validate()?;
    let grid = setup.grid()?;
    let fine = setup.fine_grid()?;
    let u_fine = setup.u0.sample(&fine);
    let v_fine = setup.v0.sample(&fine);
    let mut pde = PdeParams::new(setup.sigma0, setup.chi0);
    pde.sensitivity = setup.sensitivity.clone();
    let initial = FieldState::new(fine.clone(), u_fine.clone(), v_fine, 0.0)?;
    let limit = run_pde(initial, &pde, &[setup.end_time], setup.pde_dt_max, exec)?;
    let last = limit.snapshots.last().expect("one output requested");
    let reference = expected_deposit(&fine, &last.u, &grid, 8);
    let ref_mass: f64 = reference.iter().sum();
    let ref_max = reference.iter().fold(0.0f64, |m, &x| m.max(x));

    let speed = setup.speed();
    let model = TurningModel::new(setup.mu0, setup.chi0, 1.0, setup.sensitivity.clone())?
        .with_clamps(0.0, setup.lambda_max)?;
    let mut rows = Vec::with_capacity(setup.epsilons.len());
    for (k, &eps) in setup.epsilons.iter().enumerate() {
        let start = Instant::now();
        let mut params = KineticParams::new(setup.dim, speed, eps, model.clone());
        params.growth_rate = 1.0;
        let run = KineticRun {
            grid: grid.clone(),
            params,
            chemical: ChemicalParams::unit(),
            dt: setup.kinetic_dt,
            outputs: vec![setup.end_time],
        };
        let seed = setup.seed + k as u64;
        let mut ens = init_ensemble(&fine, &u_fine, setup.particles, speed, eps, seed, exec)?;
        let mut s = setup.v0.sample(&grid);
        let snaps = run_kinetic(&run, &mut ens, &mut s, exec)?;
        let (rho, var) = deposit_with_variance(&ens, &grid, exec);
        let linf = rho.iter().zip(&reference).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let l1: f64 = rho.iter().zip(&reference).map(|(a, b)| (a - b).abs()).sum();
        let noise: f64 = var.iter().map(|v| v.sqrt()).sum::<f64>() * (2.0 / std::f64::consts::PI).sqrt();
        rows.push(ConvergenceRow {
            epsilon: eps,
            l1_error: l1 / ref_mass,
            linf_error: linf / ref_max,
            noise_l1: noise / ref_mass,
            stats: snaps.last().map(|s| s.stats).unwrap_or_default(),
            particles: setup.particles,
            seed,
            runtime_s: start.elapsed().as_secs_f64(),
        });
    }
    Ok(ConvergenceReport {
        rows,
        reference,
        pde_steps: limit.steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expected_deposit_keeps_mass_and_smooth_fields() {
        let grid = Grid::centered(1, 4.0, 0.5).unwrap();
        let fine = Grid::centered(1, 4.0, 0.125).unwrap();
        let u = fine.sample(|p| 1.0 + 0.5 * p.x);
        let e = expected_deposit(&fine, &u, &grid, 4);
        assert!((grid.integral(&e) - fine.integral(&u)).abs() < 1e-12);
        // interior cells of a linear field are reproduced exactly
        for (i, ei) in e.iter().enumerate().take(grid.nx() - 1).skip(1) {
            let x = grid.center(i, 0).x;
            assert!((ei - (1.0 + 0.5 * x)).abs() < 1e-12, "{i}");
        }
        let g2 = Grid::centered(2, 2.0, 0.5).unwrap();
        let f2 = Grid::centered(2, 2.0, 0.25).unwrap();
        let e2 = expected_deposit(&f2, &vec![2.0; f2.len()], &g2, 2);
        assert!(e2.iter().all(|x| (x - 2.0).abs() < 1e-12));
    }

    #[test]
    fn rate_fit() {
        let rep = ConvergenceReport {
            rows: [0.4, 0.2, 0.1]
                .iter()
                .map(|&e| ConvergenceRow {
                    epsilon: e,
                    l1_error: 0.3 * e * e,
                    linf_error: 0.0,
                    noise_l1: 0.0,
                    stats: StepStats::default(),
                    particles: 0,
                    seed: 0,
                    runtime_s: 0.0,
                })
                .collect(),
            reference: vec![],
            pde_steps: 0,
        };
        assert!(rep.strictly_decreasing());
        assert!((rep.observed_rate() - 2.0).abs() < 1e-12);
        assert!((rep.final_error() - 0.003).abs() < 1e-15);
    }
}
