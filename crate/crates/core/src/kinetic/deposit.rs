//! Cloud-in-cell deposition of particle weights onto the grid.

use super::ensemble::{Particle, ParticleEnsemble};
use super::{particle_chunk, Executor};
use crate::grid::Grid;

fn deposit_chunk(grid: &Grid, particles: &[Particle], with_var: bool) -> (Vec<f64>, Vec<f64>) {
    let mut rho = vec![0.0; grid.len()];
    let mut var = if with_var { vec![0.0; grid.len()] } else { Vec::new() };
    for p in particles {
        let (idx, w) = grid.cic(&p.pos);
        for k in 0..4 {
            let m = p.weight * w[k];
            rho[idx[k]] += m;
            if with_var {
                var[idx[k]] += m * m;
            }
        }
    }
    (rho, var)
}

fn deposit_impl(ens: &ParticleEnsemble, grid: &Grid, exec: &Executor, with_var: bool) -> (Vec<f64>, Vec<f64>) {
    let parts = exec.map_chunks(&ens.particles, particle_chunk(ens.len()), |_, chunk| {
        deposit_chunk(grid, chunk, with_var)
    });
    let mut rho = vec![0.0; grid.len()];
    let mut var = if with_var { vec![0.0; grid.len()] } else { Vec::new() };
    // fixed chunk order keeps the sum independent of the worker count
    for (r, v) in parts {
        for (a, b) in rho.iter_mut().zip(&r) {
            *a += b;
        }
        for (a, b) in var.iter_mut().zip(&v) {
            *a += b;
        }
    }
    let vol = grid.cell_volume();
    for x in rho.iter_mut() {
        *x /= vol;
    }
    for x in var.iter_mut() {
        *x /= vol * vol;
    }
    (rho, var)
}

/// Density `Σ_p w_p W(x_c − x_p)/hⁿ` with the bilinear hat `W`; ghost
/// contributions fold back, so `Σ ρ hⁿ = Σ w_p`.
pub fn deposit_density(ens: &ParticleEnsemble, grid: &Grid, exec: &Executor) -> Vec<f64> {
    deposit_impl(ens, grid, exec, false).0
}

/// Density together with the per-cell variance estimate `Σ_p (w_p W/hⁿ)²`
/// of the Monte Carlo density estimator.
pub fn deposit_with_variance(ens: &ParticleEnsemble, grid: &Grid, exec: &Executor) -> (Vec<f64>, Vec<f64>) {
    deposit_impl(ens, grid, exec, true)
}
