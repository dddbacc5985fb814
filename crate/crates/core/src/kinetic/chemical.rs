//! Explicit update of the chemical `S_τ = D_S ΔS − kρS` with no-flux walls.

use super::KineticError;
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChemicalParams {
    pub diffusivity: f64,
    pub uptake: f64,
}

impl ChemicalParams {
    /// Non-dimensional chemical: `v_t = Δv − uv`.
    pub fn unit() -> Self {
        Self {
            diffusivity: 1.0,
            uptake: 1.0,
        }
    }
}

/// Largest step keeping the explicit update monotone:
/// `dt·(2n D/h² + k max ρ) ≤ 1`.
pub fn chemical_stable_dt(grid: &Grid, rho: &[f64], params: &ChemicalParams) -> f64 {
    let max_rho = rho.iter().fold(0.0f64, |m, &x| m.max(x));
    let rate = 2.0 * grid.dim() as f64 * params.diffusivity / (grid.h() * grid.h()) + params.uptake * max_rho;
    if rate > 0.0 {
        1.0 / rate
    } else {
        f64::INFINITY
    }
}

/// Discrete Neumann Laplacian: mirrored ghost cells, so boundary faces carry
/// no flux.
pub fn laplacian(grid: &Grid, f: &[f64], out: &mut [f64]) {
    let (nx, ny) = (grid.nx(), grid.ny());
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    for j in 0..ny {
        for i in 0..nx {
            let k = grid.index(i, j);
            let c = f[k];
            let mut acc = 0.0;
            if i > 0 {
                acc += f[k - 1] - c;
            }
            if i + 1 < nx {
                acc += f[k + 1] - c;
            }
            if grid.dim() == 2 {
                if j > 0 {
                    acc += f[k - nx] - c;
                }
                if j + 1 < ny {
                    acc += f[k + nx] - c;
                }
            }
            out[k] = acc * inv_h2;
        }
    }
}

/// One explicit step of diffusion plus uptake.
pub fn update_chemical(
    grid: &Grid,
    s: &mut [f64],
    rho: &[f64],
    dt: f64,
    params: &ChemicalParams,
) -> Result<(), KineticError> {
    grid.check(s)?;
    grid.check(rho)?;
    let limit = chemical_stable_dt(grid, rho, params);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(KineticError::ChemicalUnstable { dt, limit });
    }
    let mut lap = vec![0.0; s.len()];
    laplacian(grid, s, &mut lap);
    for k in 0..s.len() {
        let next = s[k] + dt * (params.diffusivity * lap[k] - params.uptake * rho[k] * s[k]);
        // monotone update: only rounding can take it below zero
        s[k] = next.max(0.0);
    }
    if s.iter().any(|x| !x.is_finite()) {
        return Err(KineticError::NonFinite("chemical field"));
    }
    Ok(())
}
