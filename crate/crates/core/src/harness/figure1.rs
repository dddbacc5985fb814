//! Expanding colony on a uniform nutrient: front position, interface width
//! and angular symmetry, with and without chemotaxis.

use std::time::Instant;

use super::HarnessError;
use crate::grid::{FieldState, Grid};
use crate::kinetic::Executor;
use crate::pde::{run_pde, PdeParams, PdeRun};
use crate::profile::Profile;
use crate::velocity::Vec2;

#[derive(Debug, Clone, PartialEq)]
pub struct ColonyConfig {
    pub length: f64,
    pub h: f64,
    pub sigma0: f64,
    pub chi0: f64,
    pub u0: Profile,
    pub v0: Profile,
    pub outputs: Vec<f64>,
    /// Rays used for the front metrics.
    pub rays: usize,
    pub dt_max: Option<f64>,
}

impl ColonyConfig {
    /// Square of side `length` with the standard colony inoculum.
    pub fn standard(length: f64) -> Self {
        Self {
            length,
            h: 1.0,
            sigma0: 4.0,
            chi0: 2.5,
            u0: Profile::Gaussian {
                amp: 0.71,
                width2: 6.25,
                center: [0.0, 0.0],
            },
            v0: Profile::Constant(0.71),
            outputs: vec![0.463, 5.098, 10.0, 20.0, 30.0],
            rays: 360,
            dt_max: None,
        }
    }

    pub fn grid(&self) -> Result<Grid, HarnessError> {
        Ok(Grid::centered(2, self.length, self.h)?)
    }

    pub fn initial(&self) -> Result<FieldState, HarnessError> {
        let grid = self.grid()?;
        let u = self.u0.sample(&grid);
        let v = self.v0.sample(&grid);
        Ok(FieldState::new(grid, u, v, 0.0)?)
    }

    pub fn params(&self, chi0: f64) -> PdeParams {
        PdeParams::new(self.sigma0, chi0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColonyFrame {
    pub time: f64,
    pub front_radius: f64,
    pub interface_width: f64,
    pub angular_cv: f64,
    pub max_u: f64,
    pub mass_u: f64,
    pub mass_v: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColonyPair {
    pub chemotactic: Vec<ColonyFrame>,
    pub plain: Vec<ColonyFrame>,
    pub runs: [PdeRun; 2],
    pub runtime_s: f64,
}

impl ColonyPair {
    pub fn front_increasing(&self) -> bool {
        self.chemotactic.windows(2).all(|w| w[1].front_radius > w[0].front_radius)
    }

    /// Final front radius without chemotaxis is strictly smaller.
    pub fn taxis_speeds_front(&self) -> bool {
        match (self.chemotactic.last(), self.plain.last()) {
            (Some(a), Some(b)) => b.front_radius < a.front_radius,
            _ => false,
        }
    }
}

fn max_of(u: &[f64]) -> f64 {
    u.iter().fold(0.0, |m: f64, &x| m.max(x))
}

/// Outermost radius along direction `dir` at which `u` crosses `level`,
/// sampled every quarter cell from the centre to the nearest wall.
fn outermost_crossing(grid: &Grid, u: &[f64], center: Vec2, dir: Vec2, level: f64) -> f64 {
    let (lo, hi) = grid.bounds();
    let reach = [hi[0] - center.x, center.x - lo[0], hi[1] - center.y, center.y - lo[1]]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
        - 0.5 * grid.h();
    let step = 0.25 * grid.h();
    let n = (reach / step).floor().max(0.0) as usize;
    let at = |r: f64| {
        let p = center + dir * r;
        grid.interpolate(u, &[p.x, p.y])
    };
    let mut prev = at(0.0);
    let mut found = 0.0;
    for k in 1..=n {
        let r = k as f64 * step;
        let cur = at(r);
        if (prev - level) * (cur - level) <= 0.0 && prev != cur {
            found = r - step + step * (prev - level) / (prev - cur);
        }
        prev = cur;
    }
    found
}

fn directions(rays: usize) -> impl Iterator<Item = Vec2> {
    (0..rays).map(move |k| {
        let t = std::f64::consts::TAU * k as f64 / rays as f64;
        Vec2::new(t.cos(), t.sin())
    })
}

/// Angle-averaged outermost radius where `u` falls through half its maximum.
pub fn front_radius(grid: &Grid, u: &[f64], center: Vec2, rays: usize) -> f64 {
    let level = 0.5 * max_of(u);
    directions(rays).map(|d| outermost_crossing(grid, u, center, d, level)).sum::<f64>() / rays as f64
}

/// Angle-averaged distance between the outermost 90% and 10% crossings.
pub fn interface_width(grid: &Grid, u: &[f64], center: Vec2, rays: usize) -> f64 {
    let m = max_of(u);
    directions(rays)
        .map(|d| outermost_crossing(grid, u, center, d, 0.1 * m) - outermost_crossing(grid, u, center, d, 0.9 * m))
        .sum::<f64>()
        / rays as f64
}

/// Coefficient of variation of `u` on the circle of radius `r`.
pub fn angular_cv(grid: &Grid, u: &[f64], center: Vec2, r: f64, rays: usize) -> f64 {
    let vals: Vec<f64> = directions(rays)
        .map(|d| {
            let p = center + d * r;
            grid.interpolate(u, &[p.x, p.y])
        })
        .collect();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    if mean == 0.0 {
        return 0.0;
    }
    let var = vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean.abs()
}

fn frames(run: &PdeRun, rays: usize) -> Vec<ColonyFrame> {
    let c = Vec2::zeros();
    run.snapshots
        .iter()
        .map(|s| {
            let r = front_radius(&s.grid, &s.u, c, rays);
            ColonyFrame {
                time: s.time,
                front_radius: r,
                interface_width: interface_width(&s.grid, &s.u, c, rays),
                angular_cv: angular_cv(&s.grid, &s.u, c, r, rays),
                max_u: max_of(&s.u),
                mass_u: s.mass_u(),
                mass_v: s.mass_v(),
            }
        })
        .collect()
}

/// Runs the colony with the configured `χ₀` and with `χ₀ = 0`.
pub fn colony_pair(cfg: &ColonyConfig, exec: &Executor) -> Result<ColonyPair, HarnessError> {
    if cfg.rays == 0 || cfg.outputs.is_empty() {
        return Err(HarnessError::Invalid("colony needs rays and output times".into()));
    }
    let start = Instant::now();
    let a = run_pde(cfg.initial()?, &cfg.params(cfg.chi0), &cfg.outputs, cfg.dt_max, exec)?;
    let b = run_pde(cfg.initial()?, &cfg.params(0.0), &cfg.outputs, cfg.dt_max, exec)?;
    Ok(ColonyPair {
        chemotactic: frames(&a, cfg.rays),
        plain: frames(&b, cfg.rays),
        runs: [a, b],
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disc(grid: &Grid, r0: f64, width: f64) -> Vec<f64> {
        // logistic step of half-height radius r0
        grid.sample(|p| 1.0 / (1.0 + ((p.norm() - r0) / width).exp()))
    }

    #[test]
    fn disc_metrics() {
        let g = Grid::centered(2, 60.0, 0.5).unwrap();
        let u = disc(&g, 12.0, 1.0);
        let r = front_radius(&g, &u, Vec2::zeros(), 72);
        assert!((r - 12.0).abs() < 0.05, "{r}");
        // logistic: 10%..90% spans 2 ln 9 widths
        let w = interface_width(&g, &u, Vec2::zeros(), 72);
        assert!((w - 2.0 * 9f64.ln()).abs() < 0.1, "{w}");
        assert!(angular_cv(&g, &u, Vec2::zeros(), r, 72) < 0.02);
    }

    #[test]
    fn asymmetry_is_detected() {
        let g = Grid::centered(2, 40.0, 0.5).unwrap();
        let u = g.sample(|p| {
            let r0 = 8.0 + 2.0 * (p.y.atan2(p.x)).cos();
            1.0 / (1.0 + (p.norm() - r0).exp())
        });
        assert!(angular_cv(&g, &u, Vec2::zeros(), 8.0, 90) > 0.2);
    }
}
