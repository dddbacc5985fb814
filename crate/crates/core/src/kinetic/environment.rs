//! What a particle sees at its position: density, chemical and gradient.

use crate::grid::Grid;
use crate::velocity::Vec2;

/// Local macroscopic state at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe {
    pub rho: f64,
    pub s: f64,
    pub grad_s: Vec2,
}

pub trait Environment: Sync {
    /// Density, chemical and chemical gradient used in the turning rate.
    fn probe(&self, p: &[f64; 2]) -> Probe;
    /// Chemical concentration driving weight growth.
    fn chemical(&self, p: &[f64; 2]) -> f64;
}

/// Fields on a grid, interpolated bilinearly. The gradient is taken at cell
/// centres first and then interpolated.
#[derive(Debug, Clone)]
pub struct GridEnvironment<'a> {
    grid: &'a Grid,
    rho: &'a [f64],
    s: &'a [f64],
    grad: [Vec<f64>; 2],
}

impl<'a> GridEnvironment<'a> {
    pub fn new(grid: &'a Grid, rho: &'a [f64], s: &'a [f64]) -> Self {
        assert_eq!(rho.len(), grid.len());
        assert_eq!(s.len(), grid.len());
        Self {
            grid,
            rho,
            s,
            grad: grid.gradient(s),
        }
    }
}

impl Environment for GridEnvironment<'_> {
    #[inline]
    fn probe(&self, p: &[f64; 2]) -> Probe {
        let (idx, w) = self.grid.cic(p);
        let mut out = [0.0; 4];
        for k in 0..4 {
            let c = idx[k];
            out[0] += w[k] * self.rho[c];
            out[1] += w[k] * self.s[c];
            out[2] += w[k] * self.grad[0][c];
            out[3] += w[k] * self.grad[1][c];
        }
        Probe {
            rho: out[0].max(0.0),
            s: out[1].max(0.0),
            grad_s: Vec2::new(out[2], out[3]),
        }
    }

    #[inline]
    fn chemical(&self, p: &[f64; 2]) -> f64 {
        self.grid.interpolate(self.s, p).max(0.0)
    }
}

/// Spatially frozen environment: the turning rate sees the constant
/// reference values `ρ_ref`, `S_ref` and a constant gradient, so `λ₀` and
/// `κ` are the same everywhere. No chemical is available for growth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrozenEnvironment {
    pub rho: f64,
    pub s: f64,
    pub grad_s: Vec2,
}

impl FrozenEnvironment {
    pub fn uniform(rho: f64, s: f64) -> Self {
        Self {
            rho,
            s,
            grad_s: Vec2::zeros(),
        }
    }

    pub fn linear(rho: f64, s: f64, grad_s: Vec2) -> Self {
        Self { rho, s, grad_s }
    }
}

impl Environment for FrozenEnvironment {
    #[inline]
    fn probe(&self, _p: &[f64; 2]) -> Probe {
        Probe {
            rho: self.rho,
            s: self.s,
            grad_s: self.grad_s,
        }
    }

    fn chemical(&self, _p: &[f64; 2]) -> f64 {
        0.0
    }
}
