//! Cell-centred grids shared by the particle and finite-volume solvers.

use thiserror::Error;

use crate::velocity::Vec2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid dimension must be 1 or 2, got {0}")]
    Dimension(usize),
    #[error("grid spacing must be positive, got {0}")]
    Spacing(f64),
    #[error("domain length {length} is not a whole number of cells of size {h}")]
    NotDivisible { length: f64, h: f64 },
    #[error("field has {got} values, grid has {expected} cells")]
    FieldLength { expected: usize, got: usize },
}

/// Uniform cell-centred grid on a box. One-dimensional grids have `ny = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    nx: usize,
    ny: usize,
    h: f64,
    origin: [f64; 2],
}

impl Grid {
    pub fn new(dim: usize, nx: usize, ny: usize, h: f64, origin: [f64; 2]) -> Result<Self, GridError> {
        if !(dim == 1 || dim == 2) {
            return Err(GridError::Dimension(dim));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(GridError::Spacing(h));
        }
        let ny = if dim == 1 { 1 } else { ny };
        if nx == 0 || ny == 0 {
            return Err(GridError::NotDivisible { length: 0.0, h });
        }
        Ok(Self { dim, nx, ny, h, origin })
    }

    /// Box `(−L/2, L/2)^n` split into cells of size `h`.
    pub fn centered(dim: usize, length: f64, h: f64) -> Result<Self, GridError> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(GridError::Spacing(h));
        }
        let cells = length / h;
        let n = cells.round();
        if n < 1.0 || (cells - n).abs() > 1e-9 * cells.max(1.0) {
            return Err(GridError::NotDivisible { length, h });
        }
        let n = n as usize;
        Self::new(dim, n, n, h, [-0.5 * length, -0.5 * length])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cell volume `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn center(&self, i: usize, j: usize) -> Vec2 {
        let y = if self.dim == 1 {
            0.0
        } else {
            self.origin[1] + (j as f64 + 0.5) * self.h
        };
        Vec2::new(self.origin[0] + (i as f64 + 0.5) * self.h, y)
    }

    /// Lower and upper corners of the box. The unused axis of a 1-D grid is `[0, 0]`.
    pub fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        let lo = [self.origin[0], if self.dim == 1 { 0.0 } else { self.origin[1] }];
        let hi = [
            self.origin[0] + self.nx as f64 * self.h,
            if self.dim == 1 {
                0.0
            } else {
                self.origin[1] + self.ny as f64 * self.h
            },
        ];
        (lo, hi)
    }

    pub fn check(&self, field: &[f64]) -> Result<(), GridError> {
        if field.len() != self.len() {
            return Err(GridError::FieldLength {
                expected: self.len(),
                got: field.len(),
            });
        }
        Ok(())
    }

    pub fn sample<F: FnMut(&Vec2) -> f64>(&self, mut f: F) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for j in 0..self.ny {
            for i in 0..self.nx {
                out.push(f(&self.center(i, j)));
            }
        }
        out
    }

    /// `Σ f h^n`.
    pub fn integral(&self, field: &[f64]) -> f64 {
        field.iter().sum::<f64>() * self.cell_volume()
    }

    #[inline]
    fn axis_hat(&self, x: f64, origin: f64, n: usize) -> ([usize; 2], [f64; 2]) {
        let g = (x - origin) / self.h - 0.5;
        let base = g.floor();
        let frac = g - base;
        let last = n as isize - 1;
        let i0 = (base as isize).clamp(0, last) as usize;
        let i1 = (base as isize + 1).clamp(0, last) as usize;
        ([i0, i1], [1.0 - frac, frac])
    }

    /// Cloud-in-cell stencil of a point: up to four cells and their bilinear
    /// weights. Ghost cells beyond the walls fold onto the boundary cell, so
    /// the weights always sum to one.
    #[inline]
    pub fn cic(&self, p: &[f64; 2]) -> ([usize; 4], [f64; 4]) {
        let (ix, wx) = self.axis_hat(p[0], self.origin[0], self.nx);
        if self.dim == 1 {
            return ([ix[0], ix[1], 0, 0], [wx[0], wx[1], 0.0, 0.0]);
        }
        let (iy, wy) = self.axis_hat(p[1], self.origin[1], self.ny);
        (
            [
                self.index(ix[0], iy[0]),
                self.index(ix[1], iy[0]),
                self.index(ix[0], iy[1]),
                self.index(ix[1], iy[1]),
            ],
            [wx[0] * wy[0], wx[1] * wy[0], wx[0] * wy[1], wx[1] * wy[1]],
        )
    }

    /// Bilinear interpolation of a cell-centred field (the adjoint of deposition).
    #[inline]
    pub fn interpolate(&self, field: &[f64], p: &[f64; 2]) -> f64 {
        let (idx, w) = self.cic(p);
        w[0] * field[idx[0]] + w[1] * field[idx[1]] + w[2] * field[idx[2]] + w[3] * field[idx[3]]
    }

    /// Cell-centred gradient: central differences inside, one-sided
    /// differences in boundary cells.
    pub fn gradient(&self, field: &[f64]) -> [Vec<f64>; 2] {
        let mut gx = vec![0.0; self.len()];
        let mut gy = vec![0.0; self.len()];
        let h = self.h;
        for j in 0..self.ny {
            for i in 0..self.nx {
                let k = self.index(i, j);
                gx[k] = one_axis_difference(i, self.nx, h, |ii| field[self.index(ii, j)]);
                if self.dim == 2 {
                    gy[k] = one_axis_difference(j, self.ny, h, |jj| field[self.index(i, jj)]);
                }
            }
        }
        [gx, gy]
    }
}

#[inline]
fn one_axis_difference<F: Fn(usize) -> f64>(i: usize, n: usize, h: f64, at: F) -> f64 {
    if n < 2 {
        0.0
    } else if i == 0 {
        (at(1) - at(0)) / h
    } else if i == n - 1 {
        (at(n - 1) - at(n - 2)) / h
    } else {
        (at(i + 1) - at(i - 1)) / (2.0 * h)
    }
}

/// Bacterial density `u` and chemical concentration `v` on a grid at time `time`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub grid: Grid,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub time: f64,
}

impl FieldState {
    pub fn new(grid: Grid, u: Vec<f64>, v: Vec<f64>, time: f64) -> Result<Self, GridError> {
        grid.check(&u)?;
        grid.check(&v)?;
        Ok(Self { grid, u, v, time })
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        Self {
            grid,
            u: vec![0.0; n],
            v: vec![0.0; n],
            time: 0.0,
        }
    }

    pub fn mass_u(&self) -> f64 {
        self.grid.integral(&self.u)
    }

    pub fn mass_v(&self) -> f64 {
        self.grid.integral(&self.v)
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|x| x.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_grid_layout() {
        let g = Grid::centered(2, 4.0, 1.0).unwrap();
        assert_eq!((g.nx(), g.ny()), (4, 4));
        assert_eq!(g.center(0, 0), Vec2::new(-1.5, -1.5));
        assert_eq!(g.bounds(), ([-2.0, -2.0], [2.0, 2.0]));
        let g1 = Grid::centered(1, 8.0, 0.5).unwrap();
        assert_eq!((g1.nx(), g1.ny(), g1.len()), (16, 1, 16));
        assert!(Grid::centered(2, 5.0, 2.0).is_err());
        assert!(Grid::centered(3, 4.0, 1.0).is_err());
    }

    #[test]
    fn cic_at_center_and_corner() {
        let g = Grid::centered(2, 4.0, 1.0).unwrap();
        let (idx, w) = g.cic(&[-0.5, 0.5]);
        let k = g.index(1, 2);
        let total: f64 = idx.iter().zip(&w).filter(|(i, _)| **i == k).map(|(_, w)| w).sum();
        assert_eq!(total, 1.0);
        let (idx, w) = g.cic(&[0.0, 0.0]);
        assert_eq!(w, [0.25; 4]);
        let mut cells = idx.to_vec();
        cells.sort();
        assert_eq!(cells, vec![g.index(1, 1), g.index(2, 1), g.index(1, 2), g.index(2, 2)]);
    }

    #[test]
    fn cic_folds_at_walls() {
        let g = Grid::centered(1, 2.0, 1.0).unwrap();
        for x in [-1.0, -0.9, 0.9, 1.0] {
            let (idx, w) = g.cic(&[x, 0.0]);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            assert!(idx.iter().all(|&i| i < 2));
        }
        let f = [3.0, 5.0];
        assert_eq!(g.interpolate(&f, &[-1.0, 0.0]), 3.0);
        assert_eq!(g.interpolate(&f, &[0.0, 0.0]), 4.0);
    }

    #[test]
    fn gradient_of_linear_field() {
        let g = Grid::centered(2, 6.0, 0.5).unwrap();
        let f = g.sample(|p| 2.0 * p.x - 3.0 * p.y);
        let [gx, gy] = g.gradient(&f);
        assert!(gx.iter().all(|x| (x - 2.0).abs() < 1e-12));
        assert!(gy.iter().all(|y| (y + 3.0).abs() < 1e-12));
    }
}
