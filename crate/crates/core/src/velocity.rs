//! Velocity set `V = s·S^{n-1}` and quadrature over it.
//!
//! For `n = 1` the sphere is the two points `±s`, each carrying weight `s`.
//! For `n = 2` the nodes are `M` equally spaced angles with equal weights
//! `2πs/M`; the rule integrates every trigonometric polynomial of degree
//! below `M` exactly, which covers all moments of order ≤ 2 that the
//! turning operator and the limit tensors need.

use std::f64::consts::PI;
use std::ops::{Add, Mul};

use nalgebra::{DMatrix, Matrix2, Vector2};
use thiserror::Error;

pub type Vec2 = Vector2<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VelocityError {
    #[error("velocity sphere dimension must be 1 or 2, got {0}")]
    UnsupportedDimension(usize),
    #[error("speed must be positive and finite, got {0}")]
    InvalidSpeed(f64),
    #[error("node count {count} invalid for n = {dim} (n = 1 needs exactly 2, n = 2 needs an even count of at least 4)")]
    InvalidNodeCount { dim: usize, count: usize },
}

/// Quadrature over the admissible velocity set.
///
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocitySphere {
    dim: usize,
    speed: f64,
    nodes: Vec<Vec2>,
    weights: Vec<f64>,
}

impl VelocitySphere {
    pub fn new(dim: usize, speed: f64, count: usize) -> Result<Self, VelocityError> {
        if !(speed.is_finite() && speed > 0.0) {
            return Err(VelocityError::InvalidSpeed(speed));
        }
        match dim {
            1 => {
                if count != 2 {
                    return Err(VelocityError::InvalidNodeCount { dim, count });
                }
                Ok(Self {
                    dim,
                    speed,
                    nodes: vec![Vec2::new(speed, 0.0), Vec2::new(-speed, 0.0)],
                    weights: vec![speed, speed],
                })
            }
            2 => {
                if count < 4 || count % 2 == 1 {
                    return Err(VelocityError::InvalidNodeCount { dim, count });
                }
                let nodes = (0..count)
                    .map(|k| {
                        let theta = 2.0 * PI * k as f64 / count as f64;
                        Vec2::new(speed * theta.cos(), speed * theta.sin())
                    })
                    .collect();
                let w = 2.0 * PI * speed / count as f64;
                Ok(Self {
                    dim,
                    speed,
                    nodes,
                    weights: vec![w; count],
                })
            }
            other => Err(VelocityError::UnsupportedDimension(other)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Vec2] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Measure `|V|`: `2s` for `n = 1`, `2πs` for `n = 2`.
    pub fn measure(&self) -> f64 {
        match self.dim {
            1 => 2.0 * self.speed,
            _ => 2.0 * PI * self.speed,
        }
    }

    /// `Σ_k w_k f(v_k)`.
    pub fn integrate<T, F>(&self, mut f: F) -> T
    where
        F: FnMut(&Vec2) -> T,
        T: Add<Output = T> + Mul<f64, Output = T>,
    {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(v, &w)| f(v) * w)
            .reduce(|a, b| a + b)
            .expect("velocity sphere has at least two nodes")
    }

    /// Quadrature of a function already sampled at the nodes.
    pub fn integrate_nodal(&self, values: &[f64]) -> f64 {
        assert_eq!(values.len(), self.len(), "nodal vector length mismatch");
        values.iter().zip(&self.weights).map(|(g, w)| g * w).sum()
    }

    /// `(1/|V|) Σ_k w_k g_k`.
    pub fn average_nodal(&self, values: &[f64]) -> f64 {
        self.integrate_nodal(values) / self.measure()
    }

    /// Node values of the velocity component `axis`.
    pub fn component(&self, axis: usize) -> Vec<f64> {
        self.nodes.iter().map(|v| v[axis]).collect()
    }

    /// Restricts a 2×2 tensor to the leading `n×n` block.
    pub fn restrict(&self, m: &Matrix2<f64>) -> DMatrix<f64> {
        m.view((0, 0), (self.dim, self.dim)).into_owned()
    }

    /// `∫_V v⊗v dv` by quadrature, as an `n×n` tensor.
    pub fn second_moment(&self) -> DMatrix<f64> {
        let m: Matrix2<f64> = self.integrate(|v| v * v.transpose());
        self.restrict(&m)
    }
}
