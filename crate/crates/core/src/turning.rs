//! Turning rates, the discrete turning operator and the limit tensors.
//!
//! The unperturbed rate is `λ₀ = μ₀/(ρS)` and the velocity-dependent
//! perturbation is `λ₁ = κ(S)(v·∇S)`. With the uniform kernel `T₀ = 1/|V|`
//! the turning operator is `L₀ = λ₀(P − I)` where `P` is the averaging
//! projection, and its pseudo-inverse on mean-zero functions is
//! multiplication by `−1/λ₀`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix2, Schur};
use thiserror::Error;

use crate::velocity::{Vec2, VelocitySphere};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TurningError {
    #[error("concentration must be non-negative, got {0}")]
    NegativeConcentration(f64),
    #[error("turning model parameter {name} out of range: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("unperturbed turning rate must be positive, got {0}")]
    NonPositiveRate(f64),
    #[error("kernel matrix must be {expected}x{expected}")]
    KernelShape { expected: usize },
    #[error("node vector has length {got}, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("argument is not mean-zero: average {mean:e} exceeds tolerance {tol:e}")]
    NotMeanZero { mean: f64, tol: f64 },
}

/// Chemotactic sensitivity law `κ(S)`.
#[derive(Clone, Default)]
pub enum Sensitivity {
    /// Lapidus–Schiller receptor law `−χ₀K_d/(K_d+S)²`.
    #[default]
    ReceptorLaw,
    /// `−χ₀/K_d`, independent of `S`.
    Constant,
    /// User-supplied `κ(S)`; the model's `χ₀` and `K_d` are ignored.
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Sensitivity {
    pub fn name(&self) -> &'static str {
        match self {
            Sensitivity::ReceptorLaw => "receptor_law",
            Sensitivity::Constant => "constant",
            Sensitivity::Custom(_) => "custom",
        }
    }

    /// `κ(S)` without range checking.
    #[inline]
    pub fn kappa(&self, s: f64, chi0: f64, kd: f64) -> f64 {
        match self {
            Sensitivity::ReceptorLaw => {
                let d = kd + s;
                -chi0 * kd / (d * d)
            }
            Sensitivity::Constant => -chi0 / kd,
            Sensitivity::Custom(f) => f(s),
        }
    }

    /// Non-dimensional sensitivity `χ(v) = −K_d κ(K_d v)` with `K_d = 1`,
    /// positive for an attractant.
    #[inline]
    pub fn chi(&self, v: f64, chi0: f64) -> f64 {
        -self.kappa(v, chi0, 1.0)
    }
}

impl fmt::Debug for Sensitivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl PartialEq for Sensitivity {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Sensitivity::ReceptorLaw, Sensitivity::ReceptorLaw) => true,
            (Sensitivity::Constant, Sensitivity::Constant) => true,
            (Sensitivity::Custom(a), Sensitivity::Custom(b)) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

/// Which clamp, if any, was applied to a total turning rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clamp {
    None,
    Low,
    High,
}

/// Parameters of the turning rate `λ = λ₀(ρ,S) + ελ₁(v,S,∇S)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TurningModel {
    pub mu0: f64,
    pub chi0: f64,
    pub kd: f64,
    pub sensitivity: Sensitivity,
    /// Floor `δ` applied to the product `ρS`.
    pub rho_s_floor: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl TurningModel {
    /// Model with the default regularization: `δ = 1e-8`, `λ_min = 0` and
    /// `λ_max = 10³·μ₀` (a thousand times the rate at `ρ = S = 1`).
    pub fn new(mu0: f64, chi0: f64, kd: f64, sensitivity: Sensitivity) -> Result<Self, TurningError> {
        Self {
            mu0,
            chi0,
            kd,
            sensitivity,
            rho_s_floor: 1e-8,
            lambda_min: 0.0,
            lambda_max: 1e3 * mu0,
        }
        .validated()
    }

    pub fn with_clamps(mut self, lambda_min: f64, lambda_max: f64) -> Result<Self, TurningError> {
        self.lambda_min = lambda_min;
        self.lambda_max = lambda_max;
        self.validated()
    }

    pub fn with_floor(mut self, delta: f64) -> Result<Self, TurningError> {
        self.rho_s_floor = delta;
        self.validated()
    }

    pub fn validated(self) -> Result<Self, TurningError> {
        let check = |name, value: f64, ok: bool| {
            if ok && value.is_finite() {
                Ok(())
            } else {
                Err(TurningError::InvalidParameter { name, value })
            }
        };
        check("mu0", self.mu0, self.mu0 > 0.0)?;
        check("chi0", self.chi0, self.chi0 >= 0.0)?;
        check("kd", self.kd, self.kd > 0.0)?;
        check("rho_s_floor", self.rho_s_floor, self.rho_s_floor > 0.0)?;
        check("lambda_min", self.lambda_min, self.lambda_min >= 0.0)?;
        check(
            "lambda_max",
            self.lambda_max,
            self.lambda_max > 0.0 && self.lambda_max > self.lambda_min,
        )?;
        Ok(self)
    }

    pub fn kappa(&self, s: f64) -> Result<f64, TurningError> {
        if s < 0.0 || s.is_nan() {
            return Err(TurningError::NegativeConcentration(s));
        }
        Ok(self.sensitivity.kappa(s, self.chi0, self.kd))
    }

    /// `μ₀/max(ρS, δ)` before clamping.
    #[inline]
    pub fn lambda0_raw(&self, rho: f64, s: f64) -> f64 {
        self.mu0 / (rho * s).max(self.rho_s_floor)
    }

    /// Regularized unperturbed rate, clamped into `[λ_min, λ_max]`.
    pub fn lambda0(&self, rho: f64, s: f64) -> f64 {
        self.lambda0_raw(rho, s).clamp(self.lambda_min, self.lambda_max)
    }

    /// `κ(S)(v·∇S)`; negative concentrations are evaluated at zero.
    #[inline]
    pub fn lambda1(&self, v: &Vec2, s: f64, grad_s: &Vec2) -> f64 {
        self.sensitivity.kappa(s.max(0.0), self.chi0, self.kd) * v.dot(grad_s)
    }

    /// Total rate `clamp(λ₀ + ελ₁)` and whether a clamp fired.
    #[inline]
    pub fn total_rate(&self, rho: f64, s: f64, v: &Vec2, grad_s: &Vec2, epsilon: f64) -> (f64, Clamp) {
        let raw = self.lambda0_raw(rho, s) + epsilon * self.lambda1(v, s, grad_s);
        if raw < self.lambda_min {
            (self.lambda_min, Clamp::Low)
        } else if raw > self.lambda_max {
            (self.lambda_max, Clamp::High)
        } else {
            (raw, Clamp::None)
        }
    }
}

/// `(1/|V|) ∫ λ₁ dv` for node samples of `λ₁`.
pub fn average_bias(sphere: &VelocitySphere, lambda1: &[f64]) -> f64 {
    sphere.average_nodal(lambda1)
}

/// `σ = s²/(μ₀ n)`.
pub fn sigma(speed: f64, mu0: f64, dim: usize) -> f64 {
    speed * speed / (mu0 * dim as f64)
}

/// Scalar cross-diffusion coefficient `D(ρ,S) = σρS`.
pub fn cross_diffusion_coefficient(speed: f64, mu0: f64, dim: usize, rho: f64, s: f64) -> f64 {
    sigma(speed, mu0, dim) * rho * s
}

/// Bacterial response function `ζ(ρ,S) = σρ²S`.
pub fn response_function(speed: f64, mu0: f64, dim: usize, rho: f64, s: f64) -> f64 {
    sigma(speed, mu0, dim) * rho * rho * s
}

/// Closed-form chemotactic velocity `−σκ(S)ρS∇S`.
pub fn chemotactic_velocity_closed_form(
    speed: f64,
    mu0: f64,
    dim: usize,
    kappa: f64,
    rho: f64,
    s: f64,
    grad_s: &Vec2,
) -> Vec2 {
    grad_s * (-sigma(speed, mu0, dim) * kappa * rho * s)
}

#[derive(Debug, Clone, PartialEq)]
enum Kernel {
    Uniform,
    Matrix(DMatrix<f64>),
}

/// How `pseudo_inverse_apply` treats arguments that are not mean-zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MeanPolicy {
    #[default]
    Reject,
    /// Subtract the mean first and report it.
    Project,
}

/// Matrix of `L₀ = λ₀(T₀ − I)` acting on node values.
#[derive(Debug, Clone)]
pub struct DiscreteTurningOperator {
    sphere: VelocitySphere,
    lambda0: f64,
    matrix: DMatrix<f64>,
    kernel: Kernel,
    gap: f64,
}

impl DiscreteTurningOperator {
    /// Uniform reorientation kernel `T₀ = 1/|V|`.
    pub fn uniform(sphere: &VelocitySphere, lambda0: f64) -> Result<Self, TurningError> {
        if !(lambda0 > 0.0 && lambda0.is_finite()) {
            return Err(TurningError::NonPositiveRate(lambda0));
        }
        let m = sphere.len();
        let vol = sphere.measure();
        let w = sphere.weights();
        let matrix = DMatrix::from_fn(m, m, |i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            lambda0 * (w[j] / vol - delta)
        });
        let mut op = Self {
            sphere: sphere.clone(),
            lambda0,
            matrix,
            kernel: Kernel::Uniform,
            gap: 0.0,
        };
        op.gap = op.theoretical_gap();
        Ok(op)
    }

    /// General kernel given by its node values `K[i][j] = T(v_i, v_j)`.
    /// Spectral guarantees are only established for the uniform kernel.
    pub fn with_kernel(sphere: &VelocitySphere, lambda0: f64, kernel: DMatrix<f64>) -> Result<Self, TurningError> {
        if !(lambda0 > 0.0 && lambda0.is_finite()) {
            return Err(TurningError::NonPositiveRate(lambda0));
        }
        let m = sphere.len();
        if kernel.nrows() != m || kernel.ncols() != m {
            return Err(TurningError::KernelShape { expected: m });
        }
        let w = DMatrix::from_diagonal(&DVector::from_column_slice(sphere.weights()));
        let matrix = (&kernel * w - DMatrix::identity(m, m)) * lambda0;
        let mut op = Self {
            sphere: sphere.clone(),
            lambda0,
            matrix,
            kernel: Kernel::Matrix(kernel),
            gap: 0.0,
        };
        op.gap = op.theoretical_gap();
        Ok(op)
    }

    pub fn sphere(&self) -> &VelocitySphere {
        &self.sphere
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// Mutable access for perturbation studies; the gap is not recomputed.
    pub fn matrix_mut(&mut self) -> &mut DMatrix<f64> {
        &mut self.matrix
    }

    /// `μ₂ = λ₀(1 − ‖T‖)` with the norm taken on `⟨1⟩⊥` in weighted `L²(V)`.
    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn apply(&self, g: &[f64]) -> Result<Vec<f64>, TurningError> {
        self.check_len(g)?;
        Ok((&self.matrix * DVector::from_column_slice(g)).as_slice().to_vec())
    }

    fn check_len(&self, g: &[f64]) -> Result<(), TurningError> {
        if g.len() != self.sphere.len() {
            return Err(TurningError::LengthMismatch {
                expected: self.sphere.len(),
                got: g.len(),
            });
        }
        Ok(())
    }

    // W^{1/2} A W^{-1/2}: turns the weighted L²(V) norm into the Euclidean one.
    fn weighted(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        let w = self.sphere.weights();
        DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] * (w[i] / w[j]).sqrt())
    }

    fn theoretical_gap(&self) -> f64 {
        let m = self.sphere.len();
        let t = match &self.kernel {
            Kernel::Uniform => return self.lambda0,
            Kernel::Matrix(k) => {
                let w = DMatrix::from_diagonal(&DVector::from_column_slice(self.sphere.weights()));
                k * w
            }
        };
        // orthogonal projection onto constants in the weighted inner product
        let vol = self.sphere.measure();
        let w = self.sphere.weights();
        let p = DMatrix::from_fn(m, m, |_, j| w[j] / vol);
        let q = DMatrix::identity(m, m) - p;
        let restricted = self.weighted(&(&q * t * &q));
        let norm = restricted.singular_values().max();
        self.lambda0 * (1.0 - norm)
    }

    /// Solves `L₀x = g` on mean-zero node vectors.
    pub fn pseudo_inverse_apply(&self, g: &[f64], policy: MeanPolicy) -> Result<PseudoInverse, TurningError> {
        self.check_len(g)?;
        let mean = self.sphere.average_nodal(g);
        let scale = g.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let tol = MEAN_ZERO_TOL * scale.max(f64::MIN_POSITIVE);
        let projected_mean = if mean.abs() > tol {
            match policy {
                MeanPolicy::Reject => return Err(TurningError::NotMeanZero { mean, tol }),
                MeanPolicy::Project => Some(mean),
            }
        } else {
            None
        };
        let rhs: Vec<f64> = match projected_mean {
            Some(m) => g.iter().map(|x| x - m).collect(),
            None => g.to_vec(),
        };
        let values = match &self.kernel {
            Kernel::Uniform => rhs.iter().map(|x| -x / self.lambda0).collect(),
            Kernel::Matrix(_) => {
                let pinv = self
                    .matrix
                    .clone()
                    .pseudo_inverse(1e-12 * self.lambda0)
                    .expect("non-negative epsilon");
                let mut x = pinv * DVector::from_column_slice(&rhs);
                let xm = self.sphere.average_nodal(x.as_slice());
                x.add_scalar_mut(-xm);
                x.as_slice().to_vec()
            }
        };
        Ok(PseudoInverse {
            values,
            projected_mean,
        })
    }

    /// Eigenvalue audit of the assembled matrix.
    pub fn spectral_report(&self) -> SpectralReport {
        // the Schur iteration may stall on perturbed matrices with a highly
        // degenerate spectrum; a bounded iteration count turns that into a flag
        let scale = self.matrix.abs().max().max(f64::MIN_POSITIVE);
        let eig = [f64::EPSILON, 1e-13, 1e-11]
            .into_iter()
            .find_map(|eps| Schur::try_new(self.matrix.clone(), eps * scale, 20_000))
            .map(|s| s.complex_eigenvalues());
        let Some(eig) = eig else {
            return SpectralReport {
                nodes: self.sphere.len(),
                lambda0: self.lambda0,
                zero_count: 0,
                gap: self.gap,
                min_re: f64::NAN,
                max_nonzero_re: f64::NAN,
                norm: f64::NAN,
                eigenvalues: Vec::new(),
                violations: vec!["eigensolver did not converge".to_string()],
            };
        };
        let zero_tol = ZERO_EIGEN_TOL * self.lambda0;
        let mut zero_count = 0;
        let mut min_re = f64::INFINITY;
        let mut max_nonzero_re = f64::NEG_INFINITY;
        let mut eigenvalues = Vec::with_capacity(eig.len());
        for z in eig.iter() {
            eigenvalues.push((z.re, z.im));
            if z.norm() < zero_tol {
                zero_count += 1;
            } else {
                max_nonzero_re = max_nonzero_re.max(z.re);
            }
            min_re = min_re.min(z.re);
        }
        let norm = self.weighted(&self.matrix).singular_values().max();
        let gap = self.gap;
        let tol = RANGE_TOL;
        let mut violations = Vec::new();
        if zero_count != 1 {
            violations.push(format!("zero eigenvalue multiplicity {zero_count} (expected 1)"));
        }
        if !(gap > 0.0) {
            violations.push(format!("spectral gap {gap:e} not positive"));
        }
        for &(re, im) in &eigenvalues {
            if (re * re + im * im).sqrt() < zero_tol {
                continue;
            }
            if re < -2.0 * self.lambda0 * (1.0 + tol) || re > -gap * (1.0 - tol) {
                violations.push(format!(
                    "eigenvalue {re:.6e}{im:+.6e}i outside [-2λ₀, -μ₂] = [{:.6e}, {:.6e}]",
                    -2.0 * self.lambda0,
                    -gap
                ));
            }
        }
        if norm > 2.0 * self.lambda0 * (1.0 + tol) {
            violations.push(format!("operator norm {norm:.6e} exceeds 2λ₀ = {:.6e}", 2.0 * self.lambda0));
        }
        SpectralReport {
            nodes: self.sphere.len(),
            lambda0: self.lambda0,
            zero_count,
            gap,
            min_re,
            max_nonzero_re,
            norm,
            eigenvalues,
            violations,
        }
    }
}

/// Relative tolerance for the mean-zero precondition of the pseudo-inverse.
pub const MEAN_ZERO_TOL: f64 = 1e-10;
/// `|μ| < 1e-10·λ₀` counts as a zero eigenvalue.
pub const ZERO_EIGEN_TOL: f64 = 1e-10;
const RANGE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoInverse {
    pub values: Vec<f64>,
    /// Mean removed before solving, when the projecting policy kicked in.
    pub projected_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub nodes: usize,
    pub lambda0: f64,
    pub zero_count: usize,
    pub gap: f64,
    pub min_re: f64,
    pub max_nonzero_re: f64,
    pub norm: f64,
    pub eigenvalues: Vec<(f64, f64)>,
    pub violations: Vec<String>,
}

impl SpectralReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn zero_is_simple(&self) -> bool {
        self.zero_count == 1
    }
}

impl fmt::Display for SpectralReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "nodes: {}", self.nodes)?;
        writeln!(f, "lambda0: {}", self.lambda0)?;
        writeln!(f, "zero_eigenvalues: {}", self.zero_count)?;
        writeln!(f, "zero_simple: {}", self.zero_is_simple())?;
        writeln!(f, "gap: {}", self.gap)?;
        writeln!(f, "min_real_part: {}", self.min_re)?;
        writeln!(f, "max_nonzero_real_part: {}", self.max_nonzero_re)?;
        writeln!(f, "norm: {}", self.norm)?;
        writeln!(f, "norm_bound: {}", 2.0 * self.lambda0)?;
        writeln!(f, "status: {}", if self.passed() { "pass" } else { "fail" })?;
        for v in &self.violations {
            writeln!(f, "violation: {v}")?;
        }
        Ok(())
    }
}

/// `𝔻 = −(1/|V|) ∫ v⊗(F₀v) dv` by quadrature, as an `n×n` tensor.
pub fn diffusion_tensor(sphere: &VelocitySphere, lambda0: f64) -> Result<DMatrix<f64>, TurningError> {
    let op = DiscreteTurningOperator::uniform(sphere, lambda0)?;
    let mut f0v = Vec::with_capacity(sphere.dim());
    for axis in 0..sphere.dim() {
        f0v.push(op.pseudo_inverse_apply(&sphere.component(axis), MeanPolicy::Reject)?.values);
    }
    let n = sphere.dim();
    let vol = sphere.measure();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let vi = sphere.component(i);
        -sphere.integrate_nodal(&vi.iter().zip(&f0v[j]).map(|(a, b)| a * b).collect::<Vec<_>>()) / vol
    }))
}

/// Closed form `(s²/(nλ₀))·I` of the diffusion tensor.
pub fn diffusion_tensor_closed_form(speed: f64, dim: usize, lambda0: f64) -> DMatrix<f64> {
    DMatrix::identity(dim, dim) * (speed * speed / (dim as f64 * lambda0))
}

/// `w_c = −(1/|V|) ∫ v F₀(λ̄₁ − λ₁) dv` by quadrature with `λ₁ = κ(v·∇S)`.
pub fn chemotactic_velocity(
    sphere: &VelocitySphere,
    lambda0: f64,
    kappa: f64,
    grad_s: &Vec2,
) -> Result<Vec2, TurningError> {
    let op = DiscreteTurningOperator::uniform(sphere, lambda0)?;
    let lambda1: Vec<f64> = sphere.nodes().iter().map(|v| kappa * v.dot(grad_s)).collect();
    let bias = average_bias(sphere, &lambda1);
    let centered: Vec<f64> = lambda1.iter().map(|l| bias - l).collect();
    let f0 = op.pseudo_inverse_apply(&centered, MeanPolicy::Reject)?.values;
    let vol = sphere.measure();
    let integral: Vec2 = sphere
        .nodes()
        .iter()
        .zip(&f0)
        .zip(sphere.weights())
        .map(|((v, g), w)| v * (g * w))
        .fold(Vec2::zeros(), |a, b| a + b);
    Ok(-integral / vol)
}

/// Full 2×2 `v⊗v` moment helper used by callers that keep `Matrix2`.
pub fn velocity_covariance(sphere: &VelocitySphere) -> Matrix2<f64> {
    sphere.integrate(|v| v * v.transpose()) * (1.0 / sphere.measure())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(chi0: f64, kd: f64) -> TurningModel {
        TurningModel::new(1.0, chi0, kd, Sensitivity::ReceptorLaw).unwrap()
    }

    #[test]
    fn receptor_law_values() {
        let m = model(2.5, 1.0);
        assert_eq!(m.kappa(0.0).unwrap(), -2.5);
        let m = model(3.0, 2.0);
        assert!((m.kappa(2.0).unwrap() + 3.0 / 8.0).abs() < 1e-15);
        assert!(matches!(m.kappa(-1.0), Err(TurningError::NegativeConcentration(_))));
    }

    #[test]
    fn receptor_law_vanishes_monotonically_at_high_concentration() {
        let m = model(2.5, 1.0);
        let mut prev = m.kappa(1.0).unwrap();
        for k in 1..60 {
            let s = 1.0 + k as f64 * 10.0;
            let cur = m.kappa(s).unwrap();
            assert!(cur < 0.0 && cur > prev);
            prev = cur;
        }
        assert!(m.kappa(1e9).unwrap().abs() < 1e-17);
    }

    #[test]
    fn constant_and_custom_sensitivity() {
        let m = TurningModel::new(1.0, 2.0, 4.0, Sensitivity::Constant).unwrap();
        assert_eq!(m.kappa(7.0).unwrap(), -0.5);
        let m = TurningModel::new(1.0, 2.0, 4.0, Sensitivity::Custom(Arc::new(|s| -s))).unwrap();
        assert_eq!(m.kappa(3.0).unwrap(), -3.0);
        assert_eq!(Sensitivity::ReceptorLaw.chi(1.0, 2.0), 0.5);
    }

    #[test]
    fn lambda0_regularization() {
        let m = TurningModel::new(1.0, 0.0, 1.0, Sensitivity::ReceptorLaw).unwrap();
        assert_eq!(m.lambda0(1.0, 1.0), 1.0);
        assert_eq!(m.lambda0(0.0, 1.0), m.lambda_max);
        let m = TurningModel::new(4.0, 0.0, 1.0, Sensitivity::ReceptorLaw)
            .unwrap()
            .with_clamps(0.0, 1e30)
            .unwrap();
        assert_eq!(m.lambda0(2.0, 0.5), 4.0);
        assert_eq!(m.lambda0(0.0, 1.0), 4.0 / 1e-8);
    }

    #[test]
    fn lambda1_values() {
        let m = model(2.5, 1.0);
        assert_eq!(m.lambda1(&Vec2::new(1.0, 0.0), 0.0, &Vec2::new(0.2, 0.0)), -0.5);
        assert_eq!(m.lambda1(&Vec2::new(0.0, 1.0), 0.0, &Vec2::new(0.2, 0.0)), 0.0);
        assert_eq!(m.lambda1(&Vec2::new(0.3, 0.4), 0.0, &Vec2::zeros()), 0.0);
    }

    #[test]
    fn total_rate_clamps() {
        let m = TurningModel::new(1.0, 2.5, 1.0, Sensitivity::ReceptorLaw)
            .unwrap()
            .with_clamps(0.1, 5.0)
            .unwrap();
        let v = Vec2::new(1.0, 0.0);
        let (r, c) = m.total_rate(1.0, 1.0, &v, &Vec2::new(100.0, 0.0), 0.1);
        assert_eq!((r, c), (0.1, Clamp::Low));
        let (r, c) = m.total_rate(0.0, 1.0, &v, &Vec2::zeros(), 0.1);
        assert_eq!((r, c), (5.0, Clamp::High));
        let (r, c) = m.total_rate(1.0, 1.0, &v, &Vec2::new(0.4, 0.0), 0.1);
        assert!((r - (1.0 - 0.1 * 0.625 * 0.4)).abs() < 1e-15);
        assert_eq!(c, Clamp::None);
    }

    #[test]
    fn invalid_models_rejected() {
        assert!(TurningModel::new(0.0, 1.0, 1.0, Sensitivity::ReceptorLaw).is_err());
        assert!(TurningModel::new(1.0, -1.0, 1.0, Sensitivity::ReceptorLaw).is_err());
        assert!(TurningModel::new(1.0, 1.0, 0.0, Sensitivity::ReceptorLaw).is_err());
        let m = model(1.0, 1.0);
        assert!(m.clone().with_floor(0.0).is_err());
        assert!(m.clone().with_clamps(2.0, 1.0).is_err());
        assert!(m.with_clamps(-1.0, 1.0).is_err());
    }

    #[test]
    fn average_bias_cases() {
        let s = VelocitySphere::new(2, 1.0, 32).unwrap();
        let m = model(2.5, 1.0);
        let g = Vec2::new(0.3, -1.7);
        let l1: Vec<f64> = s.nodes().iter().map(|v| m.lambda1(v, 0.4, &g)).collect();
        assert!(average_bias(&s, &l1).abs() < 1e-14);
        assert!((average_bias(&s, &vec![0.7; 32]) - 0.7).abs() < 1e-15);
        let vx2: Vec<f64> = s.nodes().iter().map(|v| v.x * v.x).collect();
        assert!((average_bias(&s, &vx2) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn operator_kernel_and_mean_zero_action() {
        let s = VelocitySphere::new(2, 1.0, 16).unwrap();
        let op = DiscreteTurningOperator::uniform(&s, 3.0).unwrap();
        let zero = op.apply(&[1.0; 16]).unwrap();
        assert!(zero.iter().all(|x| x.abs() < 1e-14));
        let g = s.component(0);
        let lg = op.apply(&g).unwrap();
        for (a, b) in lg.iter().zip(&g) {
            assert!((a + 3.0 * b).abs() < 1e-14);
        }
        assert!(matches!(
            DiscreteTurningOperator::uniform(&s, 0.0),
            Err(TurningError::NonPositiveRate(_))
        ));
    }

    #[test]
    fn uniform_operator_spectrum() {
        let s = VelocitySphere::new(2, 1.0, 64).unwrap();
        let op = DiscreteTurningOperator::uniform(&s, 2.0).unwrap();
        let rep = op.spectral_report();
        assert!(rep.passed(), "{rep}");
        assert_eq!(rep.zero_count, 1);
        assert_eq!(rep.gap, 2.0);
        let minus_two = rep
            .eigenvalues
            .iter()
            .filter(|(re, im)| (re + 2.0).abs() < 1e-10 && im.abs() < 1e-10)
            .count();
        assert_eq!(minus_two, 63);
    }

    #[test]
    fn perturbed_operator_is_flagged() {
        let s = VelocitySphere::new(2, 1.0, 64).unwrap();
        let mut op = DiscreteTurningOperator::uniform(&s, 2.0).unwrap();
        op.matrix_mut()[(3, 5)] += 1e-3;
        let rep = op.spectral_report();
        assert!(!rep.passed());
        assert!(rep.violations.iter().any(|v| v.contains("zero eigenvalue")));
    }

    #[test]
    fn report_is_key_value_text() {
        let s = VelocitySphere::new(1, 1.0, 2).unwrap();
        let rep = DiscreteTurningOperator::uniform(&s, 1.5).unwrap().spectral_report();
        let text = rep.to_string();
        assert!(text.lines().all(|l| l.contains(": ")));
        assert!(text.contains("status: pass"));
        assert!(text.contains("gap: 1.5"));
    }

    #[test]
    fn pseudo_inverse_of_velocity_component() {
        let s = VelocitySphere::new(2, 1.0, 12).unwrap();
        let op = DiscreteTurningOperator::uniform(&s, 4.0).unwrap();
        let g = s.component(0);
        let x = op.pseudo_inverse_apply(&g, MeanPolicy::Reject).unwrap();
        for (a, b) in x.values.iter().zip(&g) {
            assert!((a + b / 4.0).abs() < 1e-15);
        }
        let back = op.apply(&x.values).unwrap();
        for (a, b) in back.iter().zip(&g) {
            assert!((a - b).abs() <= 1e-12);
        }
        assert!(matches!(
            op.pseudo_inverse_apply(&[1.0; 12], MeanPolicy::Reject),
            Err(TurningError::NotMeanZero { .. })
        ));
        let projected = op.pseudo_inverse_apply(&[1.0; 12], MeanPolicy::Project).unwrap();
        assert!((projected.projected_mean.unwrap() - 1.0).abs() < 1e-15);
        assert!(projected.values.iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn general_kernel_path_matches_uniform() {
        let s = VelocitySphere::new(2, 1.0, 8).unwrap();
        let k = DMatrix::from_element(8, 8, 1.0 / s.measure());
        let op = DiscreteTurningOperator::with_kernel(&s, 2.0, k).unwrap();
        let uni = DiscreteTurningOperator::uniform(&s, 2.0).unwrap();
        assert!((op.matrix() - uni.matrix()).abs().max() < 1e-14);
        assert!((op.gap() - 2.0).abs() < 1e-12);
        let g = s.component(1);
        let a = op.pseudo_inverse_apply(&g, MeanPolicy::Reject).unwrap().values;
        let b = uni.pseudo_inverse_apply(&g, MeanPolicy::Reject).unwrap().values;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(DiscreteTurningOperator::with_kernel(&s, 2.0, DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn diffusion_tensor_examples() {
        let s = VelocitySphere::new(2, 1.0, 16).unwrap();
        let d = diffusion_tensor(&s, 1.0).unwrap();
        assert!((&d - DMatrix::identity(2, 2) * 0.5).abs().max() < 1e-12);
        // λ₀ = μ₀/(ρS) with s = 2, μ₀ = 1, ρ = 3, S = 0.5
        let s2 = VelocitySphere::new(2, 2.0, 16).unwrap();
        let d = diffusion_tensor(&s2, 1.0 / 1.5).unwrap();
        assert!((&d - DMatrix::identity(2, 2) * 3.0).abs().max() < 1e-12);
        assert!((cross_diffusion_coefficient(2.0, 1.0, 2, 3.0, 0.5) - 3.0).abs() < 1e-15);
        let closed = diffusion_tensor_closed_form(2.0, 2, 1.0 / 1.5);
        assert!((&d - closed).abs().max() < 1e-12 * 3.0);
    }

    #[test]
    fn chemotactic_velocity_examples() {
        let s = VelocitySphere::new(2, 1.0, 32).unwrap();
        let w = chemotactic_velocity(&s, 1.0, -2.5, &Vec2::zeros()).unwrap();
        assert_eq!(w, Vec2::zeros());
        let w = chemotactic_velocity(&s, 1.0, -2.5, &Vec2::new(0.1, 0.0)).unwrap();
        assert!((w - Vec2::new(0.125, 0.0)).norm() < 1e-15);
        let closed = chemotactic_velocity_closed_form(1.0, 1.0, 2, -2.5, 1.0, 1.0, &Vec2::new(0.1, 0.0));
        assert!((closed - Vec2::new(0.125, 0.0)).norm() < 1e-15);
        // attraction: κ < 0 gives w_c parallel to +∇S
        let m = model(2.5, 1.0);
        let g = Vec2::new(-0.3, 0.8);
        let w = chemotactic_velocity(&s, 2.0, m.kappa(0.7).unwrap(), &g).unwrap();
        assert!(w.dot(&g) > 0.0);
        assert!((w.normalize() - g.normalize()).norm() < 1e-12);
    }

    #[test]
    fn one_dimensional_tensors() {
        let s = VelocitySphere::new(1, 2.0, 2).unwrap();
        let d = diffusion_tensor(&s, 0.5).unwrap();
        assert_eq!(d.shape(), (1, 1));
        assert!((d[(0, 0)] - 8.0).abs() < 1e-14);
        let w = chemotactic_velocity(&s, 0.5, -1.0, &Vec2::new(0.25, 0.0)).unwrap();
        assert!((w.x - 2.0).abs() < 1e-14 && w.y == 0.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn pseudo_inverse_round_trips_on_mean_zero(
                lambda0 in 0.01f64..100.0,
                raw in proptest::collection::vec(-10.0f64..10.0, 16),
            ) {
                let s = VelocitySphere::new(2, 1.3, 16).unwrap();
                let op = DiscreteTurningOperator::uniform(&s, lambda0).unwrap();
                let mean = s.average_nodal(&raw);
                let g: Vec<f64> = raw.iter().map(|x| x - mean).collect();
                let scale = g.iter().fold(1e-300f64, |a, x| a.max(x.abs()));
                let x = op.pseudo_inverse_apply(&g, MeanPolicy::Project).unwrap().values;
                let lf = op.apply(&x).unwrap();
                for (a, b) in lf.iter().zip(&g) {
                    prop_assert!((a - b).abs() <= 1e-12 * scale);
                }
                let lg = op.apply(&g).unwrap();
                let fl = op.pseudo_inverse_apply(&lg, MeanPolicy::Project).unwrap().values;
                for (a, b) in fl.iter().zip(&g) {
                    prop_assert!((a - b).abs() <= 1e-12 * scale);
                }
            }

            #[test]
            fn quadrature_tensors_match_closed_forms(
                rho in 0.05f64..5.0,
                conc in 0.05f64..5.0,
                gx in -2.0f64..2.0,
                gy in -2.0f64..2.0,
                speed in 0.1f64..10.0,
                mu0 in 0.1f64..10.0,
            ) {
                let s = VelocitySphere::new(2, speed, 32).unwrap();
                let m = TurningModel::new(mu0, 2.5, 1.0, Sensitivity::ReceptorLaw).unwrap();
                let lambda0 = mu0 / (rho * conc);
                let d = diffusion_tensor(&s, lambda0).unwrap();
                let dc = cross_diffusion_coefficient(speed, mu0, 2, rho, conc);
                prop_assert!((&d - DMatrix::identity(2, 2) * dc).abs().max() <= 1e-12 * dc);
                let kappa = m.kappa(conc).unwrap();
                let g = Vec2::new(gx, gy);
                let w = chemotactic_velocity(&s, lambda0, kappa, &g).unwrap();
                let wc = chemotactic_velocity_closed_form(speed, mu0, 2, kappa, rho, conc, &g);
                prop_assert!((w - wc).norm() <= 1e-12 * wc.norm().max(1e-300));
                // response function equals density times diffusivity
                let zeta = response_function(speed, mu0, 2, rho, conc);
                prop_assert!((zeta - rho * dc).abs() <= 4.0 * f64::EPSILON * zeta);
            }
        }
    }
}
