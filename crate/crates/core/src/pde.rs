//! Finite-volume solver for the non-dimensional nutrient-taxis system
//!
//! ```text
//! u_t = ∇·(σ₀uv∇u) − ∇·(σ₀χ₀u²v/(1+v)²∇v) + uv
//! v_t = Δv − uv
//! ```
//!
//! with no-flux walls. The face flux for `u` is
//! `J = D(u_R − u_L)/h − a·u_up` with `D = σ₀·mean(uv)` and taxis velocity
//! `a = D·χ(v̄)(v_R − v_L)/h`; `u_up` is taken from the upwind cell. Both
//! coefficients carry the factor `v`, so nothing moves where `v = 0`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::grid::{FieldState, GridError};
use crate::kinetic::Executor;
use crate::turning::Sensitivity;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PdeError {
    #[error("pde parameter {name} out of range: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("initial {field} is negative or not finite in cell {cell}: {value}")]
    BadInitial { field: &'static str, cell: usize, value: f64 },
    #[error("dt = {dt} exceeds the stable step {limit}")]
    Unstable { dt: f64, limit: f64 },
    #[error("non-finite value in {field} at t = {time}")]
    NonFinite { field: &'static str, time: f64 },
    #[error("{field} fell to {value:e} in cell {cell} at t = {time}, below the clip tolerance")]
    Negative { field: &'static str, cell: usize, value: f64, time: f64 },
    #[error("max u = {max_u} exceeded the blow-up bound {bound} at t = {time}")]
    BlowUp { max_u: f64, bound: f64, time: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// How the degenerate coefficient `uv` is averaged onto a face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FaceMean {
    #[default]
    Arithmetic,
    Harmonic,
    /// Value of the cell with the larger `u` (the donor of the diffusive flux).
    Upstream,
}

impl fmt::Display for FaceMean {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FaceMean::Arithmetic => "arithmetic",
            FaceMean::Harmonic => "harmonic",
            FaceMean::Upstream => "upstream",
        })
    }
}

impl FromStr for FaceMean {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "arithmetic" => Ok(Self::Arithmetic),
            "harmonic" => Ok(Self::Harmonic),
            "upstream" => Ok(Self::Upstream),
            other => Err(format!("unknown face mean `{other}` (arithmetic, harmonic, upstream)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdeParams {
    pub sigma0: f64,
    pub chi0: f64,
    pub sensitivity: Sensitivity,
    pub face_mean: FaceMean,
    /// Fraction of the stability limit used per step, in `(0, 1]`.
    pub safety: f64,
    /// Smallest step accepted before the run is flagged.
    pub dt_min: f64,
    /// Bound on `max u` beyond which the run aborts.
    pub blowup: f64,
    /// Negative values above `−clip_tol` are set to zero and counted.
    pub clip_tol: f64,
}

impl PdeParams {
    pub fn new(sigma0: f64, chi0: f64) -> Self {
        Self {
            sigma0,
            chi0,
            sensitivity: Sensitivity::ReceptorLaw,
            face_mean: FaceMean::Arithmetic,
            safety: 0.45,
            dt_min: 1e-12,
            blowup: 1e6,
            clip_tol: 1e-14,
        }
    }

    pub fn validate(&self) -> Result<(), PdeError> {
        let check = |name, value: f64, ok: bool| {
            if ok && value.is_finite() {
                Ok(())
            } else {
                Err(PdeError::InvalidParameter { name, value })
            }
        };
        check("sigma0", self.sigma0, self.sigma0 > 0.0)?;
        check("chi0", self.chi0, self.chi0 >= 0.0)?;
        check("safety", self.safety, self.safety > 0.0 && self.safety <= 1.0)?;
        check("dt_min", self.dt_min, self.dt_min > 0.0)?;
        check("blowup", self.blowup, self.blowup > 0.0)?;
        check("clip_tol", self.clip_tol, self.clip_tol >= 0.0)?;
        Ok(())
    }

    /// `χ(v)`, the non-dimensional sensitivity (`χ₀/(1+v)²` for the receptor law).
    #[inline]
    pub fn chi(&self, v: f64) -> f64 {
        self.sensitivity.chi(v.max(0.0), self.chi0)
    }

    #[inline]
    fn face_uv(&self, ul: f64, vl: f64, ur: f64, vr: f64) -> f64 {
        let (a, b) = (ul * vl, ur * vr);
        match self.face_mean {
            FaceMean::Arithmetic => 0.5 * (a + b),
            FaceMean::Harmonic => {
                if a > 0.0 && b > 0.0 {
                    2.0 * a * b / (a + b)
                } else {
                    0.0
                }
            }
            FaceMean::Upstream => {
                if ul >= ur {
                    a
                } else {
                    b
                }
            }
        }
    }

    /// Diffusivity and taxis velocity at the face between a left and a right cell.
    #[inline]
    pub fn face_coefficients(&self, ul: f64, vl: f64, ur: f64, vr: f64, h: f64) -> (f64, f64) {
        let d = self.sigma0 * self.face_uv(ul, vl, ur, vr);
        // taxis coefficient = density × diffusivity × sensitivity
        let a = d * self.chi(0.5 * (vl + vr)) * (vr - vl) / h;
        (d, a)
    }

    /// Total flux `J = D(u_R − u_L)/h − a·u_up` across one face.
    #[inline]
    pub fn face_flux(&self, ul: f64, vl: f64, ur: f64, vr: f64, h: f64) -> f64 {
        let (d, a) = self.face_coefficients(ul, vl, ur, vr, h);
        let up = if a > 0.0 {
            ul
        } else if a < 0.0 {
            ur
        } else {
            0.5 * (ul + ur)
        };
        d * (ur - ul) / h - a * up
    }
}

/// Face fluxes of `u`. `x[j(nx+1) + i]` is the face left of cell `(i, j)`;
/// `y[j nx + i]` the face below it. Wall faces are exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceFluxes {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

pub fn face_fluxes(state: &FieldState, params: &PdeParams) -> FaceFluxes {
    let g = &state.grid;
    let (nx, ny, h) = (g.nx(), g.ny(), g.h());
    let (u, v) = (&state.u, &state.v);
    let mut fx = vec![0.0; (nx + 1) * ny];
    for j in 0..ny {
        for i in 1..nx {
            let (l, r) = (g.index(i - 1, j), g.index(i, j));
            fx[j * (nx + 1) + i] = params.face_flux(u[l], v[l], u[r], v[r], h);
        }
    }
    let mut fy = Vec::new();
    if g.dim() == 2 {
        fy = vec![0.0; nx * (ny + 1)];
        for j in 1..ny {
            for i in 0..nx {
                let (l, r) = (g.index(i, j - 1), g.index(i, j));
                fy[j * nx + i] = params.face_flux(u[l], v[l], u[r], v[r], h);
            }
        }
    }
    FaceFluxes { x: fx, y: fy }
}

/// Which bound limits the explicit step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepLimit {
    Diffusion,
    Taxis,
    ChemicalDiffusion,
    Uptake,
    Growth,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableDt {
    pub dt: f64,
    pub limit: StepLimit,
    /// The state forced the step below `dt_min`; `dt` is the floor.
    pub floored: bool,
}

/// `safety · min(h²/(2n max σ₀uv), h/(2n max|a|), h²/(2n), 1/max u, 1/max v)`.
///
/// The taxis bound divides by `2n` and the uptake bound `1/max u` is added so
/// that every coefficient of the explicit update stays non-negative.
pub fn stable_dt(state: &FieldState, params: &PdeParams) -> StableDt {
    let g = &state.grid;
    let (nx, ny, h) = (g.nx(), g.ny(), g.h());
    let two_n = 2.0 * g.dim() as f64;
    let (u, v) = (&state.u, &state.v);
    let max_uv = u.iter().zip(v).fold(0.0f64, |m, (a, b)| m.max(a * b));
    let max_u = u.iter().fold(0.0f64, |m, &a| m.max(a));
    let max_v = v.iter().fold(0.0f64, |m, &a| m.max(a));
    let mut max_a = 0.0f64;
    let mut visit = |l: usize, r: usize| {
        let (_, a) = params.face_coefficients(u[l], v[l], u[r], v[r], h);
        max_a = max_a.max(a.abs());
    };
    for j in 0..ny {
        for i in 1..nx {
            visit(g.index(i - 1, j), g.index(i, j));
        }
    }
    if g.dim() == 2 {
        for j in 1..ny {
            for i in 0..nx {
                visit(g.index(i, j - 1), g.index(i, j));
            }
        }
    }
    let inv = |x: f64| if x > 0.0 { 1.0 / x } else { f64::INFINITY };
    let candidates = [
        (h * h * inv(two_n * params.sigma0 * max_uv), StepLimit::Diffusion),
        (h * inv(two_n * max_a), StepLimit::Taxis),
        (h * h / two_n, StepLimit::ChemicalDiffusion),
        (inv(max_u), StepLimit::Uptake),
        (inv(max_v), StepLimit::Growth),
    ];
    let (bound, limit) = candidates
        .into_iter()
        .fold((f64::INFINITY, StepLimit::ChemicalDiffusion), |best, c| if c.0 < best.0 { c } else { best });
    let dt = params.safety * bound;
    if dt < params.dt_min {
        StableDt {
            dt: params.dt_min,
            limit,
            floored: true,
        }
    } else {
        StableDt {
            dt,
            limit,
            floored: false,
        }
    }
}

/// Bookkeeping for one explicit step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepReport {
    /// Mass removed by clipping tiny negatives (`Σ|clipped| hⁿ`).
    pub clip_mass: f64,
    pub clipped_cells: usize,
    pub min_u: f64,
    pub min_v: f64,
}

/// One explicit step: flux-form update of `u` plus `uv`, diffusion of `v`
/// minus `uv`. The reaction is evaluated once and moved between the fields.
pub fn step_pde(state: &mut FieldState, params: &PdeParams, dt: f64, exec: &Executor) -> Result<StepReport, PdeError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(PdeError::InvalidParameter { name: "dt", value: dt });
    }
    let stable = stable_dt(state, params);
    if dt > stable.dt * (1.0 + 1e-12) {
        return Err(PdeError::Unstable { dt, limit: stable.dt });
    }
    let grid = state.grid.clone();
    let flux = face_fluxes(state, params);
    let (nx, ny, h) = (grid.nx(), grid.ny(), grid.h());
    let dim2 = grid.dim() == 2;
    let inv_h2 = 1.0 / (h * h);
    let (u, v) = (&state.u, &state.v);
    let mut next: Vec<(f64, f64)> = vec![(0.0, 0.0); grid.len()];
    exec.map_chunks_mut(&mut next, nx * ny.div_ceil(16).max(1), |offset, chunk| {
        for (n, out) in chunk.iter_mut().enumerate() {
            let k = offset + n;
            let (i, j) = (k % nx, k / nx);
            let mut div = flux.x[j * (nx + 1) + i + 1] - flux.x[j * (nx + 1) + i];
            let c = v[k];
            let mut lap = 0.0;
            if i > 0 {
                lap += v[k - 1] - c;
            }
            if i + 1 < nx {
                lap += v[k + 1] - c;
            }
            if dim2 {
                div += flux.y[(j + 1) * nx + i] - flux.y[j * nx + i];
                if j > 0 {
                    lap += v[k - nx] - c;
                }
                if j + 1 < ny {
                    lap += v[k + nx] - c;
                }
            }
            let r = dt * u[k] * c;
            *out = (u[k] + dt * div / h + r, c + dt * lap * inv_h2 - r);
        }
    });
    let vol = grid.cell_volume();
    let time = state.time + dt;
    let mut report = StepReport {
        min_u: f64::INFINITY,
        min_v: f64::INFINITY,
        ..Default::default()
    };
    for (k, (nu, nv)) in next.into_iter().enumerate() {
        for (field, value, slot) in [("u", nu, &mut state.u[k]), ("v", nv, &mut state.v[k])] {
            if !value.is_finite() {
                return Err(PdeError::NonFinite { field, time });
            }
            if value < 0.0 {
                if value < -params.clip_tol {
                    return Err(PdeError::Negative {
                        field,
                        cell: k,
                        value,
                        time,
                    });
                }
                report.clip_mass -= value * vol;
                report.clipped_cells += 1;
                *slot = 0.0;
            } else {
                *slot = value;
            }
        }
        report.min_u = report.min_u.min(state.u[k]);
        report.min_v = report.min_v.min(state.v[k]);
    }
    state.time = time;
    let max_u = state.u.iter().fold(0.0f64, |m, &x| m.max(x));
    if max_u > params.blowup {
        return Err(PdeError::BlowUp {
            max_u,
            bound: params.blowup,
            time,
        });
    }
    Ok(report)
}

/// Discrete masses at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassRecord {
    pub time: f64,
    pub mass_u: f64,
    pub mass_v: f64,
}

impl MassRecord {
    pub fn of(state: &FieldState) -> Self {
        Self {
            time: state.time,
            mass_u: state.mass_u(),
            mass_v: state.mass_v(),
        }
    }

    pub fn total(&self) -> f64 {
        self.mass_u + self.mass_v
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassReport {
    pub initial_total: f64,
    pub final_total: f64,
    /// `max |Σ(u+v) − Σ(u₀+v₀)| / Σ(u₀+v₀)` over the history.
    pub max_relative_drift: f64,
    pub u_nondecreasing: bool,
    pub v_nonincreasing: bool,
    /// Largest single-record decrease of `Σu` or increase of `Σv`, relative.
    pub worst_monotonicity_violation: f64,
}

pub fn mass_balance(history: &[MassRecord]) -> MassReport {
    let first = history.first().copied().unwrap_or(MassRecord {
        time: 0.0,
        mass_u: 0.0,
        mass_v: 0.0,
    });
    let m0 = first.total();
    let scale = if m0 != 0.0 { m0.abs() } else { 1.0 };
    let mut drift: f64 = 0.0;
    let mut worst: f64 = 0.0;
    // summation rounding is allowed in the monotonicity audit
    let tol = 1e-13;
    for w in history.windows(2) {
        let du = (w[0].mass_u - w[1].mass_u) / scale;
        let dv = (w[1].mass_v - w[0].mass_v) / scale;
        worst = worst.max(du).max(dv);
    }
    for r in history {
        drift = drift.max((r.total() - m0).abs() / scale);
    }
    MassReport {
        initial_total: m0,
        final_total: history.last().map_or(m0, |r| r.total()),
        max_relative_drift: drift,
        u_nondecreasing: history.windows(2).all(|w| (w[0].mass_u - w[1].mass_u) / scale <= tol),
        v_nonincreasing: history.windows(2).all(|w| (w[1].mass_v - w[0].mass_v) / scale <= tol),
        worst_monotonicity_violation: worst,
    }
}

/// Output of `run_pde`.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeRun {
    pub snapshots: Vec<FieldState>,
    /// Masses after every step, starting with the initial state.
    pub mass: Vec<MassRecord>,
    pub steps: u64,
    pub clip_mass: f64,
    pub clipped_cells: usize,
    pub min_u: f64,
    pub min_v: f64,
    pub floored_steps: u64,
}

impl PdeRun {
    pub fn mass_report(&self) -> MassReport {
        mass_balance(&self.mass)
    }
}

pub fn check_initial(state: &FieldState) -> Result<(), PdeError> {
    state.grid.check(&state.u)?;
    state.grid.check(&state.v)?;
    for (field, values) in [("u", &state.u), ("v", &state.v)] {
        for (cell, &value) in values.iter().enumerate() {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(PdeError::BadInitial { field, cell, value });
            }
        }
    }
    Ok(())
}

/// Adaptive explicit time stepping to each output time. `dt_max` caps the
/// step when given.
pub fn run_pde(
    initial: FieldState,
    params: &PdeParams,
    outputs: &[f64],
    dt_max: Option<f64>,
    exec: &Executor,
) -> Result<PdeRun, PdeError> {
    params.validate()?;
    check_initial(&initial)?;
    let mut state = initial;
    let mut run = PdeRun {
        snapshots: Vec::with_capacity(outputs.len()),
        mass: vec![MassRecord::of(&state)],
        steps: 0,
        clip_mass: 0.0,
        clipped_cells: 0,
        min_u: state.u.iter().fold(f64::INFINITY, |m, &x| m.min(x)),
        min_v: state.v.iter().fold(f64::INFINITY, |m, &x| m.min(x)),
        floored_steps: 0,
    };
    for &target in outputs {
        if !(target >= state.time && target.is_finite()) {
            return Err(PdeError::InvalidParameter {
                name: "output time",
                value: target,
            });
        }
        while state.time < target {
            let stable = stable_dt(&state, params);
            let mut dt = stable.dt;
            if let Some(cap) = dt_max {
                dt = dt.min(cap);
            }
            let remaining = target - state.time;
            let last = dt >= remaining * (1.0 - 1e-12);
            if last {
                dt = remaining;
            }
            run.floored_steps += stable.floored as u64;
            let rep = step_pde(&mut state, params, dt, exec)?;
            if last {
                state.time = target;
            }
            run.steps += 1;
            run.clip_mass += rep.clip_mass;
            run.clipped_cells += rep.clipped_cells;
            run.min_u = run.min_u.min(rep.min_u);
            run.min_v = run.min_v.min(rep.min_v);
            run.mass.push(MassRecord::of(&state));
        }
        run.snapshots.push(state.clone());
    }
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn line(u: Vec<f64>, v: Vec<f64>, h: f64) -> FieldState {
        let g = Grid::new(1, u.len(), 1, h, [0.0, 0.0]).unwrap();
        FieldState::new(g, u, v, 0.0).unwrap()
    }

    #[test]
    fn two_cell_diffusive_flux() {
        let s = line(vec![1.0, 2.0], vec![1.0, 1.0], 1.0);
        let f = face_fluxes(&s, &PdeParams::new(1.0, 0.0));
        assert_eq!(f.x, vec![0.0, 1.5, 0.0]);
    }

    #[test]
    fn uniform_and_degenerate_states_have_no_flux() {
        let p = PdeParams::new(4.0, 2.5);
        let s = line(vec![0.7; 5], vec![0.3; 5], 1.0);
        assert!(face_fluxes(&s, &p).x.iter().all(|&f| f == 0.0));
        let s = line(vec![0.1, 0.9, 0.4, 2.0, 0.0], vec![0.0; 5], 1.0);
        assert!(face_fluxes(&s, &p).x.iter().all(|&f| f == 0.0));
    }

    #[test]
    fn taxis_moves_up_the_gradient() {
        let s = line(vec![1.0, 1.0], vec![0.5, 1.0], 1.0);
        let p = PdeParams::new(1.0, 2.5);
        // u uniform, so only taxis: the flux into the richer cell is positive
        let f = face_fluxes(&s, &p).x[1];
        let d = 0.75;
        let a = d * 2.5 / (1.75f64).powi(2) * 0.5;
        assert!((f + a).abs() < 1e-15, "{f}");
        let mut st = s.clone();
        step_pde(&mut st, &p, 0.05, &Executor::serial()).unwrap();
        assert!(st.u[1] - s.u[1] > st.u[0] - s.u[0]);
    }

    #[test]
    fn face_means() {
        let mut p = PdeParams::new(1.0, 0.0);
        let s = line(vec![1.0, 3.0], vec![1.0, 1.0], 1.0);
        p.face_mean = FaceMean::Harmonic;
        assert!((face_fluxes(&s, &p).x[1] - 1.5 * 2.0).abs() < 1e-15);
        p.face_mean = FaceMean::Upstream;
        assert_eq!(face_fluxes(&s, &p).x[1], 3.0 * 2.0);
        assert_eq!("harmonic".parse::<FaceMean>().unwrap(), FaceMean::Harmonic);
        assert!("median".parse::<FaceMean>().is_err());
    }

    #[test]
    fn stable_dt_bounds() {
        let g = Grid::centered(2, 10.0, 1.0).unwrap();
        let p = PdeParams::new(4.0, 2.5);
        let zero = FieldState::zeros(g.clone());
        let d = stable_dt(&zero, &p);
        assert_eq!(d.limit, StepLimit::ChemicalDiffusion);
        assert!((d.dt - 0.45 * 0.25).abs() < 1e-15);
        let mut s = FieldState::zeros(g);
        s.u = vec![2.0; s.grid.len()];
        s.v = vec![1.0; s.grid.len()];
        let a = stable_dt(&s, &p).dt;
        s.u = vec![4.0; s.grid.len()];
        let b = stable_dt(&s, &p).dt;
        assert!(b <= 0.5 * a + 1e-15);
    }

    #[test]
    fn zero_state_stays_zero_and_frozen_without_chemical() {
        let g = Grid::centered(2, 6.0, 1.0).unwrap();
        let p = PdeParams::new(4.0, 2.5);
        let zero = FieldState::zeros(g.clone());
        let run = run_pde(zero.clone(), &p, &[1.0], None, &Executor::serial()).unwrap();
        assert_eq!(run.snapshots[0].u, zero.u);
        assert_eq!(run.snapshots[0].v, zero.v);
        let mut s = FieldState::zeros(g);
        s.u = s.grid.sample(|x| (-x.norm_squared()).exp());
        let run = run_pde(s.clone(), &p, &[1.0], None, &Executor::serial()).unwrap();
        assert_eq!(run.snapshots[0].u, s.u);
    }

    #[test]
    fn conservation_and_monotone_masses() {
        let g = Grid::centered(2, 20.0, 1.0).unwrap();
        let u = g.sample(|x| 0.71 * (-x.norm_squared() / 6.25).exp());
        let v = vec![0.71; g.len()];
        let s = FieldState::new(g, u, v, 0.0).unwrap();
        let run = run_pde(s, &PdeParams::new(4.0, 2.5), &[0.5, 2.0], None, &Executor::serial()).unwrap();
        let rep = run.mass_report();
        assert!(rep.max_relative_drift < 1e-12, "{rep:?}");
        assert!(rep.u_nondecreasing && rep.v_nonincreasing);
        assert!(run.min_u >= 0.0 && run.min_v >= 0.0);
        assert_eq!(run.snapshots[1].time, 2.0);
    }

    #[test]
    fn heat_kernel_for_chemical_alone() {
        // u = 0: v solves the heat equation; compare with a cosine mode that
        // satisfies the Neumann condition, decaying at the discrete rate
        let n = 64;
        let len = 8.0;
        let h = len / n as f64;
        let g = Grid::new(1, n, 1, h, [0.0, 0.0]).unwrap();
        let k = std::f64::consts::PI / len;
        let v = g.sample(|x| 1.0 + (k * x.x).cos());
        let s = FieldState::new(g.clone(), vec![0.0; n], v, 0.0).unwrap();
        let run = run_pde(s, &PdeParams::new(1.0, 0.0), &[1.0], None, &Executor::serial()).unwrap();
        let exact = g.sample(|x| 1.0 + (k * x.x).cos() * (-k * k).exp());
        let err: f64 = run.snapshots[0]
            .v
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).powi(2) * h)
            .sum::<f64>()
            .sqrt();
        // second order in h for the spatial operator
        assert!(err < 0.5 * (k * h).powi(2), "L2 error {err}");
    }

    #[test]
    fn unstable_step_rejected() {
        let s = line(vec![1.0; 4], vec![1.0; 4], 1.0);
        let mut t = s.clone();
        assert!(matches!(
            step_pde(&mut t, &PdeParams::new(1.0, 0.0), 10.0, &Executor::serial()),
            Err(PdeError::Unstable { .. })
        ));
    }
}
