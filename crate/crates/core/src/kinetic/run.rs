//! Coupled particle/chemical evolution with first-order splitting.

use super::boundary::Domain;
use super::chemical::{chemical_stable_dt, update_chemical, ChemicalParams};
use super::deposit::deposit_density;
use super::ensemble::{EnsembleSummary, ParticleEnsemble};
use super::environment::GridEnvironment;
use super::step::{step_kinetic, StepStats};
use super::{Executor, KineticError, KineticParams};
use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq)]
pub struct KineticRun {
    pub grid: Grid,
    pub params: KineticParams,
    pub chemical: ChemicalParams,
    /// Macro step; clipped to hit every output time exactly.
    pub dt: f64,
    /// Output times in increasing order.
    pub outputs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KineticSnapshot {
    pub time: f64,
    /// Deposited particle density.
    pub rho: Vec<f64>,
    pub s: Vec<f64>,
    pub summary: EnsembleSummary,
    /// Event counts accumulated since the start of the run.
    pub stats: StepStats,
    pub steps: u64,
}

impl KineticRun {
    pub fn domain(&self) -> Domain {
        let (lo, hi) = self.grid.bounds();
        Domain::new(self.grid.dim(), lo, hi)
    }

    pub fn validate(&self) -> Result<(), KineticError> {
        self.params.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(KineticError::InvalidParameter {
                name: "dt",
                value: self.dt,
            });
        }
        if self.dt > self.params.max_dt() * (1.0 + 1e-12) {
            return Err(KineticError::ThinningBound {
                dt: self.dt,
                lambda_max: self.params.model.lambda_max,
            });
        }
        let mut prev = 0.0;
        for &t in &self.outputs {
            if !(t >= prev && t.is_finite()) {
                return Err(KineticError::InvalidParameter {
                    name: "output time",
                    value: t,
                });
            }
            prev = t;
        }
        Ok(())
    }
}

/// Runs deposit → chemical → transport on the macro grid and records a
/// snapshot at each output time. The chemical is sub-stepped when the
/// macro step exceeds its explicit stability limit.
pub fn run_kinetic(
    run: &KineticRun,
    ens: &mut ParticleEnsemble,
    s: &mut [f64],
    exec: &Executor,
) -> Result<Vec<KineticSnapshot>, KineticError> {
    run.validate()?;
    run.grid.check(s)?;
    if ens.is_empty() {
        return Err(KineticError::NoParticles);
    }
    let domain = run.domain();
    let mut t = 0.0;
    let mut stats = StepStats::default();
    let mut steps = 0u64;
    let mut out = Vec::with_capacity(run.outputs.len());
    for &target in &run.outputs {
        while t < target {
            let remaining = target - t;
            let (dt, last) = if run.dt >= remaining * (1.0 - 1e-12) {
                (remaining, true)
            } else {
                (run.dt, false)
            };
            let rho = deposit_density(ens, &run.grid, exec);
            let limit = chemical_stable_dt(&run.grid, &rho, &run.chemical);
            let substeps = (dt / limit).ceil().max(1.0) as usize;
            let sub = dt / substeps as f64;
            for _ in 0..substeps {
                update_chemical(&run.grid, s, &rho, sub, &run.chemical)?;
            }
            let env = GridEnvironment::new(&run.grid, &rho, s);
            stats += step_kinetic(ens, &env, &run.params, Some(&domain), dt, exec)?;
            steps += 1;
            t = if last { target } else { t + dt };
        }
        let rho = deposit_density(ens, &run.grid, exec);
        if rho.iter().chain(s.iter()).any(|x| !x.is_finite()) {
            return Err(KineticError::NonFinite("snapshot fields"));
        }
        out.push(KineticSnapshot {
            time: t,
            rho,
            s: s.to_vec(),
            summary: ens.summary(),
            stats,
            steps,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetic::ensemble::init_ensemble;
    use crate::turning::{Sensitivity, TurningModel};

    fn setup(growth: f64) -> (KineticRun, ParticleEnsemble, Vec<f64>) {
        let grid = Grid::centered(2, 8.0, 0.5).unwrap();
        let model = TurningModel::new(1.0, 2.5, 1.0, Sensitivity::ReceptorLaw)
            .unwrap()
            .with_clamps(0.0, 20.0)
            .unwrap();
        let mut params = KineticParams::new(2, 2.0, 0.3, model);
        params.growth_rate = growth;
        let u0 = grid.sample(|p| 0.2 + (-(p.norm_squared())).exp());
        let ens = init_ensemble(&grid, &u0, 4000, 2.0, 0.3, 17, &Executor::serial()).unwrap();
        let s = grid.sample(|p| 0.8 + 0.1 * p.x);
        let run = KineticRun {
            grid,
            params,
            chemical: ChemicalParams::unit(),
            dt: 0.02,
            outputs: vec![0.0, 0.05, 0.2],
        };
        (run, ens, s)
    }

    #[test]
    fn walls_conserve_weight_without_growth() {
        let (run, mut ens, mut s) = setup(0.0);
        let w0 = ens.total_weight();
        let snaps = run_kinetic(&run, &mut ens, &mut s, &Executor::serial()).unwrap();
        assert_eq!(snaps.len(), 3);
        assert_eq!(snaps[0].time, 0.0);
        assert_eq!(snaps[2].time, 0.2);
        for snap in &snaps {
            assert!((snap.summary.total_weight - w0).abs() <= 1e-13 * w0);
            assert!((run.grid.integral(&snap.rho) - w0).abs() <= 1e-12 * w0);
        }
        // 0.02, 0.02, 0.01 to the first output, then eight steps to 0.2
        assert_eq!(snaps[2].steps, 11);
    }

    #[test]
    fn growth_and_uptake_move_mass_one_way() {
        let (run, mut ens, mut s) = setup(1.0);
        let w0 = ens.total_weight();
        let s0 = run.grid.integral(&s);
        let snaps = run_kinetic(&run, &mut ens, &mut s, &Executor::serial()).unwrap();
        let last = snaps.last().unwrap();
        assert!(last.summary.total_weight > w0);
        assert!(run.grid.integral(&last.s) < s0);
    }

    #[test]
    fn same_seed_same_fields_any_worker_count() {
        let (run, mut a, mut sa) = setup(1.0);
        let (_, mut b, mut sb) = setup(1.0);
        let x = run_kinetic(&run, &mut a, &mut sa, &Executor::serial()).unwrap();
        let y = run_kinetic(&run, &mut b, &mut sb, &Executor::new(2).unwrap()).unwrap();
        assert_eq!(x, y);
    }
}
