use vjp_core::config::preset;
use vjp_core::harness::{convergence_study, drift_experiment, msd_experiment, ConvergenceSetup, DriftConfig, MsdConfig};
use vjp_core::kinetic::{deposit_density, init_ensemble, run_kinetic, Executor};
use vjp_core::SimConfig;

fn small_msd(speed: f64, particles: usize) -> MsdConfig {
    let mut cfg = MsdConfig::new(2, speed, 1.0);
    cfg.particles = particles;
    cfg.end_time = 40.0;
    cfg
}

#[test]
fn kinetic_run_is_independent_of_workers() {
    let cfg = SimConfig::parse_with_overrides(preset("base").unwrap(), &["particles=20000", "splitting=true"]).unwrap();
    let run = cfg.kinetic_run().unwrap();
    let init = cfg.initial_state().unwrap();
    let go = |exec: Executor| {
        let mut ens = init_ensemble(&init.grid, &init.u, cfg.particles, cfg.speed(), cfg.epsilon, cfg.seed, &exec).unwrap();
        let mut s = init.v.clone();
        let snaps = run_kinetic(&run, &mut ens, &mut s, &exec).unwrap();
        (snaps, ens)
    };
    let (a, ea) = go(Executor::serial());
    let (b, eb) = go(Executor::new(4).unwrap());
    assert_eq!(ea.particles, eb.particles);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.rho, y.rho);
        assert_eq!(x.s, y.s);
        assert_eq!(x.stats, y.stats);
    }
}

#[test]
fn growth_increases_mass_and_uptake_removes_nutrient() {
    let cfg = SimConfig::parse_with_overrides(preset("base").unwrap(), &["particles=20000"]).unwrap();
    let run = cfg.kinetic_run().unwrap();
    let init = cfg.initial_state().unwrap();
    let exec = Executor::serial();
    let mut ens = init_ensemble(&init.grid, &init.u, cfg.particles, cfg.speed(), cfg.epsilon, cfg.seed, &exec).unwrap();
    let w0 = ens.total_weight();
    let s0 = init.grid.integral(&init.v);
    let mut s = init.v.clone();
    run_kinetic(&run, &mut ens, &mut s, &exec).unwrap();
    let w1 = ens.total_weight();
    let s1 = run.grid.integral(&s);
    assert!(w1 > w0 && s1 < s0);
    // the nutrient lost is the biomass gained, up to the coupling error
    assert!(((w1 - w0) - (s0 - s1)).abs() < 0.05 * (w1 - w0), "{} vs {}", w1 - w0, s0 - s1);
    let rho = deposit_density(&ens, &run.grid, &exec);
    assert!((run.grid.integral(&rho) - w1).abs() < 1e-12 * w1);
    assert!(s.iter().all(|&x| x >= 0.0));
}

#[test]
fn doubling_speed_quadruples_diffusion() {
    let exec = Executor::serial();
    let a = msd_experiment(&small_msd(1.0, 20_000), &exec).unwrap();
    let b = msd_experiment(&small_msd(2.0, 20_000), &exec).unwrap();
    let ratio = b.d_eff / a.d_eff;
    let se = ratio * ((a.std_err / a.d_eff).powi(2) + (b.std_err / b.d_eff).powi(2)).sqrt();
    assert!((ratio - 4.0).abs() < 3.0 * se, "ratio {ratio} ± {se}");
}

#[test]
fn doubling_particles_shrinks_the_interval() {
    let exec = Executor::serial();
    let a = msd_experiment(&small_msd(1.0, 10_000), &exec).unwrap();
    let b = msd_experiment(&small_msd(1.0, 20_000), &exec).unwrap();
    let shrink = b.std_err / a.std_err;
    let ideal = std::f64::consts::FRAC_1_SQRT_2;
    assert!((shrink / ideal - 1.0).abs() < 0.2, "shrink {shrink}");
    assert!(a.relative_error() < 0.05 && b.relative_error() < 0.05);
}

#[test]
fn drift_follows_the_gradient() {
    let exec = Executor::serial();
    let mut up = DriftConfig::new();
    up.particles = 20_000;
    let mut down = up.clone();
    down.grad_s = -up.grad_s;
    let a = drift_experiment(&up, &exec).unwrap();
    let b = drift_experiment(&down, &exec).unwrap();
    assert!(a.sign_ok(3.0) && b.sign_ok(3.0));
    // drift is reported along the gradient, so mirrored runs agree
    assert!(a.measured > 0.0 && b.measured > 0.0);
    assert!((a.measured - b.measured).abs() < 3.0 * (a.std_err.hypot(b.std_err)));
    let mut flat = up.clone();
    flat.chi0 = 0.0;
    let c = drift_experiment(&flat, &exec).unwrap();
    assert_eq!(c.closed_form, 0.0);
    assert!(c.measured.abs() < 3.0 * c.std_err, "{c:?}");
}

fn small_ladder() -> ConvergenceSetup {
    let mut setup = ConvergenceSetup::ladder();
    setup.epsilons = vec![0.2];
    setup.particles = 50_000;
    setup
}

#[test]
fn more_particles_move_the_error_within_the_noise() {
    let exec = Executor::serial();
    let coarse = convergence_study(&small_ladder(), &exec).unwrap();
    let mut many = small_ladder();
    many.particles *= 4;
    let fine = convergence_study(&many, &exec).unwrap();
    let (a, b) = (&coarse.rows[0], &fine.rows[0]);
    assert!((b.noise_l1 / a.noise_l1 - 0.5).abs() < 0.1, "{} {}", a.noise_l1, b.noise_l1);
    assert!((a.l1_error - b.l1_error).abs() <= a.noise_l1, "{} {} noise {}", a.l1_error, b.l1_error, a.noise_l1);
}

#[test]
fn ladder_without_chemotaxis() {
    let mut setup = small_ladder();
    setup.chi0 = 0.0;
    setup.epsilons = vec![0.4, 0.1];
    setup.particles = 100_000;
    let rep = convergence_study(&setup, &Executor::serial()).unwrap();
    assert!(rep.strictly_decreasing(), "{:?}", rep.rows);
    assert!(rep.final_error() < 0.05);
    assert!(rep.rows.iter().all(|r| r.linf_error >= r.l1_error / setup.length));
}
