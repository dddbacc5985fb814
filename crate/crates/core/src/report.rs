//! Plain-text and CSV renderings of experiment results.

use std::fmt::Write as _;

use crate::harness::{ColonyPair, ConvergenceReport, DriftReport, MsdReport};

pub fn convergence_table(rep: &ConvergenceReport, config_hash: &str) -> String {
    let mut o = String::new();
    let _ = writeln!(o, "# config_hash = {config_hash}");
    let _ = writeln!(o, "epsilon\terror_l1\terror_linf\tnoise_l1\tparticles\tseed\truntime_s\tclamp_events");
    for r in &rep.rows {
        let _ = writeln!(
            o,
            "{}\t{:.6e}\t{:.6e}\t{:.6e}\t{}\t{}\t{:.3}\t{}",
            r.epsilon,
            r.l1_error,
            r.linf_error,
            r.noise_l1,
            r.particles,
            r.seed,
            r.runtime_s,
            r.stats.clamp_events()
        );
    }
    let _ = writeln!(o, "# strictly_decreasing = {}", rep.strictly_decreasing());
    let _ = writeln!(o, "# observed_rate = {:.4}", rep.observed_rate());
    for w in rep.rows.windows(2) {
        if w[1].l1_error >= w[0].l1_error {
            let _ = writeln!(
                o,
                "# non-monotone: eps {} -> {}: {:.3e} -> {:.3e}, noise {:.3e}",
                w[0].epsilon, w[1].epsilon, w[0].l1_error, w[1].l1_error, w[1].noise_l1
            );
        }
    }
    o
}

pub fn colony_csv(pair: &ColonyPair, chi0: f64) -> String {
    let mut o = String::from("time,chi0,front_radius,interface_width,angular_cv,max_u,mass_u,mass_v\n");
    for (c, frames) in [(chi0, &pair.chemotactic), (0.0, &pair.plain)] {
        for f in frames {
            let _ = writeln!(
                o,
                "{},{},{:.9e},{:.9e},{:.9e},{:.9e},{:.12e},{:.12e}",
                f.time, c, f.front_radius, f.interface_width, f.angular_cv, f.max_u, f.mass_u, f.mass_v
            );
        }
    }
    o
}

pub fn msd_text(r: &MsdReport) -> String {
    format!(
        "d_eff: {}\nstd_err: {}\nci_low: {}\nci_high: {}\ntarget: {}\nrelative_error: {}\nwindow: {} {}\nballistic_cleared: {}\nparticles: {}\nseed: {}\nruntime_s: {:.3}\n",
        r.d_eff,
        r.std_err,
        r.interval.0,
        r.interval.1,
        r.target,
        r.relative_error(),
        r.window.0,
        r.window.1,
        r.ballistic_cleared,
        r.particles,
        r.seed,
        r.runtime_s
    )
}

pub fn drift_text(r: &DriftReport) -> String {
    format!(
        "measured: {}\nstd_err: {}\nclosed_form: {}\nexact_at_epsilon: {}\nz_score: {}\nrelative_error: {}\nturns: {}\nclamp_events: {}\nclamp_flag: {}\nruntime_s: {:.3}\n",
        r.measured,
        r.std_err,
        r.closed_form,
        r.exact,
        r.z_score,
        r.relative_error(),
        r.stats.turns,
        r.stats.clamp_events(),
        r.clamp_flag,
        r.runtime_s
    )
}
