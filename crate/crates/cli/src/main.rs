use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use vjp_core::harness::{colony_pair, convergence_study, drift_experiment, msd_experiment};
use vjp_core::kinetic::{init_ensemble, run_kinetic, Executor};
use vjp_core::pde::run_pde;
use vjp_core::report;
use vjp_core::snapshot::{write_snapshot, Snapshot};
use vjp_core::turning::{diffusion_tensor, diffusion_tensor_closed_form, DiscreteTurningOperator};
use vjp_core::velocity::VelocitySphere;
use vjp_core::{Error, SimConfig};

#[derive(Parser)]
#[command(name = "vjp", version, about = "Velocity-jump chemotaxis simulator and its continuum limit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Particle simulation with a diffusing, consumed nutrient
    Kinetic(Common),
    /// Finite-volume solution of the continuum system
    Pde(Common),
    /// Particle density against the continuum limit over an ε ladder
    Converge(Common),
    /// Eigenvalue audit of the discrete turning operator
    Spectral(Common),
    /// Effective diffusion coefficient from mean squared displacement
    Msd(Common),
    /// Chemotactic drift in a frozen linear nutrient profile
    Drift(Common),
    /// Expanding colony with and without chemotaxis
    Figure1(Common),
}

#[derive(Args)]
struct Common {
    /// Config file, or preset:NAME for a shipped preset
    #[arg(long)]
    config: Option<String>,
    /// Override a setting, e.g. --set epsilon=0.05 or --set pde.safety=0.3
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Directory for snapshots and reports
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads; results do not depend on this
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Random seed, overriding run.seed
    #[arg(long)]
    seed: Option<u64>,
    /// Replace existing output files
    #[arg(long)]
    overwrite: bool,
}

impl Common {
    fn load(&self, default_preset: &str) -> Result<SimConfig, Error> {
        let mut sets = self.set.clone();
        if let Some(seed) = self.seed {
            sets.push(format!("run.seed={seed}"));
        }
        let path = self.config.clone().unwrap_or_else(|| format!("preset:{default_preset}"));
        Ok(SimConfig::load(&path, &sets)?)
    }
}

struct Output<'a> {
    dir: &'a Path,
    overwrite: bool,
    hash: String,
}

impl Output<'_> {
    fn prepare(&self) -> Result<(), Error> {
        fs::create_dir_all(self.dir).map_err(|source| Error::Io {
            path: self.dir.display().to_string(),
            source,
        })
    }

    fn path(&self, stem: &str, ext: &str) -> PathBuf {
        self.dir.join(format!("{stem}_{}.{ext}", &self.hash[..12]))
    }

    fn text(&self, stem: &str, ext: &str, body: &str) -> Result<PathBuf, Error> {
        let path = self.path(stem, ext);
        let io = |source| Error::Io {
            path: path.display().to_string(),
            source,
        };
        let mut f = if self.overwrite {
            fs::File::create(&path).map_err(io)?
        } else {
            fs::OpenOptions::new()
                .write(true)
                .create_new(true)
                .open(&path)
                .map_err(|e| {
                    if e.kind() == std::io::ErrorKind::AlreadyExists {
                        Error::Snapshot(vjp_core::snapshot::SnapshotError::Exists(path.display().to_string()))
                    } else {
                        io(e)
                    }
                })?
        };
        f.write_all(body.as_bytes()).map_err(io)?;
        Ok(path)
    }

    fn snapshot(&self, stem: &str, snap: &Snapshot) -> Result<PathBuf, Error> {
        let path = self.path(stem, "snap");
        write_snapshot(snap, &path, self.overwrite)?;
        Ok(path)
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let start = Instant::now();
    let (common, default) = match &cli.command {
        Command::Kinetic(c) => (c, "base"),
        Command::Pde(c) => (c, "base"),
        Command::Converge(c) => (c, "converge"),
        Command::Spectral(c) => (c, "base"),
        Command::Msd(c) => (c, "base"),
        Command::Drift(c) => (c, "base"),
        Command::Figure1(c) => (c, "fig1_reduced"),
    };
    let cfg = common.load(default)?;
    let hash = cfg.hash();
    eprintln!("seed = {}", cfg.seed);
    eprintln!("config_hash = {hash}");
    let exec = Executor::new(common.workers)?;
    let out = Output {
        dir: &common.out_dir,
        overwrite: common.overwrite,
        hash: hash.clone(),
    };
    let mut written: Vec<PathBuf> = Vec::new();
    if !matches!(cli.command, Command::Spectral(_)) {
        out.prepare()?;
        let echo = cfg.echo();
        // the echo is fully determined by the hash, so an existing copy is kept
        if fs::read_to_string(out.path("config", "cfg")).ok().as_deref() != Some(echo.as_str()) {
            written.push(out.text("config", "cfg", &echo)?);
        }
    }
    match &cli.command {
        Command::Spectral(_) => {
            let sphere = VelocitySphere::new(cfg.dim, cfg.speed(), cfg.nodes)?;
            let op = DiscreteTurningOperator::uniform(&sphere, cfg.mu0())?;
            print!("{}", op.spectral_report());
            let d = diffusion_tensor(&sphere, cfg.mu0())?;
            let closed = diffusion_tensor_closed_form(cfg.speed(), cfg.dim, cfg.mu0());
            println!("diffusion_tensor_quadrature: {:?}", d.as_slice());
            println!("diffusion_tensor_closed_form: {:?}", closed.as_slice());
        }
        Command::Kinetic(_) => {
            let run = cfg.kinetic_run()?;
            let init = cfg.initial_state()?;
            let mut ens = init_ensemble(&init.grid, &init.u, cfg.particles, cfg.speed(), cfg.epsilon, cfg.seed, &exec)?;
            let mut s = init.v.clone();
            let snaps = run_kinetic(&run, &mut ens, &mut s, &exec)?;
            let mut summary = String::from("time,total_weight,particles,turns,clamp_events,reflections,reflection_flags\n");
            for (k, snap) in snaps.iter().enumerate() {
                let file = Snapshot::new("kinetic", &run.grid, snap.time, cfg.seed, &hash)
                    .with_epsilon(cfg.epsilon)
                    .with_field("rho", snap.rho.clone())
                    .with_field("v", snap.s.clone());
                written.push(out.snapshot(&format!("kinetic_{k:03}"), &file)?);
                summary.push_str(&format!(
                    "{},{:.15e},{},{},{},{},{}\n",
                    snap.time,
                    snap.summary.total_weight,
                    snap.summary.count,
                    snap.stats.turns,
                    snap.stats.clamp_events(),
                    snap.stats.reflections,
                    snap.stats.reflection_flags
                ));
            }
            written.push(out.text("kinetic_summary", "csv", &summary)?);
        }
        Command::Pde(_) => {
            let run = run_pde(cfg.initial_state()?, &cfg.pde_params(), &cfg.outputs, cfg.dt_max, &exec)?;
            for (k, state) in run.snapshots.iter().enumerate() {
                written.push(out.snapshot(&format!("pde_{k:03}"), &Snapshot::of_state(state, cfg.seed, &hash))?);
            }
            let m = run.mass_report();
            let body = format!(
                "steps: {}\nfloored_steps: {}\nmass_initial: {:.15e}\nmass_final: {:.15e}\nmax_relative_drift: {:e}\nmin_u: {:e}\nmin_v: {:e}\nclip_mass: {:e}\n",
                run.steps, run.floored_steps, m.initial_total, m.final_total, m.max_relative_drift, run.min_u, run.min_v, run.clip_mass
            );
            print!("{body}");
            written.push(out.text("pde_mass", "txt", &body)?);
        }
        Command::Converge(_) => {
            let rep = convergence_study(&cfg.convergence_setup(), &exec)?;
            let table = report::convergence_table(&rep, &hash);
            print!("{table}");
            written.push(out.text("converge", "tsv", &table)?);
        }
        Command::Msd(_) => {
            let rep = msd_experiment(&cfg.msd_config(), &exec)?;
            let body = report::msd_text(&rep);
            print!("{body}");
            written.push(out.text("msd", "txt", &body)?);
        }
        Command::Drift(_) => {
            let rep = drift_experiment(&cfg.drift_config(), &exec)?;
            let body = report::drift_text(&rep);
            print!("{body}");
            written.push(out.text("drift", "txt", &body)?);
        }
        Command::Figure1(_) => {
            let pair = colony_pair(&cfg.colony_config(), &exec)?;
            let csv = report::colony_csv(&pair, cfg.chi0);
            print!("{csv}");
            written.push(out.text("figure1", "csv", &csv)?);
            for (k, state) in pair.runs[0].snapshots.iter().enumerate() {
                written.push(out.snapshot(&format!("figure1_{k:03}"), &Snapshot::of_state(state, cfg.seed, &hash))?);
            }
        }
    }
    for p in &written {
        eprintln!("wrote {}", p.display());
    }
    eprintln!("wall_time_s = {:.3}", start.elapsed().as_secs_f64());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
