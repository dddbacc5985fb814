//! Flat sectioned configuration: `[section]` headers, `key = value` lines
//! and `#` comments.
//!
//! Two constant sets are accepted. In non-dimensional mode `σ₀`, `χ₀` and
//! `μ̃₀` are given directly. In dimensional mode the physical constants
//! `s, μ₀, θ, k, K_d, D_S` are mapped to
//!
//! ```text
//! σ₀ = (θK_d²/D_S)·s²/(μ₀n)   s̃ = s/√(θkK_dD_S)   μ̃₀ = μ₀/(θ²kK_d³)
//! ```
//!
//! and everything else (domain, time, initial data) is read in the
//! non-dimensional variables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::grid::{FieldState, Grid, GridError};
use crate::harness::{ColonyConfig, ConvergenceSetup, DriftConfig, MsdConfig};
use crate::kinetic::{ChemicalParams, KineticParams, KineticRun, ReflectionMode};
use crate::pde::{FaceMean, PdeParams};
use crate::profile::Profile;
use crate::turning::{Sensitivity, TurningError, TurningModel};
use crate::velocity::Vec2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Io { path: String, message: String },
    #[error("{at}: {message}")]
    Syntax { at: Location, message: String },
    #[error("{at}: unknown key `{key}`")]
    UnknownKey { at: Location, key: String },
    #[error("{at}: {key}: {message}")]
    Value { at: Location, key: String, message: String },
    #[error("mode conflict: {0}")]
    Conflict(String),
    #[error("unknown preset `{0}` (fig1_full, fig1_reduced, bsubtilis, ecoli, converge, base)")]
    Preset(String),
}

/// Where a setting came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Line(usize),
    Override,
    Default,
}

impl std::fmt::Display for Location {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Location::Line(n) => write!(f, "line {n}"),
            Location::Override => f.write_str("--set"),
            Location::Default => f.write_str("default"),
        }
    }
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("run", &["mode", "seed", "epsilon"]),
    ("nondim", &["sigma0", "speed", "mu0"]),
    ("dimensional", &["s", "mu0", "theta", "k", "kd", "ds"]),
    ("model", &["chi0", "sensitivity"]),
    ("domain", &["dim", "length", "h"]),
    ("time", &["end", "outputs", "dt"]),
    ("init", &["u0", "v0", "noise"]),
    (
        "kinetic",
        &[
            "particles",
            "lambda_min",
            "lambda_max",
            "delta",
            "reflection",
            "splitting",
            "growth",
            "nodes",
        ],
    ),
    ("pde", &["face_mean", "safety", "dt_min", "dt_max", "blowup", "clip_tol"]),
    (
        "harness",
        &["epsilons", "refine", "rays", "drift_gradient", "msd_window_start"],
    ),
];

const PRESETS: &[(&str, &str)] = &[
    ("base", include_str!("../presets/base.cfg")),
    ("fig1_full", include_str!("../presets/fig1_full.cfg")),
    ("fig1_reduced", include_str!("../presets/fig1_reduced.cfg")),
    ("bsubtilis", include_str!("../presets/bsubtilis.cfg")),
    ("ecoli", include_str!("../presets/ecoli.cfg")),
    ("converge", include_str!("../presets/converge.cfg")),
];

/// Text of a shipped preset.
pub fn preset(name: &str) -> Result<&'static str, ConfigError> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| ConfigError::Preset(name.to_string()))
}

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    NonDimensional,
    Dimensional,
}

/// Physical constants of the dimensional model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dimensional {
    pub s: f64,
    pub mu0: f64,
    pub theta: f64,
    pub k: f64,
    pub kd: f64,
    pub ds: f64,
}

impl Dimensional {
    /// `σ = s²/(μ₀n)`.
    pub fn sigma(&self, dim: usize) -> f64 {
        self.s * self.s / (self.mu0 * dim as f64)
    }

    pub fn sigma0(&self, dim: usize) -> f64 {
        self.theta * self.kd * self.kd / self.ds * self.sigma(dim)
    }

    pub fn speed(&self) -> f64 {
        self.s / (self.theta * self.k * self.kd * self.ds).sqrt()
    }

    pub fn mu0(&self) -> f64 {
        self.mu0 / (self.theta * self.theta * self.k * self.kd.powi(3))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Constants {
    NonDimensional { sigma0: f64, mu0: f64 },
    Dimensional(Dimensional),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    pub epsilon: f64,
    pub constants: Constants,
    pub chi0: f64,
    pub sensitivity: Sensitivity,
    pub dim: usize,
    pub length: f64,
    pub h: f64,
    pub end_time: f64,
    pub outputs: Vec<f64>,
    pub dt: Option<f64>,
    pub u0: Profile,
    pub v0: Profile,
    /// Multiply `u₀` by `1 + 0.01·U(−1,1)` cell by cell.
    pub noise: bool,
    pub particles: usize,
    pub lambda_min: f64,
    pub lambda_max: Option<f64>,
    pub delta: f64,
    pub reflection: ReflectionMode,
    pub splitting: bool,
    pub growth: bool,
    pub nodes: usize,
    pub face_mean: FaceMean,
    pub safety: f64,
    pub dt_min: f64,
    pub dt_max: Option<f64>,
    pub blowup: f64,
    pub clip_tol: f64,
    pub epsilons: Vec<f64>,
    pub refine: usize,
    pub rays: usize,
    pub drift_gradient: f64,
    pub msd_window_start: Option<f64>,
}

struct Entry {
    value: String,
    at: Location,
    used: bool,
}

/// `section.key → value` with the origin of each entry.
struct Raw {
    entries: BTreeMap<(String, String), Entry>,
}

fn resolve_key(key: &str, at: Location) -> Result<(String, String), ConfigError> {
    if let Some((sec, k)) = key.split_once('.') {
        let known = SECTIONS
            .iter()
            .any(|(s, keys)| *s == sec && keys.contains(&k));
        if !known {
            return Err(ConfigError::UnknownKey { at, key: key.to_string() });
        }
        return Ok((sec.to_string(), k.to_string()));
    }
    let owners: Vec<&str> = SECTIONS
        .iter()
        .filter(|(_, keys)| keys.contains(&key))
        .map(|(s, _)| *s)
        .collect();
    match owners.as_slice() {
        [one] => Ok((one.to_string(), key.to_string())),
        [] => Err(ConfigError::UnknownKey { at, key: key.to_string() }),
        many => Err(ConfigError::Syntax {
            at,
            message: format!(
                "`{key}` is ambiguous; use one of {}",
                many.iter().map(|s| format!("{s}.{key}")).collect::<Vec<_>>().join(", ")
            ),
        }),
    }
}

impl Raw {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        let mut section: Option<String> = None;
        for (i, line) in text.lines().enumerate() {
            let at = Location::Line(i + 1);
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::Syntax {
                        at,
                        message: format!("malformed section header `{line}`"),
                    })?
                    .trim();
                if !SECTIONS.iter().any(|(s, _)| *s == name) {
                    return Err(ConfigError::Syntax {
                        at,
                        message: format!("unknown section `[{name}]`"),
                    });
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                at,
                message: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim();
            let sec = section.as_deref().ok_or_else(|| ConfigError::Syntax {
                at,
                message: format!("`{key}` appears before any section header"),
            })?;
            let resolved = resolve_key(&format!("{sec}.{key}"), at)?;
            let prev = entries.insert(
                resolved,
                Entry {
                    value: value.trim().to_string(),
                    at,
                    used: false,
                },
            );
            if let Some(prev) = prev {
                return Err(ConfigError::Syntax {
                    at,
                    message: format!("`{sec}.{key}` already set at {}", prev.at),
                });
            }
        }
        Ok(Self { entries })
    }

    fn set(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let at = Location::Override;
        let (key, value) = assignment.split_once('=').ok_or_else(|| ConfigError::Syntax {
            at,
            message: format!("expected key=value, got `{assignment}`"),
        })?;
        let resolved = resolve_key(key.trim(), at)?;
        self.entries.insert(
            resolved,
            Entry {
                value: value.trim().to_string(),
                at,
                used: false,
            },
        );
        Ok(())
    }

    fn has_section(&self, section: &str) -> Option<Location> {
        self.entries
            .iter()
            .find(|((s, _), _)| s == section)
            .map(|(_, e)| e.at)
    }

    fn take(&mut self, section: &str, key: &str) -> Option<(String, Location)> {
        self.entries
            .get_mut(&(section.to_string(), key.to_string()))
            .map(|e| {
                e.used = true;
                (e.value.clone(), e.at)
            })
    }

    fn get<T, F>(&mut self, section: &str, key: &str, parse: F) -> Result<Option<T>, ConfigError>
    where
        F: Fn(&str) -> Result<T, String>,
    {
        match self.take(section, key) {
            None => Ok(None),
            Some((v, at)) => parse(&v).map(Some).map_err(|message| ConfigError::Value {
                at,
                key: format!("{section}.{key}"),
                message,
            }),
        }
    }

    fn location(&self, section: &str, key: &str) -> Location {
        self.entries
            .get(&(section.to_string(), key.to_string()))
            .map_or(Location::Default, |e| e.at)
    }
}

fn num(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|_| format!("expected a number, got `{s}`"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{s} is not finite"))
    }
}

fn int(s: &str) -> Result<u64, String> {
    // accept 1e5-style counts when they are exact integers
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    let x = num(s)?;
    if x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(63) {
        Ok(x as u64)
    } else {
        Err(format!("expected a non-negative integer, got `{s}`"))
    }
}

fn boolean(s: &str) -> Result<bool, String> {
    match s {
        "true" | "on" | "yes" => Ok(true),
        "false" | "off" | "no" => Ok(false),
        _ => Err(format!("expected true or false, got `{s}`")),
    }
}

fn list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|x| num(x.trim())).collect()
}

fn sensitivity(s: &str) -> Result<Sensitivity, String> {
    match s {
        "receptor_law" => Ok(Sensitivity::ReceptorLaw),
        "constant" => Ok(Sensitivity::Constant),
        _ => Err(format!("expected receptor_law or constant, got `{s}`")),
    }
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

macro_rules! check {
    ($raw:expr, $sec:literal, $key:literal, $ok:expr, $msg:expr) => {
        if !$ok {
            return Err(ConfigError::Value {
                at: $raw.location($sec, $key),
                key: concat!($sec, ".", $key).to_string(),
                message: $msg.to_string(),
            });
        }
    };
}

impl SimConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::parse_with_overrides::<&str>(text, &[])
    }

    /// Parses `text`, then applies `key=value` overrides; bare keys are
    /// accepted when exactly one section owns them.
    pub fn parse_with_overrides<S: AsRef<str>>(text: &str, overrides: &[S]) -> Result<Self, ConfigError> {
        let mut raw = Raw::parse(text)?;
        for o in overrides {
            raw.set(o.as_ref())?;
        }
        Self::build(raw)
    }

    /// Reads a file, or a shipped preset when `path` is `preset:NAME`.
    pub fn load<S: AsRef<str>>(path: &str, overrides: &[S]) -> Result<Self, ConfigError> {
        let text = match path.strip_prefix("preset:") {
            Some(name) => preset(name)?.to_string(),
            None => std::fs::read_to_string(Path::new(path)).map_err(|e| ConfigError::Io {
                path: path.to_string(),
                message: e.to_string(),
            })?,
        };
        Self::parse_with_overrides(&text, overrides)
    }

    fn build(mut raw: Raw) -> Result<Self, ConfigError> {
        let mode = match raw.get("run", "mode", |s| match s {
            "nondimensional" | "nondim" => Ok(Mode::NonDimensional),
            "dimensional" => Ok(Mode::Dimensional),
            _ => Err(format!("expected nondimensional or dimensional, got `{s}`")),
        })? {
            Some(m) => m,
            None if raw.has_section("dimensional").is_some() => {
                Mode::Dimensional
            }
            None => Mode::NonDimensional,
        };
        let seed = raw.get("run", "seed", int)?.unwrap_or(1);
        let epsilon = raw.get("run", "epsilon", num)?.unwrap_or(0.1);
        check!(raw, "run", "epsilon", epsilon > 0.0 && epsilon < 1.0, format!("ε = {epsilon} must lie in (0, 1)"));

        let dim = raw.get("domain", "dim", int)?.unwrap_or(2) as usize;
        check!(raw, "domain", "dim", dim == 1 || dim == 2, format!("dim = {dim} must be 1 or 2"));

        let nd_sigma0 = raw.get("nondim", "sigma0", num)?;
        let nd_speed = raw.get("nondim", "speed", num)?;
        let nd_mu0 = raw.get("nondim", "mu0", num)?;
        for (key, v) in [("sigma0", nd_sigma0), ("speed", nd_speed), ("mu0", nd_mu0)] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return Err(ConfigError::Value {
                        at: raw.location("nondim", key),
                        key: format!("nondim.{key}"),
                        message: format!("{v} must be positive"),
                    });
                }
            }
        }
        let constants = match mode {
            Mode::NonDimensional => {
                if let Some(at) = raw.has_section("dimensional") {
                    return Err(ConfigError::Conflict(format!(
                        "[dimensional] constants given ({at}) in non-dimensional mode"
                    )));
                }
                let mu0 = nd_mu0.unwrap_or(1.0);
                let sigma0 = match (nd_sigma0, nd_speed) {
                    (Some(s0), Some(sp)) => {
                        let implied = sp * sp / (dim as f64 * mu0);
                        if relative_gap(s0, implied) > 1e-12 {
                            return Err(ConfigError::Conflict(format!(
                                "nondim.speed = {sp} implies σ₀ = {implied}, but nondim.sigma0 = {s0}"
                            )));
                        }
                        s0
                    }
                    (Some(s0), None) => s0,
                    (None, Some(sp)) => sp * sp / (dim as f64 * mu0),
                    (None, None) => 1.0,
                };
                Constants::NonDimensional { sigma0, mu0 }
            }
            Mode::Dimensional => {
                let mut vals = [0.0; 6];
                for (slot, key) in vals.iter_mut().zip(["s", "mu0", "theta", "k", "kd", "ds"]) {
                    let v = raw.get("dimensional", key, num)?.ok_or_else(|| {
                        ConfigError::Conflict(format!("dimensional mode needs dimensional.{key}"))
                    })?;
                    if !(v > 0.0) {
                        return Err(ConfigError::Value {
                            at: raw.location("dimensional", key),
                            key: format!("dimensional.{key}"),
                            message: format!("{v} must be positive"),
                        });
                    }
                    *slot = v;
                }
                let d = Dimensional {
                    s: vals[0],
                    mu0: vals[1],
                    theta: vals[2],
                    k: vals[3],
                    kd: vals[4],
                    ds: vals[5],
                };
                for (key, given, derived) in [
                    ("sigma0", nd_sigma0, d.sigma0(dim)),
                    ("speed", nd_speed, d.speed()),
                    ("mu0", nd_mu0, d.mu0()),
                ] {
                    if let Some(g) = given {
                        if relative_gap(g, derived) > 1e-12 {
                            return Err(ConfigError::Conflict(format!(
                                "nondim.{key} = {g} disagrees with the value {derived} derived from [dimensional]"
                            )));
                        }
                    }
                }
                Constants::Dimensional(d)
            }
        };

        let chi0 = raw.get("model", "chi0", num)?.unwrap_or(0.0);
        check!(raw, "model", "chi0", chi0 >= 0.0, format!("χ₀ = {chi0} must be non-negative"));
        let sensitivity = raw.get("model", "sensitivity", sensitivity)?.unwrap_or_default();

        let length = raw.get("domain", "length", num)?.unwrap_or(20.0);
        let h = raw.get("domain", "h", num)?.unwrap_or(0.5);
        check!(raw, "domain", "h", h > 0.0, format!("h = {h} must be positive"));
        check!(
            raw,
            "domain",
            "length",
            length > 0.0 && (length / h - (length / h).round()).abs() < 1e-9 && (length / h).round() >= 2.0,
            format!("length = {length} must be a positive multiple of h = {h} spanning at least two cells")
        );

        let end_time = raw.get("time", "end", num)?;
        let outputs = raw.get("time", "outputs", list)?;
        let (end_time, outputs) = match (end_time, outputs) {
            (Some(e), Some(o)) => (e, o),
            (Some(e), None) => (e, vec![e]),
            (None, Some(o)) => (o.last().copied().unwrap_or(1.0), o),
            (None, None) => (1.0, vec![1.0]),
        };
        check!(raw, "time", "end", end_time > 0.0, format!("end time {end_time} must be positive"));
        check!(
            raw,
            "time",
            "outputs",
            !outputs.is_empty()
                && outputs.windows(2).all(|w| w[0] < w[1])
                && outputs[0] >= 0.0
                && outputs.last().copied() == Some(end_time),
            "output times must increase strictly from t ≥ 0 and end at time.end"
        );
        let dt = raw.get("time", "dt", num)?;
        if let Some(dt) = dt {
            check!(raw, "time", "dt", dt > 0.0, format!("dt = {dt} must be positive"));
        }

        let u0 = raw.get("init", "u0", |s| s.parse::<Profile>())?.unwrap_or(Profile::Gaussian {
            amp: 1.0,
            width2: 1.0,
            center: [0.0, 0.0],
        });
        let v0 = raw.get("init", "v0", |s| s.parse::<Profile>())?.unwrap_or(Profile::Constant(1.0));
        let noise = raw.get("init", "noise", boolean)?.unwrap_or(false);

        let particles = raw.get("kinetic", "particles", int)?.unwrap_or(100_000) as usize;
        check!(raw, "kinetic", "particles", particles > 0, "need at least one particle");
        let lambda_min = raw.get("kinetic", "lambda_min", num)?.unwrap_or(0.0);
        let lambda_max = raw.get("kinetic", "lambda_max", num)?;
        let delta = raw.get("kinetic", "delta", num)?.unwrap_or(1e-8);
        let reflection = raw.get("kinetic", "reflection", |s| s.parse::<ReflectionMode>())?.unwrap_or_default();
        let splitting = raw.get("kinetic", "splitting", boolean)?.unwrap_or(false);
        let growth = raw.get("kinetic", "growth", boolean)?.unwrap_or(true);
        let nodes = raw.get("kinetic", "nodes", int)?.unwrap_or(64) as usize;

        let face_mean = raw.get("pde", "face_mean", |s| s.parse::<FaceMean>())?.unwrap_or_default();
        let safety = raw.get("pde", "safety", num)?.unwrap_or(0.45);
        check!(raw, "pde", "safety", safety > 0.0 && safety <= 1.0, format!("safety = {safety} must lie in (0, 1]"));
        let dt_min = raw.get("pde", "dt_min", num)?.unwrap_or(1e-12);
        let dt_max = raw.get("pde", "dt_max", num)?;
        let blowup = raw.get("pde", "blowup", num)?.unwrap_or(1e6);
        let clip_tol = raw.get("pde", "clip_tol", num)?.unwrap_or(1e-14);

        let epsilons = raw.get("harness", "epsilons", list)?.unwrap_or_else(|| vec![0.4, 0.2, 0.1]);
        check!(
            raw,
            "harness",
            "epsilons",
            !epsilons.is_empty() && epsilons.iter().all(|&e| e > 0.0 && e < 1.0),
            "every ε in the ladder must lie in (0, 1)"
        );
        let refine = raw.get("harness", "refine", int)?.unwrap_or(4) as usize;
        check!(raw, "harness", "refine", refine >= 1, "refine must be at least 1");
        let rays = raw.get("harness", "rays", int)?.unwrap_or(360) as usize;
        check!(raw, "harness", "rays", rays >= 1, "rays must be at least 1");
        let drift_gradient = raw.get("harness", "drift_gradient", num)?.unwrap_or(0.1);
        let msd_window_start = raw.get("harness", "msd_window_start", num)?;

        if let Some(((s, k), e)) = raw.entries.iter().find(|(_, e)| !e.used) {
            return Err(ConfigError::Conflict(format!(
                "{s}.{k} ({}) is not used in {} mode",
                e.at,
                if mode == Mode::Dimensional { "dimensional" } else { "non-dimensional" }
            )));
        }

        let cfg = SimConfig {
            seed,
            epsilon,
            constants,
            chi0,
            sensitivity,
            dim,
            length,
            h,
            end_time,
            outputs,
            dt,
            u0,
            v0,
            noise,
            particles,
            lambda_min,
            lambda_max,
            delta,
            reflection,
            splitting,
            growth,
            nodes,
            face_mean,
            safety,
            dt_min,
            dt_max,
            blowup,
            clip_tol,
            epsilons,
            refine,
            rays,
            drift_gradient,
            msd_window_start,
        };
        cfg.turning_model().map_err(|e| ConfigError::Value {
            at: Location::Default,
            key: "kinetic".into(),
            message: e.to_string(),
        })?;
        cfg.pde_params().validate().map_err(|e| ConfigError::Value {
            at: Location::Default,
            key: "pde".into(),
            message: e.to_string(),
        })?;
        Ok(cfg)
    }

    pub fn mode(&self) -> Mode {
        match self.constants {
            Constants::NonDimensional { .. } => Mode::NonDimensional,
            Constants::Dimensional(_) => Mode::Dimensional,
        }
    }

    pub fn sigma0(&self) -> f64 {
        match self.constants {
            Constants::NonDimensional { sigma0, .. } => sigma0,
            Constants::Dimensional(d) => d.sigma0(self.dim),
        }
    }

    /// Non-dimensional turning constant `μ̃₀`.
    pub fn mu0(&self) -> f64 {
        match self.constants {
            Constants::NonDimensional { mu0, .. } => mu0,
            Constants::Dimensional(d) => d.mu0(),
        }
    }

    /// Non-dimensional speed `s̃ = √(nσ₀μ̃₀)`.
    pub fn speed(&self) -> f64 {
        match self.constants {
            Constants::NonDimensional { sigma0, mu0 } => (self.dim as f64 * sigma0 * mu0).sqrt(),
            Constants::Dimensional(d) => d.speed(),
        }
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max.unwrap_or(1e3 * self.mu0())
    }

    /// Kinetic macro step: the configured `dt`, else `min(0.01, 0.5/λ_max)`.
    pub fn kinetic_dt(&self) -> f64 {
        self.dt.unwrap_or_else(|| 0.01f64.min(0.5 / self.lambda_max()))
    }

    pub fn grid(&self) -> Result<Grid, GridError> {
        Grid::centered(self.dim, self.length, self.h)
    }

    pub fn turning_model(&self) -> Result<TurningModel, TurningError> {
        TurningModel::new(self.mu0(), self.chi0, 1.0, self.sensitivity.clone())?
            .with_clamps(self.lambda_min, self.lambda_max())?
            .with_floor(self.delta)
    }

    pub fn kinetic_params(&self, epsilon: f64) -> Result<KineticParams, TurningError> {
        let mut p = KineticParams::new(self.dim, self.speed(), epsilon, self.turning_model()?);
        p.reflection = self.reflection;
        p.splitting = self.splitting;
        p.growth_rate = if self.growth { 1.0 } else { 0.0 };
        Ok(p)
    }

    pub fn kinetic_run(&self) -> Result<KineticRun, TurningError> {
        Ok(KineticRun {
            grid: self.grid().expect("grid validated at parse time"),
            params: self.kinetic_params(self.epsilon)?,
            chemical: ChemicalParams {
                diffusivity: 1.0,
                uptake: if self.growth { 1.0 } else { 0.0 },
            },
            dt: self.kinetic_dt(),
            outputs: self.outputs.clone(),
        })
    }

    pub fn pde_params(&self) -> PdeParams {
        let mut p = PdeParams::new(self.sigma0(), self.chi0);
        p.sensitivity = self.sensitivity.clone();
        p.face_mean = self.face_mean;
        p.safety = self.safety;
        p.dt_min = self.dt_min;
        p.blowup = self.blowup;
        p.clip_tol = self.clip_tol;
        p
    }

    /// `u₀` and `v₀` sampled at cell centres, with the optional 1% noise on `u₀`.
    pub fn initial_state(&self) -> Result<FieldState, GridError> {
        let grid = self.grid()?;
        let mut u = self.u0.sample(&grid);
        let v = self.v0.sample(&grid);
        if self.noise {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            rng.set_stream(u64::MAX);
            for x in u.iter_mut() {
                *x *= 1.0 + 0.01 * (2.0 * rng.random::<f64>() - 1.0);
            }
        }
        FieldState::new(grid, u, v, 0.0)
    }

    pub fn msd_config(&self) -> MsdConfig {
        let mut c = MsdConfig::new(self.dim, self.speed(), self.mu0());
        c.epsilon = self.epsilon;
        c.particles = self.particles;
        c.end_time = self.end_time;
        c.window_start = self.msd_window_start;
        c.seed = self.seed;
        if let Some(lm) = self.lambda_max {
            c.lambda_max_factor = lm / self.mu0();
        }
        c
    }

    pub fn drift_config(&self) -> DriftConfig {
        DriftConfig {
            speed: self.speed(),
            mu0: self.mu0(),
            chi0: self.chi0,
            kd: 1.0,
            sensitivity: self.sensitivity.clone(),
            rho: 1.0,
            s: 1.0,
            grad_s: Vec2::new(self.drift_gradient, 0.0),
            epsilon: self.epsilon,
            lambda_max: self.lambda_max(),
            particles: self.particles,
            end_time: self.end_time,
            seed: self.seed,
            clamp_tolerance: 1e-3,
        }
    }

    pub fn convergence_setup(&self) -> ConvergenceSetup {
        ConvergenceSetup {
            dim: self.dim,
            length: self.length,
            h: self.h,
            refine: self.refine,
            sigma0: self.sigma0(),
            mu0: self.mu0(),
            chi0: self.chi0,
            sensitivity: self.sensitivity.clone(),
            u0: self.u0.clone(),
            v0: self.v0.clone(),
            end_time: self.end_time,
            epsilons: self.epsilons.clone(),
            particles: self.particles,
            lambda_max: self.lambda_max(),
            kinetic_dt: self.kinetic_dt(),
            pde_dt_max: self.dt_max,
            seed: self.seed,
        }
    }

    pub fn colony_config(&self) -> ColonyConfig {
        ColonyConfig {
            length: self.length,
            h: self.h,
            sigma0: self.sigma0(),
            chi0: self.chi0,
            u0: self.u0.clone(),
            v0: self.v0.clone(),
            outputs: self.outputs.clone(),
            rays: self.rays,
            dt_max: self.dt_max,
        }
    }

    /// Canonical text form; parsing it gives back an equal config.
    pub fn echo(&self) -> String {
        let n = |x: f64| format!("{x:?}");
        let l = |xs: &[f64]| xs.iter().map(|&x| n(x)).collect::<Vec<_>>().join(", ");
        let mut o = String::new();
        let _ = writeln!(o, "# derived: sigma0 = {}, speed = {}, mu0 = {}", n(self.sigma0()), n(self.speed()), n(self.mu0()));
        let _ = writeln!(o, "[run]");
        let mode = match self.mode() {
            Mode::NonDimensional => "nondimensional",
            Mode::Dimensional => "dimensional",
        };
        let _ = writeln!(o, "mode = {mode}\nseed = {}\nepsilon = {}", self.seed, n(self.epsilon));
        match self.constants {
            Constants::NonDimensional { sigma0, mu0 } => {
                let _ = writeln!(o, "\n[nondim]\nsigma0 = {}\nmu0 = {}", n(sigma0), n(mu0));
            }
            Constants::Dimensional(d) => {
                let _ = writeln!(
                    o,
                    "\n[dimensional]\ns = {}\nmu0 = {}\ntheta = {}\nk = {}\nkd = {}\nds = {}",
                    n(d.s),
                    n(d.mu0),
                    n(d.theta),
                    n(d.k),
                    n(d.kd),
                    n(d.ds)
                );
            }
        }
        let _ = writeln!(o, "\n[model]\nchi0 = {}\nsensitivity = {}", n(self.chi0), self.sensitivity.name());
        let _ = writeln!(o, "\n[domain]\ndim = {}\nlength = {}\nh = {}", self.dim, n(self.length), n(self.h));
        let _ = writeln!(o, "\n[time]\nend = {}\noutputs = {}", n(self.end_time), l(&self.outputs));
        if let Some(dt) = self.dt {
            let _ = writeln!(o, "dt = {}", n(dt));
        }
        let _ = writeln!(o, "\n[init]\nu0 = {}\nv0 = {}\nnoise = {}", self.u0, self.v0, self.noise);
        let _ = writeln!(
            o,
            "\n[kinetic]\nparticles = {}\nlambda_min = {}",
            self.particles,
            n(self.lambda_min)
        );
        if let Some(lm) = self.lambda_max {
            let _ = writeln!(o, "lambda_max = {}", n(lm));
        }
        let _ = writeln!(
            o,
            "delta = {}\nreflection = {}\nsplitting = {}\ngrowth = {}\nnodes = {}",
            n(self.delta),
            self.reflection,
            self.splitting,
            self.growth,
            self.nodes
        );
        let _ = writeln!(
            o,
            "\n[pde]\nface_mean = {}\nsafety = {}\ndt_min = {}",
            self.face_mean,
            n(self.safety),
            n(self.dt_min)
        );
        if let Some(d) = self.dt_max {
            let _ = writeln!(o, "dt_max = {}", n(d));
        }
        let _ = writeln!(o, "blowup = {}\nclip_tol = {}", n(self.blowup), n(self.clip_tol));
        let _ = writeln!(
            o,
            "\n[harness]\nepsilons = {}\nrefine = {}\nrays = {}\ndrift_gradient = {}",
            l(&self.epsilons),
            self.refine,
            self.rays,
            n(self.drift_gradient)
        );
        if let Some(t) = self.msd_window_start {
            let _ = writeln!(o, "msd_window_start = {}", n(t));
        }
        o
    }

    /// SHA-256 of the canonical echo, hex encoded.
    pub fn hash(&self) -> String {
        hex(&Sha256::digest(self.echo().as_bytes()))
    }

    /// First 12 hex digits of `hash`, used in file names.
    pub fn short_hash(&self) -> String {
        self.hash()[..12].to_string()
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(2 * bytes.len()), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}
