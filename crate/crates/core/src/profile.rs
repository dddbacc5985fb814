//! Initial-data expressions such as `gaussian(0.71, 6.25)`.

use std::fmt;
use std::str::FromStr;

use crate::grid::Grid;
use crate::velocity::Vec2;

#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// `c`.
    Constant(f64),
    /// `amp·exp(−|x − c|²/width2)`.
    Gaussian { amp: f64, width2: f64, center: [f64; 2] },
    /// `base + amp·exp(−|x − c|²/width2)`.
    Bump { base: f64, amp: f64, width2: f64, center: [f64; 2] },
    /// `mean + amp·cos(waves·π·(x − x_lo)/L_x)`; satisfies the no-flux condition.
    Cosine { mean: f64, amp: f64, waves: f64 },
    /// `value` where `x < 0`, zero elsewhere.
    HalfPlane(f64),
}

impl Profile {
    pub fn eval(&self, p: &Vec2, lo: [f64; 2], hi: [f64; 2]) -> f64 {
        match *self {
            Profile::Constant(c) => c,
            Profile::Gaussian { amp, width2, center } => {
                amp * (-((p.x - center[0]).powi(2) + (p.y - center[1]).powi(2)) / width2).exp()
            }
            Profile::Bump {
                base,
                amp,
                width2,
                center,
            } => base + amp * (-((p.x - center[0]).powi(2) + (p.y - center[1]).powi(2)) / width2).exp(),
            Profile::Cosine { mean, amp, waves } => {
                let len = hi[0] - lo[0];
                mean + amp * (waves * std::f64::consts::PI * (p.x - lo[0]) / len).cos()
            }
            Profile::HalfPlane(value) => {
                if p.x < 0.0 {
                    value
                } else {
                    0.0
                }
            }
        }
    }

    /// Values at the cell centres of `grid`.
    pub fn sample(&self, grid: &Grid) -> Vec<f64> {
        let (lo, hi) = grid.bounds();
        grid.sample(|p| self.eval(p, lo, hi))
    }
}

fn fmt_num(x: f64) -> String {
    format!("{x:?}")
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = fmt_num;
        match *self {
            Profile::Constant(c) => write!(f, "constant({})", n(c)),
            Profile::Gaussian { amp, width2, center } => {
                write!(f, "gaussian({}, {}, {}, {})", n(amp), n(width2), n(center[0]), n(center[1]))
            }
            Profile::Bump {
                base,
                amp,
                width2,
                center,
            } => write!(
                f,
                "bump({}, {}, {}, {}, {})",
                n(base),
                n(amp),
                n(width2),
                n(center[0]),
                n(center[1])
            ),
            Profile::Cosine { mean, amp, waves } => write!(f, "cosine({}, {}, {})", n(mean), n(amp), n(waves)),
            Profile::HalfPlane(v) => write!(f, "halfplane({})", n(v)),
        }
    }
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let open = s.find('(').ok_or_else(|| format!("expected name(args), got `{s}`"))?;
        if !s.ends_with(')') {
            return Err(format!("missing `)` in `{s}`"));
        }
        let name = s[..open].trim();
        let args: Vec<f64> = s[open + 1..s.len() - 1]
            .split(',')
            .map(|a| a.trim())
            .filter(|a| !a.is_empty())
            .map(|a| a.parse::<f64>().map_err(|_| format!("bad number `{a}` in `{s}`")))
            .collect::<Result<_, _>>()?;
        if let Some(bad) = args.iter().find(|a| !a.is_finite()) {
            return Err(format!("non-finite argument {bad} in `{s}`"));
        }
        let arity = |lo: usize, hi: usize| {
            if args.len() < lo || args.len() > hi {
                Err(format!("{name} takes {lo} to {hi} arguments, got {}", args.len()))
            } else {
                Ok(())
            }
        };
        let center = |from: usize| [args.get(from).copied().unwrap_or(0.0), args.get(from + 1).copied().unwrap_or(0.0)];
        match name {
            "constant" => {
                arity(1, 1)?;
                Ok(Profile::Constant(args[0]))
            }
            "gaussian" => {
                arity(2, 4)?;
                if args[1] <= 0.0 {
                    return Err(format!("gaussian width2 must be positive in `{s}`"));
                }
                Ok(Profile::Gaussian {
                    amp: args[0],
                    width2: args[1],
                    center: center(2),
                })
            }
            "bump" => {
                arity(3, 5)?;
                if args[2] <= 0.0 {
                    return Err(format!("bump width2 must be positive in `{s}`"));
                }
                Ok(Profile::Bump {
                    base: args[0],
                    amp: args[1],
                    width2: args[2],
                    center: center(3),
                })
            }
            "cosine" => {
                arity(3, 3)?;
                Ok(Profile::Cosine {
                    mean: args[0],
                    amp: args[1],
                    waves: args[2],
                })
            }
            "halfplane" => {
                arity(1, 1)?;
                Ok(Profile::HalfPlane(args[0]))
            }
            other => Err(format!(
                "unknown profile `{other}` (constant, gaussian, bump, cosine, halfplane)"
            )),
        }
    }
}
