//! Regular reflection at the walls of a rectangular box.
//!
//! Both wall laws keep the speed: the specular law mirrors the normal
//! component, the bounce-back law reverses the whole velocity. Flights are
//! traced event by event, so a particle that meets a wall mid-flight is
//! reflected at the exact hit point and finishes the flight inside.

use std::fmt;
use std::str::FromStr;

use crate::velocity::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReflectionMode {
    #[default]
    Specular,
    BounceBack,
}

impl fmt::Display for ReflectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReflectionMode::Specular => "specular",
            ReflectionMode::BounceBack => "bounce_back",
        })
    }
}

impl FromStr for ReflectionMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "specular" => Ok(Self::Specular),
            "bounce_back" | "bounce-back" => Ok(Self::BounceBack),
            other => Err(format!("unknown reflection mode `{other}` (specular, bounce_back)")),
        }
    }
}

/// `v' = v − 2(v·ν̂)ν̂` (specular) or `v' = −v` (bounce-back).
pub fn reflect_velocity(v: &Vec2, normal: &Vec2, mode: ReflectionMode) -> Vec2 {
    match mode {
        ReflectionMode::Specular => v - normal * (2.0 * v.dot(normal)),
        ReflectionMode::BounceBack => -v,
    }
}

/// Closed box `[lo, hi]` in the first `dim` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    dim: usize,
    lo: [f64; 2],
    hi: [f64; 2],
}

/// Result of tracing one straight flight through the box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flight {
    pub position: [f64; 2],
    pub velocity: [f64; 2],
    pub reflections: u32,
}

// A flight needing this many wall hits is treated as degenerate.
pub const HARD_REFLECTION_LIMIT: u32 = 1 << 16;

impl Domain {
    pub fn new(dim: usize, lo: [f64; 2], hi: [f64; 2]) -> Self {
        assert!(dim == 1 || dim == 2);
        for a in 0..dim {
            assert!(lo[a] < hi[a], "empty box along axis {a}");
        }
        Self { dim, lo, hi }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lo(&self) -> [f64; 2] {
        self.lo
    }

    pub fn hi(&self) -> [f64; 2] {
        self.hi
    }

    pub fn contains(&self, p: &[f64; 2]) -> bool {
        (0..self.dim).all(|a| p[a] >= self.lo[a] && p[a] <= self.hi[a])
    }

    /// Traces `pos += scale·vel·t` for `duration`, reflecting at each wall hit.
    /// Returns the number of reflections. Corner hits are resolved one face
    /// at a time.
    #[inline]
    pub fn fly(&self, pos: &mut [f64; 2], vel: &mut [f64; 2], scale: f64, duration: f64, mode: ReflectionMode) -> u32 {
        let mut remaining = duration;
        let mut count = 0;
        loop {
            let mut hit_axis = usize::MAX;
            let mut hit_time = remaining;
            let mut hit_wall = 0.0;
            for a in 0..self.dim {
                let c = vel[a] * scale;
                let (wall, t) = if c > 0.0 {
                    (self.hi[a], (self.hi[a] - pos[a]) / c)
                } else if c < 0.0 {
                    (self.lo[a], (self.lo[a] - pos[a]) / c)
                } else {
                    continue;
                };
                if t < hit_time {
                    hit_time = t.max(0.0);
                    hit_axis = a;
                    hit_wall = wall;
                }
            }
            if hit_axis == usize::MAX {
                for a in 0..self.dim {
                    pos[a] = (pos[a] + vel[a] * scale * remaining).clamp(self.lo[a], self.hi[a]);
                }
                return count;
            }
            for a in 0..self.dim {
                pos[a] = if a == hit_axis {
                    hit_wall
                } else {
                    (pos[a] + vel[a] * scale * hit_time).clamp(self.lo[a], self.hi[a])
                };
            }
            match mode {
                ReflectionMode::Specular => vel[hit_axis] = -vel[hit_axis],
                ReflectionMode::BounceBack => {
                    vel[0] = -vel[0];
                    vel[1] = -vel[1];
                }
            }
            remaining -= hit_time;
            count += 1;
            if count >= HARD_REFLECTION_LIMIT {
                return count;
            }
        }
    }

    /// Straight flight from `start` with velocity `velocity` for `duration`,
    /// folded back into the box.
    pub fn reflect(&self, start: [f64; 2], velocity: [f64; 2], duration: f64, mode: ReflectionMode) -> Flight {
        let mut position = start;
        let mut velocity = velocity;
        let reflections = self.fly(&mut position, &mut velocity, 1.0, duration, mode);
        Flight {
            position,
            velocity,
            reflections,
        }
    }
}

/// Free flight without walls.
#[inline]
pub fn fly_free(pos: &mut [f64; 2], vel: &[f64; 2], scale: f64, duration: f64) {
    pos[0] += vel[0] * scale * duration;
    pos[1] += vel[1] * scale * duration;
}
