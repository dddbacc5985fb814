//! Field snapshots: a text header terminated by a blank line, followed by
//! little-endian `f64` payloads, one field after another in row-major order.

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::hex;
use crate::grid::{FieldState, Grid, GridError};

const MAGIC: &str = "VJPSNAP 1";

/// `git describe` of the build, or `unknown`.
pub const BUILD: &str = env!("VJP_BUILD");

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("{0} exists; pass --overwrite to replace it")]
    Exists(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed snapshot: {0}")]
    Format(String),
    #[error("checksum mismatch: header says {expected}, payload hashes to {found}")]
    Checksum { expected: String, found: String },
    #[error("non-finite value in field {field} at index {index}")]
    NonFinite { field: String, index: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotHeader {
    /// Producer, e.g. `pde` or `kinetic`.
    pub kind: String,
    pub dim: usize,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub origin: [f64; 2],
    pub time: f64,
    pub epsilon: Option<f64>,
    pub seed: u64,
    pub config_hash: String,
    pub build: String,
    pub fields: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub header: SnapshotHeader,
    pub data: Vec<Vec<f64>>,
}

impl Snapshot {
    pub fn new(kind: &str, grid: &Grid, time: f64, seed: u64, config_hash: &str) -> Self {
        Self {
            header: SnapshotHeader {
                kind: kind.to_string(),
                dim: grid.dim(),
                nx: grid.nx(),
                ny: grid.ny(),
                h: grid.h(),
                origin: grid.origin(),
                time,
                epsilon: None,
                seed,
                config_hash: config_hash.to_string(),
                build: BUILD.to_string(),
                fields: Vec::new(),
            },
            data: Vec::new(),
        }
    }

    pub fn with_epsilon(mut self, eps: f64) -> Self {
        self.header.epsilon = Some(eps);
        self
    }

    pub fn with_field(mut self, name: &str, values: Vec<f64>) -> Self {
        self.header.fields.push(name.to_string());
        self.data.push(values);
        self
    }

    /// `u` and `v` of a continuum state.
    pub fn of_state(state: &FieldState, seed: u64, config_hash: &str) -> Self {
        Self::new("pde", &state.grid, state.time, seed, config_hash)
            .with_field("u", state.u.clone())
            .with_field("v", state.v.clone())
    }

    pub fn grid(&self) -> Result<Grid, GridError> {
        Grid::new(self.header.dim, self.header.nx, self.header.ny, self.header.h, self.header.origin)
    }

    pub fn field(&self, name: &str) -> Option<&[f64]> {
        self.header
            .fields
            .iter()
            .position(|f| f == name)
            .map(|i| self.data[i].as_slice())
    }

    fn payload(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 * self.data.iter().map(Vec::len).sum::<usize>());
        for f in &self.data {
            for x in f {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, SnapshotError> {
        let grid = self.grid()?;
        if self.header.fields.len() != self.data.len() {
            return Err(SnapshotError::Format("field names and payloads differ in number".into()));
        }
        for (name, f) in self.header.fields.iter().zip(&self.data) {
            grid.check(f)?;
            if let Some(index) = f.iter().position(|x| !x.is_finite()) {
                return Err(SnapshotError::NonFinite { field: name.clone(), index });
            }
            if name.is_empty() || name.contains([',', '\n']) || name.trim() != name {
                return Err(SnapshotError::Format(format!("bad field name `{name}`")));
            }
        }
        let payload = self.payload();
        let h = &self.header;
        let mut text = String::new();
        text.push_str(MAGIC);
        text.push('\n');
        let mut line = |k: &str, v: String| {
            text.push_str(k);
            text.push_str(" = ");
            text.push_str(&v);
            text.push('\n');
        };
        line("kind", h.kind.clone());
        line("dim", h.dim.to_string());
        line("nx", h.nx.to_string());
        line("ny", h.ny.to_string());
        line("h", format!("{:?}", h.h));
        line("origin", format!("{:?}, {:?}", h.origin[0], h.origin[1]));
        line("time", format!("{:?}", h.time));
        line("epsilon", h.epsilon.map_or("none".to_string(), |e| format!("{e:?}")));
        line("seed", h.seed.to_string());
        line("config_hash", h.config_hash.clone());
        line("build", h.build.clone());
        line("fields", h.fields.join(", "));
        line("payload_bytes", payload.len().to_string());
        line("sha256", hex(&Sha256::digest(&payload)));
        text.push('\n');
        let mut bytes = text.into_bytes();
        bytes.extend_from_slice(&payload);
        Ok(bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, SnapshotError> {
        let bad = |m: &str| SnapshotError::Format(m.to_string());
        let end = bytes
            .windows(2)
            .position(|w| w == b"\n\n")
            .ok_or_else(|| bad("no blank line after the header"))?;
        let text = std::str::from_utf8(&bytes[..end]).map_err(|_| bad("header is not UTF-8"))?;
        let payload = &bytes[end + 2..];
        let mut lines = text.lines();
        if lines.next() != Some(MAGIC) {
            return Err(bad("missing VJPSNAP 1 magic line"));
        }
        let mut kv = std::collections::BTreeMap::new();
        for l in lines {
            let (k, v) = l.split_once(" = ").ok_or_else(|| bad(&format!("bad header line `{l}`")))?;
            kv.insert(k, v);
        }
        let get = |k: &str| kv.get(k).copied().ok_or_else(|| bad(&format!("header lacks `{k}`")));
        let num = |k: &str| -> Result<f64, SnapshotError> {
            get(k)?.parse().map_err(|_| bad(&format!("`{k}` is not a number")))
        };
        let int = |k: &str| -> Result<usize, SnapshotError> {
            get(k)?.parse().map_err(|_| bad(&format!("`{k}` is not an integer")))
        };
        let expected = get("sha256")?.to_string();
        if int("payload_bytes")? != payload.len() {
            return Err(bad(&format!(
                "payload is {} bytes, header says {}",
                payload.len(),
                int("payload_bytes")?
            )));
        }
        let found = hex(&Sha256::digest(payload));
        if found != expected {
            return Err(SnapshotError::Checksum { expected, found });
        }
        let origin: Vec<f64> = get("origin")?
            .split(", ")
            .map(|x| x.parse().map_err(|_| bad("bad origin")))
            .collect::<Result<_, _>>()?;
        if origin.len() != 2 {
            return Err(bad("origin needs two coordinates"));
        }
        let fields: Vec<String> = get("fields")?
            .split(", ")
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        let header = SnapshotHeader {
            kind: get("kind")?.to_string(),
            dim: int("dim")?,
            nx: int("nx")?,
            ny: int("ny")?,
            h: num("h")?,
            origin: [origin[0], origin[1]],
            time: num("time")?,
            epsilon: match get("epsilon")? {
                "none" => None,
                _ => Some(num("epsilon")?),
            },
            seed: get("seed")?.parse().map_err(|_| bad("`seed` is not an integer"))?,
            config_hash: get("config_hash")?.to_string(),
            build: get("build")?.to_string(),
            fields,
        };
        let cells = header.nx * header.ny;
        if payload.len() != 8 * cells * header.fields.len() {
            return Err(bad("payload size does not match the grid and field count"));
        }
        let data = payload
            .chunks_exact(8 * cells.max(1))
            .take(header.fields.len())
            .map(|c| {
                c.chunks_exact(8)
                    .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
                    .collect()
            })
            .collect();
        Ok(Self { header, data })
    }
}

/// Writes `snap` to `path`; an existing file is replaced only with `overwrite`.
pub fn write_snapshot(snap: &Snapshot, path: &Path, overwrite: bool) -> Result<(), SnapshotError> {
    let bytes = snap.to_bytes()?;
    let io = |source| SnapshotError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut file = if overwrite {
        fs::File::create(path).map_err(io)?
    } else {
        match fs::OpenOptions::new().write(true).create_new(true).open(path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                return Err(SnapshotError::Exists(path.display().to_string()))
            }
            Err(e) => return Err(io(e)),
        }
    };
    file.write_all(&bytes).map_err(io)?;
    Ok(())
}

/// Reads and verifies a snapshot; nothing is returned unless the checksum holds.
pub fn read_snapshot(path: &Path) -> Result<Snapshot, SnapshotError> {
    let bytes = fs::read(path).map_err(|source| SnapshotError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Snapshot::from_bytes(&bytes)
}
