//! Binary trajectory checkpoints.
//!
//! Layout, little-endian: `b"BSPL"`, version `u32`, `nx u32`, `ny u32`,
//! `M u32` (steps), `dt f64`, then for each of the `M + 1` states the
//! blocks `u`, `v`, `theta`, `p` as row-major `f64`.

use super::Trajectory;
use crate::error::{Error, Result};
use crate::mesh::{Grid, ScalarField, VectorField};
use crate::steady::relative_divergence;
use std::io::{Read, Write};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"BSPL";
pub const CHECKPOINT_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 * 4 + 8;

/// Fields of one stored time level.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckpointStep {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub theta: Vec<f64>,
    pub p: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub nx: usize,
    pub ny: usize,
    pub dt: f64,
    /// `M + 1` levels, the initial state first.
    pub levels: Vec<CheckpointStep>,
}

impl Checkpoint {
    pub fn from_trajectory(traj: &Trajectory) -> Self {
        let levels = traj
            .states
            .iter()
            .zip(&traj.pressures)
            .map(|(x, p)| CheckpointStep {
                u: x.vel.u.clone(),
                v: x.vel.v.clone(),
                theta: x.temp.data.clone(),
                p: p.data.clone(),
            })
            .collect();
        Self {
            nx: traj.grid.nx,
            ny: traj.grid.ny,
            dt: traj.dt,
            levels,
        }
    }

    pub fn steps(&self) -> usize {
        self.levels.len().saturating_sub(1)
    }

    pub fn velocity(&self, k: usize) -> VectorField {
        let l = &self.levels[k];
        VectorField {
            nx: self.nx,
            ny: self.ny,
            u: l.u.clone(),
            v: l.v.clone(),
        }
    }

    pub fn temperature(&self, k: usize) -> ScalarField {
        ScalarField {
            nx: self.nx,
            ny: self.ny,
            data: self.levels[k].theta.clone(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.dt.is_finite()
            && self.levels.iter().all(|l| {
                [&l.u, &l.v, &l.theta, &l.p]
                    .iter()
                    .all(|b| b.iter().all(|x| x.is_finite()))
            })
    }

    /// Largest relative divergence over the stored levels, measured on the
    /// unit square (the header does not record the domain size).
    pub fn max_relative_divergence(&self) -> Result<f64> {
        let g = Grid::new(self.nx, self.ny, 1.0, 1.0)?;
        Ok((0..self.levels.len())
            .map(|k| relative_divergence(&g, &self.velocity(k)))
            .fold(0.0, f64::max))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.block_len() * self.levels.len());
        out.extend_from_slice(CHECKPOINT_MAGIC);
        for n in [
            CHECKPOINT_VERSION,
            self.nx as u32,
            self.ny as u32,
            self.steps() as u32,
        ] {
            out.extend_from_slice(&n.to_le_bytes());
        }
        out.extend_from_slice(&self.dt.to_le_bytes());
        for l in &self.levels {
            for block in [&l.u, &l.v, &l.theta, &l.p] {
                for x in block {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
        out
    }

    fn block_len(&self) -> usize {
        let (nx, ny) = (self.nx, self.ny);
        (nx + 1) * ny + nx * (ny + 1) + 2 * nx * ny
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: String| Error::Checkpoint(m);
        if bytes.len() < HEADER_LEN {
            return Err(bad(format!(
                "file too short for a header ({} bytes)",
                bytes.len()
            )));
        }
        if &bytes[..4] != CHECKPOINT_MAGIC {
            return Err(bad("bad magic, expected BSPL".into()));
        }
        let word =
            |k: usize| u32::from_le_bytes(bytes[4 + 4 * k..8 + 4 * k].try_into().expect("4 bytes"));
        let version = word(0);
        if version != CHECKPOINT_VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let (nx, ny, m) = (word(1) as usize, word(2) as usize, word(3) as usize);
        let dt = f64::from_le_bytes(bytes[20..28].try_into().expect("8 bytes"));
        if nx < 4 || ny < 4 {
            return Err(bad(format!("grid {nx}x{ny} is below the 4x4 minimum")));
        }
        let mut ck = Self {
            nx,
            ny,
            dt,
            levels: Vec::new(),
        };
        let per = ck.block_len();
        let expected = per
            .checked_mul(m + 1)
            .and_then(|n| n.checked_mul(8))
            .and_then(|n| n.checked_add(HEADER_LEN))
            .ok_or_else(|| bad("header sizes overflow".into()))?;
        if bytes.len() != expected {
            return Err(bad(format!(
                "expected {expected} bytes for {m} steps on {nx}x{ny}, found {}",
                bytes.len()
            )));
        }
        let mut vals = bytes[HEADER_LEN..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
        let mut take = |n: usize| -> Vec<f64> { vals.by_ref().take(n).collect() };
        for _ in 0..=m {
            let u = take((nx + 1) * ny);
            let v = take(nx * (ny + 1));
            let theta = take(nx * ny);
            let p = take(nx * ny);
            ck.levels.push(CheckpointStep { u, v, theta, p });
        }
        Ok(ck)
    }
}

pub fn write_checkpoint<W: Write>(mut w: W, traj: &Trajectory) -> Result<()> {
    w.write_all(&Checkpoint::from_trajectory(traj).to_bytes())?;
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Checkpoint> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    Checkpoint::from_bytes(&bytes)
}
