//! Flat little-endian ensemble snapshots.
//!
//! Layout: `d: u64`, `M: u64`, `counts: [u64; M]`, `masses: [f64; M]`,
//! `weights: [f64; M]`, then for each species its velocities as `d` f64 values
//! per particle.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{EngineError, Ensemble};
use crate::vector::Vec3;

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub dimension: usize,
    pub masses: Vec<f64>,
    pub weights: Vec<f64>,
    pub velocities: Vec<Vec<Vec3>>,
}

pub fn encode(ens: &Ensemble) -> Vec<u8> {
    let d = ens.dimension;
    let mut out = Vec::with_capacity(16 + 24 * ens.num_species() + 8 * d * ens.total_count());
    out.extend_from_slice(&(d as u64).to_le_bytes());
    out.extend_from_slice(&(ens.num_species() as u64).to_le_bytes());
    for sp in &ens.species {
        out.extend_from_slice(&(sp.count() as u64).to_le_bytes());
    }
    for sp in &ens.species {
        out.extend_from_slice(&sp.mass.to_le_bytes());
    }
    for sp in &ens.species {
        out.extend_from_slice(&sp.weight.to_le_bytes());
    }
    for sp in &ens.species {
        for v in &sp.velocities {
            for k in 0..d {
                out.extend_from_slice(&v[k].to_le_bytes());
            }
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Snapshot, EngineError> {
    let mut pos = 0usize;
    let mut word = || -> Result<[u8; 8], EngineError> {
        let b = bytes
            .get(pos..pos + 8)
            .ok_or_else(|| EngineError::Snapshot(format!("truncated at byte {pos}")))?;
        pos += 8;
        Ok(b.try_into().unwrap())
    };
    let d = u64::from_le_bytes(word()?) as usize;
    if !(1..=3).contains(&d) {
        return Err(EngineError::Snapshot(format!("bad dimension {d}")));
    }
    let m = u64::from_le_bytes(word()?) as usize;
    if m == 0 || m > 1 << 16 {
        return Err(EngineError::Snapshot(format!("bad species count {m}")));
    }
    let counts = (0..m).map(|_| word().map(|w| u64::from_le_bytes(w) as usize)).collect::<Result<Vec<_>, _>>()?;
    let masses = (0..m).map(|_| word().map(f64::from_le_bytes)).collect::<Result<Vec<_>, _>>()?;
    let weights = (0..m).map(|_| word().map(f64::from_le_bytes)).collect::<Result<Vec<_>, _>>()?;
    let mut velocities = Vec::with_capacity(m);
    for &n in &counts {
        let mut vs = Vec::with_capacity(n.min(bytes.len() / 8));
        for _ in 0..n {
            let mut c = [0.0; 3];
            for x in c.iter_mut().take(d) {
                *x = f64::from_le_bytes(word()?);
            }
            vs.push(Vec3(c));
        }
        velocities.push(vs);
    }
    if pos != bytes.len() {
        return Err(EngineError::Snapshot(format!("{} trailing bytes", bytes.len() - pos)));
    }
    Ok(Snapshot { dimension: d, masses, weights, velocities })
}

pub fn write_snapshot(ens: &Ensemble, path: &Path) -> Result<(), EngineError> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode(ens))?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot, EngineError> {
    decode(&fs::read(path)?)
}
