//! Binary wavefunction snapshots.
//!
//! Layout, all little-endian: magic `AFGS`, `u32` version (1), `u64` n,
//! `f64` half-width L, `f64` beta, `f64` R, then the `n²` samples as
//! `(re, im)` pairs of `f64`, row-major with x fastest.

use std::path::Path;

use afield_core::{GridSpec, ScalarField, WaveFunction};
use num_complex::Complex;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::output::write_atomic;

pub const MAGIC: &[u8; 4] = b"AFGS";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 8 + 8 + 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateHeader {
    pub n: usize,
    pub half_width: f64,
    pub beta: f64,
    pub radius: f64,
}

impl StateHeader {
    pub fn spec(&self) -> CliResult<GridSpec<f64>> {
        Ok(GridSpec::new(self.n, self.half_width)?)
    }
}

fn format_error(msg: impl std::fmt::Display) -> CliError {
    CliError::config(format!("state file format error: {msg}"))
}

pub fn encode(u: &WaveFunction<f64>, beta: f64, radius: f64) -> Vec<u8> {
    let spec = u.spec();
    let mut out = Vec::with_capacity(HEADER_LEN + 16 * spec.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(spec.n() as u64).to_le_bytes());
    for v in [spec.half_width(), beta, radius] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for z in u.values() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

fn f64_at(bytes: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(bytes[at..at + 8].try_into().expect("8 bytes"))
}

pub fn decode(bytes: &[u8]) -> CliResult<(StateHeader, WaveFunction<f64>)> {
    if bytes.len() < HEADER_LEN {
        return Err(format_error(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[0..4] != MAGIC {
        return Err(format_error(format!("bad magic {:?}, expected \"AFGS\"", &bytes[0..4])));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(format_error(format!("unsupported version {version}")));
    }
    let n = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    let header = StateHeader {
        n: usize::try_from(n).map_err(format_error)?,
        half_width: f64_at(bytes, 16),
        beta: f64_at(bytes, 24),
        radius: f64_at(bytes, 32),
    };
    let spec = header.spec().map_err(|e| format_error(format!("invalid grid in header: {e}")))?;
    let expected = HEADER_LEN + 16 * spec.len();
    if bytes.len() != expected {
        return Err(format_error(format!(
            "expected {expected} bytes for n={}, found {}",
            header.n,
            bytes.len()
        )));
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(16)
        .map(|c| Complex::new(f64_at(c, 0), f64_at(c, 8)))
        .collect();
    let field = ScalarField::from_values(spec, values)?;
    Ok((header, WaveFunction::new(field)))
}

pub fn save(path: &Path, u: &WaveFunction<f64>, beta: f64, radius: f64) -> CliResult<()> {
    write_atomic(path, &encode(u, beta, radius))
}

pub fn load(path: &Path) -> CliResult<(StateHeader, WaveFunction<f64>)> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::config(format!("cannot read state file {}: {e}", path.display())))?;
    decode(&bytes)
}

/// Loads a state that must live on `spec`; a mismatch is an error, never a resample.
pub fn load_on(path: &Path, spec: GridSpec<f64>) -> CliResult<(StateHeader, WaveFunction<f64>)> {
    let (h, u) = load(path)?;
    if h.n != spec.n() || h.half_width.to_bits() != spec.half_width().to_bits() {
        return Err(CliError::config(format!(
            "state file {} lives on n={}, L={} but the requested grid is n={}, L={}",
            path.display(),
            h.n,
            h.half_width,
            spec.n(),
            spec.half_width()
        )));
    }
    Ok((h, u))
}
