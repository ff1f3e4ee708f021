//! Text persistence of a [`Manifold`].
//!
//! ```text
//! # equilibrium manifold
//! format = 1
//! params_hash = <64 hex digits>
//! turning = counter_clockwise | clockwise | both
//! r_c_min = <f64>
//! samples = <N>
//! <beta> <psidot> <v> <delta> <lambda> <r_c> <stable|unstable|unscreened>   (N lines)
//! triangles = <M>
//! <i> <j> <k>                                                              (M lines)
//! ```
//!
//! Floats are written in shortest round-trip form, so loading restores every
//! value bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::manifold::{Manifold, TurningSense};
use super::{EquilibriumPoint, EsmError, Stability};
use crate::vehicle::{ControlInput, DynamicState, TireParams, VehicleParams};

const FORMAT_VERSION: u32 = 1;

/// Stored and expected parameter hashes of a loaded manifold that disagree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HashMismatch {
    pub stored: String,
    pub expected: String,
}

/// SHA-256 over the canonical text of the vehicle and tire parameters.
pub fn parameter_hash(params: &VehicleParams, tires: &TireParams) -> String {
    let canonical = format!("{params:?}|{tires:?}");
    Sha256::digest(canonical.as_bytes())
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// Serializes a manifold to its text form.
pub fn write_manifold(m: &Manifold) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# equilibrium manifold");
    let _ = writeln!(out, "format = {FORMAT_VERSION}");
    let _ = writeln!(out, "params_hash = {}", m.params_hash());
    let _ = writeln!(out, "turning = {}", m.turning().as_str());
    let _ = writeln!(out, "r_c_min = {:?}", m.r_c_min());
    let _ = writeln!(out, "samples = {}", m.samples().len());
    for p in m.samples() {
        let _ = writeln!(
            out,
            "{:?} {:?} {:?} {:?} {:?} {:?} {}",
            p.dyn_state.beta,
            p.dyn_state.psidot,
            p.dyn_state.v,
            p.input.delta,
            p.input.lambda,
            p.r_c,
            p.stability.as_str()
        );
    }
    let _ = writeln!(out, "triangles = {}", m.triangles().len());
    for t in m.triangles() {
        let _ = writeln!(out, "{} {} {}", t[0], t[1], t[2]);
    }
    out
}

pub fn save_manifold(m: &Manifold, path: &Path) -> Result<(), EsmError> {
    std::fs::write(path, write_manifold(m))?;
    Ok(())
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<(usize, &'a str), EsmError> {
        for (i, line) in self.inner.by_ref() {
            let t = line.trim();
            if !t.is_empty() && !t.starts_with('#') {
                return Ok((i + 1, t));
            }
        }
        Err(EsmError::Parse {
            line: 0,
            message: "unexpected end of file".into(),
        })
    }

    fn header(&mut self, key: &str) -> Result<(usize, &'a str), EsmError> {
        let (n, line) = self.next()?;
        match line.split_once('=') {
            Some((k, v)) if k.trim() == key => Ok((n, v.trim())),
            _ => Err(parse_err(n, format!("expected `{key} = ...`"))),
        }
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> EsmError {
    EsmError::Parse {
        line,
        message: message.into(),
    }
}

fn num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T, EsmError> {
    s.parse().map_err(|_| parse_err(line, format!("invalid number `{s}`")))
}

/// Parses the text form. When `expected_hash` is given and differs from the
/// stored hash, the manifold is still returned together with the mismatch.
pub fn read_manifold(
    text: &str,
    expected_hash: Option<&str>,
) -> Result<(Manifold, Option<HashMismatch>), EsmError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (n, version) = lines.header("format")?;
    if num::<u32>(n, version)? != FORMAT_VERSION {
        return Err(parse_err(n, format!("unsupported format version {version}")));
    }
    let (n, hash) = lines.header("params_hash")?;
    if hash.len() != 64 || !hash.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(parse_err(n, "parameter hash must be 64 hex digits"));
    }
    let (n, turning) = lines.header("turning")?;
    let turning = TurningSense::parse(turning).ok_or_else(|| parse_err(n, "unknown turning sense"))?;
    let (n, r_c_min) = lines.header("r_c_min")?;
    let r_c_min: f64 = num(n, r_c_min)?;

    let (n, count) = lines.header("samples")?;
    let count: usize = num(n, count)?;
    let mut samples = Vec::with_capacity(count);
    for _ in 0..count {
        let (n, line) = lines.next()?;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 7 {
            return Err(parse_err(n, format!("expected 7 fields, got {}", f.len())));
        }
        let stability = Stability::parse(f[6]).ok_or_else(|| parse_err(n, "unknown stability tag"))?;
        samples.push(EquilibriumPoint {
            dyn_state: DynamicState::new(num(n, f[2])?, num(n, f[0])?, num(n, f[1])?),
            input: ControlInput::new(num(n, f[3])?, num(n, f[4])?),
            r_c: num(n, f[5])?,
            stability,
        });
    }

    let (n, count) = lines.header("triangles")?;
    let count: usize = num(n, count)?;
    let mut triangles = Vec::with_capacity(count);
    for _ in 0..count {
        let (n, line) = lines.next()?;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 3 {
            return Err(parse_err(n, format!("expected 3 indices, got {}", f.len())));
        }
        let t = [num(n, f[0])?, num(n, f[1])?, num(n, f[2])?];
        if t.iter().any(|&i: &usize| i >= samples.len()) {
            return Err(parse_err(n, "triangle index out of range"));
        }
        triangles.push(t);
    }

    let mismatch = expected_hash.filter(|e| *e != hash).map(|e| HashMismatch {
        stored: hash.to_string(),
        expected: e.to_string(),
    });
    if let Some(m) = &mismatch {
        log::warn!(
            "manifold was built under different parameters (stored hash {}, current {})",
            m.stored,
            m.expected
        );
    }
    let manifold = Manifold::from_parts(samples, triangles, hash.to_string(), turning, r_c_min)?;
    Ok((manifold, mismatch))
}

pub fn load_manifold(
    path: &Path,
    expected_hash: Option<&str>,
) -> Result<(Manifold, Option<HashMismatch>), EsmError> {
    read_manifold(&std::fs::read_to_string(path)?, expected_hash)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::esm::{build_manifold, BuildOptions};

    fn sample_manifold(hash: &str) -> Manifold {
        let mut pts = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                let beta = -0.1 * i as f64 - 1.0 / 3.0 * 1e-3;
                let psidot = 0.3 + 0.1 * j as f64;
                let v = 11.0 + 0.1 * (i * j) as f64 + std::f64::consts::PI * 1e-7;
                pts.push(EquilibriumPoint {
                    dyn_state: DynamicState::new(v, beta, psidot),
                    input: ControlInput::new(0.01 * j as f64, 0.02 * i as f64),
                    r_c: v / psidot,
                    stability: if i == 2 { Stability::OpenLoopUnstable } else { Stability::Stable },
                });
            }
        }
        build_manifold(&pts, &BuildOptions::default(), hash).unwrap()
    }

    fn hash() -> String {
        parameter_hash(&VehicleParams::default(), &TireParams::gravel())
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let m = sample_manifold(&hash());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.esm");
        save_manifold(&m, &path).unwrap();
        let (back, mismatch) = load_manifold(&path, Some(&hash())).unwrap();
        assert!(mismatch.is_none());
        assert_eq!(back, m);
        for (a, b) in back.samples().iter().zip(m.samples()) {
            assert_eq!(a.dyn_state.v.to_bits(), b.dyn_state.v.to_bits());
            assert_eq!(a.dyn_state.beta.to_bits(), b.dyn_state.beta.to_bits());
        }
        assert_eq!(write_manifold(&back), write_manifold(&m));
    }

    #[test]
    fn corrupted_header_is_an_error() {
        let text = write_manifold(&sample_manifold(&hash()));
        let bad = text.replacen("format = 1", "fromat = 1", 1);
        assert!(matches!(read_manifold(&bad, None), Err(EsmError::Parse { line: 2, .. })));
        let bad = text.replacen("samples =", "samples = x", 1);
        assert!(matches!(read_manifold(&bad, None), Err(EsmError::Parse { .. })));
        let truncated = &text[..text.len() / 2];
        assert!(read_manifold(truncated, None).is_err());
    }

    #[test]
    fn different_tire_parameters_warn_on_load() {
        let m = sample_manifold(&hash());
        let other = TireParams {
            d: 0.9,
            ..TireParams::gravel()
        };
        let current = parameter_hash(&VehicleParams::default(), &other);
        assert_ne!(current, hash());
        let (back, mismatch) = read_manifold(&write_manifold(&m), Some(&current)).unwrap();
        assert_eq!(back, m);
        let mismatch = mismatch.unwrap();
        assert_eq!(mismatch.stored, hash());
        assert_eq!(mismatch.expected, current);
    }

    #[test]
    fn hash_is_stable_hex() {
        let h = hash();
        assert_eq!(h.len(), 64);
        assert_eq!(h, hash());
    }
}
