//! Query point input and result output, as text or raw little-endian f64.

use std::io::{self, BufRead, Write};

use clap::ValueEnum;
use proxdist::{Point3, QueryResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    /// One "x y z" triple per line; blank lines and `#` comments are skipped
    #[default]
    Text,
    /// Packed little-endian f64 triples
    Bin,
}

fn invalid(msg: String) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg)
}

pub fn parse_text_points(r: impl BufRead) -> io::Result<Vec<Point3>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let v: Vec<f64> = t
            .split_whitespace()
            .map(|s| s.parse::<f64>().map_err(|e| invalid(format!("line {}: {e}", i + 1))))
            .collect::<io::Result<_>>()?;
        if v.len() != 3 || v.iter().any(|c| !c.is_finite()) {
            return Err(invalid(format!("line {}: expected three finite coordinates", i + 1)));
        }
        out.push(Point3::new(v[0], v[1], v[2]));
    }
    Ok(out)
}

pub fn parse_bin_points(bytes: &[u8]) -> io::Result<Vec<Point3>> {
    if !bytes.len().is_multiple_of(24) {
        return Err(invalid(format!("binary point file length {} is not a multiple of 24", bytes.len())));
    }
    let pts: Vec<Point3> = bytes
        .chunks_exact(24)
        .map(|c| {
            let f = |k: usize| f64::from_le_bytes(c[8 * k..8 * k + 8].try_into().unwrap());
            Point3::new(f(0), f(1), f(2))
        })
        .collect();
    if let Some(i) = pts.iter().position(|p| !p.is_finite()) {
        return Err(invalid(format!("point {i} is not finite")));
    }
    Ok(pts)
}

pub fn write_bin_points(w: &mut impl Write, pts: &[Point3]) -> io::Result<()> {
    for p in pts {
        for c in p.to_array() {
            w.write_all(&c.to_le_bytes())?;
        }
    }
    Ok(())
}

/// `distance cx cy cz face fallback`, with round-trippable floats.
pub fn write_text_row(w: &mut impl Write, r: &QueryResult) -> io::Result<()> {
    writeln!(
        w,
        "{:e} {:e} {:e} {:e} {} {}",
        r.distance, r.closest.x, r.closest.y, r.closest.z, r.face, r.fallback as u8
    )
}

/// 37-byte record: distance, closest x/y/z (f64), face (u32), fallback (u8).
pub fn write_bin_row(w: &mut impl Write, r: &QueryResult) -> io::Result<()> {
    for c in [r.distance, r.closest.x, r.closest.y, r.closest.z] {
        w.write_all(&c.to_le_bytes())?;
    }
    w.write_all(&r.face.to_le_bytes())?;
    w.write_all(&[r.fallback as u8])
}
