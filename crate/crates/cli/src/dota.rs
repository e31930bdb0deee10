use anyhow::{bail, Context, Result};

use pointlab::geometry::{Point2, RBox};

/// One exported detection: a box, its class name, and a difficulty flag.
#[derive(Debug, Clone)]
pub struct DotaRecord {
    pub rbox: RBox,
    pub class_name: String,
    pub difficulty: u8,
}

/// Serialize records as DOTA polygon lines: four corners clockwise from
/// the box's own corner order, then class name and difficulty. `{}` on
/// f64 prints the shortest digits that round-trip, so re-reading the
/// corners loses nothing.
pub fn export_dota(records: &[DotaRecord]) -> String {
    let mut out = String::new();
    for rec in records {
        let c = rec.rbox.corners();
        for p in &c {
            out.push_str(&format!("{} {} ", p.x, p.y));
        }
        out.push_str(&format!("{} {}\n", rec.class_name, rec.difficulty));
    }
    out
}

/// Parse one polygon line back into corners + class + difficulty.
pub fn parse_dota_line(line: &str) -> Result<([Point2; 4], String, u8)> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 10 {
        bail!("expected 10 fields, got {}", fields.len());
    }
    let mut vals = [0.0f64; 8];
    for (v, f) in vals.iter_mut().zip(&fields[..8]) {
        *v = f.parse().with_context(|| format!("bad coordinate {f:?}"))?;
    }
    let corners = [
        Point2::new(vals[0], vals[1]),
        Point2::new(vals[2], vals[3]),
        Point2::new(vals[4], vals[5]),
        Point2::new(vals[6], vals[7]),
    ];
    let difficulty: u8 = fields[9].parse().with_context(|| "bad difficulty")?;
    Ok((corners, fields[8].to_string(), difficulty))
}
