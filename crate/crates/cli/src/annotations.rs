use anyhow::{bail, Result};

use pointlab::geometry::AnnotatedPoint;

/// Parse a per-image annotation file.
///
/// Two line forms are accepted: a bare point "x y class_name" and an
/// 8-coordinate DOTA polygon "x1 y1 .. x4 y4 class_name difficulty",
/// which collapses to its centroid. Lines starting with '#' and the
/// DOTA header lines (imagesource/gsd) are skipped.
pub fn parse_point_annotations(text: &str, classes: &[String]) -> Result<Vec<AnnotatedPoint>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty()
            || line.starts_with('#')
            || line.starts_with("imagesource:")
            || line.starts_with("gsd:")
        {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let (coords, name) = match fields.len() {
            3 => (&fields[..2], fields[2]),
            9 | 10 => (&fields[..8], fields[8]),
            n => bail!("line {}: expected 3 or 9-10 fields, found {n}", lineno + 1),
        };
        let mut vals = Vec::with_capacity(coords.len());
        for c in coords {
            match c.parse::<f64>() {
                Ok(v) if v.is_finite() => vals.push(v),
                _ => bail!("line {}: bad coordinate {c:?}", lineno + 1),
            }
        }
        let (x, y) = if vals.len() == 2 {
            (vals[0], vals[1])
        } else {
            (
                (vals[0] + vals[2] + vals[4] + vals[6]) / 4.0,
                (vals[1] + vals[3] + vals[5] + vals[7]) / 4.0,
            )
        };
        let Some(class_id) = classes.iter().position(|c| c == name) else {
            bail!("line {}: unknown class {name:?}", lineno + 1);
        };
        out.push(AnnotatedPoint::new(x, y, class_id));
    }
    Ok(out)
}
