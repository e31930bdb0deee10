use std::io::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};

use pointlab::assign::LevelPredictions;
use pointlab::geometry::RBox;

const MAGIC: &[u8; 4] = b"PGRD";
const VERSION: u32 = 1;

/// Per-cell prediction grids, one block per pyramid level. Two encodings
/// share one reader: a text form for fixtures and a binary form for bulk
/// dumps, told apart by the leading magic bytes.
pub fn read_predictions(path: &Path) -> Result<Vec<LevelPredictions>> {
    let bytes =
        std::fs::read(path).with_context(|| format!("reading predictions {}", path.display()))?;
    if bytes.len() >= 4 && &bytes[..4] == MAGIC {
        parse_binary(&bytes).with_context(|| format!("binary grid {}", path.display()))
    } else {
        let text = std::str::from_utf8(&bytes)
            .with_context(|| format!("text grid {} is not utf-8", path.display()))?;
        parse_text(text).with_context(|| format!("text grid {}", path.display()))
    }
}

pub fn parse_text(text: &str) -> Result<Vec<LevelPredictions>> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines.next().context("missing header line")?;
    let level_count: usize = match header.split_whitespace().collect::<Vec<_>>()[..] {
        ["levels", n] => n.parse().context("bad level count")?,
        _ => bail!("expected `levels <n>` header, got {header:?}"),
    };
    let mut out = Vec::with_capacity(level_count);
    for _ in 0..level_count {
        let head = lines.next().context("missing level header")?;
        let fields: Vec<&str> = head.split_whitespace().collect();
        if fields.len() != 5 || fields[0] != "level" {
            bail!("expected `level <index> <stride> <gw> <gh>`, got {head:?}");
        }
        let level_index: usize = fields[1].parse().context("bad level index")?;
        let _stride: u32 = fields[2].parse().context("bad stride")?;
        let grid_w: usize = fields[3].parse().context("bad grid width")?;
        let grid_h: usize = fields[4].parse().context("bad grid height")?;
        let n = grid_w * grid_h;
        let mut boxes = Vec::with_capacity(n);
        let mut scores = Vec::with_capacity(n);
        for k in 0..n {
            let row = lines
                .next()
                .with_context(|| format!("level {level_index}: missing cell {k}"))?;
            let vals: Vec<f64> = row
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .with_context(|| format!("level {level_index} cell {k}: bad number"))?;
            if vals.len() != 6 {
                bail!("level {level_index} cell {k}: expected 6 fields, got {}", vals.len());
            }
            boxes.push(RBox::new(vals[0], vals[1], vals[2], vals[3], vals[4]));
            scores.push(vals[5]);
        }
        out.push(LevelPredictions {
            level_index,
            grid_w,
            grid_h,
            boxes,
            scores,
        });
    }
    if lines.next().is_some() {
        bail!("trailing content after the declared levels");
    }
    Ok(out)
}

fn parse_binary(bytes: &[u8]) -> Result<Vec<LevelPredictions>> {
    let mut cur = &bytes[4..];
    let take_u32 = |cur: &mut &[u8]| -> Result<u32> {
        if cur.len() < 4 {
            bail!("truncated grid");
        }
        let v = u32::from_le_bytes(cur[..4].try_into().unwrap());
        *cur = &cur[4..];
        Ok(v)
    };
    let version = take_u32(&mut cur)?;
    if version != VERSION {
        bail!("unsupported grid version {version}");
    }
    let level_count = take_u32(&mut cur)? as usize;
    let mut out = Vec::with_capacity(level_count);
    for _ in 0..level_count {
        let level_index = take_u32(&mut cur)? as usize;
        let _stride = take_u32(&mut cur)?;
        let grid_w = take_u32(&mut cur)? as usize;
        let grid_h = take_u32(&mut cur)? as usize;
        let n = grid_w
            .checked_mul(grid_h)
            .context("grid dimensions overflow")?;
        if cur.len() < n * 48 {
            bail!("truncated grid: level {level_index} wants {n} cells");
        }
        let mut boxes = Vec::with_capacity(n);
        let mut scores = Vec::with_capacity(n);
        for k in 0..n {
            let rec = &cur[k * 48..(k + 1) * 48];
            let f = |i: usize| f64::from_le_bytes(rec[i * 8..(i + 1) * 8].try_into().unwrap());
            boxes.push(RBox::new(f(0), f(1), f(2), f(3), f(4)));
            scores.push(f(5));
        }
        cur = &cur[n * 48..];
        out.push(LevelPredictions {
            level_index,
            grid_w,
            grid_h,
            boxes,
            scores,
        });
    }
    if !cur.is_empty() {
        bail!("trailing bytes after the declared levels");
    }
    Ok(out)
}

pub fn write_text(path: &Path, preds: &[LevelPredictions], strides: &[u32]) -> Result<()> {
    let mut buf = String::new();
    buf.push_str(&format!("levels {}\n", preds.len()));
    for (level, &stride) in preds.iter().zip(strides) {
        buf.push_str(&format!(
            "level {} {} {} {}\n",
            level.level_index, stride, level.grid_w, level.grid_h
        ));
        for (b, s) in level.boxes.iter().zip(&level.scores) {
            buf.push_str(&format!(
                "{} {} {} {} {} {}\n",
                b.cx, b.cy, b.w, b.h, b.theta, s
            ));
        }
    }
    std::fs::write(path, buf).with_context(|| format!("writing {}", path.display()))
}

pub fn write_binary(path: &Path, preds: &[LevelPredictions], strides: &[u32]) -> Result<()> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(preds.len() as u32).to_le_bytes());
    for (level, &stride) in preds.iter().zip(strides) {
        for v in [
            level.level_index as u32,
            stride,
            level.grid_w as u32,
            level.grid_h as u32,
        ] {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        for (b, s) in level.boxes.iter().zip(&level.scores) {
            for v in [b.cx, b.cy, b.w, b.h, b.theta, *s] {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    let mut file = std::fs::File::create(path)
        .with_context(|| format!("creating {}", path.display()))?;
    file.write_all(&buf)
        .with_context(|| format!("writing {}", path.display()))
}
