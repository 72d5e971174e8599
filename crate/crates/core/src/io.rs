//! Text and image formats: grid files, sample CSVs, layout CSVs, flat
//! `key = value` configs and binary PGM heatmaps.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{ChannelSample, GainGrid, GridSpec, Position2D};
use crate::truth::{Building, BuildingLayout};

pub const GRID_MAGIC: &str = "# ckm v1";
pub const SAMPLES_HEADER: &str = "x,y,gain_db";
pub const LAYOUT_HEADER: &str = "x_min,x_max,y_min,y_max,height";
pub const DEFAULT_HEATMAP_RANGE: (f64, f64) = (-140.0, -40.0);

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| parse_err(line, format!("expected a number, got '{}'", s.trim())))
}

fn parse_usize(s: &str, line: usize) -> Result<usize> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| parse_err(line, format!("expected a non-negative integer, got '{}'", s.trim())))
}

/// Grid file text: magic line, `x0 y0 spacing nx ny`, then `ny` rows of `nx`
/// values with 6 decimals, row `j = 0` first.
pub fn format_grid(grid: &GainGrid) -> String {
    let spec = grid.spec();
    let mut out = String::with_capacity(spec.len() * 12 + 64);
    out.push_str(GRID_MAGIC);
    out.push('\n');
    let _ = writeln!(
        out,
        "{} {} {} {} {}",
        spec.origin_x, spec.origin_y, spec.spacing, spec.nx, spec.ny
    );
    for row in grid.values().chunks(spec.nx) {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{v:.6}");
        }
        out.push('\n');
    }
    out
}

pub fn parse_grid(text: &str) -> Result<GainGrid> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l.trim() == GRID_MAGIC => {}
        _ => return Err(parse_err(1, format!("expected '{GRID_MAGIC}'"))),
    }
    let (hl, header) = lines.next().ok_or_else(|| parse_err(2, "missing grid header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 {
        return Err(parse_err(hl, "header must be 'x0 y0 spacing nx ny'"));
    }
    let spec = GridSpec::new(
        parse_f64(fields[0], hl)?,
        parse_f64(fields[1], hl)?,
        parse_f64(fields[2], hl)?,
        parse_usize(fields[3], hl)?,
        parse_usize(fields[4], hl)?,
    )
    .map_err(|e| parse_err(hl, e.to_string()))?;
    let mut values = Vec::with_capacity(spec.len());
    let mut rows = 0;
    for (ln, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        if rows == spec.ny {
            return Err(parse_err(ln, format!("more than {} rows", spec.ny)));
        }
        let before = values.len();
        for tok in line.split_whitespace() {
            let v = parse_f64(tok, ln)?;
            if !v.is_finite() {
                return Err(parse_err(ln, "non-finite gain"));
            }
            values.push(v);
        }
        if values.len() - before != spec.nx {
            return Err(parse_err(
                ln,
                format!("expected {} values, got {}", spec.nx, values.len() - before),
            ));
        }
        rows += 1;
    }
    if rows != spec.ny {
        return Err(parse_err(
            text.lines().count(),
            format!("expected {} rows, got {rows}", spec.ny),
        ));
    }
    GainGrid::new(spec, values)
}

pub fn write_grid(path: &Path, grid: &GainGrid) -> Result<()> {
    Ok(fs::write(path, format_grid(grid))?)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())).into())
}

pub fn read_grid(path: &Path) -> Result<GainGrid> {
    parse_grid(&read_text(path)?)
}

pub fn format_samples(samples: &[ChannelSample]) -> String {
    let mut out = String::from(SAMPLES_HEADER);
    out.push('\n');
    for s in samples {
        let _ = writeln!(out, "{},{},{:.6}", s.position.x, s.position.y, s.gain_db);
    }
    out
}

pub fn parse_samples(text: &str) -> Result<Vec<ChannelSample>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l.trim() == SAMPLES_HEADER => {}
        _ => return Err(parse_err(1, format!("expected header '{SAMPLES_HEADER}'"))),
    }
    let mut out = Vec::new();
    for (ln, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(parse_err(ln, "expected 3 comma-separated fields"));
        }
        out.push(ChannelSample {
            position: Position2D::new(parse_f64(f[0], ln)?, parse_f64(f[1], ln)?),
            gain_db: parse_f64(f[2], ln)?,
        });
    }
    Ok(out)
}

pub fn write_samples(path: &Path, samples: &[ChannelSample]) -> Result<()> {
    Ok(fs::write(path, format_samples(samples))?)
}

pub fn read_samples(path: &Path) -> Result<Vec<ChannelSample>> {
    parse_samples(&read_text(path)?)
}

pub fn format_layout(layout: &BuildingLayout) -> String {
    let mut out = String::from(LAYOUT_HEADER);
    out.push('\n');
    for b in &layout.buildings {
        let _ = writeln!(out, "{},{},{},{},{}", b.x_min, b.x_max, b.y_min, b.y_max, b.height);
    }
    out
}

pub fn parse_layout(text: &str) -> Result<BuildingLayout> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l.trim() == LAYOUT_HEADER => {}
        _ => return Err(parse_err(1, format!("expected header '{LAYOUT_HEADER}'"))),
    }
    let mut buildings = Vec::new();
    for (ln, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<f64> = line.split(',').map(|t| parse_f64(t, ln)).collect::<Result<_>>()?;
        if f.len() != 5 {
            return Err(parse_err(ln, "expected 5 comma-separated fields"));
        }
        buildings.push(Building::new(f[0], f[1], f[2], f[3], f[4]).map_err(|e| parse_err(ln, e.to_string()))?);
    }
    Ok(BuildingLayout { buildings })
}

/// Gray level of `v` on a linear ramp from `min_db` (0) to `max_db` (255),
/// clamped, rounding halves up.
pub fn gray_level(v: f64, min_db: f64, max_db: f64) -> u8 {
    let t = ((v - min_db) / (max_db - min_db)).clamp(0.0, 1.0);
    (255.0 * t + 0.5).floor().min(255.0) as u8
}

/// Binary PGM (P5) with the northernmost row (largest `y`) first.
pub fn pgm_bytes(grid: &GainGrid, min_db: f64, max_db: f64) -> Result<Vec<u8>> {
    if !(min_db.is_finite() && max_db.is_finite() && min_db < max_db) {
        return Err(Error::InvalidArgument(format!(
            "heatmap range must satisfy min < max, got ({min_db}, {max_db})"
        )));
    }
    let spec = grid.spec();
    let mut out = format!("P5\n{} {}\n255\n", spec.nx, spec.ny).into_bytes();
    for row in grid.values().chunks(spec.nx).rev() {
        out.extend(row.iter().map(|&v| gray_level(v, min_db, max_db)));
    }
    Ok(out)
}

pub fn write_pgm(path: &Path, grid: &GainGrid, min_db: f64, max_db: f64) -> Result<()> {
    Ok(fs::write(path, pgm_bytes(grid, min_db, max_db)?)?)
}

/// Parsed `key = value` file. Values keep their line numbers for error reports.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap {
    entries: BTreeMap<String, (usize, String)>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| parse_err(ln, "expected 'key = value'"))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(parse_err(ln, "empty key"));
            }
            if entries.insert(k.to_string(), (ln, v.trim().to_string())).is_some() {
                return Err(parse_err(ln, format!("duplicate key '{k}'")));
            }
        }
        Ok(Self { entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?)
    }

    pub fn keys(&self) -> impl Iterator<Item = (&str, usize)> {
        self.entries.iter().map(|(k, (ln, _))| (k.as_str(), *ln))
    }

    pub fn line_of(&self, key: &str) -> Option<usize> {
        self.entries.get(key).map(|(ln, _)| *ln)
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        self.entries.get(key).map(|(ln, v)| parse_f64(v, *ln)).transpose()
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>> {
        self.entries.get(key).map(|(ln, v)| parse_usize(v, *ln)).transpose()
    }

    pub fn u64(&self, key: &str) -> Result<Option<u64>> {
        self.entries
            .get(key)
            .map(|(ln, v)| {
                v.parse::<u64>()
                    .map_err(|_| parse_err(*ln, format!("expected an unsigned integer, got '{v}'")))
            })
            .transpose()
    }

    pub fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.entries
            .get(key)
            .map(|(ln, v)| v.split(',').map(|t| parse_f64(t, *ln)).collect())
            .transpose()
    }

    pub fn usize_list(&self, key: &str) -> Result<Option<Vec<usize>>> {
        self.entries
            .get(key)
            .map(|(ln, v)| v.split(',').map(|t| parse_usize(t, *ln)).collect())
            .transpose()
    }

    pub fn u64_list(&self, key: &str) -> Result<Option<Vec<u64>>> {
        self.entries
            .get(key)
            .map(|(ln, v)| {
                v.split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<u64>()
                            .map_err(|_| parse_err(*ln, format!("expected an unsigned integer, got '{}'", t.trim())))
                    })
                    .collect()
            })
            .transpose()
    }
}
