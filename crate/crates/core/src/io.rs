//! Small numeric and file helpers shared by the modules and the CLI.

use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Least-squares line `y = slope·x + intercept`; returns `(slope, intercept, R²)`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let r2 = if syy > 0.0 && sxx > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, my - slope * mx, r2)
}

/// Fixed 17-significant-digit float formatting used by every text output.
pub fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// CSV text with a header row; every value through [`fmt17`].
pub fn csv_string(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| fmt17(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Parses CSV written by [`csv_string`].
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Io("empty csv".into()))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect::<Vec<_>>();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|c| c.trim().parse::<f64>().map_err(|e| Error::Io(format!("csv row {}: {e}", i + 1))))
            .collect::<Result<Vec<_>>>()?;
        if row.len() != header.len() {
            return Err(Error::Io(format!("csv row {} has {} cells, expected {}", i + 1, row.len(), header.len())));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

// ---------------------------------------------------------------- config

/// Sectioned `key = value` text; `#` starts a comment. Keys before any
/// section header live in the section `""`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    pub sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Config> {
        let mut cfg = Config::default();
        let mut current = String::new();
        for (no, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(i) => &raw[..i],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Config(format!("line {}: unterminated section header", no + 1)))?;
                current = name.trim().to_string();
                cfg.sections.entry(current.clone()).or_default();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", no + 1)));
            }
            cfg.sections.entry(current.clone()).or_default().insert(k.to_string(), v.trim().to_string());
        }
        Ok(cfg)
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        if let Some(root) = self.sections.get("") {
            for (k, v) in root {
                let _ = writeln!(out, "{k} = {v}");
            }
        }
        for (name, kv) in &self.sections {
            if name.is_empty() {
                continue;
            }
            let _ = writeln!(out, "[{name}]");
            for (k, v) in kv {
                let _ = writeln!(out, "{k} = {v}");
            }
        }
        out
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section).and_then(|s| s.get(key)).map(|s| s.as_str())
    }

    pub fn set(&mut self, section: &str, key: &str, value: impl Into<String>) {
        self.sections.entry(section.to_string()).or_default().insert(key.to_string(), value.into());
    }

    /// Typed lookup; a present but unparsable value is a configuration error.
    pub fn get_parsed<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::Config(format!("[{section}] {key} = '{v}' is not valid"))),
        }
    }
}

// ---------------------------------------------------------------- GLNC1 grids

/// Leading bytes of a grid file: ASCII `GLNC` read as a little-endian u32.
pub const GRID_MAGIC: u32 = u32::from_le_bytes(*b"GLNC");
pub const GRID_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 8 + 8 * 4 + 1;

/// Rectangular grid of real or complex samples, row-major in `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFile {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub dx: f64,
    pub y0: f64,
    pub dy: f64,
    pub complex: bool,
    /// `nx·ny` values, or `2·nx·ny` interleaved (re, im) pairs when complex.
    pub data: Vec<f64>,
}

impl GridFile {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let per = if self.complex { 2 } else { 1 };
        if self.data.len() != self.nx * self.ny * per {
            return Err(Error::Config("grid payload does not match its dimensions".into()));
        }
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.data.len());
        out.extend_from_slice(&GRID_MAGIC.to_le_bytes());
        out.extend_from_slice(&GRID_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.nx as u64).to_le_bytes());
        out.extend_from_slice(&(self.ny as u64).to_le_bytes());
        for v in [self.x0, self.dx, self.y0, self.dy] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.push(self.complex as u8);
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<GridFile> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Io("grid file shorter than its header".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
        let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
        if u32_at(0) != GRID_MAGIC {
            return Err(Error::Io("bad grid magic".into()));
        }
        if u32_at(4) != GRID_VERSION {
            return Err(Error::Io(format!("unsupported grid version {}", u32_at(4))));
        }
        let nx = u64_at(8) as usize;
        let ny = u64_at(16) as usize;
        let (x0, dx, y0, dy) = (f64_at(24), f64_at(32), f64_at(40), f64_at(48));
        let complex = match bytes[56] {
            0 => false,
            1 => true,
            b => return Err(Error::Io(format!("bad complex flag {b}"))),
        };
        let count = nx
            .checked_mul(ny)
            .and_then(|c| c.checked_mul(if complex { 2 } else { 1 }))
            .ok_or_else(|| Error::Io("grid dimensions overflow".into()))?;
        if bytes.len() != HEADER_LEN + 8 * count {
            return Err(Error::Io("grid payload length mismatch".into()));
        }
        let data = (0..count).map(|i| f64_at(HEADER_LEN + 8 * i)).collect();
        Ok(GridFile { nx, ny, x0, dx, y0, dy, complex, data })
    }
}

// ---------------------------------------------------------------- SVG

/// Heatmap of `values` (row-major `nx × ny`, rows along x, columns along y,
/// entries in `[0, 1]`) over `[x0, x1] × [y0, y1]`, drawn with y horizontal
/// and x vertical, plus polyline overlays given as `(x, y)` points.
pub fn svg_heatmap(nx: usize, ny: usize, values: &[f64], extent: [f64; 4], overlays: &[Vec<(f64, f64)>]) -> String {
    let cell = 4.0;
    let (w, h) = (ny as f64 * cell, nx as f64 * cell);
    let [x0, x1, y0, y1] = extent;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">",
        fmt17(w),
        fmt17(h),
        fmt17(w),
        fmt17(h)
    );
    for i in 0..nx {
        for j in 0..ny {
            let v = values[i * ny + j].clamp(0.0, 1.0);
            let g = (255.0 * (1.0 - v)).round() as u8;
            let _ = writeln!(
                s,
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"rgb({g},{g},{g})\"/>",
                fmt17(j as f64 * cell),
                fmt17((nx - 1 - i) as f64 * cell),
                fmt17(cell),
                fmt17(cell)
            );
        }
    }
    for line in overlays {
        let pts: Vec<String> = line
            .iter()
            .map(|(x, y)| {
                let px = (y - y0) / (y1 - y0) * w;
                let py = h - (x - x0) / (x1 - x0) * h;
                format!("{},{}", fmt17(px), fmt17(py))
            })
            .collect();
        let _ = writeln!(s, "<polyline fill=\"none\" stroke=\"red\" stroke-width=\"1\" points=\"{}\"/>", pts.join(" "));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt17_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
            assert_eq!(fmt17(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn grid_round_trip() {
        let g = GridFile { nx: 2, ny: 3, x0: 0.0, dx: 0.5, y0: -1.0, dy: 0.25, complex: true, data: (0..12).map(|i| i as f64).collect() };
        let b = g.to_bytes().unwrap();
        assert_eq!(&b[..4], b"GLNC");
        assert_eq!(GridFile::from_bytes(&b).unwrap(), g);
    }
}
