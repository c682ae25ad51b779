//! Datacube files, window tiling and classification maps.
//!
//! PCUBE layout (all little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "PCB1"
//! 4       4     u32 rows (L)
//! 8       4     u32 cols (M)
//! 12      4     u32 channels, always 3
//! 16      4     u32 dtype, 1 = complex64 (f32 real, f32 imaginary)
//! 20      ...   L·M·3 samples, row-major, channel fastest
//! ```
//!
//! Small cubes can also be stored as CSV: a `rows,cols` header line followed
//! by one line per pixel, `row,col,hh_re,hh_im,hv_re,hv_im,vv_re,vv_im`.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::{Complex32, Complex64};
use rayon::prelude::*;

use crate::detector::{Architecture, FitScope, Hypothesis, Strategy, WindowFit};
use crate::em::EmConfig;
use crate::error::{Error, Result};
use crate::hermitian::{Complex3, GaussianDensity, Hermitian3};
use crate::rng::RngStream;
use crate::structures::StructureClass;

pub const MAGIC: &[u8; 4] = b"PCB1";
pub const HEADER_LEN: usize = 20;
pub const DTYPE_COMPLEX64: u32 = 1;
/// Largest side accepted by the CSV cube format.
pub const CSV_MAX_SIDE: usize = 64;

/// An `L × M × 3` polarimetric image.
#[derive(Clone, Debug, PartialEq)]
pub struct DataCube {
    rows: usize,
    cols: usize,
    samples: Vec<Complex32>,
}

impl DataCube {
    pub fn new(rows: usize, cols: usize, samples: Vec<Complex32>) -> Result<Self> {
        if samples.len() != rows * cols * 3 {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols}x3 cube needs {} samples, got {}",
                rows * cols * 3,
                samples.len()
            )));
        }
        Ok(DataCube { rows, cols, samples })
    }

    /// Builds a cube by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex3) -> Self {
        let mut samples = Vec::with_capacity(rows * cols * 3);
        for r in 0..rows {
            for c in 0..cols {
                let z = f(r, c);
                samples.extend(z.0.iter().map(|v| Complex32::new(v.re as f32, v.im as f32)));
            }
        }
        DataCube { rows, cols, samples }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn samples(&self) -> &[Complex32] {
        &self.samples
    }

    pub fn pixel(&self, row: usize, col: usize) -> Complex3 {
        let i = (row * self.cols + col) * 3;
        let s = &self.samples[i..i + 3];
        Complex3(std::array::from_fn(|c| Complex64::new(s[c].re as f64, s[c].im as f64)))
    }
}

pub fn write_cube(cube: &DataCube, path: &Path) -> Result<()> {
    if is_csv(path) {
        return write_cube_csv(cube, path);
    }
    fs::write(path, encode_pcube(cube))?;
    Ok(())
}

pub fn read_cube(path: &Path) -> Result<DataCube> {
    if is_csv(path) {
        return read_cube_csv(path);
    }
    decode_pcube(&fs::read(path)?)
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

pub fn encode_pcube(cube: &DataCube) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + cube.samples.len() * 8);
    out.extend_from_slice(MAGIC);
    for v in [cube.rows as u32, cube.cols as u32, 3, DTYPE_COMPLEX64] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for s in &cube.samples {
        out.extend_from_slice(&s.re.to_le_bytes());
        out.extend_from_slice(&s.im.to_le_bytes());
    }
    out
}

pub fn decode_pcube(bytes: &[u8]) -> Result<DataCube> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::TruncatedFile {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap());
    let (rows, cols, channels, dtype) = (word(0) as usize, word(1) as usize, word(2), word(3));
    if channels != 3 {
        return Err(Error::DimensionMismatch(format!("{channels} channels, expected 3")));
    }
    if dtype != DTYPE_COMPLEX64 {
        return Err(Error::DimensionMismatch(format!("unsupported dtype {dtype}")));
    }
    let expected = rows * cols * 3 * 8;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < expected {
        return Err(Error::TruncatedFile {
            expected,
            found: payload.len(),
        });
    }
    if payload.len() > expected {
        return Err(Error::DimensionMismatch(format!(
            "{} trailing bytes after {rows}x{cols} samples",
            payload.len() - expected
        )));
    }
    let samples = payload
        .chunks_exact(8)
        .map(|c| {
            Complex32::new(
                f32::from_le_bytes(c[..4].try_into().unwrap()),
                f32::from_le_bytes(c[4..].try_into().unwrap()),
            )
        })
        .collect();
    DataCube::new(rows, cols, samples)
}

pub fn write_cube_csv(cube: &DataCube, path: &Path) -> Result<()> {
    if cube.rows > CSV_MAX_SIDE || cube.cols > CSV_MAX_SIDE {
        return Err(Error::DimensionMismatch(format!(
            "CSV cubes are limited to {CSV_MAX_SIDE}x{CSV_MAX_SIDE}"
        )));
    }
    let mut out = format!("{},{}\n", cube.rows, cube.cols);
    for r in 0..cube.rows {
        for c in 0..cube.cols {
            let i = (r * cube.cols + c) * 3;
            out.push_str(&format!("{r},{c}"));
            for s in &cube.samples[i..i + 3] {
                // shortest representation that round-trips exactly
                out.push_str(&format!(",{},{}", s.re, s.im));
            }
            out.push('\n');
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_cube_csv(path: &Path) -> Result<DataCube> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or(Error::TruncatedFile {
        expected: 1,
        found: 0,
    })?;
    let dims: Vec<usize> = header
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| Error::Parse(format!("bad header {header:?}"))))
        .collect::<Result<_>>()?;
    let [rows, cols] = dims[..] else {
        return Err(Error::Parse(format!("bad header {header:?}")));
    };
    if rows > CSV_MAX_SIDE || cols > CSV_MAX_SIDE {
        return Err(Error::DimensionMismatch(format!(
            "CSV cubes are limited to {CSV_MAX_SIDE}x{CSV_MAX_SIDE}"
        )));
    }
    let mut samples = vec![Complex32::new(0.0, 0.0); rows * cols * 3];
    let mut seen = 0usize;
    for line in lines {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 8 {
            return Err(Error::Parse(format!("expected 8 fields in {line:?}")));
        }
        let r: usize = f[0].parse().map_err(|_| Error::Parse(format!("bad row in {line:?}")))?;
        let c: usize = f[1].parse().map_err(|_| Error::Parse(format!("bad column in {line:?}")))?;
        if r >= rows || c >= cols {
            return Err(Error::DimensionMismatch(format!("pixel ({r},{c}) outside {rows}x{cols}")));
        }
        let v: Vec<f32> = f[2..]
            .iter()
            .map(|s| s.parse().map_err(|_| Error::Parse(format!("bad sample {s:?}"))))
            .collect::<Result<_>>()?;
        let i = (r * cols + c) * 3;
        for ch in 0..3 {
            samples[i + ch] = Complex32::new(v[2 * ch], v[2 * ch + 1]);
        }
        seen += 1;
    }
    if seen != rows * cols {
        return Err(Error::TruncatedFile {
            expected: rows * cols,
            found: seen,
        });
    }
    DataCube::new(rows, cols, samples)
}

/// Top-left corner of a window, in window-grid coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct WindowPos {
    pub row: usize,
    pub col: usize,
}

/// Non-overlapping `wr × wc` tiles in row-major order; partial tiles at the
/// right and bottom borders are dropped. Each window's pixels are flattened
/// row-major.
pub fn iter_windows(
    cube: &DataCube,
    wr: usize,
    wc: usize,
) -> Result<impl Iterator<Item = (WindowPos, Vec<Complex3>)> + '_> {
    let (grid_r, grid_c) = window_grid(cube, wr, wc)?;
    Ok((0..grid_r * grid_c).map(move |i| {
        let pos = WindowPos {
            row: i / grid_c,
            col: i % grid_c,
        };
        (pos, window_at(cube, pos, wr, wc))
    }))
}

pub fn window_grid(cube: &DataCube, wr: usize, wc: usize) -> Result<(usize, usize)> {
    if wr == 0 || wc == 0 || wr > cube.rows || wc > cube.cols {
        return Err(Error::WindowTooLarge {
            rows: wr,
            cols: wc,
            cube_rows: cube.rows,
            cube_cols: cube.cols,
        });
    }
    Ok((cube.rows / wr, cube.cols / wc))
}

fn window_at(cube: &DataCube, pos: WindowPos, wr: usize, wc: usize) -> Vec<Complex3> {
    let mut out = Vec::with_capacity(wr * wc);
    for r in pos.row * wr..(pos.row + 1) * wr {
        for c in pos.col * wc..(pos.col + 1) * wc {
            out.push(cube.pixel(r, c));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassMap {
    pub rows: usize,
    pub cols: usize,
    /// Dominant class per window, row-major.
    pub classes: Vec<StructureClass>,
    pub hypotheses: Vec<Hypothesis>,
    /// Per-pixel labels of every window, when requested.
    pub pixel_labels: Option<Vec<Vec<StructureClass>>>,
}

impl ClassMap {
    pub fn class_at(&self, row: usize, col: usize) -> StructureClass {
        self.classes[row * self.cols + col]
    }

    pub fn hypothesis_at(&self, row: usize, col: usize) -> Hypothesis {
        self.hypotheses[row * self.cols + col]
    }
}

/// Most frequent label; ties go to the smaller class index.
pub fn dominant_class(labels: &[StructureClass]) -> StructureClass {
    let mut counts = [0usize; 4];
    labels.iter().for_each(|c| counts[c.slot()] += 1);
    let mut best = 0;
    for i in 1..4 {
        if counts[i] > counts[best] {
            best = i;
        }
    }
    StructureClass::ALL[best]
}

/// Runs `arch` on every window and records the dominant label and declared
/// hypothesis.
pub fn classify_cube(
    cube: &DataCube,
    arch: &Architecture,
    eta: f64,
    wr: usize,
    wc: usize,
    cfg: &EmConfig,
    keep_pixel_labels: bool,
) -> Result<ClassMap> {
    let (grid_r, grid_c) = window_grid(cube, wr, wc)?;
    let scope = match arch.strategy() {
        Some(Strategy::P1) => FitScope::Full,
        _ => FitScope::SecondStrategyOnly,
    };
    let cells: Vec<(StructureClass, Hypothesis, Vec<StructureClass>)> = (0..grid_r * grid_c)
        .into_par_iter()
        .map(|i| {
            let pos = WindowPos {
                row: i / grid_c,
                col: i % grid_c,
            };
            let z = window_at(cube, pos, wr, wc);
            let fit = WindowFit::new(&z, cfg, scope)?;
            let o = fit.decide(arch, eta)?;
            Ok((dominant_class(&o.labels), o.declared, o.labels))
        })
        .collect::<Result<_>>()?;
    let mut classes = Vec::with_capacity(cells.len());
    let mut hypotheses = Vec::with_capacity(cells.len());
    let mut pixel_labels = keep_pixel_labels.then(|| Vec::with_capacity(cells.len()));
    for (c, h, labels) in cells {
        classes.push(c);
        hypotheses.push(h);
        if let Some(p) = pixel_labels.as_mut() {
            p.push(labels);
        }
    }
    Ok(ClassMap {
        rows: grid_r,
        cols: grid_c,
        classes,
        hypotheses,
        pixel_labels,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MapFormat {
    Csv,
    Ppm,
}

pub fn palette(c: StructureClass) -> [u8; 3] {
    match c {
        StructureClass::Reciprocal => [0, 0, 255],
        StructureClass::Reflection => [255, 0, 0],
        StructureClass::Rotation => [0, 255, 0],
        StructureClass::Azimuth => [255, 255, 0],
    }
}

pub fn map_csv(map: &ClassMap) -> String {
    grid_csv(map.rows, map.cols, |r, c| map.class_at(r, c).index().to_string())
}

/// Declared hypothesis per window as `0` (H0) … `3` (H13).
pub fn hypothesis_csv(map: &ClassMap) -> String {
    grid_csv(map.rows, map.cols, |r, c| map.hypothesis_at(r, c).index().to_string())
}

fn grid_csv(rows: usize, cols: usize, cell: impl Fn(usize, usize) -> String) -> String {
    let mut out = String::new();
    for r in 0..rows {
        let line: Vec<String> = (0..cols).map(|c| cell(r, c)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn encode_ppm(rows: usize, cols: usize, classes: &[StructureClass]) -> Vec<u8> {
    let mut out = format!("P6\n{cols} {rows}\n255\n").into_bytes();
    for c in classes {
        out.extend_from_slice(&palette(*c));
    }
    out
}

pub fn write_map(map: &ClassMap, path: &Path, format: MapFormat) -> Result<()> {
    let mut f = fs::File::create(path)?;
    match format {
        MapFormat::Csv => f.write_all(map_csv(map).as_bytes())?,
        MapFormat::Ppm => f.write_all(&encode_ppm(map.rows, map.cols, &map.classes))?,
    }
    Ok(())
}

/// Reads the class-index CSV written by [`write_map`].
pub fn read_map_csv(path: &Path) -> Result<(usize, usize, Vec<StructureClass>)> {
    let text = fs::read_to_string(path)?;
    let mut rows = 0;
    let mut cols = None;
    let mut classes = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let row: Vec<StructureClass> = line
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<u8>()
                    .ok()
                    .and_then(StructureClass::from_index)
                    .ok_or_else(|| Error::Parse(format!("bad class index {s:?}")))
            })
            .collect::<Result<_>>()?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(Error::DimensionMismatch(format!(
                    "row {rows} has {} cells, expected {c}",
                    row.len()
                )))
            }
            _ => {}
        }
        classes.extend(row);
        rows += 1;
    }
    Ok((rows, cols.unwrap_or(0), classes))
}

/// Simulates a cube whose left `split` columns follow `left` and the rest
/// follow `right`. Pixel `(r, c)` draws from its own stream, so the image
/// does not depend on evaluation order.
pub fn synthetic_split_cube(
    rows: usize,
    cols: usize,
    split: usize,
    left: &Hermitian3,
    right: &Hermitian3,
    seed: u64,
) -> Result<DataCube> {
    let dens = [GaussianDensity::new(*left)?, GaussianDensity::new(*right)?];
    let root = RngStream::new(seed).fork(SYNTH_TAG);
    let pixels: Vec<Complex3> = (0..rows * cols)
        .into_par_iter()
        .map(|i| {
            let side = usize::from(i % cols >= split);
            dens[side].sample(&mut root.fork(i as u64))
        })
        .collect();
    Ok(DataCube::from_fn(rows, cols, |r, c| pixels[r * cols + c]))
}

const SYNTH_TAG: u64 = 0x5359_4e54_4355_4245;
