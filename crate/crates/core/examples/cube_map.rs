//! End-to-end image classification: a synthetic two-region datacube is cut
//! into sliding windows, each window is classified, and the class map is
//! written as CSV and PPM.
//!
//! ```text
//! cargo run --release --example cube_map -- [out_dir]
//! ```

use std::path::Path;

use pcm_detect::cube::{synthetic_split_cube, write_map, MapFormat};
use pcm_detect::prelude::*;

pub fn run_example(rows: usize, cols: usize, window: usize, seed: u64) -> Result<ClassMap> {
    let nominal = nominal_matrices();
    let left = StructureClass::Reciprocal;
    let right = StructureClass::Azimuth;
    let cube = synthetic_split_cube(rows, cols, cols / 2, &nominal[left.slot()], &nominal[right.slot()], seed)?;
    let arch = Architecture::parse("BASELINE-BIC", None)?;
    classify_cube(&cube, &arch, f64::INFINITY, window, window, &EmConfig::default(), false)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| ".".into());
    let out = Path::new(&out);
    let map = run_example(40, 60, 7, 1)?;
    write_map(&map, &out.join("map.csv"), MapFormat::Csv)?;
    write_map(&map, &out.join("map.ppm"), MapFormat::Ppm)?;
    let mut counts = [0usize; 4];
    map.classes.iter().for_each(|c| counts[c.slot()] += 1);
    eprintln!("{}x{} windows, class counts {:?}", map.rows, map.cols, counts);
    Ok(())
}
