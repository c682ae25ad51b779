//! Classification maps of synthetic scenes with known structure.

use pcm_detect::cube::{classify_cube, synthetic_split_cube, ClassMap};
use pcm_detect::prelude::*;

fn map(left: StructureClass, right: StructureClass, split: usize, arch: &str, eta: f64, seed: u64) -> ClassMap {
    let nominal = nominal_matrices();
    let cube = synthetic_split_cube(44, 66, split, &nominal[left.slot()], &nominal[right.slot()], seed).unwrap();
    let arch = Architecture::parse(arch, None).unwrap();
    classify_cube(&cube, &arch, eta, 11, 11, &EmConfig::default(), false).unwrap()
}

fn fraction(map: &ClassMap, cols: std::ops::Range<usize>, class: StructureClass) -> f64 {
    let mut hits = 0;
    let mut total = 0;
    for r in 0..map.rows {
        for c in cols.clone() {
            total += 1;
            hits += usize::from(map.class_at(r, c) == class);
        }
    }
    hits as f64 / total as f64
}

#[test]
fn homogeneous_reflection_scene() {
    let c2 = StructureClass::Reflection;
    let m = map(c2, c2, 66, "BASELINE-BIC", f64::INFINITY, 11);
    assert_eq!((m.rows, m.cols), (4, 6));
    assert!(fraction(&m, 0..6, c2) >= 0.95);
}

#[test]
fn split_scene_with_baseline() {
    let (a, b) = (StructureClass::Reciprocal, StructureClass::Azimuth);
    let m = map(a, b, 33, "BASELINE-BIC", f64::INFINITY, 12);
    // windows 0..3 lie in the left half, 3..6 in the right
    assert!(fraction(&m, 0..3, a) >= 0.9);
    assert!(fraction(&m, 3..6, b) >= 0.9);
}

#[test]
fn detector_declares_homogeneous_windows_and_flags_the_boundary() {
    let (a, b) = (StructureClass::Reciprocal, StructureClass::Azimuth);
    let eta = calibrate(&CalibrationSpec::new(121, 0.01, 500, 4), &Architecture::parse("BIC-D-P1", None).unwrap())
        .unwrap()
        .eta;
    // boundary halfway through the third column of windows
    let m = map(a, b, 27, "BIC-D-P1", eta, 13);
    let h0 = (0..m.rows)
        .flat_map(|r| [0, 1, 4, 5].map(|c| m.hypothesis_at(r, c)))
        .filter(|h| *h == Hypothesis::H0)
        .count();
    assert!(h0 >= 14, "{h0} of 16 homogeneous windows declared H0");
    let mixed = (0..m.rows).filter(|&r| m.hypothesis_at(r, 2) != Hypothesis::H0).count();
    assert!(mixed >= 3, "{mixed} of 4 boundary windows detected");
    assert!(fraction(&m, 0..2, a) >= 0.9);
    assert!(fraction(&m, 4..6, b) >= 0.9);
}
