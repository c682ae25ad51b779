//! Datacube and class-map file formats.

use num_complex::Complex32;
use pcm_detect::cube::{
    decode_pcube, encode_pcube, read_cube, read_map_csv, write_cube, write_map, ClassMap, DataCube, MapFormat,
    HEADER_LEN,
};
use pcm_detect::detector::Hypothesis;
use pcm_detect::structures::StructureClass;
use pcm_detect::Error;
use proptest::prelude::*;

fn cube() -> impl Strategy<Value = DataCube> {
    (1usize..6, 1usize..6).prop_flat_map(|(r, c)| {
        prop::collection::vec((-1e6f32..1e6, -1e6f32..1e6), r * c * 3).prop_map(move |v| {
            let samples = v.into_iter().map(|(re, im)| Complex32::new(re, im)).collect();
            DataCube::new(r, c, samples).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn pcube_bytes_round_trip(c in cube()) {
        let back = decode_pcube(&encode_pcube(&c)).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn csv_files_round_trip(c in cube()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cube.csv");
        write_cube(&c, &path).unwrap();
        prop_assert_eq!(read_cube(&path).unwrap(), c);
    }

    #[test]
    fn any_truncation_is_reported(c in cube(), cut in 1usize..32) {
        let bytes = encode_pcube(&c);
        let keep = bytes.len().saturating_sub(cut).max(1);
        let truncated = decode_pcube(&bytes[..keep]);
        let is_truncation = matches!(truncated, Err(Error::TruncatedFile { .. }));
        prop_assert!(is_truncation);
    }
}

#[test]
fn pcube_file_round_trips_through_disk() {
    let c = DataCube::from_fn(3, 4, |r, col| {
        pcm_detect::hermitian::Complex3::from_re([r as f64, col as f64, -1.5])
    });
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.pcube");
    write_cube(&c, &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..4], b"PCB1");
    assert_eq!(bytes.len(), HEADER_LEN + 3 * 4 * 3 * 8);
    assert_eq!(read_cube(&path).unwrap(), c);
}

#[test]
fn class_map_csv_round_trips_and_renders() {
    let classes: Vec<StructureClass> = (0..6).map(|i| StructureClass::ALL[i % 4]).collect();
    let map = ClassMap {
        rows: 2,
        cols: 3,
        classes: classes.clone(),
        hypotheses: vec![Hypothesis::H0; 6],
        pixel_labels: None,
    };
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("m.csv");
    write_map(&map, &csv, MapFormat::Csv).unwrap();
    assert_eq!(read_map_csv(&csv).unwrap(), (2, 3, classes));
    let ppm = dir.path().join("m.ppm");
    write_map(&map, &ppm, MapFormat::Ppm).unwrap();
    let bytes = std::fs::read(&ppm).unwrap();
    let header = b"P6\n3 2\n255\n";
    assert_eq!(&bytes[..header.len()], header);
    assert_eq!(bytes.len(), header.len() + 18);
}
