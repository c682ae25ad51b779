//! Monte Carlo threshold calibration for one architecture at a target false
//! alarm rate.
//!
//! ```text
//! cargo run --release --example threshold_calibration -- [arch] [K] [trials] [seed] > cal.json
//! ```

use pcm_detect::prelude::*;

pub fn run_example(arch: &str, k: usize, trials: usize, seed: u64) -> Result<CalibrationRecord> {
    let arch = Architecture::parse(arch, None)?;
    calibrate(&CalibrationSpec::new(k, 0.01, trials, seed), &arch)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arch = args.first().map(String::as_str).unwrap_or("BIC-D-P1");
    let k = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(120);
    let trials = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let seed = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(1);
    let record = run_example(arch, k, trials, seed)?;
    eprintln!(
        "{}: eta = {:.4} (per class {:?})",
        record.architecture, record.eta, record.per_class_thresholds
    );
    println!("{}", record.to_json()?);
    Ok(())
}
