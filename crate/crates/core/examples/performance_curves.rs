//! Calibrates all six detectors at one window size, then reports Pd and Pc
//! for each scenario on fresh windows.
//!
//! ```text
//! cargo run --release --example performance_curves -- [K] [trials] [seed]
//! ```

use pcm_detect::prelude::*;
use pcm_detect::sim::metrics_csv;

pub fn run_example(k: usize, cal_trials: usize, trials: usize, seed: u64) -> Result<Vec<MetricsReport>> {
    let archs = Architecture::detectors();
    let records = calibrate_many(&CalibrationSpec::new(k, 0.01, cal_trials, seed), &archs)?;
    for r in &records {
        eprintln!("{:<10} eta = {:8.4}  per class {:?}", r.architecture, r.eta, r.per_class_thresholds);
    }
    let pairs: Vec<(Architecture, f64)> = archs.iter().copied().zip(records.iter().map(|r| r.eta)).collect();
    let mut all = Vec::new();
    for h in Hypothesis::ALL {
        let spec = ExperimentSpec::new(k, h, trials, seed + 1);
        all.extend(run_experiments(&spec, &pairs)?);
    }
    Ok(all)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, d: u64| args.get(i).and_then(|s| s.parse().ok()).unwrap_or(d);
    let (k, trials, seed) = (arg(0, 120) as usize, arg(1, 1000) as usize, arg(2, 7));
    let start = std::time::Instant::now();
    let reports = run_example(k, 1000, trials, seed)?;
    print!("{}", metrics_csv(&reports));
    for r in &reports {
        eprintln!("{:<10} {:<4} Pc {:.3}  Pd {:.3}  rmsce {:.3}", r.architecture, r.scenario.to_string(), r.pc, r.pd, r.rmsce);
    }
    eprintln!("{:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
