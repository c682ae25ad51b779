//! Runs every detector on one simulated window per hypothesis and prints
//! the statistic, the declared hypothesis and the selected alphabet.
//!
//! The threshold here is a fixed number; `threshold_calibration` shows how
//! to obtain a calibrated one.
//!
//! ```text
//! cargo run --release --example window_detection -- [K] [eta] [seed]
//! ```

use pcm_detect::prelude::*;

pub struct DetectionRow {
    pub truth: Hypothesis,
    pub architecture: String,
    pub statistic: f64,
    pub declared: Hypothesis,
    pub alphabet: String,
}

pub fn run_example(k: usize, eta: f64, seed: u64) -> Result<Vec<DetectionRow>> {
    let generators = nominal_matrices();
    let root = RngStream::new(seed);
    let cfg = EmConfig::default();
    let mut rows = Vec::new();
    for truth in Hypothesis::ALL {
        let z = Scenario::new(truth, k).generate(&generators, &mut root.fork(truth.index() as u64))?;
        let fit = WindowFit::new(&z, &cfg, FitScope::Full)?;
        for arch in Architecture::detectors() {
            let o = fit.decide(&arch, eta)?;
            rows.push(DetectionRow {
                truth,
                architecture: arch.name(),
                statistic: o.statistic,
                declared: o.declared,
                alphabet: o.alphabet_hat.to_string(),
            });
        }
    }
    Ok(rows)
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let k = args.first().and_then(|s| s.parse().ok()).unwrap_or(180);
    let eta = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.0);
    let seed = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);
    println!("truth,architecture,statistic,declared,alphabet");
    for r in run_example(k, eta, seed)? {
        println!(
            "{},{},{:.3},{},{}",
            r.truth.name(),
            r.architecture,
            r.statistic,
            r.declared.name(),
            r.alphabet
        );
    }
    Ok(())
}
