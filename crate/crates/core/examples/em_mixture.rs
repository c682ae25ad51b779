//! Fits a two-structure mixture to a window that really contains two
//! structures and reports the recovered priors and labels.
//!
//! ```text
//! cargo run --release --example em_mixture -- [K] [seed]
//! ```

use pcm_detect::prelude::*;

pub struct MixtureSummary {
    pub state: EmState,
    /// Fraction of pixels whose hard label matches the generating class.
    pub accuracy: f64,
}

pub fn run_example(k: usize, seed: u64) -> Result<MixtureSummary> {
    let scenario = Scenario::new(Hypothesis::H11, k);
    let z = scenario.generate(&nominal_matrices(), &mut RngStream::new(seed))?;
    let alphabet = Alphabet::from_indices(&[1, 2])?;
    let cfg = EmConfig {
        h_max: 50,
        ..EmConfig::default()
    };
    let state = run_em(&z, &alphabet, &cfg)?;
    let hits = state
        .labels()
        .iter()
        .zip(&scenario.labels)
        .filter(|(a, b)| a == b)
        .count();
    Ok(MixtureSummary {
        accuracy: hits as f64 / k as f64,
        state,
    })
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let k = args.first().copied().unwrap_or(240) as usize;
    let seed = args.get(1).copied().unwrap_or(1);
    let s = run_example(k, seed)?;
    for (h, l) in s.state.loglik_trace.iter().enumerate() {
        println!("iteration {h:>2}: L = {l:.4}");
    }
    println!("priors: {:?}", s.state.priors);
    println!("label accuracy: {:.3}", s.accuracy);
    Ok(())
}
