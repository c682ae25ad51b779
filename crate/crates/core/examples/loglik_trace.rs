//! Mean log-likelihood variation per EM iteration, per hypothesis order.
//!
//! ```text
//! cargo run --release --example loglik_trace -- [trials] [seed] > trace.csv
//! ```

use pcm_detect::prelude::*;
use pcm_detect::sim::{loglik_variation_study, variation_csv, VariationRow};

pub fn run_example(ks: &[usize], trials: usize, seed: u64) -> Result<Vec<VariationRow>> {
    loglik_variation_study(ks, Hypothesis::H13, trials, seed, &EmConfig::default())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let trials = args.first().copied().unwrap_or(1000) as usize;
    let seed = args.get(1).copied().unwrap_or(1);
    let rows = run_example(&[60, 120, 180, 240], trials, seed)?;
    print!("{}", variation_csv(&rows));
    for r in rows.iter().filter(|r| r.h == 10) {
        eprintln!("K={:<4} m={}  mean |dL(10)| = {:.3e}", r.k, r.m, r.mean_variation);
    }
    Ok(())
}
