mod common;

use common::{max_abs_diff, numerical_mle, to_nalgebra};
use pcm_detect::prelude::*;
use pcm_detect::structures::sample_member;
use rand::Rng;

fn window(class: StructureClass, k: usize, rng: &mut RngStream) -> Vec<Complex3> {
    let cov = sample_member(class, rng);
    let d = pcm_detect::hermitian::GaussianDensity::new(cov).unwrap();
    (0..k).map(|_| d.sample(rng)).collect()
}

#[test]
fn unit_weight_estimates_match_numerical_maximizer() {
    let mut rng = RngStream::new(2024);
    for class in StructureClass::ALL {
        let mut worst: f64 = 0.0;
        for _ in 0..10 {
            let z = window(class, 50, &mut rng);
            let w = vec![1.0; z.len()];
            let closed = weighted_mle(class, &WeightedSample::unit(&z)).unwrap();
            let numeric = numerical_mle(class, &z, &w);
            worst = worst.max(max_abs_diff(&to_nalgebra(&closed), &numeric));
        }
        assert!(worst < 1e-4, "{class}: max deviation {worst:e}");
    }
}

#[test]
fn weighted_estimates_match_numerical_maximizer() {
    let mut rng = RngStream::new(77);
    for class in StructureClass::ALL {
        for _ in 0..5 {
            // data from a different class so the constraint actually binds
            let z = window(StructureClass::Reciprocal, 40, &mut rng);
            let w: Vec<f64> = (0..z.len()).map(|_| rng.random::<f64>()).collect();
            let closed = weighted_mle(class, &WeightedSample::new(&z, &w).unwrap()).unwrap();
            let numeric = numerical_mle(class, &z, &w);
            let d = max_abs_diff(&to_nalgebra(&closed), &numeric);
            assert!(d < 1e-4, "{class}: max deviation {d:e}");
        }
    }
}
