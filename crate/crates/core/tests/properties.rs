//! Property tests for the linear-algebra kernels, the structured estimators
//! and the EM bookkeeping.

mod common;

use num_complex::Complex64;
use pcm_detect::em::{e_step, initialize, mixture_loglik, Alphabet, EmConfig};
use pcm_detect::hermitian::{Complex3, Hermitian3};
use pcm_detect::structures::{is_member, weighted_mle, StructureClass, WeightedSample};
use proptest::prelude::*;

fn complex3() -> impl Strategy<Value = Complex3> {
    prop::array::uniform6(-3.0f64..3.0).prop_map(|v| {
        Complex3([
            Complex64::new(v[0], v[1]),
            Complex64::new(v[2], v[3]),
            Complex64::new(v[4], v[5]),
        ])
    })
}

fn sample(min: usize, max: usize) -> impl Strategy<Value = Vec<Complex3>> {
    prop::collection::vec(complex3(), min..max)
}

/// A well-conditioned random PD matrix: a sum of outer products plus a
/// small ridge.
fn pd_matrix() -> impl Strategy<Value = Hermitian3> {
    (sample(3, 6), 0.05f64..1.0).prop_map(|(vs, ridge)| {
        let mut m = Hermitian3::diagonal([ridge; 3]);
        vs.iter().for_each(|v| m.add_outer(v, 1.0));
        m
    })
}

fn class() -> impl Strategy<Value = StructureClass> {
    prop::sample::select(StructureClass::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cholesky_reconstructs_its_input(m in pd_matrix()) {
        let l = m.cholesky().unwrap();
        let back = l.reconstruct();
        prop_assert!(back.max_abs_diff(&m) < 1e-10 * m.trace().max(1.0));
    }

    #[test]
    fn log_det_and_quad_form_match_nalgebra(m in pd_matrix(), z in complex3()) {
        let ld = m.log_det().unwrap();
        prop_assert!((ld - common::log_det(&m)).abs() < 1e-9 * ld.abs().max(1.0));
        let q = m.quad_form(&z).unwrap();
        let oracle = common::quad_form(&m, &z);
        prop_assert!((q - oracle).abs() < 1e-8 * oracle.abs().max(1.0));
    }

    #[test]
    fn estimates_belong_to_their_class(c in class(), z in sample(12, 40)) {
        let est = weighted_mle(c, &WeightedSample::unit(&z)).unwrap();
        prop_assert!(est.is_positive_definite());
        prop_assert!(is_member(&est, c, 1e-9 * est.trace()));
    }

    #[test]
    fn estimates_ignore_a_common_phase(c in class(), z in sample(12, 40), phi in 0.0f64..6.283) {
        let rot = Complex64::from_polar(1.0, phi);
        let turned: Vec<Complex3> = z.iter().map(|v| v.scale(rot)).collect();
        let a = weighted_mle(c, &WeightedSample::unit(&z)).unwrap();
        let b = weighted_mle(c, &WeightedSample::unit(&turned)).unwrap();
        prop_assert!(a.max_abs_diff(&b) < 1e-10 * a.trace());
    }

    #[test]
    fn estimates_scale_with_power(c in class(), z in sample(12, 40), s in 0.1f64..10.0) {
        let scaled: Vec<Complex3> = z.iter().map(|v| v.scale(Complex64::new(s, 0.0))).collect();
        let a = weighted_mle(c, &WeightedSample::unit(&z)).unwrap().scale(s * s);
        let b = weighted_mle(c, &WeightedSample::unit(&scaled)).unwrap();
        prop_assert!(a.max_abs_diff(&b) < 1e-9 * a.trace());
    }

    #[test]
    fn uniform_weights_equal_unit_weights(c in class(), z in sample(12, 40), w in 0.01f64..5.0) {
        let weights = vec![w; z.len()];
        let a = weighted_mle(c, &WeightedSample::unit(&z)).unwrap();
        let b = weighted_mle(c, &WeightedSample::new(&z, &weights).unwrap()).unwrap();
        prop_assert!(a.max_abs_diff(&b) < 1e-10 * a.trace());
    }

    #[test]
    fn responsibilities_are_distributions(z in sample(16, 48), mask in 1u8..16) {
        let idx: Vec<u8> = (1..=4).filter(|i| mask & (1 << (i - 1)) != 0).collect();
        prop_assume!(idx.len() >= 2);
        let alphabet = Alphabet::from_indices(&idx).unwrap();
        let state = initialize(&z, &alphabet).unwrap();
        let resp = e_step(&z, &state, &EmConfig::default()).unwrap();
        prop_assert_eq!(resp.n_samples(), z.len());
        for row in resp.rows() {
            prop_assert!(row.iter().all(|&p| (0.0..=1.0 + 1e-12).contains(&p)));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pixel_order_does_not_change_the_likelihood(z in sample(16, 48), shift in 1usize..15) {
        let alphabet = Alphabet::from_indices(&[1, 3]).unwrap();
        let mut rotated = z.clone();
        rotated.rotate_left(shift % z.len());
        let a = initialize(&z, &alphabet).unwrap();
        let b = initialize(&rotated, &alphabet).unwrap();
        let la = mixture_loglik(&z, &a).unwrap();
        let lb = mixture_loglik(&rotated, &b).unwrap();
        prop_assert!((la - lb).abs() < 1e-9 * la.abs().max(1.0));
        // and the responsibility rows move with their pixels
        let ra = e_step(&z, &a, &EmConfig::default()).unwrap();
        let rb = e_step(&rotated, &b, &EmConfig::default()).unwrap();
        for k in 0..z.len() {
            let j = (k + z.len() - shift % z.len()) % z.len();
            for (x, y) in ra.row(k).iter().zip(rb.row(j)) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
