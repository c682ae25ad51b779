//! Seedable, splittable random streams for Monte Carlo work.
//!
//! A stream is a ChaCha8 keystream selected by `(seed, stream id)`. Child
//! streams are derived from the parent's id and a caller-chosen tag, so a
//! trial's randomness depends only on its position in the experiment and never
//! on which thread ran it or in what order.

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const HALF_SQRT: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[inline]
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

#[derive(Clone, Debug)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        RngStream {
            seed,
            stream,
            inner,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream
    }

    /// Child stream identified by `tag`. Independent of how much of `self`
    /// has been consumed.
    pub fn fork(&self, tag: u64) -> RngStream {
        let id = splitmix64(splitmix64(self.stream) ^ tag.wrapping_mul(0xD6E8_FEB8_6659_FD93));
        RngStream::with_stream(self.seed, id)
    }

    /// Real and imaginary parts IID `N(0, 1/2)`.
    pub fn standard_complex_normal(&mut self) -> Complex64 {
        let re: f64 = StandardNormal.sample(&mut self.inner);
        let im: f64 = StandardNormal.sample(&mut self.inner);
        Complex64::new(re * HALF_SQRT, im * HALF_SQRT)
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draw(rng: &mut RngStream, n: usize) -> Vec<u64> {
        (0..n).map(|_| rng.next_u64()).collect()
    }

    #[test]
    fn same_seed_same_sequence() {
        assert_eq!(draw(&mut RngStream::new(7), 16), draw(&mut RngStream::new(7), 16));
    }

    #[test]
    fn different_seeds_differ() {
        assert_ne!(draw(&mut RngStream::new(7), 4), draw(&mut RngStream::new(8), 4));
    }

    #[test]
    fn forks_ignore_parent_consumption() {
        let root = RngStream::new(1);
        let mut used = root.clone();
        let _ = draw(&mut used, 100);
        assert_eq!(draw(&mut root.fork(3), 8), draw(&mut used.fork(3), 8));
        assert_ne!(draw(&mut root.fork(3), 8), draw(&mut root.fork(4), 8));
    }

    #[test]
    fn complex_normal_has_unit_power() {
        let mut rng = RngStream::new(11);
        let n = 200_000;
        let p: f64 = (0..n).map(|_| rng.standard_complex_normal().norm_sqr()).sum::<f64>() / n as f64;
        assert!((p - 1.0).abs() < 0.01, "mean power {p}");
    }
}
