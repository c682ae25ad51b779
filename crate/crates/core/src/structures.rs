//! The four polarimetric covariance structures and their constrained
//! estimators.
//!
//! | class | medium symmetry          | free real parameters |
//! |-------|--------------------------|----------------------|
//! | 1     | none (reciprocal medium) | 9                    |
//! | 2     | reflection               | 5                    |
//! | 3     | rotation                 | 3                    |
//! | 4     | azimuth                  | 2                    |
//!
//! Each constrained estimator is obtained by mapping the weighted sample
//! covariance through a constant transform that block-diagonalizes the class,
//! averaging within the blocks the class allows, and mapping back.

use std::fmt;
use std::sync::LazyLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hermitian::{Complex3, GaussianDensity, Hermitian3, Matrix3};
use crate::rng::RngStream;

/// Weighted masses below this are treated as empty.
pub const DEGENERATE_WEIGHT: f64 = 1e-12;
/// Cholesky pivots below this trigger diagonal loading of an estimate.
pub const LOADING_PIVOT: f64 = 1e-12;
/// Diagonal loading as a fraction of the mean eigenvalue.
pub const LOADING_FRACTION: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum StructureClass {
    /// No symmetry.
    Reciprocal = 1,
    /// Reflection symmetry about a vertical plane.
    Reflection = 2,
    Rotation = 3,
    Azimuth = 4,
}

impl StructureClass {
    pub const ALL: [StructureClass; 4] = [
        StructureClass::Reciprocal,
        StructureClass::Reflection,
        StructureClass::Rotation,
        StructureClass::Azimuth,
    ];

    pub fn index(self) -> u8 {
        self as u8
    }

    /// Zero-based position, for indexing per-class arrays.
    pub fn slot(self) -> usize {
        self as usize - 1
    }

    pub fn from_index(i: u8) -> Option<Self> {
        match i {
            1 => Some(StructureClass::Reciprocal),
            2 => Some(StructureClass::Reflection),
            3 => Some(StructureClass::Rotation),
            4 => Some(StructureClass::Azimuth),
            _ => None,
        }
    }

    pub fn param_count(self) -> usize {
        match self {
            StructureClass::Reciprocal => 9,
            StructureClass::Reflection => 5,
            StructureClass::Rotation => 3,
            StructureClass::Azimuth => 2,
        }
    }

    /// Smallest number of generic vectors whose unit-weight estimate is
    /// nonsingular.
    pub fn min_samples(self) -> usize {
        match self {
            StructureClass::Reciprocal => 3,
            StructureClass::Reflection => 2,
            StructureClass::Rotation | StructureClass::Azimuth => 1,
        }
    }
}

impl From<StructureClass> for u8 {
    fn from(c: StructureClass) -> u8 {
        c.index()
    }
}

impl TryFrom<u8> for StructureClass {
    type Error = String;

    fn try_from(i: u8) -> std::result::Result<Self, String> {
        StructureClass::from_index(i).ok_or_else(|| format!("structure class {i} not in 1..=4"))
    }
}

impl fmt::Display for StructureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

pub fn param_count(c: StructureClass) -> usize {
    c.param_count()
}

/// Constant matrices that block-diagonalize the structured classes.
///
/// * `U C₂ U† = blkdiag(A, d)` with `A` 2×2 PD,
/// * `V E T C₃ T† E V† = blkdiag(a, B)` with `B` 2×2 real centrosymmetric,
/// * `E T C₄ T† E = diag(b, c, c)`.
#[derive(Clone, Debug)]
pub struct TransformSet {
    pub u: Matrix3,
    pub t: Matrix3,
    pub e: Matrix3,
    pub v: Matrix3,
    rotation_fwd: Matrix3,
    rotation_inv: Matrix3,
    azimuth_fwd: Matrix3,
    azimuth_inv: Matrix3,
}

impl TransformSet {
    fn build() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let u = Matrix3::from_real([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]]);
        let t = Matrix3::from_real([[s, 0.0, s], [0.0, 1.0, 0.0], [s, 0.0, -s]]);
        let e = Matrix3::from_real([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, s]]);
        let e_inv = Matrix3::from_real([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0_f64.sqrt()]]);
        let one = Complex64::new(1.0, 0.0);
        let v = Matrix3::diagonal([one, Complex64::new(0.0, 1.0), one]);

        let azimuth_fwd = e * t;
        let azimuth_inv = t.adjoint() * e_inv;
        let rotation_fwd = v * azimuth_fwd;
        let rotation_inv = azimuth_inv * v.adjoint();
        TransformSet {
            u,
            t,
            e,
            v,
            rotation_fwd,
            rotation_inv,
            azimuth_fwd,
            azimuth_inv,
        }
    }

    /// `V E T`.
    pub fn rotation_forward(&self) -> &Matrix3 {
        &self.rotation_fwd
    }

    /// `T† E⁻¹ V†`, so that `C = R W R†` undoes the rotation transform.
    pub fn rotation_inverse(&self) -> &Matrix3 {
        &self.rotation_inv
    }

    /// `E T`.
    pub fn azimuth_forward(&self) -> &Matrix3 {
        &self.azimuth_fwd
    }

    /// `T† E⁻¹`.
    pub fn azimuth_inverse(&self) -> &Matrix3 {
        &self.azimuth_inv
    }
}

static TRANSFORMS: LazyLock<TransformSet> = LazyLock::new(TransformSet::build);

pub fn transforms() -> &'static TransformSet {
    &TRANSFORMS
}

#[derive(Clone, Copy, Debug)]
pub enum Weights<'a> {
    Unit,
    Given(&'a [f64]),
}

/// Vectors with per-vector weights in `[0, 1]`.
#[derive(Clone, Copy, Debug)]
pub struct WeightedSample<'a> {
    vectors: &'a [Complex3],
    weights: Weights<'a>,
}

impl<'a> WeightedSample<'a> {
    pub fn unit(vectors: &'a [Complex3]) -> Self {
        WeightedSample {
            vectors,
            weights: Weights::Unit,
        }
    }

    pub fn new(vectors: &'a [Complex3], weights: &'a [f64]) -> Result<Self> {
        if vectors.len() != weights.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} vectors but {} weights",
                vectors.len(),
                weights.len()
            )));
        }
        Ok(WeightedSample {
            vectors,
            weights: Weights::Given(weights),
        })
    }

    pub fn vectors(&self) -> &'a [Complex3] {
        self.vectors
    }

    pub fn total_weight(&self) -> f64 {
        match self.weights {
            Weights::Unit => self.vectors.len() as f64,
            Weights::Given(w) => w.iter().sum(),
        }
    }

    /// Weighted average of `z z†`.
    pub fn scatter(&self) -> Result<Hermitian3> {
        let mut s = Hermitian3::zero();
        let total = match self.weights {
            Weights::Unit => {
                for z in self.vectors {
                    s.add_outer(z, 1.0);
                }
                self.vectors.len() as f64
            }
            Weights::Given(w) => {
                let mut total = 0.0;
                for (z, &q) in self.vectors.iter().zip(w) {
                    if q != 0.0 {
                        s.add_outer(z, q);
                    }
                    total += q;
                }
                total
            }
        };
        if !(total >= DEGENERATE_WEIGHT) {
            return Err(Error::DegenerateWeights { total });
        }
        Ok(s.scale(1.0 / total))
    }
}

/// Constrained maximizer for class `c` given the weighted sample covariance.
/// Does not check positive definiteness.
pub fn project_scatter(c: StructureClass, scatter: &Hermitian3) -> Hermitian3 {
    let tf = transforms();
    let zero = Complex64::new(0.0, 0.0);
    match c {
        StructureClass::Reciprocal => *scatter,
        StructureClass::Reflection => {
            let w = scatter.congruence(&tf.u).to_matrix();
            let blk = Matrix3([
                [w[(0, 0)], w[(0, 1)], zero],
                [w[(1, 0)], w[(1, 1)], zero],
                [zero, zero, w[(2, 2)]],
            ]);
            Hermitian3::from_lower_of(&(tf.u.adjoint() * blk * tf.u))
        }
        StructureClass::Rotation => {
            let w = scatter.congruence(tf.rotation_forward()).to_matrix();
            // B = (X + J X J) / 2 on the lower 2×2 block X
            let b00 = (w[(1, 1)] + w[(2, 2)]) * 0.5;
            let b01 = (w[(1, 2)] + w[(2, 1)]) * 0.5;
            let blk = Matrix3([
                [w[(0, 0)], zero, zero],
                [zero, b00, b01],
                [zero, b01, b00],
            ]);
            let r = tf.rotation_inverse();
            Hermitian3::from_lower_of(&(*r * blk * r.adjoint()))
        }
        StructureClass::Azimuth => {
            let w = scatter.congruence(tf.azimuth_forward());
            let [b, c0, c1] = w.diag();
            let c = 0.5 * (c0 + c1);
            Hermitian3::diagonal([b, c, c]).congruence(tf.azimuth_inverse())
        }
    }
}

/// Diagonal loading safeguard shared by every estimator: if the smallest
/// pivot is below [`LOADING_PIVOT`], add `1e-10 · tr/3 · I` once.
pub fn load_if_singular(estimate: Hermitian3) -> Result<Hermitian3> {
    if !estimate.is_finite() {
        return Err(Error::RankDeficient);
    }
    match estimate.cholesky() {
        Ok(l) if l.min_pivot() >= LOADING_PIVOT => return Ok(estimate),
        _ => {}
    }
    let delta = LOADING_FRACTION * estimate.trace() / 3.0;
    let loaded = estimate + Hermitian3::diagonal([delta; 3]);
    match loaded.cholesky() {
        Ok(l) if l.min_pivot() >= LOADING_PIVOT => Ok(loaded),
        _ => Err(Error::RankDeficient),
    }
}

/// Weighted maximum-likelihood estimate of a class-`c` covariance. With unit
/// weights this is the ordinary constrained MLE.
pub fn weighted_mle(c: StructureClass, sample: &WeightedSample<'_>) -> Result<Hermitian3> {
    let scatter = sample.scatter()?;
    load_if_singular(project_scatter(c, &scatter))
}

/// Per-vector log density of `CN(0, cov)`.
pub fn log_pdf(z: &Complex3, cov: &Hermitian3) -> Result<f64> {
    Ok(GaussianDensity::new(*cov)?.log_pdf(z))
}

/// Whether `m` has the zero, equality and realness pattern of class `c`.
/// `tol` is absolute for matrices of unit scale and grows with the largest
/// diagonal entry beyond that.
pub fn is_member(m: &Hermitian3, c: StructureClass, tol: f64) -> bool {
    let scale = m.diag().iter().fold(1.0_f64, |a, d| a.max(d.abs()));
    let tol = tol * scale;
    let hhhv = m.get(0, 1);
    let hhvv = m.get(0, 2);
    let hvvv = m.get(1, 2);
    let [hh, hv, vv] = m.diag();
    let small = |x: f64| x.abs() <= tol;
    let reflection = small(hhhv.norm()) && small(hvvv.norm());
    let rotation_like = small(hhvv.im) && small(vv - hh) && small(hv - 0.5 * (hh - hhvv.re));
    match c {
        StructureClass::Reciprocal => true,
        StructureClass::Reflection => reflection,
        StructureClass::Rotation => rotation_like && small(hhhv.re) && small((hvvv - hhhv).norm()),
        StructureClass::Azimuth => rotation_like && reflection,
    }
}

/// A random positive definite matrix of class `c`, drawn directly in the
/// class's own entry parameterization.
pub fn sample_member(c: StructureClass, rng: &mut RngStream) -> Hermitian3 {
    use rand::Rng;
    let cx = Complex64::new;
    loop {
        let hh: f64 = rng.random_range(0.3..2.0);
        let m = match c {
            StructureClass::Reciprocal => {
                let mut s = Hermitian3::diagonal([0.05; 3]);
                for _ in 0..4 {
                    let z = Complex3([
                        rng.standard_complex_normal(),
                        rng.standard_complex_normal(),
                        rng.standard_complex_normal(),
                    ]);
                    s.add_outer(&z, 0.5);
                }
                s
            }
            StructureClass::Reflection => {
                let hv: f64 = rng.random_range(0.1..1.0);
                let vv: f64 = rng.random_range(0.3..2.0);
                let r = (hh * vv).sqrt() * rng.random_range(0.0..0.95);
                let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                Hermitian3::from_parts([hh, hv, vv], [cx(0.0, 0.0), Complex64::from_polar(r, phi), cx(0.0, 0.0)])
            }
            StructureClass::Rotation => {
                let hhvv: f64 = hh * rng.random_range(-0.9..0.9);
                let beta: f64 = hh * rng.random_range(-0.6..0.6);
                let hv = 0.5 * (hh - hhvv);
                // (1,0) = conj(j β) = -j β, (2,0) = hhvv, (2,1) = conj(j β)
                Hermitian3::from_parts([hh, hv, hh], [cx(0.0, -beta), cx(hhvv, 0.0), cx(0.0, -beta)])
            }
            StructureClass::Azimuth => {
                let hhvv: f64 = hh * rng.random_range(-0.9..0.9);
                let hv = 0.5 * (hh - hhvv);
                Hermitian3::from_parts([hh, hv, hh], [cx(0.0, 0.0), cx(hhvv, 0.0), cx(0.0, 0.0)])
            }
        };
        if m.cholesky().map(|l| l.min_pivot() > 1e-3).unwrap_or(false) {
            return m;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::nominal_matrices;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(param_count(StructureClass::Reciprocal), 9);
        assert_eq!(param_count(StructureClass::Reflection), 5);
        assert_eq!(param_count(StructureClass::Rotation), 3);
        assert_eq!(param_count(StructureClass::Azimuth), 2);
    }

    #[test]
    fn log_pdf_trivial_values() {
        let ln_pi = std::f64::consts::PI.ln();
        let id = Hermitian3::identity();
        assert!((log_pdf(&Complex3::ZERO, &id).unwrap() + 3.0 * ln_pi).abs() < 1e-15);
        let e1 = Complex3::from_re([1.0, 0.0, 0.0]);
        assert!((log_pdf(&e1, &id).unwrap() + 3.0 * ln_pi + 1.0).abs() < 1e-15);
    }

    #[test]
    fn membership_of_nominal_matrices() {
        let [c1, c2, c3, c4] = nominal_matrices();
        assert!(is_member(&c2, StructureClass::Reflection, 1e-12));
        assert!(!is_member(&c2, StructureClass::Azimuth, 1e-12));
        assert!(is_member(&c3, StructureClass::Rotation, 1e-12));
        assert!(!is_member(&c3, StructureClass::Reflection, 1e-12));
        assert!(is_member(&c4, StructureClass::Azimuth, 1e-12));
        assert!(is_member(&c4, StructureClass::Rotation, 1e-12));
        assert!(!is_member(&c1, StructureClass::Reflection, 1e-12));
        // diag(1, 1/2, 1) carries every symmetry at once
        let common = Hermitian3::diagonal([1.0, 0.5, 1.0]);
        for c in StructureClass::ALL {
            assert!(is_member(&common, c, 1e-12));
        }
        assert!(!is_member(&Hermitian3::identity(), StructureClass::Azimuth, 1e-12));
    }

    #[test]
    fn unit_weight_reciprocal_is_sample_covariance() {
        let z = vec![
            Complex3::new(cx(1.0, 0.5), cx(0.0, -1.0), cx(2.0, 0.0)),
            Complex3::new(cx(-0.3, 0.1), cx(0.7, 0.2), cx(0.0, 1.0)),
            Complex3::new(cx(0.2, 0.2), cx(-1.0, 0.0), cx(0.5, -0.5)),
            Complex3::new(cx(0.0, 1.0), cx(0.3, 0.3), cx(-0.1, 0.0)),
        ];
        let est = weighted_mle(StructureClass::Reciprocal, &WeightedSample::unit(&z)).unwrap();
        let mut s = Hermitian3::zero();
        for v in &z {
            s = s + Hermitian3::outer(v);
        }
        assert!(est.max_abs_diff(&s.scale(0.25)) < 1e-15);
    }

    #[test]
    fn zero_weights_are_degenerate() {
        let z = vec![Complex3::from_re([1.0, 0.0, 0.0]); 3];
        let w = [0.0; 3];
        let s = WeightedSample::new(&z, &w).unwrap();
        assert!(matches!(
            weighted_mle(StructureClass::Azimuth, &s),
            Err(Error::DegenerateWeights { .. })
        ));
    }

    #[test]
    fn singular_scatter_gets_loaded() {
        let z = vec![Complex3::from_re([1.0, 2.0, 3.0]); 5];
        let est = weighted_mle(StructureClass::Reciprocal, &WeightedSample::unit(&z)).unwrap();
        assert!(est.cholesky().unwrap().min_pivot() >= LOADING_PIVOT);
    }

    #[test]
    fn rank_deficient_when_loading_cannot_help() {
        let z = vec![Complex3::ZERO; 4];
        let w = [0.5; 4];
        let s = WeightedSample::new(&z, &w).unwrap();
        assert!(matches!(weighted_mle(StructureClass::Rotation, &s), Err(Error::RankDeficient)));
    }

    #[test]
    fn mismatched_weights_rejected() {
        let z = vec![Complex3::ZERO; 2];
        assert!(WeightedSample::new(&z, &[1.0]).is_err());
    }

    #[test]
    fn sampled_members_belong_to_their_class() {
        let mut rng = RngStream::new(5);
        for c in StructureClass::ALL {
            for _ in 0..50 {
                let m = sample_member(c, &mut rng);
                assert!(is_member(&m, c, 1e-14), "{c}: {m:?}");
                assert!(m.is_positive_definite());
            }
        }
    }
}
