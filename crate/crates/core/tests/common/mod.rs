//! Reference implementations used by the integration tests. Nothing here
//! calls into the estimators under test: covariances are parameterized by
//! their free entries directly and the likelihood is maximized numerically,
//! with determinants and inverses taken from nalgebra.

#![allow(dead_code)]

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use nalgebra::{Complex, Matrix3, Vector3};
use num_complex::Complex64;
use pcm_detect::hermitian::{Complex3, Hermitian3};
use pcm_detect::structures::StructureClass;

pub type CMat = Matrix3<Complex<f64>>;

pub fn c(re: f64, im: f64) -> Complex<f64> {
    Complex::new(re, im)
}

/// Covariance built from the free real parameters of each structure.
pub fn from_params(class: StructureClass, p: &[f64]) -> CMat {
    let z = c(0.0, 0.0);
    match class {
        StructureClass::Reciprocal => {
            let (a, b, d) = (c(p[3], p[4]), c(p[5], p[6]), c(p[7], p[8]));
            Matrix3::new(
                c(p[0], 0.0), a.conj(), b.conj(),
                a, c(p[1], 0.0), d.conj(),
                b, d, c(p[2], 0.0),
            )
        }
        StructureClass::Reflection => {
            let b = c(p[3], p[4]);
            Matrix3::new(
                c(p[0], 0.0), z, b.conj(),
                z, c(p[1], 0.0), z,
                b, z, c(p[2], 0.0),
            )
        }
        StructureClass::Rotation => {
            let (a, cc, beta) = (p[0], p[1], p[2]);
            let jb = c(0.0, beta);
            Matrix3::new(
                c(a, 0.0), jb, c(cc, 0.0),
                -jb, c((a - cc) / 2.0, 0.0), jb,
                c(cc, 0.0), -jb, c(a, 0.0),
            )
        }
        StructureClass::Azimuth => {
            let (a, cc) = (p[0], p[1]);
            Matrix3::new(
                c(a, 0.0), z, c(cc, 0.0),
                z, c((a - cc) / 2.0, 0.0), z,
                c(cc, 0.0), z, c(a, 0.0),
            )
        }
    }
}

pub fn to_nalgebra(m: &Hermitian3) -> CMat {
    Matrix3::from_fn(|i, j| m.get(i, j))
}

pub fn vec3(z: &Complex3) -> Vector3<Complex<f64>> {
    Vector3::new(z.0[0], z.0[1], z.0[2])
}

/// Negative average weighted log-likelihood (without the `3 log π`
/// constant), or `None` outside the positive-definite cone.
pub fn neg_loglik(cov: &CMat, z: &[Complex3], w: &[f64]) -> Option<f64> {
    // Sylvester's criterion with a relative floor; nalgebra's complex
    // Cholesky accepts some matrices with tiny negative pivots
    let scale = (cov[(0, 0)].re + cov[(1, 1)].re + cov[(2, 2)].re) / 3.0;
    let m1 = cov[(0, 0)].re;
    let m2 = m1 * cov[(1, 1)].re - cov[(1, 0)].norm_sqr();
    let det = cov.determinant().re;
    let floor = 1e-12;
    if !(scale > 0.0 && m1 > floor * scale && m2 > floor * scale * scale && det > floor * scale.powi(3)) {
        return None;
    }
    let inv = cov.try_inverse()?;
    let total: f64 = w.iter().sum();
    let mut acc = 0.0;
    for (zk, wk) in z.iter().zip(w) {
        let v = vec3(zk);
        acc += wk * (v.adjoint() * inv * v)[(0, 0)].re;
    }
    Some(det.ln() + acc / total)
}

struct Problem<'a> {
    class: StructureClass,
    z: &'a [Complex3],
    w: &'a [f64],
}

impl CostFunction for Problem<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Vec<f64>) -> Result<f64, argmin::core::Error> {
        Ok(neg_loglik(&from_params(self.class, p), self.z, self.w).unwrap_or(1e300))
    }
}

/// Derivative-free constrained maximum-likelihood estimate: Nelder-Mead in
/// the structure's own parameters, restarted from the incumbent until the
/// objective stops improving.
pub fn numerical_mle(class: StructureClass, z: &[Complex3], w: &[f64]) -> CMat {
    let total: f64 = w.iter().sum();
    let power: Vec<f64> = (0..3)
        .map(|i| z.iter().zip(w).map(|(v, wk)| wk * v.0[i].norm_sqr()).sum::<f64>() / total)
        .collect();
    let mean = (power[0] + power[2]) / 2.0;
    let mut x: Vec<f64> = match class {
        StructureClass::Reciprocal => vec![power[0], power[1], power[2], 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        StructureClass::Reflection => vec![power[0], power[1], power[2], 0.0, 0.0],
        StructureClass::Rotation => vec![mean, 0.0, 0.0],
        StructureClass::Azimuth => vec![mean, 0.0],
    };
    let problem = Problem { class, z, w };
    let mut best = problem.cost(&x).unwrap();
    let mut step = 0.1 * mean;
    for _ in 0..40 {
        let mut simplex = vec![x.clone()];
        for i in 0..x.len() {
            let mut v = x.clone();
            v[i] += step;
            simplex.push(v);
        }
        let solver = NelderMead::new(simplex).with_sd_tolerance(1e-15).unwrap();
        let res = Executor::new(Problem { class, z, w }, solver)
            .configure(|s| s.max_iters(20_000))
            .run()
            .unwrap();
        let cost = res.state().get_best_cost();
        let improved = best - cost;
        if cost < best {
            best = cost;
            x = res.state().get_best_param().unwrap().clone();
        }
        if improved < 1e-14 && step < 1e-6 {
            break;
        }
        step = (step * 0.3).max(1e-9);
    }
    from_params(class, &x)
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    (a - b).iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Log-determinant of a covariance matrix via nalgebra.
pub fn log_det(m: &Hermitian3) -> f64 {
    to_nalgebra(m).determinant().re.ln()
}

/// `z^H M^{-1} z` via an explicit nalgebra inverse.
pub fn quad_form(m: &Hermitian3, z: &Complex3) -> f64 {
    let inv = to_nalgebra(m).try_inverse().expect("invertible");
    let v = vec3(z);
    (v.adjoint() * inv * v)[(0, 0)].re
}

pub fn complex(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}
