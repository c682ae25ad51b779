//! Fixed-size 3×3 complex Hermitian algebra.
//!
//! Everything in this crate works on pixel vectors with exactly three
//! polarimetric channels (HH, HV, VV), so the linear algebra is written out by
//! hand for that size. Hermitian matrices keep only the real diagonal and the
//! strictly lower triangle, which makes Hermitian symmetry a property of the
//! storage rather than something that has to be maintained numerically.

use std::f64::consts::PI;
use std::ops::{Add, Index, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Pivots at or below this value make a matrix count as not positive definite.
pub const PIVOT_FLOOR: f64 = 1e-14;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Strictly-lower-triangle slot for `(row, col)` with `row > col`.
#[inline]
fn lower_slot(row: usize, col: usize) -> usize {
    match (row, col) {
        (1, 0) => 0,
        (2, 0) => 1,
        (2, 1) => 2,
        _ => unreachable!("not a strictly lower entry: ({row}, {col})"),
    }
}

/// A pixel vector `(HH, HV, VV)`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Complex3(pub [Complex64; 3]);

impl Complex3 {
    pub const ZERO: Complex3 = Complex3([ZERO; 3]);

    pub fn new(hh: Complex64, hv: Complex64, vv: Complex64) -> Self {
        Complex3([hh, hv, vv])
    }

    pub fn from_re(values: [f64; 3]) -> Self {
        Complex3(values.map(|v| Complex64::new(v, 0.0)))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn scale(&self, s: Complex64) -> Complex3 {
        Complex3(self.0.map(|c| c * s))
    }
}

impl Index<usize> for Complex3 {
    type Output = Complex64;

    fn index(&self, i: usize) -> &Complex64 {
        &self.0[i]
    }
}

/// A general complex 3×3 matrix, used for the constant structure transforms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matrix3(pub [[Complex64; 3]; 3]);

impl Matrix3 {
    pub fn identity() -> Self {
        let mut m = [[ZERO; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = ONE;
        }
        Matrix3(m)
    }

    pub fn diagonal(d: [Complex64; 3]) -> Self {
        let mut m = [[ZERO; 3]; 3];
        for i in 0..3 {
            m[i][i] = d[i];
        }
        Matrix3(m)
    }

    pub fn from_real(rows: [[f64; 3]; 3]) -> Self {
        Matrix3(rows.map(|r| r.map(|v| Complex64::new(v, 0.0))))
    }

    pub fn adjoint(&self) -> Self {
        let mut m = [[ZERO; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = self.0[j][i].conj();
            }
        }
        Matrix3(m)
    }

    pub fn mul_vec(&self, z: &Complex3) -> Complex3 {
        let m = &self.0;
        Complex3([
            m[0][0] * z[0] + m[0][1] * z[1] + m[0][2] * z[2],
            m[1][0] * z[0] + m[1][1] * z[1] + m[1][2] * z[2],
            m[2][0] * z[0] + m[2][1] * z[1] + m[2][2] * z[2],
        ])
    }

    /// Largest entry-wise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Matrix3) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((self.0[i][j] - other.0[i][j]).norm());
            }
        }
        worst
    }
}

impl Mul for Matrix3 {
    type Output = Matrix3;

    fn mul(self, rhs: Matrix3) -> Matrix3 {
        let mut m = [[ZERO; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.0[i][k] * rhs.0[k][j]).sum();
            }
        }
        Matrix3(m)
    }
}

impl Index<(usize, usize)> for Matrix3 {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.0[i][j]
    }
}

/// 3×3 complex Hermitian matrix stored as a real diagonal plus the strictly
/// lower triangle `(1,0), (2,0), (2,1)`.
///
/// Positive definiteness is not enforced by the type; it is checked where it
/// matters by [`Hermitian3::cholesky`].
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Hermitian3 {
    diag: [f64; 3],
    lower: [Complex64; 3],
}

impl Hermitian3 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::diagonal([1.0, 1.0, 1.0])
    }

    pub fn diagonal(d: [f64; 3]) -> Self {
        Hermitian3 {
            diag: d,
            lower: [ZERO; 3],
        }
    }

    /// Builds from the real diagonal and the lower entries `(1,0), (2,0), (2,1)`.
    pub fn from_parts(diag: [f64; 3], lower: [Complex64; 3]) -> Self {
        Hermitian3 { diag, lower }
    }

    /// Builds from a full row-major matrix, rejecting inputs whose upper
    /// triangle is not the conjugate of the lower one (relative tolerance
    /// `1e-12`) or whose diagonal is not real.
    pub fn from_rows(rows: [[Complex64; 3]; 3]) -> Result<Self> {
        let scale = rows
            .iter()
            .flatten()
            .map(|c| c.norm())
            .fold(1.0_f64, f64::max);
        let mut asym = 0.0_f64;
        for i in 0..3 {
            asym = asym.max(rows[i][i].im.abs());
            for j in 0..i {
                asym = asym.max((rows[i][j] - rows[j][i].conj()).norm());
            }
        }
        if !(asym <= 1e-12 * scale) {
            return Err(Error::NotHermitian { asymmetry: asym });
        }
        Ok(Self::from_lower_of(&Matrix3(rows)))
    }

    /// Takes the real diagonal and strict lower triangle of `m`, discarding
    /// the rest. Used after congruences whose result is Hermitian up to
    /// rounding.
    pub fn from_lower_of(m: &Matrix3) -> Self {
        let m = &m.0;
        Hermitian3 {
            diag: [m[0][0].re, m[1][1].re, m[2][2].re],
            lower: [m[1][0], m[2][0], m[2][1]],
        }
    }

    /// `z z†`.
    pub fn outer(z: &Complex3) -> Self {
        let mut h = Hermitian3::zero();
        h.add_outer(z, 1.0);
        h
    }

    /// `self += w · z z†`.
    #[inline]
    pub fn add_outer(&mut self, z: &Complex3, w: f64) {
        let [a, b, c] = z.0;
        self.diag[0] += w * a.norm_sqr();
        self.diag[1] += w * b.norm_sqr();
        self.diag[2] += w * c.norm_sqr();
        self.lower[0] += (b * a.conj()) * w;
        self.lower[1] += (c * a.conj()) * w;
        self.lower[2] += (c * b.conj()) * w;
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Equal => Complex64::new(self.diag[i], 0.0),
            Greater => self.lower[lower_slot(i, j)],
            Less => self.lower[lower_slot(j, i)].conj(),
        }
    }

    pub fn diag(&self) -> [f64; 3] {
        self.diag
    }

    pub fn lower(&self) -> [Complex64; 3] {
        self.lower
    }

    pub fn to_matrix(&self) -> Matrix3 {
        let mut m = [[ZERO; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = self.get(i, j);
            }
        }
        Matrix3(m)
    }

    pub fn trace(&self) -> f64 {
        self.diag.iter().sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Hermitian3 {
            diag: self.diag.map(|d| d * s),
            lower: self.lower.map(|c| c * s),
        }
    }

    /// `M · self · M†`.
    pub fn congruence(&self, m: &Matrix3) -> Self {
        Self::from_lower_of(&(*m * self.to_matrix() * m.adjoint()))
    }

    /// Largest entry-wise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Hermitian3) -> f64 {
        let d = self
            .diag
            .iter()
            .zip(&other.diag)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        self.lower
            .iter()
            .zip(&other.lower)
            .map(|(a, b)| (a - b).norm())
            .fold(d, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.diag.iter().all(|d| d.is_finite())
            && self.lower.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Lower Cholesky factor with positive real diagonal.
    pub fn cholesky(&self) -> Result<Cholesky3> {
        let a = self;
        let p0 = a.diag[0];
        check_pivot(p0)?;
        let l00 = p0.sqrt();
        let l10 = a.lower[0] / l00;
        let l20 = a.lower[1] / l00;

        let p1 = a.diag[1] - l10.norm_sqr();
        check_pivot(p1)?;
        let l11 = p1.sqrt();
        let l21 = (a.lower[2] - l20 * l10.conj()) / l11;

        let p2 = a.diag[2] - l20.norm_sqr() - l21.norm_sqr();
        check_pivot(p2)?;
        let l22 = p2.sqrt();

        Ok(Cholesky3 {
            diag: [l00, l11, l22],
            lower: [l10, l20, l21],
        })
    }

    pub fn is_positive_definite(&self) -> bool {
        self.cholesky().is_ok()
    }

    pub fn log_det(&self) -> Result<f64> {
        Ok(self.cholesky()?.log_det())
    }

    /// `z† self⁻¹ z`, computed by a triangular solve.
    pub fn quad_form(&self, z: &Complex3) -> Result<f64> {
        Ok(self.cholesky()?.quad_form(z))
    }
}

impl Add for Hermitian3 {
    type Output = Hermitian3;

    fn add(self, rhs: Hermitian3) -> Hermitian3 {
        Hermitian3 {
            diag: [
                self.diag[0] + rhs.diag[0],
                self.diag[1] + rhs.diag[1],
                self.diag[2] + rhs.diag[2],
            ],
            lower: [
                self.lower[0] + rhs.lower[0],
                self.lower[1] + rhs.lower[1],
                self.lower[2] + rhs.lower[2],
            ],
        }
    }
}

#[inline]
fn check_pivot(p: f64) -> Result<()> {
    // written so that NaN pivots fail as well
    if p > PIVOT_FLOOR {
        Ok(())
    } else {
        Err(Error::NotPositiveDefinite { pivot: p })
    }
}

/// Lower-triangular Cholesky factor `L` with `L L† = A`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cholesky3 {
    diag: [f64; 3],
    lower: [Complex64; 3],
}

impl Cholesky3 {
    pub fn diag(&self) -> [f64; 3] {
        self.diag
    }

    /// Smallest squared diagonal entry, i.e. the smallest elimination pivot.
    pub fn min_pivot(&self) -> f64 {
        self.diag.iter().map(|d| d * d).fold(f64::INFINITY, f64::min)
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.diag.iter().map(|d| d.ln()).sum::<f64>()
    }

    /// Solves `L y = z`.
    #[inline]
    pub fn forward_solve(&self, z: &Complex3) -> Complex3 {
        let [l10, l20, l21] = self.lower;
        let y0 = z[0] / self.diag[0];
        let y1 = (z[1] - l10 * y0) / self.diag[1];
        let y2 = (z[2] - l20 * y0 - l21 * y1) / self.diag[2];
        Complex3([y0, y1, y2])
    }

    #[inline]
    pub fn quad_form(&self, z: &Complex3) -> f64 {
        self.forward_solve(z).norm_sqr()
    }

    /// `L w`.
    #[inline]
    pub fn mul_vec(&self, w: &Complex3) -> Complex3 {
        let [l10, l20, l21] = self.lower;
        Complex3([
            w[0] * self.diag[0],
            l10 * w[0] + w[1] * self.diag[1],
            l20 * w[0] + l21 * w[1] + w[2] * self.diag[2],
        ])
    }

    pub fn to_matrix(&self) -> Matrix3 {
        let [l10, l20, l21] = self.lower;
        let d = |x: f64| Complex64::new(x, 0.0);
        Matrix3([
            [d(self.diag[0]), ZERO, ZERO],
            [l10, d(self.diag[1]), ZERO],
            [l20, l21, d(self.diag[2])],
        ])
    }

    /// `L L†`.
    pub fn reconstruct(&self) -> Hermitian3 {
        let l = self.to_matrix();
        Hermitian3::from_lower_of(&(l * l.adjoint()))
    }
}

/// A covariance with its factorization cached, for repeated density
/// evaluation.
#[derive(Clone, Copy, Debug)]
pub struct GaussianDensity {
    cov: Hermitian3,
    chol: Cholesky3,
    log_norm: f64,
}

impl GaussianDensity {
    pub fn new(cov: Hermitian3) -> Result<Self> {
        let chol = cov.cholesky()?;
        Ok(GaussianDensity {
            cov,
            chol,
            log_norm: -3.0 * PI.ln() - chol.log_det(),
        })
    }

    pub fn cov(&self) -> &Hermitian3 {
        &self.cov
    }

    pub fn cholesky(&self) -> &Cholesky3 {
        &self.chol
    }

    /// Log density of the zero-mean circular complex Gaussian at `z`.
    #[inline]
    pub fn log_pdf(&self, z: &Complex3) -> f64 {
        self.log_norm - self.chol.quad_form(z)
    }

    /// Draws `L w` with `w` standard circular complex normal.
    pub fn sample(&self, rng: &mut crate::rng::RngStream) -> Complex3 {
        let w = Complex3([
            rng.standard_complex_normal(),
            rng.standard_complex_normal(),
            rng.standard_complex_normal(),
        ]);
        self.chol.mul_vec(&w)
    }
}

pub fn cholesky(m: &Hermitian3) -> Result<Cholesky3> {
    m.cholesky()
}

pub fn log_det(m: &Hermitian3) -> Result<f64> {
    m.log_det()
}

pub fn quad_form(z: &Complex3, m: &Hermitian3) -> Result<f64> {
    m.quad_form(z)
}

/// One draw from `CN(0, m)`.
pub fn sample_gaussian(m: &Hermitian3, rng: &mut crate::rng::RngStream) -> Result<Complex3> {
    Ok(GaussianDensity::new(*m)?.sample(rng))
}
