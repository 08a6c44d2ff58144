//! Fixed-size 2x2 helpers used throughout the crate.
//!
//! Everything here has a closed form; no general linear-algebra machinery is
//! warranted for 2x2 work and the closed forms keep determinants exact where
//! the algebra makes them exact.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Real symmetric 2x2 matrix `[[a, b], [b, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sym2 {
    pub a: f64,
    pub b: f64,
    pub d: f64,
}

impl Sym2 {
    pub const ZERO: Sym2 = Sym2 { a: 0.0, b: 0.0, d: 0.0 };
    pub const IDENTITY: Sym2 = Sym2 { a: 1.0, b: 0.0, d: 1.0 };

    pub fn new(a: f64, b: f64, d: f64) -> Self {
        Sym2 { a, b, d }
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.b
    }

    /// Eigenvalues, smallest first.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let half_tr = 0.5 * (self.a + self.d);
        // Discriminant written as a sum of squares: exact non-negativity.
        let h = 0.5 * (self.a - self.d);
        let r = (h * h + self.b * self.b).sqrt();
        (half_tr - r, half_tr + r)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().0
    }

    pub fn add(&self, other: &Sym2) -> Sym2 {
        Sym2::new(self.a + other.a, self.b + other.b, self.d + other.d)
    }

    pub fn sub(&self, other: &Sym2) -> Sym2 {
        Sym2::new(self.a - other.a, self.b - other.b, self.d - other.d)
    }

    pub fn scale(&self, s: f64) -> Sym2 {
        Sym2::new(s * self.a, s * self.b, s * self.d)
    }

    pub fn quadratic_form(&self, v: [f64; 2]) -> f64 {
        self.a * v[0] * v[0] + 2.0 * self.b * v[0] * v[1] + self.d * v[1] * v[1]
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.d.abs())
    }

    /// Inverse square root of a symmetric positive definite matrix.
    ///
    /// Uses the spectral decomposition; errors are the caller's concern, so the
    /// result is `None` when an eigenvalue is not strictly positive.
    pub fn inv_sqrt(&self) -> Option<Sym2> {
        let (lo, hi) = self.eigenvalues();
        if lo <= 0.0 {
            return None;
        }
        // Eigenvector for `hi`: (b, hi - a) unless degenerate.
        let (c, s) = if self.b.abs() > 1e-300 {
            let vx = self.b;
            let vy = hi - self.a;
            let n = (vx * vx + vy * vy).sqrt();
            (vx / n, vy / n)
        } else {
            if self.a >= self.d {
                (1.0, 0.0)
            } else {
                (0.0, 1.0)
            }
        };
        let (ihi, ilo) = (hi.sqrt().recip(), lo.sqrt().recip());
        // V diag(ihi, ilo) V^T with V = [[c, -s], [s, c]].
        Some(Sym2::new(
            ihi * c * c + ilo * s * s,
            (ihi - ilo) * c * s,
            ihi * s * s + ilo * c * c,
        ))
    }

    pub fn to_mat(&self) -> Mat2 {
        Mat2::new(self.a, self.b, self.b, self.d)
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.d.is_finite()
    }
}

/// General real 2x2 matrix in row-major order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub m: [[f64; 2]; 2],
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { m: [[1.0, 0.0], [0.0, 1.0]] };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { m: [[a, b], [c, d]] }
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn mul(&self, other: &Mat2) -> Mat2 {
        let a = &self.m;
        let b = &other.m;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }

    pub fn mul_vec(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }
}

/// Complex 2x2 matrix in row-major order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CMat2 {
    pub m: [[Complex64; 2]; 2],
}

const C_ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const C_ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

impl CMat2 {
    pub const IDENTITY: CMat2 = CMat2 { m: [[C_ONE, C_ZERO], [C_ZERO, C_ONE]] };

    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        CMat2 { m: [[a, b], [c, d]] }
    }

    pub fn from_real(r: &Mat2) -> Self {
        CMat2::new(
            Complex64::new(r.m[0][0], 0.0),
            Complex64::new(r.m[0][1], 0.0),
            Complex64::new(r.m[1][0], 0.0),
            Complex64::new(r.m[1][1], 0.0),
        )
    }

    pub fn det(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> Complex64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn mul(&self, other: &CMat2) -> CMat2 {
        let a = &self.m;
        let b = &other.m;
        CMat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }

    pub fn mul_vec(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    /// Inverse through the adjugate; intended for det ~ 1 transfer matrices.
    pub fn inverse(&self) -> Option<CMat2> {
        let det = self.det();
        if det.norm() == 0.0 {
            return None;
        }
        let inv = det.inv();
        Some(CMat2::new(
            self.m[1][1] * inv,
            -self.m[0][1] * inv,
            -self.m[1][0] * inv,
            self.m[0][0] * inv,
        ))
    }

    pub fn conj(&self) -> CMat2 {
        CMat2::new(
            self.m[0][0].conj(),
            self.m[0][1].conj(),
            self.m[1][0].conj(),
            self.m[1][1].conj(),
        )
    }

    pub fn max_im(&self) -> f64 {
        self.m
            .iter()
            .flatten()
            .map(|z| z.im.abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.m
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

/// Exponential of a traceless 2x2 complex matrix.
///
/// For traceless `A`, the Cayley-Hamilton identity gives `A^2 = -det(A) I`, so
/// `exp(A) = cosh(q) I + sinh(q)/q * A` with `q^2 = -det(A)`. The determinant of
/// the result is `cosh^2 q - sinh^2 q = 1` up to rounding, independent of how
/// accurately `q` was computed.
pub fn exp_traceless(a: &CMat2) -> CMat2 {
    let q2 = -a.det();
    let q = q2.sqrt();
    let (ch, shq) = if q.norm() < 1e-6 {
        // sinh(q)/q = 1 + q^2/6 + q^4/120, cosh(q) = 1 + q^2/2 + q^4/24.
        let q4 = q2 * q2;
        (
            C_ONE + q2 * 0.5 + q4 / 24.0,
            C_ONE + q2 / 6.0 + q4 / 120.0,
        )
    } else {
        (q.cosh(), q.sinh() / q)
    };
    CMat2::new(
        ch + shq * a.m[0][0],
        shq * a.m[0][1],
        shq * a.m[1][0],
        ch + shq * a.m[1][1],
    )
}

/// Real specialization of [`exp_traceless`], used on hot scan loops where `z`
/// is a real spectral parameter. With `q^2 = -det(A)` the hyperbolic branch
/// applies for `q^2 >= 0` and the trigonometric one otherwise.
pub fn exp_traceless_real(a: &Mat2) -> Mat2 {
    let q2 = -a.det();
    let (c, s) = if q2.abs() < 1e-12 {
        (1.0 + q2 * 0.5 + q2 * q2 / 24.0, 1.0 + q2 / 6.0 + q2 * q2 / 120.0)
    } else if q2 > 0.0 {
        let q = q2.sqrt();
        (q.cosh(), q.sinh() / q)
    } else {
        let q = (-q2).sqrt();
        (q.cos(), q.sin() / q)
    };
    Mat2::new(
        c + s * a.m[0][0],
        s * a.m[0][1],
        s * a.m[1][0],
        c + s * a.m[1][1],
    )
}
