//! Complex 2x2 matrix algebra for SL(2,C) group elements, plus the
//! trace-level primitives (complex translation length, hyperbolicity test)
//! that everything downstream is built on.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Determinant drift tolerated before a matrix is considered degenerate.
pub const DET_TOL: f64 = 1e-9;

/// Traces within this distance of +-2 are treated as parabolic.
pub const PARABOLIC_TOL: f64 = 1e-9;

pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub(crate) fn is_finite(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

/// A unit-determinant complex 2x2 matrix, entries row-major.
///
/// Products and inverses renormalize by the principal square root of the
/// determinant, so long words stay within `DET_TOL` of SL(2,C).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MoebiusMatrix {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl MoebiusMatrix {
    pub const IDENTITY: MoebiusMatrix = MoebiusMatrix {
        a: ONE,
        b: ZERO,
        c: ZERO,
        d: ONE,
    };

    /// Builds a matrix from entries, renormalizing to unit determinant.
    /// Rejects non-finite entries and (near-)singular matrices.
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        if ![a, b, c, d].iter().all(|&z| is_finite(z)) {
            return Err(Error::invalid("matrix entries must be finite"));
        }
        let m = MoebiusMatrix { a, b, c, d };
        let det = m.det();
        if det.norm() < DET_TOL {
            return Err(Error::domain("matrix is singular"));
        }
        Ok(m.renormalized(det))
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> Complex64 {
        self.a + self.d
    }

    /// Divides by the principal square root of the determinant when the
    /// drift exceeds `DET_TOL`. The drift must also clear the cancellation
    /// noise of the determinant computation itself (~eps * |ad| + |bc|);
    /// correcting below that floor would inject the measurement noise into
    /// the entries.
    fn renormalized(self, det: Complex64) -> Self {
        let noise = 32.0 * f64::EPSILON
            * (self.a.norm() * self.d.norm() + self.b.norm() * self.c.norm());
        if (det - ONE).norm() <= DET_TOL.max(noise) {
            return self;
        }
        let s = det.sqrt();
        MoebiusMatrix {
            a: self.a / s,
            b: self.b / s,
            c: self.c / s,
            d: self.d / s,
        }
    }

    /// Matrix product, renormalized.
    pub fn mul(&self, rhs: &MoebiusMatrix) -> MoebiusMatrix {
        let m = MoebiusMatrix {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        };
        let det = m.det();
        m.renormalized(det)
    }

    /// Inverse by adjugate; valid because the determinant is 1.
    pub fn inverse(&self) -> MoebiusMatrix {
        let m = MoebiusMatrix {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        };
        let det = m.det();
        m.renormalized(det)
    }

    /// The commutator M N M^-1 N^-1.
    pub fn commutator(&self, rhs: &MoebiusMatrix) -> MoebiusMatrix {
        self.mul(rhs).mul(&self.inverse()).mul(&rhs.inverse())
    }

    pub fn is_finite(&self) -> bool {
        [self.a, self.b, self.c, self.d].iter().all(|&z| is_finite(z))
    }
}

impl std::ops::Mul for MoebiusMatrix {
    type Output = MoebiusMatrix;

    fn mul(self, rhs: Self) -> Self::Output {
        MoebiusMatrix::mul(&self, &rhs)
    }
}

/// Complex translation length lambda of a group element, recovered from its
/// trace via 2 cosh(lambda/2) = +-tr.
///
/// The representative returned has Re(lambda) >= 0 and |Im(lambda)| <= pi
/// (the sign of the trace ambiguity shifts Im by 2 pi and is resolved by
/// taking the smaller |Im|). A lift to all of C by analytic continuation is
/// out of reach for a single-matrix function; only the principal branch is
/// exposed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexLength {
    pub value: Complex64,
    pub parabolic: bool,
}

/// Complex length from a trace. Traces within `PARABOLIC_TOL` of +-2 map to
/// length 0 with the parabolic flag set.
pub fn complex_length(tr: Complex64) -> ComplexLength {
    let two = Complex64::new(2.0, 0.0);
    if (tr - two).norm() <= PARABOLIC_TOL || (tr + two).norm() <= PARABOLIC_TOL {
        return ComplexLength {
            value: ZERO,
            parabolic: true,
        };
    }
    let plus = (tr / 2.0).acosh() * 2.0;
    let minus = (-tr / 2.0).acosh() * 2.0;
    let value = if minus.im.abs() < plus.im.abs() {
        minus
    } else {
        plus
    };
    ComplexLength {
        value,
        parabolic: false,
    }
}

/// True iff the trace is eps-close to the real axis and outside [-2, 2]:
/// a purely hyperbolic element (real translation, no rotation).
pub fn is_purely_hyperbolic(tr: Complex64, eps: f64) -> bool {
    tr.im.abs() <= eps && tr.re.abs() > 2.0
}
