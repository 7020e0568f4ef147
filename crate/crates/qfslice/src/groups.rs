//! Marked two-generator groups with parabolic commutator, built either from
//! complex Fenchel-Nielsen data (length/twist of the first generator) or
//! from the symmetric-slice parameter d.
//!
//! All downstream logic is trace-based, so the pairs produced here are only
//! meaningful up to conjugation; no normalization of fixed points is
//! enforced.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::moebius::{is_finite, MoebiusMatrix};

const POLE_TOL: f64 = 1e-9;

fn coth(z: Complex64) -> Complex64 {
    z.cosh() / z.sinh()
}

/// Complex Fenchel-Nielsen coordinates (lambda, tau): translation length of
/// the first generator and the twist along it. lambda must stay away from
/// the poles 2 pi i k of coth(lambda/2).
#[derive(Clone, Copy, Debug)]
pub struct CfnParams {
    lambda: Complex64,
    tau: Complex64,
}

impl CfnParams {
    pub fn new(lambda: Complex64, tau: Complex64) -> Result<Self> {
        if !is_finite(lambda) || !is_finite(tau) {
            return Err(Error::invalid("lambda and tau must be finite"));
        }
        if (lambda / 2.0).sinh().norm() <= POLE_TOL {
            return Err(Error::domain(format!(
                "lambda = {lambda} is at a pole of the generator entries"
            )));
        }
        Ok(CfnParams { lambda, tau })
    }

    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }
}

/// An ordered pair of generators. Trace of the commutator is -2 within
/// 1e-8 for every constructor in this module.
#[derive(Clone, Copy, Debug)]
pub struct MarkedPair {
    pub a: MoebiusMatrix,
    pub b: MoebiusMatrix,
}

impl MarkedPair {
    pub fn trace_triple(&self) -> (Complex64, Complex64, Complex64) {
        (
            self.a.trace(),
            self.b.trace(),
            self.a.mul(&self.b).trace(),
        )
    }
}

/// Generators from Fenchel-Nielsen data:
///
/// A has entries cosh(lambda/2) on the diagonal and cosh(lambda/2) +- 1 off
/// it; B mixes cosh(tau/2) coth(lambda/4), -sinh(tau/2) and
/// cosh(tau/2) tanh(lambda/4). Both are unimodular by construction and the
/// commutator is parabolic.
pub fn cfn_generators(p: &CfnParams) -> MarkedPair {
    let ch = (p.lambda / 2.0).cosh();
    let one = Complex64::new(1.0, 0.0);
    let a = MoebiusMatrix {
        a: ch,
        b: ch + one,
        c: ch - one,
        d: ch,
    };
    let quarter = p.lambda / 4.0;
    let ct = (p.tau / 2.0).cosh();
    let st = (p.tau / 2.0).sinh();
    let b = MoebiusMatrix {
        a: ct * coth(quarter),
        b: -st,
        c: -st,
        d: ct * quarter.tanh(),
    };
    MarkedPair { a, b }
}

/// Trace of the second generator as a function of (lambda, tau):
/// 2 coth(lambda/2) cosh(tau/2).
pub fn trace_twist_relation(lambda: Complex64, tau: Complex64) -> Result<Complex64> {
    if (lambda / 2.0).sinh().norm() <= POLE_TOL {
        return Err(Error::domain(format!("coth pole at lambda = {lambda}")));
    }
    Ok(coth(lambda / 2.0) * (tau / 2.0).cosh() * 2.0)
}

/// Inverts the twist relation on the right half strip
/// { Re tau >= 0, Im tau in (-pi, pi] } for real lambda > 0.
///
/// The strip maps onto the closed right half trB-plane minus 0; real trB in
/// the folded interval (0, 2 coth(lambda/2)] comes back as the purely
/// imaginary preimage with Im tau in [0, pi). Re trB < 0 and trB = 0 have
/// no preimage in the strip and are rejected.
pub fn invert_twist(lambda: f64, tr_b: Complex64) -> Result<Complex64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::domain("invert_twist needs real lambda > 0"));
    }
    if !is_finite(tr_b) || tr_b.norm() <= POLE_TOL {
        return Err(Error::domain("trB = 0 has no twist preimage in the strip"));
    }
    if tr_b.re < 0.0 {
        return Err(Error::domain(
            "Re trB < 0 has no twist preimage in the right half strip",
        ));
    }
    let coth_half = 1.0 / (lambda / 2.0).tanh();
    let w = tr_b / (2.0 * coth_half);
    Ok(w.acosh() * 2.0)
}

/// Symmetric-slice parameter: d with Re d > 0 for slice membership. The
/// values d = 0 and 2 d^2 + 1 = 0 are excluded by the matrix entries.
#[derive(Clone, Copy, Debug)]
pub struct EarleParam {
    d: Complex64,
}

impl EarleParam {
    pub fn new(d: Complex64) -> Result<Self> {
        if !is_finite(d) {
            return Err(Error::invalid("d must be finite"));
        }
        if d.norm() <= POLE_TOL {
            return Err(Error::domain("d = 0 is excluded"));
        }
        if (d * d * 2.0 + 1.0).norm() <= POLE_TOL {
            return Err(Error::domain("2 d^2 + 1 = 0 is excluded"));
        }
        Ok(EarleParam { d })
    }

    pub fn d(&self) -> Complex64 {
        self.d
    }
}

/// Generators of the order-2-symmetric family:
///
/// ```text
/// A_d = [ (d^2+1)/d     d^3/(2d^2+1) ]     B_d = same with negated
///       [ (2d^2+1)/d    d            ]           off-diagonal entries
/// ```
///
/// An elliptic involution conjugates A_d to B_d, so the two traces agree.
pub fn earle_generators(e: &EarleParam) -> MarkedPair {
    let d = e.d;
    let d2 = d * d;
    let t = (d2 + 1.0) / d;
    let u = d2 * d / (d2 * 2.0 + 1.0);
    let v = (d2 * 2.0 + 1.0) / d;
    let a = MoebiusMatrix { a: t, b: u, c: v, d };
    let b = MoebiusMatrix {
        a: t,
        b: -u,
        c: -v,
        d,
    };
    MarkedPair { a, b }
}

/// Trace of the slope-2/1 word A^-2 B at the symmetric-slice point d,
/// by direct matrix product.
pub fn trace_w21(e: &EarleParam) -> Complex64 {
    let pair = earle_generators(e);
    let a_inv = pair.a.inverse();
    a_inv.mul(&a_inv).mul(&pair.b).trace()
}
