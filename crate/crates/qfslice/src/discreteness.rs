//! Per-point discreteness oracle on trace data.
//!
//! A marked group with parabolic commutator is pinned down by the triple
//! (Tr A, Tr B, Tr AB), which satisfies the Fricke identity
//! x^2 + y^2 + z^2 = xyz. Replacing one entry by (product of the other two)
//! minus itself moves to a neighboring triple; the orbit is a trivalent tree
//! whose vertices carry the traces of the simple closed curves. The search
//! below walks this tree:
//!
//! * a visited trace that is (near-)real inside (-2, 2) is an elliptic
//!   simple element, impossible in a free discrete group -> Indiscrete;
//! * a shallow word V that violates Jorgensen's inequality against the
//!   commutator K, |Tr^2 V - 4| + |Tr[V,K] - 2| < 1, -> Indiscrete;
//! * a branch where all traces have escaped past the growth threshold and
//!   every descent direction strictly grows is pruned as accepting;
//! * anything the depth/node budget cannot resolve -> Indeterminate.
//!
//! The verdict is deliberately three-valued: DiscreteLikely is a bounded
//! search result, not a certificate.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::groups::MarkedPair;
use crate::moebius::{is_finite, MoebiusMatrix};
use crate::words::{evaluate_word, special_word, FareySlope};

/// Tree depth up to which Jorgensen pairs (word, commutator) are tested.
const JORGENSEN_DEPTH: u32 = 3;

/// Relative tolerance on the Fricke identity for admissible triples.
pub const FRICKE_REL_TOL: f64 = 1e-6;

/// (Tr A, Tr B, Tr AB) of a marked pair with parabolic commutator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceTriple {
    pub x: Complex64,
    pub y: Complex64,
    pub z: Complex64,
}

impl TraceTriple {
    /// Validates finiteness and the Fricke identity (relative 1e-6).
    pub fn new(x: Complex64, y: Complex64, z: Complex64) -> Result<Self> {
        if ![x, y, z].iter().all(|&w| is_finite(w)) {
            return Err(Error::invalid("trace triple must be finite"));
        }
        let t = TraceTriple { x, y, z };
        if t.fricke_defect() > FRICKE_REL_TOL {
            return Err(Error::domain(format!(
                "triple ({x}, {y}, {z}) violates the Fricke identity"
            )));
        }
        Ok(t)
    }

    /// |x^2 + y^2 + z^2 - xyz| relative to the term magnitudes.
    pub fn fricke_defect(&self) -> f64 {
        let (x, y, z) = (self.x, self.y, self.z);
        let lhs = x * x + y * y + z * z;
        let rhs = x * y * z;
        let scale = (x.norm_sqr() + y.norm_sqr() + z.norm_sqr() + rhs.norm()).max(1.0);
        (lhs - rhs).norm() / scale
    }
}

/// Which entry of a triple a move replaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Slot {
    X,
    Y,
    Z,
}

impl Slot {
    fn index(self) -> usize {
        match self {
            Slot::X => 0,
            Slot::Y => 1,
            Slot::Z => 2,
        }
    }
}

/// The two solutions z of the Fricke identity at fixed (x, y):
/// z = (xy +- sqrt(x^2 y^2 - 4(x^2 + y^2))) / 2, larger magnitude first.
pub fn markov_third_trace(x: Complex64, y: Complex64) -> (Complex64, Complex64) {
    let s = x * y;
    let disc = s * s - (x * x + y * y) * 4.0;
    let r = disc.sqrt();
    let z1 = (s + r) / 2.0;
    let z2 = (s - r) / 2.0;
    if z1.norm() > z2.norm() || (z1.norm() == z2.norm() && z1.im >= z2.im) {
        (z1, z2)
    } else {
        (z2, z1)
    }
}

/// Replaces one entry by (product of the other two) - entry. Involutive,
/// and preserves the Fricke identity.
pub fn neighbor_move(t: &TraceTriple, slot: Slot) -> TraceTriple {
    let mut tr = [t.x, t.y, t.z];
    let i = slot.index();
    let (j, k) = other_two(i);
    tr[i] = tr[j] * tr[k] - tr[i];
    TraceTriple {
        x: tr[0],
        y: tr[1],
        z: tr[2],
    }
}

fn other_two(i: usize) -> (usize, usize) {
    match i {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

/// True iff trW is eps-close to the real axis with |Re| > 2: the element is
/// purely hyperbolic, the trace-level membership test for the hyperbolic
/// locus of a curve.
pub fn hyperbolic_locus_test(tr_w: Complex64, eps: f64) -> bool {
    crate::moebius::is_purely_hyperbolic(tr_w, eps)
}

/// Search budget. All knobs are CLI-tunable; `max_nodes` caps the total
/// tree nodes visited per call since a depth bound alone leaves the
/// worst-case cost exponential.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct OracleBudget {
    pub max_depth: u32,
    pub grow_threshold: f64,
    pub stop_magnitude: f64,
    pub eps_real: f64,
    pub max_nodes: u64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_depth: 40,
            grow_threshold: 2.001,
            stop_magnitude: 1e8,
            eps_real: 1e-6,
            max_nodes: 20_000,
        }
    }
}

impl OracleBudget {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth < 1 || self.max_depth > 80 {
            return Err(Error::invalid("max_depth must be in 1..=80"));
        }
        if !(self.grow_threshold > 2.0) {
            return Err(Error::invalid("grow_threshold must exceed 2"));
        }
        if !(self.stop_magnitude > self.grow_threshold) {
            return Err(Error::invalid("stop_magnitude must exceed grow_threshold"));
        }
        if !(self.eps_real > 0.0) {
            return Err(Error::invalid("eps_real must be positive"));
        }
        if self.max_nodes == 0 {
            return Err(Error::invalid("max_nodes must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum VerdictTag {
    DiscreteLikely,
    Indiscrete,
    Indeterminate,
}

/// Why a point was rejected: a simple curve whose trace landed eps-inside
/// the real interval [-2, 2], or a Jorgensen violation against the
/// commutator.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind")]
pub enum Witness {
    EllipticTrace {
        slope: FareySlope,
        trace: Complex64,
        depth: u32,
    },
    JorgensenViolation {
        slope: FareySlope,
        value: f64,
        depth: u32,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleVerdict {
    pub tag: VerdictTag,
    pub witness: Option<Witness>,
    pub depth_used: u32,
}

/// A concrete marked pair realizing a Fricke triple:
/// A = [[x, -1], [1, 0]] and B chosen with equal diagonal entries. Any pair
/// with these traces has commutator trace -2 by the trace identity, so this
/// is a faithful trace-level model for word evaluation.
pub fn pair_from_triple(x: Complex64, y: Complex64, z: Complex64) -> Result<MarkedPair> {
    let one = Complex64::new(1.0, 0.0);
    let a = MoebiusMatrix::new(x, -one, one, Complex64::new(0.0, 0.0))?;
    // det B = 1 forces b^2 + (xy/2 - z) b + (1 - y^2/4) = 0
    let beta = x * y / 2.0 - z;
    let gamma = one - y * y / 4.0;
    let root = (beta * beta - gamma * 4.0).sqrt();
    let b1 = (-beta + root) / 2.0;
    let b2 = (-beta - root) / 2.0;
    let bb = if b1.norm() >= b2.norm() { b1 } else { b2 };
    let b = MoebiusMatrix::new(y / 2.0, bb, x * y / 2.0 + bb - z, y / 2.0)?;
    Ok(MarkedPair { a, b })
}

type SlopeVec = (i64, i64);

fn normalize_slope(v: SlopeVec) -> SlopeVec {
    let (p, q) = if v.1 < 0 { (-v.0, -v.1) } else { v };
    if q == 0 {
        (1, 0)
    } else {
        (p, q)
    }
}

/// Farey flip of `slopes[i]` across the edge formed by the other two
/// vertices: the third vertex of the other triangle on that edge.
fn flipped_slope(slopes: &[SlopeVec; 3], i: usize) -> SlopeVec {
    let (j, k) = other_two(i);
    let (u, v, w) = (slopes[j], slopes[k], slopes[i]);
    let sum = (u.0 + v.0, u.1 + v.1);
    if w == sum || w == (-sum.0, -sum.1) {
        normalize_slope((u.0 - v.0, u.1 - v.1))
    } else {
        normalize_slope(sum)
    }
}

enum Branch {
    Accept,
    Unresolved,
    Reject(Witness),
}

struct Search<'a> {
    budget: &'a OracleBudget,
    nodes: u64,
    deepest: u32,
    root: (Complex64, Complex64, Complex64),
    // lazily built matrices (A, B, K) for Jorgensen tests; inner None when
    // the triple does not lift to a usable pair
    pair: Option<Option<(MoebiusMatrix, MoebiusMatrix, MoebiusMatrix)>>,
}

impl Search<'_> {
    fn pair_ctx(&mut self) -> Option<(MoebiusMatrix, MoebiusMatrix, MoebiusMatrix)> {
        if self.pair.is_none() {
            let built = pair_from_triple(self.root.0, self.root.1, self.root.2)
                .ok()
                .map(|p| {
                    let k = p.a.commutator(&p.b);
                    (p.a, p.b, k)
                })
                .filter(|(a, b, k)| a.is_finite() && b.is_finite() && k.is_finite());
            self.pair = Some(built);
        }
        *self.pair.as_ref().expect("just set")
    }

    /// Runs the rejection and cusp checks on one trace. `None` means the
    /// trace raised no flag.
    fn check_trace(
        &mut self,
        w: Complex64,
        slope: SlopeVec,
        depth: u32,
        pinned: bool,
    ) -> Option<Branch> {
        if !is_finite(w) {
            return Some(Branch::Unresolved);
        }
        let eps = self.budget.eps_real;
        if !pinned && ((w.re - 2.0).abs() <= eps || (w.re + 2.0).abs() <= eps) && w.im.abs() <= eps
        {
            // near-parabolic: cusps sit on the boundary, not inside or
            // outside, so the point is unresolvable at this tolerance
            return Some(Branch::Unresolved);
        }
        let near_real = w.im.abs() <= eps;
        if near_real && (w.re.abs() < 2.0 - eps || w.norm() < 2.0 * (1.0 - eps)) {
            return Some(Branch::Reject(Witness::EllipticTrace {
                slope: slope_of(slope),
                trace: w,
                depth,
            }));
        }
        if depth <= JORGENSEN_DEPTH && !pinned {
            if let Some(wit) = self.jorgensen(slope, depth) {
                return Some(Branch::Reject(wit));
            }
        }
        None
    }

    fn jorgensen(&mut self, slope: SlopeVec, depth: u32) -> Option<Witness> {
        let (a, b, k) = self.pair_ctx()?;
        let slope = slope_of(slope);
        let word = special_word(slope).ok()?;
        let v = evaluate_word(&word, &a, &b);
        let tv = v.trace();
        let comm = v.mul(&k).mul(&v.inverse()).mul(&k.inverse());
        let two = Complex64::new(2.0, 0.0);
        let val = (tv * tv - two * two).norm() + (comm.trace() - two).norm();
        if val.is_finite() && val < 1.0 - self.budget.eps_real {
            Some(Witness::JorgensenViolation { slope, value: val, depth })
        } else {
            None
        }
    }

    fn explore(
        &mut self,
        tr: [Complex64; 3],
        slopes: [SlopeVec; 3],
        pinned: [bool; 3],
        depth: u32,
        came_from: Option<usize>,
    ) -> Branch {
        self.deepest = self.deepest.max(depth);
        let grow = self.budget.grow_threshold;
        let all_escaped = (0..3).all(|i| pinned[i] || tr[i].norm() > grow);

        let mut descent: [(usize, Complex64, SlopeVec); 3] = [(0, tr[0], slopes[0]); 3];
        let mut n_descent = 0;
        for i in 0..3 {
            if Some(i) == came_from {
                continue;
            }
            let (j, k) = other_two(i);
            let w = tr[j] * tr[k] - tr[i];
            descent[n_descent] = (i, w, flipped_slope(&slopes, i));
            n_descent += 1;
        }
        let descent = &descent[..n_descent];

        if all_escaped {
            if tr.iter().any(|t| t.norm() >= self.budget.stop_magnitude) {
                return Branch::Accept;
            }
            if descent.iter().all(|&(i, w, _)| w.norm() > tr[i].norm()) {
                return Branch::Accept;
            }
        }
        if depth >= self.budget.max_depth {
            return Branch::Unresolved;
        }

        let mut unresolved = false;
        for &(i, w, sl) in descent {
            if self.nodes >= self.budget.max_nodes {
                unresolved = true;
                break;
            }
            self.nodes += 1;
            match self.check_trace(w, sl, depth + 1, false) {
                Some(Branch::Reject(wit)) => return Branch::Reject(wit),
                Some(_) => {
                    unresolved = true;
                    continue;
                }
                None => {}
            }
            let mut child_tr = tr;
            child_tr[i] = w;
            let mut child_slopes = slopes;
            child_slopes[i] = sl;
            let mut child_pinned = pinned;
            child_pinned[i] = false;
            match self.explore(child_tr, child_slopes, child_pinned, depth + 1, Some(i)) {
                Branch::Reject(wit) => return Branch::Reject(wit),
                Branch::Unresolved => unresolved = true,
                Branch::Accept => {}
            }
        }
        if unresolved {
            Branch::Unresolved
        } else {
            Branch::Accept
        }
    }
}

fn slope_of(v: SlopeVec) -> FareySlope {
    FareySlope::new(v.0, v.1).unwrap_or_else(|_| FareySlope::infinity())
}

/// Depth-first search of the triple tree rooted at `t`.
///
/// The root x entry is the trace of the fixed slice generator; when it sits
/// within eps of +-2 (the parabolic boundary case) that slot is exempt from
/// the cusp check and counts as escaped for pruning until a move replaces
/// it. A root y or z entry near +-2, and any trace reaching +-2 during the
/// walk, marks the branch Indeterminate instead.
pub fn bq_search(t: &TraceTriple, budget: &OracleBudget) -> Result<OracleVerdict> {
    budget.validate()?;
    let eps = budget.eps_real;
    let x_pinned =
        t.x.im.abs() <= eps && ((t.x.re - 2.0).abs() <= eps || (t.x.re + 2.0).abs() <= eps);
    let mut search = Search {
        budget,
        nodes: 1,
        deepest: 0,
        root: (t.x, t.y, t.z),
        pair: None,
    };
    let tr = [t.x, t.y, t.z];
    // slot slopes of the root marking: A, B and AB carry 1/0, 0/1 and -1/1
    let slopes: [SlopeVec; 3] = [(1, 0), (0, 1), (-1, 1)];
    let pinned = [x_pinned, false, false];

    let mut unresolved = false;
    for i in 0..3 {
        match search.check_trace(tr[i], slopes[i], 0, pinned[i]) {
            Some(Branch::Reject(wit)) => {
                return Ok(OracleVerdict {
                    tag: VerdictTag::Indiscrete,
                    witness: Some(wit),
                    depth_used: 0,
                })
            }
            Some(_) => unresolved = true,
            None => {}
        }
    }

    let branch = search.explore(tr, slopes, pinned, 0, None);
    let verdict = match branch {
        Branch::Reject(wit) => OracleVerdict {
            tag: VerdictTag::Indiscrete,
            witness: Some(wit),
            depth_used: search.deepest,
        },
        Branch::Unresolved => OracleVerdict {
            tag: VerdictTag::Indeterminate,
            witness: None,
            depth_used: search.deepest,
        },
        Branch::Accept => OracleVerdict {
            tag: if unresolved {
                VerdictTag::Indeterminate
            } else {
                VerdictTag::DiscreteLikely
            },
            witness: None,
            depth_used: search.deepest,
        },
    };
    Ok(verdict)
}
