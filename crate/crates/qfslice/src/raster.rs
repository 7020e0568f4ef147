//! Rendering of linear slices: classify a window of the TrB plane at fixed
//! TrA pixel by pixel, label the connected components of the accepted
//! region, and spot-check the twist symmetry.

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::{HashSet, VecDeque};

use crate::discreteness::{
    bq_search, markov_third_trace, OracleBudget, TraceTriple, VerdictTag,
};
use crate::error::{Error, Result};
use crate::moebius::is_finite;
use crate::words::trace_anb;

/// Classification of one pixel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CellState {
    DiscreteLikely,
    Indiscrete,
    Indeterminate,
    OutOfDomain,
}

/// Which Markov root(s) of TrAB to feed the oracle. `Both` rejects if
/// either root rejects and accepts only if both accept.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RootPolicy {
    Plus,
    Minus,
    Both,
}

impl std::str::FromStr for RootPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plus" => Ok(RootPolicy::Plus),
            "minus" => Ok(RootPolicy::Minus),
            "both" => Ok(RootPolicy::Both),
            other => Err(Error::invalid(format!("unknown root policy {other:?}"))),
        }
    }
}

/// A render request: fixed TrA, a square window in the TrB plane, and the
/// oracle budget. The window may cross the imaginary axis; pixels with
/// Re TrB <= 0 are out of the domain of the slice and marked as such.
#[derive(Clone, Debug, Serialize)]
pub struct SliceSpec {
    pub tr_a: f64,
    pub center: Complex64,
    pub width: f64,
    pub resolution: u32,
    pub budget: OracleBudget,
    pub root_policy: RootPolicy,
}

impl SliceSpec {
    pub fn new(
        tr_a: f64,
        center: Complex64,
        width: f64,
        resolution: u32,
        budget: OracleBudget,
        root_policy: RootPolicy,
    ) -> Result<Self> {
        if !tr_a.is_finite() || tr_a < 2.0 {
            return Err(Error::domain("trA must be a real trace >= 2"));
        }
        if !is_finite(center) {
            return Err(Error::invalid("window center must be finite"));
        }
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::invalid("window width must be positive"));
        }
        if !(16..=16384).contains(&resolution) {
            return Err(Error::invalid("resolution must lie in [16, 16384]"));
        }
        budget.validate()?;
        Ok(SliceSpec {
            tr_a,
            center,
            width,
            resolution,
            budget,
            root_policy,
        })
    }

    pub fn pixel_size(&self) -> f64 {
        self.width / self.resolution as f64
    }

    /// TrB at the center of pixel (row, col); row 0 is the top of the
    /// window. The offsets are computed from the integer index 2k+1-n so
    /// that mirrored pixels get exactly opposite imaginary parts.
    pub fn tr_b_at(&self, row: u32, col: u32) -> Complex64 {
        let n = self.resolution as f64;
        let hor = (2 * col + 1) as f64 - n;
        let ver = (2 * row + 1) as f64 - n;
        Complex64::new(
            self.center.re + hor * self.width / (2.0 * n),
            self.center.im - ver * self.width / (2.0 * n),
        )
    }
}

/// A classified raster plus component labels (0 = background; label 1 is
/// reserved for the standard component once detected).
#[derive(Clone, Debug)]
pub struct PixelGrid {
    spec: SliceSpec,
    cells: Vec<CellState>,
    labels: Vec<u32>,
}

impl PixelGrid {
    pub fn spec(&self) -> &SliceSpec {
        &self.spec
    }

    pub fn resolution(&self) -> u32 {
        self.spec.resolution
    }

    fn idx(&self, row: u32, col: u32) -> usize {
        row as usize * self.spec.resolution as usize + col as usize
    }

    pub fn cell(&self, row: u32, col: u32) -> CellState {
        self.cells[self.idx(row, col)]
    }

    pub fn cells(&self) -> &[CellState] {
        &self.cells
    }

    pub fn label(&self, row: u32, col: u32) -> u32 {
        self.labels[self.idx(row, col)]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn tr_b_at(&self, row: u32, col: u32) -> Complex64 {
        self.spec.tr_b_at(row, col)
    }
}

/// Classifies a single TrB value at fixed TrA. Failures of the numeric
/// pipeline (non-finite roots, invalid triples) degrade to Indeterminate.
pub fn classify_point(
    tr_a: f64,
    tr_b: Complex64,
    budget: &OracleBudget,
    policy: RootPolicy,
) -> CellState {
    if !is_finite(tr_b) || tr_b.re <= 0.0 {
        return CellState::OutOfDomain;
    }
    let x = Complex64::new(tr_a, 0.0);
    let (z_plus, z_minus) = markov_third_trace(x, tr_b);
    let verdict = |z: Complex64| -> Option<VerdictTag> {
        let t = TraceTriple::new(x, tr_b, z).ok()?;
        bq_search(&t, budget).ok().map(|v| v.tag)
    };
    let to_state = |tag: Option<VerdictTag>| match tag {
        Some(VerdictTag::DiscreteLikely) => CellState::DiscreteLikely,
        Some(VerdictTag::Indiscrete) => CellState::Indiscrete,
        _ => CellState::Indeterminate,
    };
    match policy {
        RootPolicy::Plus => to_state(verdict(z_plus)),
        RootPolicy::Minus => to_state(verdict(z_minus)),
        RootPolicy::Both => {
            let p = verdict(z_plus);
            if p == Some(VerdictTag::Indiscrete) {
                return CellState::Indiscrete;
            }
            let m = verdict(z_minus);
            if m == Some(VerdictTag::Indiscrete) {
                return CellState::Indiscrete;
            }
            if p == Some(VerdictTag::DiscreteLikely) && m == Some(VerdictTag::DiscreteLikely) {
                CellState::DiscreteLikely
            } else {
                CellState::Indeterminate
            }
        }
    }
}

/// Renders the slice window. Rows are distributed across the worker pool;
/// the output is a pure function of the spec.
pub fn render(spec: &SliceSpec) -> PixelGrid {
    let n = spec.resolution as usize;
    let mut cells = vec![CellState::Indeterminate; n * n];
    cells
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(row, chunk)| {
            for (col, cell) in chunk.iter_mut().enumerate() {
                let tr_b = spec.tr_b_at(row as u32, col as u32);
                *cell = classify_point(spec.tr_a, tr_b, &spec.budget, spec.root_policy);
            }
        });
    PixelGrid {
        spec: spec.clone(),
        labels: vec![0; cells.len()],
        cells,
    }
}

/// Bounding box of pixel centers, in TrB coordinates.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Bounds {
    pub min_re: f64,
    pub min_im: f64,
    pub max_re: f64,
    pub max_im: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ComponentReport {
    pub label: u32,
    pub pixels: u64,
    pub bbox: Bounds,
    pub centroid_re: f64,
    pub centroid_im: f64,
    /// 1 for a disk; anything else flags holes or pinching
    pub euler_characteristic: i64,
    pub standard: bool,
}

/// 4-connected labeling of the accepted cells. The component holding a
/// real-axis pixel (|Im TrB| < pixel size) with Re TrB > 2 is flagged as
/// the standard one and gets label 1; the rest are numbered by decreasing
/// size. Reports come back sorted the same way.
pub fn flood_components(grid: &mut PixelGrid) -> Vec<ComponentReport> {
    let n = grid.spec.resolution;
    let size = n as usize * n as usize;
    let mut provisional = vec![0u32; size];
    let mut members: Vec<Vec<(u32, u32)>> = Vec::new();

    for row in 0..n {
        for col in 0..n {
            let at = grid.idx(row, col);
            if grid.cells[at] != CellState::DiscreteLikely || provisional[at] != 0 {
                continue;
            }
            let id = members.len() as u32 + 1;
            let mut component = Vec::new();
            let mut queue = VecDeque::from([(row, col)]);
            provisional[at] = id;
            while let Some((r, c)) = queue.pop_front() {
                component.push((r, c));
                let mut push = |rr: u32, cc: u32, grid: &PixelGrid| {
                    let i = grid.idx(rr, cc);
                    if grid.cells[i] == CellState::DiscreteLikely && provisional[i] == 0 {
                        provisional[i] = id;
                        queue.push_back((rr, cc));
                    }
                };
                if r > 0 {
                    push(r - 1, c, grid);
                }
                if r + 1 < n {
                    push(r + 1, c, grid);
                }
                if c > 0 {
                    push(r, c - 1, grid);
                }
                if c + 1 < n {
                    push(r, c + 1, grid);
                }
            }
            members.push(component);
        }
    }

    // standard-component anchor: largest component owning a real-axis
    // pixel beyond TrB = 2
    let px = grid.spec.pixel_size();
    let mut standard_at: Option<usize> = None;
    for (i, comp) in members.iter().enumerate() {
        let anchored = comp.iter().any(|&(r, c)| {
            let w = grid.spec.tr_b_at(r, c);
            w.im.abs() < px && w.re > 2.0
        });
        if anchored && standard_at.map_or(true, |s: usize| comp.len() > members[s].len()) {
            standard_at = Some(i);
        }
    }

    let mut order: Vec<usize> = (0..members.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(members[i].len()));
    if let Some(s) = standard_at {
        let pos = order.iter().position(|&i| i == s).expect("present");
        order.remove(pos);
        order.insert(0, s);
    }

    let mut reports = Vec::with_capacity(order.len());
    grid.labels.fill(0);
    for (rank, &i) in order.iter().enumerate() {
        let label = rank as u32 + 1;
        let comp = &members[i];
        let mut sum_re = 0.0;
        let mut sum_im = 0.0;
        let mut bounds = Bounds {
            min_re: f64::INFINITY,
            min_im: f64::INFINITY,
            max_re: f64::NEG_INFINITY,
            max_im: f64::NEG_INFINITY,
        };
        for &(r, c) in comp {
            let at = grid.idx(r, c);
            grid.labels[at] = label;
            let w = grid.spec.tr_b_at(r, c);
            sum_re += w.re;
            sum_im += w.im;
            bounds.min_re = bounds.min_re.min(w.re);
            bounds.min_im = bounds.min_im.min(w.im);
            bounds.max_re = bounds.max_re.max(w.re);
            bounds.max_im = bounds.max_im.max(w.im);
        }
        let count = comp.len() as f64;
        reports.push(ComponentReport {
            label,
            pixels: comp.len() as u64,
            bbox: bounds,
            centroid_re: sum_re / count,
            centroid_im: sum_im / count,
            euler_characteristic: euler_characteristic(comp),
            standard: standard_at == Some(i),
        });
    }
    reports
}

/// V - E + F of the union of closed unit squares of the component.
fn euler_characteristic(pixels: &[(u32, u32)]) -> i64 {
    let mut vertices: HashSet<(u32, u32)> = HashSet::new();
    let mut edges: HashSet<(u32, u32, bool)> = HashSet::new();
    for &(r, c) in pixels {
        for v in [(r, c), (r, c + 1), (r + 1, c), (r + 1, c + 1)] {
            vertices.insert(v);
        }
        edges.insert((r, c, true));
        edges.insert((r + 1, c, true));
        edges.insert((r, c, false));
        edges.insert((r, c + 1, false));
    }
    vertices.len() as i64 - edges.len() as i64 + pixels.len() as i64
}

/// Outcome of re-testing twisted triples from sampled accepted pixels.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TwistCheckReport {
    pub twist_power: i32,
    pub samples_requested: u32,
    pub samples_used: u32,
    pub agreements: u32,
    pub discrepancies: u32,
    pub rate: f64,
}

/// For randomly sampled accepted pixels (Tr B = y, chosen root z), verifies
/// that the twisted marking (A, A^n B) -- trace triple
/// (x, Tr A^n B, Tr A^{n+1} B) by the trace recursion -- is also accepted.
/// Twisting is an automorphism of the slice, so disagreements measure
/// oracle noise, not geometry; they are counted, not thrown.
pub fn dehn_twist_spot_check(
    grid: &PixelGrid,
    samples: u32,
    n: i32,
    seed: u64,
) -> TwistCheckReport {
    let spec = &grid.spec;
    let res = spec.resolution;
    let mut accepted: Vec<(u32, u32)> = Vec::new();
    for row in 0..res {
        for col in 0..res {
            if grid.cell(row, col) == CellState::DiscreteLikely {
                accepted.push((row, col));
            }
        }
    }
    let mut rng = StdRng::seed_from_u64(seed);
    accepted.shuffle(&mut rng);
    accepted.truncate(samples as usize);

    let x = Complex64::new(spec.tr_a, 0.0);
    let mut agreements = 0;
    let mut discrepancies = 0;
    for &(row, col) in &accepted {
        let y = spec.tr_b_at(row, col);
        let (z_plus, z_minus) = markov_third_trace(x, y);
        let z = match spec.root_policy {
            RootPolicy::Minus => z_minus,
            _ => z_plus,
        };
        // negative twists run the recursion from the mirrored root
        // z -> xy - z, which is Tr(A^-1 B)
        let (y0, z0, steps) = if n >= 0 {
            (y, z, n as u32)
        } else {
            (y, x * y - z, (-n) as u32)
        };
        let ty = trace_anb(steps, x, y0, z0);
        let tz = trace_anb(steps + 1, x, y0, z0);
        let twisted = if n >= 0 {
            TraceTriple::new(x, ty, tz)
        } else {
            // mirror back so the triple is (x, Tr A^n B, Tr A^{n+1} B)
            TraceTriple::new(x, ty, x * ty - tz)
        };
        let ok = twisted
            .ok()
            .and_then(|t| bq_search(&t, &spec.budget).ok())
            .map(|v| v.tag == VerdictTag::DiscreteLikely)
            .unwrap_or(false);
        if ok {
            agreements += 1;
        } else {
            discrepancies += 1;
        }
    }
    let used = accepted.len() as u32;
    TwistCheckReport {
        twist_power: n,
        samples_requested: samples,
        samples_used: used,
        agreements,
        discrepancies,
        rate: if used == 0 {
            0.0
        } else {
            discrepancies as f64 / used as f64
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn small_spec(tr_a: f64, center: Complex64, width: f64, res: u32) -> SliceSpec {
        SliceSpec::new(tr_a, center, width, res, OracleBudget::default(), RootPolicy::Plus)
            .unwrap()
    }

    fn synthetic_grid(res: u32, on: &[(u32, u32)]) -> PixelGrid {
        let spec = small_spec(2.5, c(2.5, 0.0), 6.0, res);
        let n = res as usize;
        let mut cells = vec![CellState::Indiscrete; n * n];
        for &(r, col) in on {
            cells[r as usize * n + col as usize] = CellState::DiscreteLikely;
        }
        PixelGrid {
            spec,
            labels: vec![0; n * n],
            cells,
        }
    }

    #[test]
    fn spec_validation() {
        let b = OracleBudget::default();
        assert!(SliceSpec::new(1.5, c(2.0, 0.0), 4.0, 64, b, RootPolicy::Plus).is_err());
        assert!(SliceSpec::new(2.5, c(2.0, 0.0), -1.0, 64, b, RootPolicy::Plus).is_err());
        assert!(SliceSpec::new(2.5, c(2.0, 0.0), 4.0, 8, b, RootPolicy::Plus).is_err());
        assert!(SliceSpec::new(2.0, c(2.0, 0.0), 4.0, 64, b, RootPolicy::Plus).is_ok());
    }

    #[test]
    fn pixel_coordinates_mirror_exactly() {
        let spec = small_spec(2.5, c(3.0, 0.0), 6.0, 64);
        for row in 0..64 {
            for col in 0..64 {
                let w = spec.tr_b_at(row, col);
                let m = spec.tr_b_at(63 - row, col);
                assert_eq!(w.re, m.re);
                assert_eq!(w.im, -m.im);
            }
        }
    }

    #[test]
    fn out_of_domain_marking() {
        let b = OracleBudget::default();
        assert_eq!(
            classify_point(2.5, c(-0.5, 1.0), &b, RootPolicy::Plus),
            CellState::OutOfDomain
        );
        assert_eq!(
            classify_point(2.5, c(0.0, 1.0), &b, RootPolicy::Plus),
            CellState::OutOfDomain
        );
    }

    #[test]
    fn fuchsian_ray_pixel_accepted() {
        let b = OracleBudget::default();
        assert_eq!(
            classify_point(2.5, c(3.0, 0.0), &b, RootPolicy::Plus),
            CellState::DiscreteLikely
        );
        assert_eq!(
            classify_point(2.5, c(1.0, 0.0), &b, RootPolicy::Plus),
            CellState::Indiscrete
        );
    }

    #[test]
    fn render_is_deterministic() {
        let spec = small_spec(2.5, c(2.5, 0.0), 6.0, 32);
        let g1 = render(&spec);
        let g2 = render(&spec);
        assert_eq!(g1.cells, g2.cells);
    }

    #[test]
    fn render_conjugation_symmetry() {
        let spec = small_spec(2.5, c(2.5, 0.0), 6.0, 48);
        let grid = render(&spec);
        for row in 0..48 {
            for col in 0..48 {
                assert_eq!(
                    grid.cell(row, col),
                    grid.cell(47 - row, col),
                    "asymmetry at ({row}, {col})"
                );
            }
        }
    }

    #[test]
    fn both_policy_never_relaxes_plus_rejections() {
        let spec_plus = small_spec(2.5, c(2.5, 0.0), 6.0, 32);
        let mut spec_both = spec_plus.clone();
        spec_both.root_policy = RootPolicy::Both;
        let gp = render(&spec_plus);
        let gb = render(&spec_both);
        for i in 0..gp.cells.len() {
            if gp.cells[i] == CellState::Indiscrete {
                assert_ne!(gb.cells[i], CellState::DiscreteLikely);
            }
            if gb.cells[i] == CellState::DiscreteLikely {
                assert_eq!(gp.cells[i], CellState::DiscreteLikely);
            }
        }
    }

    #[test]
    fn flood_empty_grid() {
        let mut grid = synthetic_grid(16, &[]);
        assert!(flood_components(&mut grid).is_empty());
    }

    #[test]
    fn flood_two_squares() {
        // columns <= 6 keep Re TrB < 2, away from the standard anchor ray
        let mut on = Vec::new();
        for r in 1..4 {
            for c in 1..4 {
                on.push((r, c));
            }
        }
        for r in 8..14 {
            for c in 1..7 {
                on.push((r, c));
            }
        }
        let mut grid = synthetic_grid(16, &on);
        let reports = flood_components(&mut grid);
        assert_eq!(reports.len(), 2);
        assert_eq!(reports[0].pixels, 36);
        assert_eq!(reports[1].pixels, 9);
        assert_eq!(reports[0].euler_characteristic, 1);
        assert!(!reports.iter().any(|r| r.standard));
        // diagonal-only contact does not merge under 4-connectivity
        let mut diag = synthetic_grid(16, &[(1, 1), (2, 2)]);
        assert_eq!(flood_components(&mut diag).len(), 2);
    }

    #[test]
    fn euler_characteristic_detects_holes() {
        let mut ring = Vec::new();
        for r in 2..7 {
            for c in 2..7 {
                if r == 2 || r == 6 || c == 2 || c == 6 {
                    ring.push((r, c));
                }
            }
        }
        let mut grid = synthetic_grid(16, &ring);
        let reports = flood_components(&mut grid);
        assert_eq!(reports.len(), 1);
        assert_eq!(reports[0].euler_characteristic, 0);
    }

    #[test]
    fn standard_component_identified_and_labeled_one() {
        let spec = small_spec(2.5, c(2.5, 0.0), 6.0, 128);
        let mut grid = render(&spec);
        let reports = flood_components(&mut grid);
        assert!(!reports.is_empty());
        let standard: Vec<_> = reports.iter().filter(|r| r.standard).collect();
        assert_eq!(standard.len(), 1);
        assert_eq!(standard[0].label, 1);

        // every real-axis pixel with TrB in (2 + 2 px, right edge) belongs
        // to it
        let px = spec.pixel_size();
        let row = 63; // Im ~ +px/2 < px
        for col in 0..128 {
            let w = spec.tr_b_at(row, col);
            if w.re > 2.0 + 2.0 * px && w.re < 2.5 + 3.0 - px {
                assert_eq!(grid.cell(row, col), CellState::DiscreteLikely, "at {w}");
                assert_eq!(grid.label(row, col), 1, "at {w}");
            }
        }
    }

    #[test]
    fn twist_power_zero_is_consistent() {
        let spec = small_spec(2.5, c(2.5, 0.0), 6.0, 32);
        let grid = render(&spec);
        let rep = dehn_twist_spot_check(&grid, 40, 0, 7);
        assert!(rep.samples_used > 0);
        assert_eq!(rep.discrepancies, 0, "rate = {}", rep.rate);
    }

    #[test]
    fn twist_of_hexagonal_pixel_stays_accepted() {
        let b = OracleBudget::default();
        // (3, 3, 6) twisted once ends at (3, 6, 15)
        let y = trace_anb(1, c(3.0, 0.0), c(3.0, 0.0), c(6.0, 0.0));
        let z = trace_anb(2, c(3.0, 0.0), c(3.0, 0.0), c(6.0, 0.0));
        let t = TraceTriple::new(c(3.0, 0.0), y, z).unwrap();
        let v = bq_search(&t, &b).unwrap();
        assert_eq!(v.tag, VerdictTag::DiscreteLikely);
    }

    #[test]
    fn negative_twist_also_checked() {
        let spec = small_spec(2.5, c(2.5, 0.0), 6.0, 24);
        let grid = render(&spec);
        let rep = dehn_twist_spot_check(&grid, 30, -1, 11);
        assert!(rep.samples_used > 0);
        assert!(rep.rate <= 0.1, "rate = {}", rep.rate);
    }
}
