//! Preset windows for the standard slice views.
//!
//! The parabolic view fixes TrA = 2 over the square of width 4 centered at
//! TrB = 2. The other views center on the real axis at the tau = 0 point
//! TrB = 2 coth(c/2) = 2 trA / sqrt(trA^2 - 4), framing the standard
//! component, and the nested widths at TrA = 8 and 100 zoom out by the
//! slice's own scaling ratio.

use num_complex::Complex64;

use crate::discreteness::OracleBudget;
use crate::error::{Error, Result};
use crate::raster::{RootPolicy, SliceSpec};

#[derive(Clone, Copy, Debug)]
pub struct FigurePreset {
    pub name: &'static str,
    pub tr_a: f64,
    pub center_re: f64,
    pub width: f64,
    pub resolution: u32,
}

impl FigurePreset {
    pub fn spec(&self, budget: OracleBudget, resolution: Option<u32>) -> Result<SliceSpec> {
        SliceSpec::new(
            self.tr_a,
            Complex64::new(self.center_re, 0.0),
            self.width,
            resolution.unwrap_or(self.resolution),
            budget,
            RootPolicy::Plus,
        )
    }
}

/// tau = 0 sits at TrB = 2 coth(c/2) on the real axis.
fn fold_point(tr_a: f64) -> f64 {
    2.0 * tr_a / (tr_a * tr_a - 4.0).sqrt()
}

pub fn preset_group(which: &str) -> Result<Vec<FigurePreset>> {
    let t8 = fold_point(8.0);
    let t100 = fold_point(100.0);
    let group: Vec<FigurePreset> = match which {
        "maskit" => vec![FigurePreset {
            name: "maskit",
            tr_a: 2.0,
            center_re: 2.0,
            width: 4.0,
            resolution: 512,
        }],
        "trace2.5" => vec![FigurePreset {
            name: "trace2.5",
            tr_a: 2.5,
            center_re: fold_point(2.5),
            width: 6.0,
            resolution: 512,
        }],
        "trace8" => [16.0, 32.0, 128.0]
            .iter()
            .map(|&w| FigurePreset {
                name: "trace8",
                tr_a: 8.0,
                center_re: t8,
                width: w,
                resolution: 512,
            })
            .collect(),
        "trace100" => [128.0, 2560.0, 12800.0]
            .iter()
            .map(|&w| FigurePreset {
                name: "trace100",
                tr_a: 100.0,
                center_re: t100,
                width: w,
                resolution: 512,
            })
            .collect(),
        "all" => {
            let mut all = preset_group("maskit")?;
            all.extend(preset_group("trace2.5")?);
            all.extend(preset_group("trace8")?);
            all.extend(preset_group("trace100")?);
            all
        }
        other => {
            return Err(Error::invalid(format!(
                "unknown figure group {other:?} (expected maskit, trace2.5, trace8, trace100 or all)"
            )))
        }
    };
    Ok(group)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maskit_window() {
        let g = preset_group("maskit").unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].tr_a, 2.0);
        assert_eq!(g[0].center_re, 2.0);
        assert_eq!(g[0].width, 4.0);
        assert_eq!(g[0].resolution, 512);
    }

    #[test]
    fn zoom_groups() {
        assert_eq!(preset_group("trace8").unwrap().len(), 3);
        assert_eq!(preset_group("trace100").unwrap().len(), 3);
        assert_eq!(preset_group("all").unwrap().len(), 8);
        assert!(preset_group("nope").is_err());
    }

    #[test]
    fn fold_point_at_2p5() {
        // cosh(c/2) = 5/4, sinh(c/2) = 3/4, so 2 coth(c/2) = 10/3
        assert!((fold_point(2.5) - 10.0 / 3.0).abs() < 1e-12);
    }
}
