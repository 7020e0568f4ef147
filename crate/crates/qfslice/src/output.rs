//! File emitters: P5 grayscale images of a grid, component reports as JSON
//! and CSV, and the metadata sidecar that makes a render reproducible.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use crate::error::Result;
use crate::raster::{CellState, ComponentReport, PixelGrid};

/// Pixel legend of the grayscale outputs.
pub fn cell_gray(state: CellState) -> u8 {
    match state {
        CellState::DiscreteLikely => 0,
        CellState::Indeterminate => 128,
        CellState::OutOfDomain => 200,
        CellState::Indiscrete => 255,
    }
}

/// Binary PGM (P5, maxval 255), rows top to bottom.
pub fn pgm_bytes(grid: &PixelGrid) -> Vec<u8> {
    let n = grid.resolution();
    let mut out = format!("P5\n{n} {n}\n255\n").into_bytes();
    out.extend(grid.cells().iter().map(|&s| cell_gray(s)));
    out
}

pub fn write_pgm(grid: &PixelGrid, path: &Path) -> Result<()> {
    fs::write(path, pgm_bytes(grid))?;
    Ok(())
}

pub fn write_png(grid: &PixelGrid, path: &Path) -> Result<()> {
    let n = grid.resolution();
    let bytes: Vec<u8> = grid.cells().iter().map(|&s| cell_gray(s)).collect();
    let img = image::GrayImage::from_raw(n, n, bytes).expect("grid size matches buffer");
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    Ok(())
}

pub fn components_json(reports: &[ComponentReport]) -> Value {
    serde_json::to_value(reports).expect("component reports serialize")
}

/// CSV with the columns label,pixels,bbox,centroid_re,centroid_im,standard;
/// bbox is re_min;im_min;re_max;im_max.
pub fn components_csv(reports: &[ComponentReport]) -> String {
    let mut out = String::from("label,pixels,bbox,centroid_re,centroid_im,standard\n");
    for r in reports {
        writeln!(
            out,
            "{},{},{};{};{};{},{},{},{}",
            r.label,
            r.pixels,
            r.bbox.min_re,
            r.bbox.min_im,
            r.bbox.max_re,
            r.bbox.max_im,
            r.centroid_re,
            r.centroid_im,
            r.standard
        )
        .expect("write to string");
    }
    out
}

/// Run metadata: the full spec (enough to reproduce the image), the value
/// legend, and the code version. `inputs` echoes the command-line values
/// the spec was derived from.
pub fn sidecar_json(grid: &PixelGrid, inputs: Value) -> Value {
    json!({
        "tool": "qfslice",
        "version": env!("CARGO_PKG_VERSION"),
        "spec": grid.spec(),
        "inputs": inputs,
        "legend": {
            "discrete_likely": 0,
            "indeterminate": 128,
            "out_of_domain": 200,
            "indiscrete": 255,
        },
    })
}

pub fn write_json(value: &Value, path: &Path) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value).expect("valid json"))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discreteness::OracleBudget;
    use crate::raster::{render, RootPolicy, SliceSpec};
    use num_complex::Complex64;

    #[test]
    fn pgm_header_and_values() {
        let spec = SliceSpec::new(
            2.5,
            Complex64::new(2.5, 0.0),
            6.0,
            16,
            OracleBudget::default(),
            RootPolicy::Plus,
        )
        .unwrap();
        let grid = render(&spec);
        let bytes = pgm_bytes(&grid);
        assert!(bytes.starts_with(b"P5\n16 16\n255\n"));
        assert_eq!(bytes.len(), b"P5\n16 16\n255\n".len() + 256);
        for &b in &bytes[b"P5\n16 16\n255\n".len()..] {
            assert!(matches!(b, 0 | 128 | 200 | 255));
        }
    }

    #[test]
    fn csv_columns() {
        let csv = components_csv(&[]);
        assert_eq!(
            csv.lines().next().unwrap(),
            "label,pixels,bbox,centroid_re,centroid_im,standard"
        );
    }

    #[test]
    fn sidecar_contains_spec_and_version() {
        let spec = SliceSpec::new(
            2.5,
            Complex64::new(2.5, 0.0),
            6.0,
            16,
            OracleBudget::default(),
            RootPolicy::Plus,
        )
        .unwrap();
        let grid = render(&spec);
        let v = sidecar_json(&grid, serde_json::json!({"trA": 2.5}));
        assert_eq!(v["spec"]["resolution"], 16);
        assert_eq!(v["spec"]["budget"]["max_depth"], 40);
        assert!(v["version"].as_str().is_some());
    }
}
