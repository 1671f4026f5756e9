//! Shipped 2D geometry fixtures (also present under `fixtures/`),
//! embedded so the figure presets run from a bare binary.

use std::path::{Path, PathBuf};

use crate::pipeline::PipelineError;

pub const LSHAPE: &str = include_str!("../fixtures/lshape.seg2d");
pub const USHAPE_GAP: &str = include_str!("../fixtures/ushape_gap.seg2d");
pub const CIRCLE: &str = include_str!("../fixtures/circle.seg2d");
pub const SQUARE: &str = include_str!("../fixtures/square.seg2d");
pub const TRIANGLE: &str = include_str!("../fixtures/triangle.seg2d");
pub const STAR: &str = include_str!("../fixtures/star.seg2d");

pub const NAMES: [&str; 6] = [
    "lshape",
    "ushape_gap",
    "circle",
    "square",
    "triangle",
    "star",
];

pub fn text(name: &str) -> Option<&'static str> {
    match name {
        "lshape" => Some(LSHAPE),
        "ushape_gap" => Some(USHAPE_GAP),
        "circle" => Some(CIRCLE),
        "square" => Some(SQUARE),
        "triangle" => Some(TRIANGLE),
        "star" => Some(STAR),
        _ => None,
    }
}

/// Writes the named fixture into `dir` and returns its path.
pub fn write_fixture(dir: &Path, name: &str) -> Result<PathBuf, PipelineError> {
    let body = text(name)
        .ok_or_else(|| PipelineError::Usage(format!("unknown fixture {name:?}")))?;
    let path = dir.join(format!("{name}.seg2d"));
    std::fs::write(&path, body)
        .map_err(|e| PipelineError::Usage(format!("{}: {e}", path.display())))?;
    Ok(path)
}

/// Corner vertices of the L outline.
pub fn lshape_corners() -> Vec<[f64; 2]> {
    let a = 0.5 / 2f64.sqrt();
    vec![
        [-a, -a],
        [a, -a],
        [a, 0.0],
        [0.0, 0.0],
        [0.0, a],
        [-a, a],
    ]
}

/// True endpoints of the removed segment in the gap fixture.
pub fn ushape_gap_endpoints() -> ([f64; 2], [f64; 2]) {
    ([-0.125, 0.35], [0.125, 0.35])
}

/// Longest pairwise vertex distance of a fixture outline.
pub fn diameter_of(geometry: &sald::geometry::RawGeometry) -> f64 {
    let segs = geometry.segments().unwrap_or(&[]);
    let mut pts = Vec::new();
    for s in segs {
        pts.push(s.a);
        pts.push(s.b);
    }
    let mut best: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            best = best.max(sald::linalg::dist(pts[i], pts[j]));
        }
    }
    best
}
