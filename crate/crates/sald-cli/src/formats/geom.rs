//! Geometry readers and the OBJ writer.
//!
//! Supported inputs, chosen by extension:
//!
//! * `.obj` — triangle soup; polygon faces are fan-triangulated and any
//!   orientation or connectivity information is ignored.
//! * `.xyz` — one `x y z` point per line.
//! * `.seg2d` — one 2D segment `x0 y0 x1 y1` per line.
//!
//! `#` starts a comment in the text formats; blank lines are skipped.

use std::fs;
use std::io::Write;
use std::path::Path;

use sald::extract::SurfaceMesh;
use sald::geometry::{RawGeometry, Segment2, Triangle3};

use super::FormatError;

/// Reads geometry, dispatching on the file extension.
pub fn read_geometry(path: &Path) -> Result<RawGeometry, FormatError> {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("obj") => read_obj(path),
        Some("xyz") => read_xyz(path),
        Some("seg2d") => read_seg2d(path),
        _ => Err(FormatError::UnsupportedExtension {
            path: path.display().to_string(),
        }),
    }
}

pub fn read_seg2d(path: &Path) -> Result<RawGeometry, FormatError> {
    let text = fs::read_to_string(path)?;
    let mut segments = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let nums = parse_floats(path, lineno + 1, line, 4)?;
        segments.push(Segment2::new([nums[0], nums[1]], [nums[2], nums[3]]));
    }
    Ok(RawGeometry::from_segments(segments)?)
}

pub fn read_xyz(path: &Path) -> Result<RawGeometry, FormatError> {
    let text = fs::read_to_string(path)?;
    let mut points = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let nums = parse_floats(path, lineno + 1, line, 3)?;
        points.push([nums[0], nums[1], nums[2]]);
    }
    Ok(RawGeometry::from_points(points)?)
}

pub fn read_obj(path: &Path) -> Result<RawGeometry, FormatError> {
    Ok(RawGeometry::from_triangles(read_obj_triangles(path)?)?)
}

/// OBJ triangles as a raw list (used when a mesh is evaluated rather
/// than queried as geometry).
pub fn read_obj_triangles(path: &Path) -> Result<Vec<Triangle3>, FormatError> {
    let text = fs::read_to_string(path)?;
    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut triangles = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let rest: Vec<&str> = parts.collect();
                let nums = parse_floats(path, lineno + 1, &rest.join(" "), 3)?;
                vertices.push([nums[0], nums[1], nums[2]]);
            }
            Some("f") => {
                let idx: Result<Vec<usize>, FormatError> = parts
                    .map(|tok| {
                        // `v`, `v/vt`, `v//vn`, `v/vt/vn`; negative
                        // indices count from the end.
                        let first = tok.split('/').next().unwrap_or("");
                        let i: i64 = first.parse().map_err(|_| FormatError::Parse {
                            path: path.display().to_string(),
                            line: lineno + 1,
                            what: format!("bad face index {tok:?}"),
                        })?;
                        let n = vertices.len() as i64;
                        let resolved = if i < 0 { n + i } else { i - 1 };
                        if resolved < 0 || resolved >= n {
                            return Err(FormatError::Parse {
                                path: path.display().to_string(),
                                line: lineno + 1,
                                what: format!("face index {i} out of range"),
                            });
                        }
                        Ok(resolved as usize)
                    })
                    .collect();
                let idx = idx?;
                if idx.len() < 3 {
                    return Err(FormatError::Parse {
                        path: path.display().to_string(),
                        line: lineno + 1,
                        what: "face needs at least 3 vertices".into(),
                    });
                }
                for t in 1..idx.len() - 1 {
                    let (a, b, c) = (vertices[idx[0]], vertices[idx[t]], vertices[idx[t + 1]]);
                    let tri = Triangle3::new(a, b, c);
                    // Degenerate faces are silently dropped; soups from
                    // scans routinely contain them.
                    if tri.area() > 0.0 {
                        triangles.push(tri);
                    }
                }
            }
            _ => {}
        }
    }
    Ok(triangles)
}

pub fn write_obj(path: &Path, mesh: &SurfaceMesh) -> Result<(), FormatError> {
    let mut out = Vec::new();
    for v in &mesh.vertices {
        writeln!(out, "v {} {} {}", v[0], v[1], v[2])?;
    }
    for t in &mesh.triangles {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    fs::write(path, out)?;
    Ok(())
}

fn parse_floats(
    path: &Path,
    line: usize,
    text: &str,
    want: usize,
) -> Result<Vec<f64>, FormatError> {
    let nums: Result<Vec<f64>, _> = text.split_whitespace().map(str::parse::<f64>).collect();
    match nums {
        Ok(nums) if nums.len() >= want => Ok(nums),
        _ => Err(FormatError::Parse {
            path: path.display().to_string(),
            line,
            what: format!("expected {want} numbers, got {text:?}"),
        }),
    }
}
