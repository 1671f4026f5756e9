//! SVG rendering of extracted level curves with the input geometry
//! overlaid, plus small CSV writers. Output is deterministic: no
//! timestamps, float formatting via the shortest round-trip form.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sald::eval::MetricReport;
use sald::extract::Polyline;
use sald::geometry::RawGeometry;
use sald::train::EpochStats;

use super::FormatError;

/// Writes the curves (black) over the input segments (red) on a white
/// canvas. The y axis is flipped so +y points up.
pub fn write_svg(
    path: &Path,
    curves: &Polyline,
    overlay: Option<&RawGeometry>,
    bbox: ([f64; 2], [f64; 2]),
) -> Result<(), FormatError> {
    let (min, max) = bbox;
    let w = max[0] - min[0];
    let h = max[1] - min[1];
    let size = 720.0;
    let scale = size / w.max(h);
    let sx = |x: f64| (x - min[0]) * scale;
    let sy = |y: f64| (max[1] - y) * scale;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.0} {:.0}">"#,
        w * scale,
        h * scale,
        w * scale,
        h * scale
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    if let Some(geom) = overlay {
        if let Some(segments) = geom.segments() {
            for seg in segments {
                let _ = writeln!(
                    s,
                    r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#d33" stroke-width="3" stroke-linecap="round" opacity="0.7"/>"##,
                    sx(seg.a[0]),
                    sy(seg.a[1]),
                    sx(seg.b[0]),
                    sy(seg.b[1])
                );
            }
        }
    }
    for chain in &curves.chains {
        let mut pts = String::new();
        for p in &chain.points {
            let _ = write!(pts, "{},{} ", sx(p[0]), sy(p[1]));
        }
        let tag = if chain.closed { "polygon" } else { "polyline" };
        let _ = writeln!(
            s,
            r#"<{tag} points="{}" fill="none" stroke="black" stroke-width="1.5"/>"#,
            pts.trim_end()
        );
    }
    let _ = writeln!(s, "</svg>");
    fs::write(path, s)?;
    Ok(())
}

/// `x,y` rows for every chain point, chains separated by their index.
pub fn write_polyline_csv(path: &Path, curves: &Polyline) -> Result<(), FormatError> {
    let mut s = String::from("chain,closed,x,y\n");
    for (ci, chain) in curves.chains.iter().enumerate() {
        for p in &chain.points {
            let _ = writeln!(s, "{ci},{},{},{}", chain.closed as u8, p[0], p[1]);
        }
    }
    fs::write(path, s)?;
    Ok(())
}

pub fn write_history_csv(path: &Path, history: &[EpochStats]) -> Result<(), FormatError> {
    let mut s = String::from("epoch,total,value_term,grad_term,reg_term,lr\n");
    for e in history {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            e.epoch, e.total, e.value_term, e.grad_term, e.reg_term, e.lr
        );
    }
    fs::write(path, s)?;
    Ok(())
}

pub const METRIC_CSV_HEADER: &str =
    "name,chamfer_sym,chamfer_a_to_b,chamfer_b_to_a,normal_sym_deg,normal_a_to_b_deg,normal_b_to_a_deg\n";

pub fn metric_csv_row(name: &str, r: &MetricReport) -> String {
    format!(
        "{name},{},{},{},{},{},{}\n",
        r.chamfer_sym,
        r.chamfer_a_to_b,
        r.chamfer_b_to_a,
        r.normal_sym_deg,
        r.normal_a_to_b_deg,
        r.normal_b_to_a_deg
    )
}
