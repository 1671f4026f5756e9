//! Black-box tests of the `sald` binary: exit codes and artifact flow.

use std::path::Path;
use std::process::Command;

fn sald() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sald"))
}

fn write_circle(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("circle.seg2d");
    let mut body = String::new();
    for i in 0..32 {
        let t0 = std::f64::consts::TAU * i as f64 / 32.0;
        let t1 = std::f64::consts::TAU * (i + 1) as f64 / 32.0;
        body.push_str(&format!(
            "{} {} {} {}\n",
            0.5 * t0.cos(),
            0.5 * t0.sin(),
            0.5 * t1.cos(),
            0.5 * t1.sin()
        ));
    }
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn usage_errors_exit_with_code_1() {
    let out = sald()
        .args(["prepare", "--input", "/nonexistent.seg2d", "--out", "/tmp/x.sald"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    let out = sald().args(["frobnicate"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_exits_cleanly() {
    let out = sald().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["prepare", "train", "reconstruct", "eval", "verify", "figure"] {
        assert!(text.contains(sub), "help misses {sub}");
    }
}

#[test]
fn prepare_is_deterministic_and_large_totals_work() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_circle(dir.path());
    let a = dir.path().join("a.sald");
    let b = dir.path().join("b.sald");
    for out in [&a, &b] {
        let st = sald()
            .args([
                "prepare",
                "--input",
                input.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--total",
                "500000",
                "--seed",
                "7",
            ])
            .status()
            .unwrap();
        assert!(st.success());
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    // Header carries the requested counts: values + grads = total.
    let n_values = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let n_grads = u64::from_le_bytes(bytes[20..28].try_into().unwrap());
    assert_eq!(n_values + n_grads, 500_000);
}

#[test]
fn train_reconstruct_eval_flow() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_circle(dir.path());
    let out_dir = dir.path().join("run");
    let st = sald()
        .args([
            "train",
            "--input",
            input.to_str().unwrap(),
            "--out-dir",
            out_dir.to_str().unwrap(),
            "--epochs",
            "120",
            "--batch-points",
            "128",
            "--seed",
            "1",
        ])
        .status()
        .unwrap();
    assert!(st.success());
    let ckpt = out_dir.join("sald.snet");
    assert!(ckpt.exists() && out_dir.join("sald_history.csv").exists());

    let svg = out_dir.join("zero.svg");
    let csv = out_dir.join("zero.csv");
    let st = sald()
        .args([
            "reconstruct",
            "--checkpoint",
            ckpt.to_str().unwrap(),
            "--res",
            "96",
            "--out",
            svg.to_str().unwrap(),
            "--overlay",
            input.to_str().unwrap(),
            "--csv",
            csv.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(st.success());
    let svg_text = std::fs::read_to_string(&svg).unwrap();
    assert!(svg_text.contains("<svg") && svg_text.contains("poly"));
    assert!(std::fs::read_to_string(&csv).unwrap().lines().count() > 10);
}

#[test]
fn empty_level_set_exits_with_code_2() {
    // A freshly built net is identically zero except the calibrated
    // init; shift the output bias far positive so no zero crossing
    // exists in the box.
    let dir = tempfile::tempdir().unwrap();
    use sald::net::{geometric_init, ImplicitNet};
    let mut net = ImplicitNet::build_decoder(2, 0, 16, 3, 100.0);
    geometric_init(&mut net, 0.25, 1);
    let ckpt = dir.path().join("far.snet");
    sald_cli::formats::checkpoint::write_checkpoint(&ckpt, &net, None).unwrap();
    let out = sald()
        .args([
            "reconstruct",
            "--checkpoint",
            ckpt.to_str().unwrap(),
            "--res",
            "32",
            "--out",
            dir.path().join("x.svg").to_str().unwrap(),
            "--bbox",
            "5,5,6,6",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no zero crossings"));
}

#[test]
fn eval_on_directories_aggregates() {
    let dir = tempfile::tempdir().unwrap();
    let ra = dir.path().join("recon");
    let rb = dir.path().join("reference");
    std::fs::create_dir_all(&ra).unwrap();
    std::fs::create_dir_all(&rb).unwrap();
    for (r, name) in [(0.5, "a.obj"), (0.4, "b.obj")] {
        let grid = sald::extract::grid_from_fn(
            3,
            [-1.0, -1.0, -1.0],
            [1.0, 1.0, 1.0],
            [24, 24, 24],
            |p: &[f64]| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() - r,
        );
        let mesh = sald::extract::marching_cubes(&grid, 0.0);
        sald_cli::formats::geom::write_obj(&ra.join(name), &mesh).unwrap();
        // Reference: slightly offset spheres.
        let grid = sald::extract::grid_from_fn(
            3,
            [-1.0, -1.0, -1.0],
            [1.0, 1.0, 1.0],
            [24, 24, 24],
            |p: &[f64]| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() - (r + 0.05),
        );
        let mesh = sald::extract::marching_cubes(&grid, 0.0);
        sald_cli::formats::geom::write_obj(&rb.join(name), &mesh).unwrap();
    }
    let csv = dir.path().join("metrics.csv");
    let st = sald()
        .args([
            "eval",
            "--recon",
            ra.to_str().unwrap(),
            "--reference",
            rb.to_str().unwrap(),
            "--out",
            csv.to_str().unwrap(),
            "--samples-n",
            "5000",
        ])
        .status()
        .unwrap();
    assert!(st.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    // header + 2 shapes + mean + median
    assert_eq!(lines.len(), 5);
    assert!(lines[3].starts_with("mean,"));
    assert!(lines[4].starts_with("median,"));
    // Offset spheres: symmetric chamfer near 0.05 within 10%.
    let chamfer: f64 = lines[3].split(',').nth(1).unwrap().parse().unwrap();
    assert!((chamfer - 0.05).abs() / 0.05 < 0.10, "chamfer {chamfer}");
}

#[test]
fn verify_subcommand_passes_on_fresh_build() {
    let out = sald()
        .args(["verify", "--pairs", "2000", "--cases", "6"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("PASS") && !text.contains("FAIL"));
    assert!(text.contains("margin"));
}

#[test]
fn figure_fig4_smoke_runs_the_whole_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let st = sald()
        .args([
            "figure",
            "fig4",
            "--out",
            dir.path().to_str().unwrap(),
            "--epochs",
            "200",
        ])
        .status()
        .unwrap();
    assert!(st.success());
    for f in ["ushape_gap.seg2d", "sald.snet", "sald_levelset.svg", "fig4_metrics.csv"] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }
}

#[test]
fn figure_fig3_writes_sweep_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let st = sald()
        .args([
            "figure",
            "fig3-minimal-curve",
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(st.success());
    let csv = std::fs::read_to_string(dir.path().join("fig3_curve_losses.csv")).unwrap();
    assert!(csv.lines().count() == 10);
    assert!(dir.path().join("fig3_curves.svg").exists());
}
