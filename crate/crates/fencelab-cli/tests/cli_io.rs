//! File-format and reproducibility contracts of the CLI layer: exact trace
//! schema, metrics keys, byte-identical reruns, and the PPM renderings.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use fencelab::field::{IndicatorField, Partition};
use fencelab::fld;
use fencelab::grid::GridSpec;
use fencelab::shapes::{rasterize, ShapeSpec};
use fencelab::solver::Method;

use fencelab_cli::config::{resolve, Overrides};
use fencelab_cli::render::{render_labels_file, PALETTE};
use fencelab_cli::run;

fn small_run_overrides(out: &Path) -> Overrides {
    Overrides {
        grid: Some("64".into()),
        shape: Some("flower".into()),
        method: Some("two".into()),
        c: Some("0.5,0.5".into()),
        seed: Some(9),
        out: Some(out.to_path_buf()),
        ..Default::default()
    }
}

#[test]
fn run_produces_trace_metrics_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = resolve(small_run_overrides(dir.path())).unwrap();
    let result = run::execute(&cfg).unwrap();

    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(
        lines.next().unwrap(),
        "iteration,beta,e_tilde,e_hat,changed_cells,adm_runs"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), result.trace.len());
    for (i, row) in rows.iter().enumerate() {
        assert!(row.starts_with(&format!("{i},")), "row {i}: {row}");
    }

    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("metrics.json")).unwrap())
            .unwrap();
    let object = metrics.as_object().unwrap();
    for key in [
        "method",
        "grid",
        "seed",
        "iterations",
        "stop_reason",
        "final_e_tilde",
        "final_e_hat",
        "iso_ratio",
        "volume_cells",
        "wall_seconds",
    ] {
        assert!(object.contains_key(key), "missing key {key}");
    }
    assert_eq!(object.len(), 10);
    assert_eq!(metrics["method"], "two");
    assert_eq!(metrics["grid"], "64x64");

    // Default cadence: snapshots at 0, 5, 10 and the final iteration.
    for k in [0usize, 5, 10, result.iterations()] {
        if k <= result.iterations() {
            let path = dir.path().join(format!("labels_{k:06}.fld"));
            assert!(path.exists(), "missing snapshot {}", path.display());
        }
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let cfg_a = resolve(small_run_overrides(dir_a.path())).unwrap();
    let cfg_b = resolve(small_run_overrides(dir_b.path())).unwrap();
    let res_a = run::execute(&cfg_a).unwrap();
    let res_b = run::execute(&cfg_b).unwrap();
    assert_eq!(res_a.iterations(), res_b.iterations());

    let trace_a = std::fs::read(dir_a.path().join("trace.csv")).unwrap();
    let trace_b = std::fs::read(dir_b.path().join("trace.csv")).unwrap();
    assert_eq!(trace_a, trace_b);

    for k in [0usize, res_a.iterations()] {
        let name = format!("labels_{k:06}.fld");
        let a = std::fs::read(dir_a.path().join(&name)).unwrap();
        let b = std::fs::read(dir_b.path().join(&name)).unwrap();
        assert_eq!(a, b, "snapshot {name} differs");
    }

    // Metrics agree on everything except the wall time.
    let mut m_a: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir_a.path().join("metrics.json")).unwrap())
            .unwrap();
    let mut m_b: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir_b.path().join("metrics.json")).unwrap())
            .unwrap();
    m_a.as_object_mut().unwrap().remove("wall_seconds");
    m_b.as_object_mut().unwrap().remove("wall_seconds");
    assert_eq!(m_a, m_b);
}

#[test]
fn missing_output_directory_is_reported_with_path() {
    let missing = PathBuf::from("/nonexistent/fencelab-out");
    let cfg = resolve(small_run_overrides(&missing)).unwrap();
    let err = run::execute(&cfg).unwrap_err();
    assert!(
        err.to_string().contains("/nonexistent/fencelab-out"),
        "error does not name the path: {err}"
    );
}

#[test]
fn render_of_empty_labels_is_uniform_background() {
    let dir = tempfile::tempdir().unwrap();
    let spec = GridSpec::new(2, 32).unwrap();
    let labels = vec![0u8; spec.cells()];
    let input = dir.path().join("labels_empty.fld");
    fld::write_u8(&input, spec, &labels).unwrap();
    let written = render_labels_file(&input, dir.path()).unwrap();
    assert_eq!(written.len(), 1);
    let ppm = std::fs::read(&written[0]).unwrap();
    let header_end = ppm.windows(4).position(|w| w == b"255\n").unwrap() + 4;
    assert!(ppm[header_end..].iter().all(|&b| b == 255));
}

/// Disc bisection labels render to two colored half discs whose pixel
/// counts track the phase cell counts.
#[test]
fn render_pixel_counts_track_phase_sizes() {
    let dir = tempfile::tempdir().unwrap();
    let spec = GridSpec::new(2, 256).unwrap();
    let disc = rasterize(&ShapeSpec::disc(PI / 2.0), spec).unwrap();
    let labels: Vec<u8> = (0..spec.cells())
        .map(|idx| {
            if !disc.get(idx) {
                0
            } else if spec.cell_center(idx)[0] < 0.0 {
                1
            } else {
                2
            }
        })
        .collect();
    let partition = Partition::from_labels(spec, &labels, 2).unwrap();
    let input = dir.path().join("labels_disc.fld");
    fld::write_u8(&input, spec, &labels).unwrap();
    let written = render_labels_file(&input, dir.path()).unwrap();
    let ppm = std::fs::read(&written[0]).unwrap();
    let header_end = ppm.windows(4).position(|w| w == b"255\n").unwrap() + 4;
    let pixels = &ppm[header_end..];

    // Classify pixels by nearest of {palette colors, white}.
    let mut counts = [0usize; 2];
    for px in pixels.chunks_exact(3) {
        let dist = |c: [u8; 3]| -> i64 {
            (0..3)
                .map(|i| (px[i] as i64 - c[i] as i64).pow(2))
                .sum::<i64>()
        };
        let d_white = dist([255, 255, 255]);
        let d0 = dist(PALETTE[0]);
        let d1 = dist(PALETTE[1]);
        if d0 < d_white && d0 <= d1 {
            counts[0] += 1;
        } else if d1 < d_white && d1 < d0 {
            counts[1] += 1;
        }
    }
    let cells = partition.counts();
    for i in 0..2 {
        let rel = (counts[i] as f64 - cells[i] as f64).abs() / cells[i] as f64;
        assert!(
            rel <= 0.02,
            "phase {i}: {} pixels vs {} cells (rel {rel:.4})",
            counts[i],
            cells[i]
        );
    }
}

/// A 3D ball snapshot renders to three mid-slice images, each showing a
/// disc of roughly the right pixel area.
#[test]
fn render_ball_mid_slices() {
    let dir = tempfile::tempdir().unwrap();
    let spec = GridSpec::new(3, 32).unwrap();
    let radius = 1.8;
    let ball = rasterize(&ShapeSpec::Ball { radius }, spec).unwrap();
    let labels: Vec<u8> = ball.values().to_vec();
    let input = dir.path().join("labels_ball.fld");
    fld::write_u8(&input, spec, &labels).unwrap();
    let written = render_labels_file(&input, dir.path()).unwrap();
    assert_eq!(written.len(), 3);
    // Cells of the ball in one mid-slice plane.
    let mid = spec.n_axis() / 2;
    let expected_pixels = (0..spec.cells())
        .filter(|&idx| ball.get(idx) && spec.coords(idx)[2] == mid)
        .count() as f64;
    for path in &written {
        let ppm = std::fs::read(path).unwrap();
        let header_end = ppm.windows(4).position(|w| w == b"255\n").unwrap() + 4;
        let colored = ppm[header_end..]
            .chunks_exact(3)
            .filter(|px| {
                let d_white: i64 = (0..3).map(|i| (px[i] as i64 - 255).pow(2)).sum();
                let d0: i64 = (0..3)
                    .map(|i| (px[i] as i64 - PALETTE[0][i] as i64).pow(2))
                    .sum();
                d0 < d_white
            })
            .count();
        let rel = (colored as f64 - expected_pixels).abs() / expected_pixels;
        assert!(
            rel <= 0.15,
            "{}: {colored} colored pixels vs expected {expected_pixels:.0}",
            path.display()
        );
    }
}

#[test]
fn bench_single_entry_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let overrides = Overrides {
        grid: Some("32".into()),
        shape: Some("disc".into()),
        seed: Some(4),
        out: Some(dir.path().to_path_buf()),
        ..Default::default()
    };
    let cfg = resolve(overrides).unwrap();
    let rows = fencelab_cli::bench::run_matrix(&cfg, &[Method::Two], &[2]).unwrap();
    assert_eq!(rows.len(), 1);
    let report = dir.path().join("bench.csv");
    fencelab_cli::bench::write_report(&report, &rows).unwrap();
    let text = std::fs::read_to_string(&report).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "method,n_partitions,iterations,wall_seconds,final_e_tilde,iso_ratio"
    );
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("two,2,"));
}

/// More partitions mean more interface: the final objective grows strictly
/// with the phase count.
#[test]
fn bench_energy_increases_with_partitions() {
    let dir = tempfile::tempdir().unwrap();
    let overrides = Overrides {
        grid: Some("64".into()),
        shape: Some("flower".into()),
        seed: Some(1),
        out: Some(dir.path().to_path_buf()),
        ..Default::default()
    };
    let cfg = resolve(overrides).unwrap();
    let rows = fencelab_cli::bench::run_matrix(&cfg, &[Method::Two], &[2, 6, 9]).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(
        rows[0].final_e_tilde < rows[1].final_e_tilde
            && rows[1].final_e_tilde < rows[2].final_e_tilde,
        "energies not increasing: {:.4} {:.4} {:.4}",
        rows[0].final_e_tilde,
        rows[1].final_e_tilde,
        rows[2].final_e_tilde
    );
}

/// Corrupt FLD input surfaces as an error, not a panic.
#[test]
fn render_rejects_malformed_fld() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("bad.fld");
    std::fs::write(&input, b"garbage\n").unwrap();
    assert!(render_labels_file(&input, dir.path()).is_err());
}

/// Config-file keys are honored and flags win over them.
#[test]
fn config_file_merging() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(
        &path,
        serde_json::json!({
            "grid": "64",
            "method": "two",
            "seed": 5,
            "lambda": 3.5,
            "out": dir.path().to_str().unwrap(),
        })
        .to_string(),
    )
    .unwrap();
    let file_layer = Overrides::from_json_file(&path).unwrap();
    let flags = Overrides {
        seed: Some(7), // flag beats file
        ..Default::default()
    };
    let cfg = resolve(flags.merged_over(file_layer)).unwrap();
    assert_eq!(cfg.grid.n_axis(), 64);
    assert_eq!(cfg.solver.method, Method::Two);
    assert_eq!(cfg.solver.seed, 7);
    assert_eq!(cfg.solver.lambda, 3.5);

    // Unknown keys are rejected.
    std::fs::write(&path, r#"{"grdi": "64"}"#).unwrap();
    assert!(Overrides::from_json_file(&path).is_err());
}

/// The labels snapshot of a run reconstructs a valid partition.
#[test]
fn snapshots_reload_as_partitions() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = resolve(small_run_overrides(dir.path())).unwrap();
    let result = run::execute(&cfg).unwrap();
    let path = dir.path().join(format!("labels_{:06}.fld", result.iterations()));
    let (spec, labels) = fld::read_u8(&path).unwrap();
    let partition = Partition::from_labels(spec, &labels, 2).unwrap();
    assert!(partition.same_cells(&result.partition));
    assert_eq!(
        IndicatorField::from_values(spec, labels.iter().map(|&l| (l > 0) as u8).collect())
            .unwrap()
            .count(),
        result.region.count()
    );
}
