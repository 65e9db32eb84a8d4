//! PPM rendering of label snapshots.
//!
//! Each phase gets a fixed palette color; its opacity at a pixel is the
//! indicator smoothed by a Gaussian at `tau_render = dx`, composited over a
//! white background. Binary P6 output keeps the artifact dependency-free
//! and byte-reproducible. 2D fields render to one image; 3D fields render
//! their three axis-aligned mid-slices.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use fencelab::field::{IndicatorField, ScalarField};
use fencelab::fld;
use fencelab::grid::GridSpec;
use fencelab::spectral::gaussian_convolve_indicator;

/// Distinct saturated colors, one per phase, cycled when exhausted.
pub const PALETTE: [[u8; 3]; 10] = [
    [230, 25, 75],
    [60, 130, 200],
    [60, 180, 75],
    [255, 200, 0],
    [145, 30, 180],
    [245, 130, 48],
    [70, 240, 240],
    [240, 50, 230],
    [140, 190, 20],
    [128, 64, 0],
];

const BACKGROUND: [f64; 3] = [255.0, 255.0, 255.0];

fn write_ppm(path: &Path, width: usize, height: usize, rgb: &[u8]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "P6\n{width} {height}\n255\n")?;
    w.write_all(rgb)?;
    w.flush()?;
    Ok(())
}

/// Smoothed per-phase opacities for a label field. The smoothing time is a
/// quarter cell: at `dx` the level sets of curved regions shift inward by a
/// visible fraction of a cell (one mean-curvature step), which breaks the
/// pixel-count fidelity of the rendering.
fn phase_opacities(spec: GridSpec, labels: &[u8], n: usize) -> Result<Vec<ScalarField>> {
    let tau_render = 0.25 * spec.dx();
    (1..=n)
        .map(|phase| {
            let indicator = IndicatorField::from_fn(spec, |idx| labels[idx] == phase as u8);
            Ok(gaussian_convolve_indicator(&indicator, tau_render)?)
        })
        .collect()
}

/// Composites one 2D slice. `sample` maps (row, col) to a cell index.
fn composite_slice(
    width: usize,
    height: usize,
    opacities: &[ScalarField],
    sample: impl Fn(usize, usize) -> usize,
) -> Vec<u8> {
    let mut rgb = Vec::with_capacity(width * height * 3);
    for row in 0..height {
        for col in 0..width {
            let idx = sample(row, col);
            let mut color = [0.0f64; 3];
            let mut covered = 0.0f64;
            for (phase, field) in opacities.iter().enumerate() {
                let s = field.values()[idx].clamp(0.0, 1.0);
                let c = PALETTE[phase % PALETTE.len()];
                for ch in 0..3 {
                    color[ch] += s * c[ch] as f64;
                }
                covered += s;
            }
            let bg = (1.0 - covered).max(0.0);
            for ch in 0..3 {
                rgb.push((color[ch] + bg * BACKGROUND[ch]).clamp(0.0, 255.0).round() as u8);
            }
        }
    }
    rgb
}

/// Renders one labels FLD file. 2D produces `<stem>.ppm`; 3D produces
/// `<stem>-x.ppm`, `<stem>-y.ppm`, `<stem>-z.ppm` mid-slices. Returns the
/// written paths.
pub fn render_labels_file(input: &Path, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let (spec, labels) = fld::read_u8(input)?;
    let n = labels.iter().copied().max().unwrap_or(0) as usize;
    let stem = input
        .file_stem()
        .and_then(|s| s.to_str())
        .context("input file has no usable name")?;
    let opacities = phase_opacities(spec, &labels, n)?;
    let size = spec.n_axis();

    let mut written = Vec::new();
    if spec.dim() == 2 {
        // Row 0 is the top of the image: y descends, x runs rightward.
        let rgb = composite_slice(size, size, &opacities, |row, col| {
            spec.linear(col, size - 1 - row, 0)
        });
        let path = out_dir.join(format!("{stem}.ppm"));
        write_ppm(&path, size, size, &rgb)?;
        written.push(path);
    } else {
        let mid = size / 2;
        let slices: [(&str, Box<dyn Fn(usize, usize) -> usize>); 3] = [
            ("x", Box::new(move |row, col| spec.linear(mid, col, size - 1 - row))),
            ("y", Box::new(move |row, col| spec.linear(col, mid, size - 1 - row))),
            ("z", Box::new(move |row, col| spec.linear(col, size - 1 - row, mid))),
        ];
        for (axis, sample) in slices {
            let rgb = composite_slice(size, size, &opacities, sample);
            let path = out_dir.join(format!("{stem}-{axis}.ppm"));
            write_ppm(&path, size, size, &rgb)?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Renders a list of label files into an output directory.
pub fn render_files(inputs: &[PathBuf], out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for input in inputs {
        written.extend(render_labels_file(input, out_dir)?);
    }
    Ok(written)
}
