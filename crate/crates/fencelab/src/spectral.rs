//! Periodic Gaussian convolution computed spectrally.
//!
//! The convolution `G_tau * u` is defined as the exact periodic heat
//! semigroup: forward FFT along each axis, multiplication by the Fourier
//! multiplier `exp(-tau * |xi|^2)` on the integer frequency grid, inverse
//! FFT. Because the domain has period `2*pi`, the frequencies are integers
//! `-n/2 .. n/2 - 1` per axis, the multiplier at frequency zero is exactly 1
//! (mass conservation) and the semigroup property `G_{t} G_{s} = G_{t+s}`
//! holds to rounding error.
//!
//! Outputs are deterministic for a fixed input on a fixed build: the
//! internal parallelism only splits work into independent lines with
//! identical sequential arithmetic, so thread count and scheduling cannot
//! change a single bit of the result. Solver trajectories branch on
//! thresholds of these fields, which is why this contract matters.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::field::{IndicatorField, ScalarField};
use crate::grid::GridSpec;

/// Relative size of the post-convolution roundoff clamp: output values in
/// `(-CLAMP_REL * max|u|, 0)` are snapped to zero so that nonnegative inputs
/// stay nonnegative and later square roots cannot produce NaN.
pub const CLAMP_REL: f64 = 1e-10;

/// Per-frequency heat multiplier `exp(-tau * |xi|^2)` for one grid and time.
#[derive(Debug, Clone)]
pub struct HeatMultiplier {
    spec: GridSpec,
    tau: f64,
    values: Arc<Vec<f64>>,
}

impl HeatMultiplier {
    pub fn new(spec: GridSpec, tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::NonPositiveTau(tau));
        }
        Ok(Self {
            spec,
            tau,
            values: multiplier_table(spec, tau),
        })
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Multiplier values laid out in the same canonical order as the fields,
    /// with FFT bin `j` per axis carrying frequency `j` for `j < n/2` and
    /// `j - n` otherwise.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Signed integer frequency of FFT bin `j` on an axis with `n` bins.
pub fn bin_frequency(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

fn multiplier_table(spec: GridSpec, tau: f64) -> Arc<Vec<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize, u64), Arc<Vec<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (spec.dim(), spec.n_axis(), tau.to_bits());
    if let Some(hit) = cache.lock().unwrap().get(&key) {
        return Arc::clone(hit);
    }

    let n = spec.n_axis();
    let axis: Vec<f64> = (0..n)
        .map(|j| {
            let f = bin_frequency(j, n) as f64;
            (-tau * f * f).exp()
        })
        .collect();
    let [nx, ny, nz] = spec.dims();
    let mut values = vec![0.0f64; spec.cells()];
    for x in 0..nx {
        for y in 0..ny {
            let base = (x * ny + y) * nz;
            let axy = axis[x] * axis[y];
            if nz == 1 {
                values[base] = axy;
            } else {
                for z in 0..nz {
                    values[base + z] = axy * axis[z];
                }
            }
        }
    }
    let table = Arc::new(values);
    cache
        .lock()
        .unwrap()
        .insert(key, Arc::clone(&table));
    table
}

fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    Arc::clone(guard.entry((len, inverse)).or_insert_with(|| {
        let mut planner = FftPlanner::new();
        if inverse {
            planner.plan_fft_inverse(len)
        } else {
            planner.plan_fft_forward(len)
        }
    }))
}

/// Lines per parallel task: coarse chunks keep the scheduling overhead far
/// below the arithmetic on small grids.
fn lines_per_task(lines: usize) -> usize {
    let tasks = 4 * rayon::current_num_threads();
    (lines / tasks).max(8)
}

/// Runs a batch of independent length-`len` transforms over contiguous
/// chunks of `buf` in parallel.
fn fft_lines(buf: &mut [Complex64], len: usize, fft: &Arc<dyn Fft<f64>>) {
    debug_assert_eq!(buf.len() % len, 0);
    let scratch_len = fft.get_inplace_scratch_len();
    let block = lines_per_task(buf.len() / len) * len;
    buf.par_chunks_mut(block).for_each_init(
        || vec![Complex64::default(); scratch_len],
        |scratch, chunk| {
            for line in chunk.chunks_mut(len) {
                fft.process_with_scratch(line, scratch);
            }
        },
    );
}

/// Out-of-place transpose of a row-major `rows x cols` matrix.
fn transpose_into(dst: &mut [Complex64], src: &[Complex64], rows: usize, cols: usize) {
    debug_assert_eq!(dst.len(), rows * cols);
    debug_assert_eq!(src.len(), rows * cols);
    let block = lines_per_task(cols) * rows;
    dst.par_chunks_mut(block)
        .enumerate()
        .for_each(|(task, out)| {
            let c0 = task * block / rows;
            for (i, slot) in out.iter_mut().enumerate() {
                let c = c0 + i / rows;
                let r = i % rows;
                *slot = src[r * cols + c];
            }
        });
}

/// In-place FFT along one axis of a row-major `[nx, ny, nz]` block. Axes
/// other than the innermost are handled by transposing so the lines become
/// contiguous, transforming, and transposing back.
fn fft_axis(
    buf: &mut [Complex64],
    dims: [usize; 3],
    axis: usize,
    inverse: bool,
    tmp: &mut Vec<Complex64>,
) {
    let [nx, ny, nz] = dims;
    let len = dims[axis];
    if len == 1 {
        return;
    }
    let fft = plan(len, inverse);
    match axis {
        2 => fft_lines(buf, nz, &fft),
        1 if nz == 1 => fft_lines(buf, ny, &fft),
        1 => {
            // Independent ny*nz slabs per x; each task transposes its slab
            // so the y-lines become contiguous, transforms, and restores.
            let slab = ny * nz;
            let scratch_len = fft.get_inplace_scratch_len();
            buf.par_chunks_mut(slab).for_each_init(
                || {
                    (
                        vec![Complex64::default(); slab],
                        vec![Complex64::default(); scratch_len],
                    )
                },
                |(tile, scratch), chunk| {
                    for c in 0..nz {
                        for r in 0..ny {
                            tile[c * ny + r] = chunk[r * nz + c];
                        }
                    }
                    for line in tile.chunks_mut(ny) {
                        fft.process_with_scratch(line, scratch);
                    }
                    for r in 0..ny {
                        for c in 0..nz {
                            chunk[r * nz + c] = tile[c * ny + r];
                        }
                    }
                },
            );
        }
        0 => {
            // One block covering everything; lines of length nx, stride ny*nz.
            let stride = ny * nz;
            tmp.resize(buf.len(), Complex64::default());
            transpose_into(tmp, buf, nx, stride);
            fft_lines(tmp, nx, &fft);
            transpose_into(buf, tmp, stride, nx);
        }
        _ => unreachable!(),
    }
}

fn convolve_values(spec: GridSpec, input: &[f64], tau: f64) -> Result<Vec<f64>> {
    if !(tau > 0.0) {
        return Err(Error::NonPositiveTau(tau));
    }
    let dims = spec.dims();
    let mult = multiplier_table(spec, tau);
    let inv_n = 1.0 / spec.cells() as f64;

    let mut buf: Vec<Complex64> = input.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let mut tmp: Vec<Complex64> = Vec::new();
    for axis in 0..3 {
        fft_axis(&mut buf, dims, axis, false, &mut tmp);
    }
    for (v, &m) in buf.iter_mut().zip(mult.iter()) {
        *v *= m * inv_n;
    }
    for axis in 0..3 {
        fft_axis(&mut buf, dims, axis, true, &mut tmp);
    }

    let max_abs = input.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
    let clamp = CLAMP_REL * max_abs;
    let out: Vec<f64> = buf
        .iter()
        .map(|c| {
            let v = c.re;
            if v < 0.0 && v > -clamp {
                0.0
            } else {
                v
            }
        })
        .collect();
    Ok(out)
}

/// Periodic heat-semigroup action `G_tau * u` on a real field.
pub fn gaussian_convolve(u: &ScalarField, tau: f64) -> Result<ScalarField> {
    let values = convolve_values(u.spec(), u.values(), tau)?;
    Ok(ScalarField::from_values_unchecked(u.spec(), values))
}

/// Convenience path for indicator inputs.
pub fn gaussian_convolve_indicator(u: &IndicatorField, tau: f64) -> Result<ScalarField> {
    let input: Vec<f64> = u.values().iter().map(|&v| v as f64).collect();
    let values = convolve_values(u.spec(), &input, tau)?;
    Ok(ScalarField::from_values_unchecked(u.spec(), values))
}

/// Max-norm of `G_{tau/2} (G_{tau/2} u) - G_tau u`; a validation helper that
/// should sit at rounding level for any input.
pub fn semigroup_defect(u: &ScalarField, tau: f64) -> Result<f64> {
    let twice = gaussian_convolve(&gaussian_convolve(u, tau / 2.0)?, tau / 2.0)?;
    let once = gaussian_convolve(u, tau)?;
    let defect = twice
        .values()
        .iter()
        .zip(once.values())
        .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
    Ok(defect)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiplier_invariants() {
        // Moderate grid and tau keep every multiplier strictly positive.
        let spec = GridSpec::new(2, 32).unwrap();
        let m = HeatMultiplier::new(spec, 0.05).unwrap();
        let values = m.values();
        assert_eq!(values[0], 1.0);
        assert!(values.iter().all(|&v| v > 0.0 && v <= 1.0));

        // Even in each frequency axis: bin j pairs with bin n - j.
        let n = 32;
        for x in 1..n / 2 {
            for y in 0..n {
                let a = values[spec.linear(x, y, 0)];
                let b = values[spec.linear(n - x, y, 0)];
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }
        for y in 1..n / 2 {
            let a = values[spec.linear(5, y, 0)];
            let b = values[spec.linear(5, n - y, 0)];
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn rejects_nonpositive_tau() {
        let spec = GridSpec::new(2, 16).unwrap();
        let u = ScalarField::zeros(spec);
        assert!(gaussian_convolve(&u, 0.0).is_err());
        assert!(gaussian_convolve(&u, -1.0).is_err());
        assert!(HeatMultiplier::new(spec, 0.0).is_err());
    }

    #[test]
    fn constant_field_is_fixed_point() {
        let spec = GridSpec::new(2, 64).unwrap();
        let c = 0.37;
        let u = ScalarField::constant(spec, c);
        for tau in [0.01, 0.1, 1.0] {
            let v = gaussian_convolve(&u, tau).unwrap();
            for &x in v.values() {
                assert!((x - c).abs() < 1e-13, "tau={tau} value={x}");
            }
        }
    }

    #[test]
    fn deterministic_output() {
        let spec = GridSpec::new(2, 64).unwrap();
        let mut rng = crate::rng::SplitMix64::new(5);
        let vals: Vec<f64> = (0..spec.cells()).map(|_| rng.next_f64()).collect();
        let u = ScalarField::from_values(spec, vals).unwrap();
        let a = gaussian_convolve(&u, 0.03).unwrap();
        let b = gaussian_convolve(&u, 0.03).unwrap();
        let identical = a
            .values()
            .iter()
            .zip(b.values())
            .all(|(x, y)| x.to_bits() == y.to_bits());
        assert!(identical);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]
            #[test]
            fn smoothing_preserves_mean_and_range(
                values in proptest::collection::vec(0.0f64..1.0, 256),
                tau in 1e-3f64..1.0,
            ) {
                let spec = GridSpec::new(2, 16).unwrap();
                let u = ScalarField::from_values(spec, values).unwrap();
                let v = gaussian_convolve(&u, tau).unwrap();
                let drift = (v.mean() - u.mean()).abs();
                prop_assert!(drift <= 1e-12 * u.mean().abs().max(1.0));
                let slack = 1e-12 * (u.max() - u.min()).abs().max(1.0);
                prop_assert!(v.max() <= u.max() + slack);
                prop_assert!(v.min() >= u.min() - slack);
            }
        }
    }
}
