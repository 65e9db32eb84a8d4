//! Shared oracles for the integration suites. Everything here is written
//! against the definitions directly (naive DFT sums, exhaustive enumeration)
//! and stays independent of the implementation paths it cross-checks.
#![allow(dead_code)]

use fencelab::grid::GridSpec;
use fencelab::spectral::bin_frequency;

/// Periodic Gaussian convolution by direct evaluation of the defining sums:
/// the spatial kernel is accumulated frequency by frequency and the circular
/// convolution is a full O(N^2) double loop. Slow, but algorithmically
/// independent of the FFT path.
pub fn naive_convolve(spec: GridSpec, input: &[f64], tau: f64) -> Vec<f64> {
    let [nx, ny, nz] = spec.dims();
    let cells = spec.cells();
    let kernel = naive_kernel(spec, tau);

    let mut out = vec![0.0f64; cells];
    for x in 0..nx {
        for y in 0..ny {
            for z in 0..nz {
                let mut acc = 0.0;
                for sx in 0..nx {
                    for sy in 0..ny {
                        for sz in 0..nz {
                            let dx = (x + nx - sx) % nx;
                            let dy = (y + ny - sy) % ny;
                            let dz = (z + nz - sz) % nz;
                            acc += kernel[(dx * ny + dy) * nz + dz]
                                * input[(sx * ny + sy) * nz + sz];
                        }
                    }
                }
                out[(x * ny + y) * nz + z] = acc;
            }
        }
    }
    out
}

/// Spatial kernel of the spectral heat multiplier, by direct frequency sum.
fn naive_kernel(spec: GridSpec, tau: f64) -> Vec<f64> {
    let [nx, ny, nz] = spec.dims();
    let cells = spec.cells();
    let mut kernel = vec![0.0f64; cells];
    let tau_pi = std::f64::consts::TAU; // 2*pi
    for dx in 0..nx {
        for dy in 0..ny {
            for dz in 0..nz {
                let mut acc = 0.0;
                for jx in 0..nx {
                    let fx = bin_frequency(jx, nx) as f64;
                    for jy in 0..ny {
                        let fy = bin_frequency(jy, ny) as f64;
                        for jz in 0..nz {
                            let fz = if nz == 1 {
                                0.0
                            } else {
                                bin_frequency(jz, nz) as f64
                            };
                            let mult = (-tau * (fx * fx + fy * fy + fz * fz)).exp();
                            let phase = tau_pi
                                * (jx as f64 * dx as f64 / nx as f64
                                    + jy as f64 * dy as f64 / ny as f64
                                    + jz as f64 * dz as f64 / nz as f64);
                            acc += mult * phase.cos();
                        }
                    }
                }
                kernel[(dx * ny + dy) * nz + dz] = acc / cells as f64;
            }
        }
    }
    kernel
}

/// Complementary error function, Abramowitz & Stegun 7.1.26 rational
/// approximation (absolute error below 1.5e-7).
pub fn erfc(x: f64) -> f64 {
    let sign_negative = x < 0.0;
    let x_abs = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x_abs);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    let erfc_abs = poly * (-x_abs * x_abs).exp();
    if sign_negative {
        2.0 - erfc_abs
    } else {
        erfc_abs
    }
}

/// All subsets of `items` of size `k` (lexicographic order).
pub fn combinations(items: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn recurse(start: usize, items: usize, k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for i in start..items {
            if items - i < k - current.len() {
                break;
            }
            current.push(i);
            recurse(i + 1, items, k, current, out);
            current.pop();
        }
    }
    recurse(0, items, k, &mut current, &mut out);
    out
}

/// All assignments of `cells` items into phases with the given target sizes.
/// Each assignment is a label vector with values in `0..targets.len()`.
pub fn multinomial_assignments(cells: usize, targets: &[usize]) -> Vec<Vec<u8>> {
    assert_eq!(targets.iter().sum::<usize>(), cells);
    let mut out = Vec::new();
    let mut labels = vec![u8::MAX; cells];
    fn recurse(
        pos: usize,
        labels: &mut Vec<u8>,
        remaining: &mut Vec<usize>,
        out: &mut Vec<Vec<u8>>,
    ) {
        if pos == labels.len() {
            out.push(labels.clone());
            return;
        }
        for phase in 0..remaining.len() {
            if remaining[phase] > 0 {
                remaining[phase] -= 1;
                labels[pos] = phase as u8;
                recurse(pos + 1, labels, remaining, out);
                remaining[phase] += 1;
            }
        }
    }
    let mut remaining = targets.to_vec();
    recurse(0, &mut labels, &mut remaining, &mut out);
    out
}
