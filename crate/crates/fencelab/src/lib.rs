//! Solvers for the longest minimal length partition problem on periodic
//! grids: among regions of a fixed volume, find one whose shortest
//! volume-proportioned partition is as long as possible.
//!
//! The pipeline alternates two moves. For a fixed region, [`auction`]
//! computes a shortest volume-constrained partition by a bidding scheme on
//! heat-content assignment coefficients. For a fixed partition, [`threshold`]
//! updates the region by thresholding a dominant function under an exact
//! integer volume constraint, applying only a `beta`-fraction of the
//! candidate change per step. [`solver`] orchestrates the outer iterations
//! (two step-length-controlled variants and an objective-monotone variant),
//! [`energy`] evaluates the interface energies and isoperimetric
//! diagnostics, and [`spectral`] provides the periodic Gaussian convolution
//! every other module is built on. [`shapes`] rasterizes the initial
//! regions and [`fld`] persists fields to disk.

pub mod auction;
pub mod energy;
pub mod error;
pub mod field;
pub mod fld;
pub mod grid;
pub mod rng;
pub mod shapes;
pub mod solver;
pub mod spectral;
pub mod threshold;

pub use error::{Error, Result};
pub use field::{IndicatorField, Partition, ScalarField};
pub use grid::GridSpec;

/// Caps the global thread pool at `FENCELAB_THREADS` when the variable is
/// set. Call once at program start; later calls are no-ops.
pub fn configure_threads_from_env() {
    if let Ok(raw) = std::env::var("FENCELAB_THREADS") {
        if let Ok(n) = raw.trim().parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}
