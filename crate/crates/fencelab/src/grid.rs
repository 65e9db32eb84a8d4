//! Uniform periodic grid geometry on `[-pi, pi]^d`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Lower edge of the domain along every axis.
pub const DOMAIN_MIN: f64 = -PI;
/// Upper edge of the domain along every axis.
pub const DOMAIN_MAX: f64 = PI;

/// Geometry of a uniform periodic grid over `[-pi, pi]^d` with `d` in {2, 3}.
///
/// Cells are addressed in row-major order over the axis tuple `(x, y[, z])`:
/// the linear index of cell `(x, y, z)` is `(x * n + y) * nz + z`, with
/// `nz = 1` and `z = 0` in two dimensions. This single total order is the
/// canonical cell order; every deterministic tie-break in the crate refers
/// to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    dim: usize,
    n_axis: usize,
    dx: f64,
    cell_vol: f64,
}

impl GridSpec {
    /// A `d`-dimensional grid with `n_axis` cells per axis. `n_axis` must be
    /// even and at least 8 so the symmetric frequency grid of the spectral
    /// kernels is well defined.
    pub fn new(dim: usize, n_axis: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 2 or 3, got {dim}"
            )));
        }
        if n_axis < 8 || n_axis % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "cells per axis must be even and >= 8, got {n_axis}"
            )));
        }
        let dx = (DOMAIN_MAX - DOMAIN_MIN) / n_axis as f64;
        let cell_vol = dx.powi(dim as i32);
        Ok(Self {
            dim,
            n_axis,
            dx,
            cell_vol,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_axis(&self) -> usize {
        self.n_axis
    }

    /// Grid spacing `2*pi / n_axis`.
    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Volume of one cell, `dx^d`.
    pub fn cell_vol(&self) -> f64 {
        self.cell_vol
    }

    /// Total number of cells, `n_axis^d`.
    pub fn cells(&self) -> usize {
        self.n_axis.pow(self.dim as u32)
    }

    /// Extents as `[nx, ny, nz]`, with `nz = 1` in two dimensions.
    pub fn dims(&self) -> [usize; 3] {
        let n = self.n_axis;
        if self.dim == 2 {
            [n, n, 1]
        } else {
            [n, n, n]
        }
    }

    /// Canonical linear index of the cell at `(x, y, z)`. Pass `z = 0` in 2D.
    pub fn linear(&self, x: usize, y: usize, z: usize) -> usize {
        let [_, ny, nz] = self.dims();
        (x * ny + y) * nz + z
    }

    /// Inverse of [`GridSpec::linear`].
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let [_, ny, nz] = self.dims();
        let z = idx % nz;
        let rest = idx / nz;
        let y = rest % ny;
        let x = rest / ny;
        [x, y, z]
    }

    /// Coordinate of the center of the `i`-th cell along one axis.
    pub fn center(&self, i: usize) -> f64 {
        DOMAIN_MIN + (i as f64 + 0.5) * self.dx
    }

    /// Physical coordinates of a cell center. The third entry is 0.0 in 2D.
    pub fn cell_center(&self, idx: usize) -> [f64; 3] {
        let [x, y, z] = self.coords(idx);
        if self.dim == 2 {
            [self.center(x), self.center(y), 0.0]
        } else {
            [self.center(x), self.center(y), self.center(z)]
        }
    }
}
