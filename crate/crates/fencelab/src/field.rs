//! Binary and real-valued fields over a periodic grid.
//!
//! An [`IndicatorField`] represents a region as one `{0,1}` value per cell
//! together with an exact integer count of its 1-cells; real volumes are
//! always derived from the count so that volume constraints stay integer
//! exact across arbitrarily many updates. Fields are immutable once built
//! and cheap to share between threads.

use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Binary-valued field over a grid with exact cell-count bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorField {
    spec: GridSpec,
    values: Vec<u8>,
    count: usize,
}

impl IndicatorField {
    pub fn empty(spec: GridSpec) -> Self {
        Self {
            spec,
            values: vec![0; spec.cells()],
            count: 0,
        }
    }

    pub fn full(spec: GridSpec) -> Self {
        Self {
            spec,
            values: vec![1; spec.cells()],
            count: spec.cells(),
        }
    }

    /// Builds a field from raw cell values, validating length and that every
    /// value is 0 or 1. The count is recomputed from the data.
    pub fn from_values(spec: GridSpec, values: Vec<u8>) -> Result<Self> {
        if values.len() != spec.cells() {
            return Err(Error::InvalidField(format!(
                "expected {} cells, got {}",
                spec.cells(),
                values.len()
            )));
        }
        let mut count = 0usize;
        for &v in &values {
            match v {
                0 => {}
                1 => count += 1,
                other => {
                    return Err(Error::InvalidField(format!(
                        "indicator values must be 0 or 1, found {other}"
                    )))
                }
            }
        }
        Ok(Self {
            spec,
            values,
            count,
        })
    }

    /// Builds a field from a membership predicate over canonical cell indices.
    pub fn from_fn(spec: GridSpec, f: impl Fn(usize) -> bool) -> Self {
        let mut values = vec![0u8; spec.cells()];
        let mut count = 0usize;
        for (idx, v) in values.iter_mut().enumerate() {
            if f(idx) {
                *v = 1;
                count += 1;
            }
        }
        Self {
            spec,
            values,
            count,
        }
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn get(&self, idx: usize) -> bool {
        self.values[idx] == 1
    }

    /// Number of 1-cells.
    pub fn count(&self) -> usize {
        self.count
    }

    /// Measure of the region: `count * cell_vol`.
    pub fn volume(&self) -> f64 {
        self.count as f64 * self.spec.cell_vol()
    }

    pub fn complement(&self) -> Self {
        let values: Vec<u8> = self.values.iter().map(|&v| 1 - v).collect();
        Self {
            spec: self.spec,
            values,
            count: self.spec.cells() - self.count,
        }
    }

    /// Cell-wise `self AND NOT other`.
    pub fn set_difference(&self, other: &Self) -> Result<Self> {
        self.check_spec(other)?;
        let mut count = 0usize;
        let values: Vec<u8> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| {
                let v = a & (1 - b);
                count += v as usize;
                v
            })
            .collect();
        Ok(Self {
            spec: self.spec,
            values,
            count,
        })
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.check_spec(other)?;
        let mut count = 0usize;
        let values: Vec<u8> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| {
                let v = a | b;
                count += v as usize;
                v
            })
            .collect();
        Ok(Self {
            spec: self.spec,
            values,
            count,
        })
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        self.check_spec(other)?;
        let mut count = 0usize;
        let values: Vec<u8> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| {
                let v = a & b;
                count += v as usize;
                v
            })
            .collect();
        Ok(Self {
            spec: self.spec,
            values,
            count,
        })
    }

    /// Cell-wise equality. Errors when the operands live on different grids.
    pub fn equal(&self, other: &Self) -> Result<bool> {
        self.check_spec(other)?;
        Ok(self.count == other.count && self.values == other.values)
    }

    /// Canonical indices of all 1-cells, in canonical order.
    pub fn active_cells(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, &v)| (v == 1).then_some(i))
            .collect()
    }

    pub fn to_scalar(&self) -> ScalarField {
        ScalarField {
            spec: self.spec,
            values: self.values.iter().map(|&v| v as f64).collect(),
        }
    }

    fn check_spec(&self, other: &Self) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::SpecMismatch);
        }
        Ok(())
    }
}

/// Real-valued field over a grid (convolution outputs, dominant functions).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    spec: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            spec,
            values: vec![0.0; spec.cells()],
        }
    }

    pub fn constant(spec: GridSpec, c: f64) -> Self {
        Self {
            spec,
            values: vec![c; spec.cells()],
        }
    }

    /// Wraps raw values, validating length and finiteness.
    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.cells() {
            return Err(Error::InvalidField(format!(
                "expected {} cells, got {}",
                spec.cells(),
                values.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidField(
                "scalar field contains a non-finite value".into(),
            ));
        }
        Ok(Self { spec, values })
    }

    /// Wraps raw values without the finiteness scan. The caller guarantees
    /// the data came from an operation that cannot produce NaN/Inf.
    pub(crate) fn from_values_unchecked(spec: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), spec.cells());
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { spec, values }
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mean over all cells.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Midpoint-quadrature integral: cell sum times cell volume.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spec.cell_vol()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// An ordered list of disjoint phases covering a support region, with exact
/// per-phase cell counts.
#[derive(Debug, Clone)]
pub struct Partition {
    support: IndicatorField,
    phases: Vec<IndicatorField>,
}

impl Partition {
    /// Validates that the phases are pairwise disjoint and sum cell-wise to
    /// the support.
    pub fn new(support: IndicatorField, phases: Vec<IndicatorField>) -> Result<Self> {
        if phases.is_empty() {
            return Err(Error::InvalidPartition("no phases".into()));
        }
        for phase in &phases {
            if phase.spec() != support.spec() {
                return Err(Error::SpecMismatch);
            }
        }
        let cells = support.spec().cells();
        let mut sum = vec![0u8; cells];
        for phase in &phases {
            for (s, &v) in sum.iter_mut().zip(phase.values()) {
                *s += v;
            }
        }
        if sum != support.values() {
            return Err(Error::InvalidPartition(
                "phases do not sum cell-wise to the support".into(),
            ));
        }
        Ok(Self { support, phases })
    }

    /// Builds a partition from per-cell labels: 0 marks cells outside the
    /// support, `i` in `1..=n` assigns the cell to phase `i`.
    pub fn from_labels(spec: GridSpec, labels: &[u8], n: usize) -> Result<Self> {
        if labels.len() != spec.cells() {
            return Err(Error::InvalidField(format!(
                "expected {} labels, got {}",
                spec.cells(),
                labels.len()
            )));
        }
        if n == 0 || n > u8::MAX as usize {
            return Err(Error::InvalidPartition(format!("bad phase count {n}")));
        }
        let mut support = vec![0u8; labels.len()];
        let mut phase_values = vec![vec![0u8; labels.len()]; n];
        for (idx, &lab) in labels.iter().enumerate() {
            if lab == 0 {
                continue;
            }
            let i = lab as usize - 1;
            if i >= n {
                return Err(Error::InvalidPartition(format!(
                    "label {lab} exceeds phase count {n}"
                )));
            }
            support[idx] = 1;
            phase_values[i][idx] = 1;
        }
        let support = IndicatorField::from_values(spec, support)?;
        let phases = phase_values
            .into_iter()
            .map(|v| IndicatorField::from_values(spec, v))
            .collect::<Result<Vec<_>>>()?;
        Self::new(support, phases)
    }

    pub fn spec(&self) -> GridSpec {
        self.support.spec()
    }

    pub fn n(&self) -> usize {
        self.phases.len()
    }

    pub fn support(&self) -> &IndicatorField {
        &self.support
    }

    pub fn phases(&self) -> &[IndicatorField] {
        &self.phases
    }

    pub fn counts(&self) -> Vec<usize> {
        self.phases.iter().map(|p| p.count()).collect()
    }

    /// Per-cell labels: 0 outside the support, `i+1` for phase `i`.
    pub fn labels(&self) -> Vec<u8> {
        let mut labels = vec![0u8; self.spec().cells()];
        for (i, phase) in self.phases.iter().enumerate() {
            for (lab, &v) in labels.iter_mut().zip(phase.values()) {
                if v == 1 {
                    *lab = (i + 1) as u8;
                }
            }
        }
        labels
    }

    /// Cell-wise equality of all phases (and hence of the supports).
    pub fn same_cells(&self, other: &Self) -> bool {
        self.n() == other.n()
            && self
                .phases
                .iter()
                .zip(&other.phases)
                .all(|(a, b)| a.values() == b.values())
    }
}
