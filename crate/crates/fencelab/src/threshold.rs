//! Region update by volume-preserving thresholding of a dominant function.
//!
//! The dominant function is the linearization coefficient field of the
//! region-restricted interface energy in the region variable: thresholding
//! it at the level that keeps the cell count fixed maximizes the linearized
//! energy under the volume constraint. On a regular grid the level is found
//! exactly by top-k selection, with ties broken by canonical cell order.
//! The partial update applies only a `beta`-fraction of the candidate
//! add/remove sets, which is what keeps the outer iteration stable.

use crate::error::{Error, Result};
use crate::field::{IndicatorField, Partition, ScalarField};
use crate::spectral::{gaussian_convolve, gaussian_convolve_indicator};

/// Candidate add/remove sets of one region update.
///
/// `a` holds the cells the full threshold step would add, `b` the cells it
/// would remove; `a_sel`/`b_sel` are the actually applied subsets, both of
/// exactly `k_cells` cells so the update conserves volume.
#[derive(Debug, Clone)]
pub struct UpdateSets {
    pub a: IndicatorField,
    pub b: IndicatorField,
    pub a_sel: IndicatorField,
    pub b_sel: IndicatorField,
    pub k_cells: usize,
}

/// Dominant function of the region-restricted energy at `(u_omega, p)`:
///
/// `sqrt(pi/tau) [ S - sum_i v_i^2 + sqrt(S) (G_{tau/2} * (sqrt(S) (2 u_omega - 1))) ]`
///
/// with `v_i = G_{tau/2} * u_i`, `S = sum_i v_i` clamped at zero before the
/// square root.
pub fn dominant_function(
    u_omega: &IndicatorField,
    p: &Partition,
    tau: f64,
) -> Result<ScalarField> {
    dominant_function_regularized(u_omega, p, tau, 0.0, 1.0)
}

/// Dominant function plus the proximal coupling `lambda * G_{tau_prime} *
/// (sum_i u_i)`, which penalizes moving the region away from the current
/// partition support. `lambda = 0` reproduces [`dominant_function`]
/// bit-exactly.
pub fn dominant_function_regularized(
    u_omega: &IndicatorField,
    p: &Partition,
    tau: f64,
    lambda: f64,
    tau_prime: f64,
) -> Result<ScalarField> {
    if !(tau > 0.0) {
        return Err(Error::NonPositiveTau(tau));
    }
    if lambda < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "regularization weight must be nonnegative, got {lambda}"
        )));
    }
    if lambda > 0.0 && !(tau_prime > 0.0) {
        return Err(Error::NonPositiveTau(tau_prime));
    }
    if u_omega.spec() != p.spec() {
        return Err(Error::SpecMismatch);
    }
    let spec = u_omega.spec();
    let cells = spec.cells();
    let half = tau / 2.0;

    let smoothed: Vec<ScalarField> = p
        .phases()
        .iter()
        .map(|u| gaussian_convolve_indicator(u, half))
        .collect::<Result<_>>()?;

    let mut interface_term = vec![0.0f64; cells];
    let mut sqrt_s = vec![0.0f64; cells];
    for idx in 0..cells {
        let mut s = 0.0;
        let mut sq = 0.0;
        for v in &smoothed {
            let vi = v.values()[idx];
            s += vi;
            sq += vi * vi;
        }
        let s = s.max(0.0);
        interface_term[idx] = s - sq;
        sqrt_s[idx] = s.sqrt();
    }

    // sqrt(S) * (2 u_omega - 1), smoothed.
    let signed: Vec<f64> = sqrt_s
        .iter()
        .zip(u_omega.values())
        .map(|(&r, &m)| if m == 1 { r } else { -r })
        .collect();
    let signed_smoothed =
        gaussian_convolve(&ScalarField::from_values_unchecked(spec, signed), half)?;

    let scale = (std::f64::consts::PI / tau).sqrt();
    let mut phi: Vec<f64> = (0..cells)
        .map(|idx| scale * (interface_term[idx] + sqrt_s[idx] * signed_smoothed.values()[idx]))
        .collect();

    if lambda > 0.0 {
        let support_sum = gaussian_convolve_indicator(p.support(), tau_prime)?;
        for (v, &g) in phi.iter_mut().zip(support_sum.values()) {
            *v += lambda * g;
        }
    }
    Ok(ScalarField::from_values_unchecked(spec, phi))
}

/// Indicator of the `k_cells` cells with the largest values of `phi`; ties
/// broken toward lower canonical index. This is the exact discrete form of
/// choosing a threshold level with prescribed volume.
pub fn threshold_volume(phi: &ScalarField, k_cells: usize) -> Result<IndicatorField> {
    let cells = phi.spec().cells();
    if k_cells > cells {
        return Err(Error::InvalidConfig(format!(
            "cannot select {k_cells} of {cells} cells"
        )));
    }
    let mut order: Vec<u32> = (0..cells as u32).collect();
    order.sort_by(|&i, &j| {
        phi.values()[j as usize]
            .total_cmp(&phi.values()[i as usize])
            .then(i.cmp(&j))
    });
    let mut values = vec![0u8; cells];
    for &idx in &order[..k_cells] {
        values[idx as usize] = 1;
    }
    IndicatorField::from_values(phi.spec(), values)
}

/// Applies a `beta`-fraction of the move from `u_prev` toward `u_process`.
///
/// With `A = u_process \ u_prev` and `B = u_prev \ u_process`, the applied
/// sets are the `k = floor(beta |A| + 1/2)` highest-`phi` cells of `A` and
/// the `k` lowest-`phi` cells of `B`; using the same `k` on both sides keeps
/// the cell count exactly conserved. `beta = 0` returns `u_prev` unchanged
/// and `beta = 1` returns `u_process`.
pub fn partial_update(
    u_prev: &IndicatorField,
    u_process: &IndicatorField,
    phi: &ScalarField,
    beta: f64,
) -> Result<(IndicatorField, UpdateSets)> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidConfig(format!(
            "step length must lie in [0, 1], got {beta}"
        )));
    }
    if u_prev.count() != u_process.count() {
        return Err(Error::InvalidField(format!(
            "cell-count mismatch: {} vs {}",
            u_prev.count(),
            u_process.count()
        )));
    }
    let a = u_process.set_difference(u_prev)?;
    let b = u_prev.set_difference(u_process)?;
    debug_assert_eq!(a.count(), b.count());

    let k_cells = ((beta * a.count() as f64 + 0.5).floor() as usize).min(a.count());

    let a_sel = select_by_phi(&a, phi, k_cells, true);
    let b_sel = select_by_phi(&b, phi, k_cells, false);

    let mut values = u_prev.values().to_vec();
    for idx in a_sel.active_cells() {
        values[idx] = 1;
    }
    for idx in b_sel.active_cells() {
        values[idx] = 0;
    }
    let next = IndicatorField::from_values(u_prev.spec(), values)?;
    debug_assert_eq!(next.count(), u_prev.count());

    Ok((
        next,
        UpdateSets {
            a,
            b,
            a_sel,
            b_sel,
            k_cells,
        },
    ))
}

/// The `k` members of `set` with extreme `phi` values: highest first when
/// `descending`, lowest first otherwise. Ties fall back to canonical order.
fn select_by_phi(
    set: &IndicatorField,
    phi: &ScalarField,
    k: usize,
    descending: bool,
) -> IndicatorField {
    let mut members = set.active_cells();
    members.sort_by(|&i, &j| {
        let (pi, pj) = (phi.values()[i], phi.values()[j]);
        let ord = if descending {
            pj.total_cmp(&pi)
        } else {
            pi.total_cmp(&pj)
        };
        ord.then(i.cmp(&j))
    });
    members.truncate(k);
    IndicatorField::from_fn(set.spec(), {
        let chosen: std::collections::HashSet<usize> = members.into_iter().collect();
        move |idx| chosen.contains(&idx)
    })
}
