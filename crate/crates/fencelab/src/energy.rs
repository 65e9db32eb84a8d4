//! Interface energies and diagnostics.
//!
//! Two approximations of the total relative perimeter of a partition are
//! evaluated, both built from short-time Gaussian convolutions of indicator
//! functions. The pairwise form sums `sqrt(pi/tau) * integral u_i (G_tau *
//! u_j)` over ordered phase pairs. The region-restricted form replaces the
//! integration domain by the region itself and carries the square-root
//! coupling terms that make its linearization usable for region updates.
//! Both converge to the same limit as `tau` shrinks; their finite-`tau` gap
//! is itself a tested diagnostic.

use crate::error::{Error, Result};
use crate::field::{IndicatorField, Partition, ScalarField};
use crate::spectral::gaussian_convolve_indicator;

/// Summary of the energies of a region/partition pair.
#[derive(Debug, Clone, Copy)]
pub struct EnergyReport {
    pub e_tilde: f64,
    pub e_hat: f64,
    /// Boundary-perimeter estimate of the region itself.
    pub per_omega: f64,
    /// Dimension-appropriate isoperimetric ratio of the region.
    pub iso_ratio: f64,
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0) {
        return Err(Error::NonPositiveTau(tau));
    }
    Ok(())
}

/// Masked cell sum `sum_{x in mask} values(x)` times the cell volume.
fn masked_integral(mask: &IndicatorField, values: &[f64]) -> f64 {
    let sum: f64 = mask
        .values()
        .iter()
        .zip(values)
        .filter(|(&m, _)| m == 1)
        .map(|(_, &v)| v)
        .sum();
    sum * mask.spec().cell_vol()
}

/// Boundary-length estimate `sqrt(pi/tau) * integral u (G_tau * (1 - u))`.
pub fn perimeter_estimate(u: &IndicatorField, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    let smoothed_complement = gaussian_convolve_indicator(&u.complement(), tau)?;
    Ok((std::f64::consts::PI / tau).sqrt() * masked_integral(u, smoothed_complement.values()))
}

/// Pairwise interface energy of a partition:
/// `sqrt(pi/tau) * sum_i sum_{j != i} integral u_i (G_tau * u_j)`.
///
/// The ordered-pair integrals are accumulated into a list and summed after
/// sorting, so any relabeling of phases produces the bit-identical value.
pub fn energy_hat(p: &Partition, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    let pair_integrals = pairwise_integrals(p, tau)?;
    Ok((std::f64::consts::PI / tau).sqrt() * sorted_sum(pair_integrals))
}

/// Heat content of a partition: `(1/sqrt(tau)) * sum_{i != j} integral
/// u_i (G_tau * u_j)`. The pairwise interface energy is exactly `sqrt(pi)`
/// times this quantity.
pub fn heat_content(p: &Partition, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    let pair_integrals = pairwise_integrals(p, tau)?;
    Ok(sorted_sum(pair_integrals) / tau.sqrt())
}

fn pairwise_integrals(p: &Partition, tau: f64) -> Result<Vec<f64>> {
    let smoothed: Vec<ScalarField> = p
        .phases()
        .iter()
        .map(|u| gaussian_convolve_indicator(u, tau))
        .collect::<Result<_>>()?;
    let n = p.n();
    let mut integrals = Vec::with_capacity(n * (n - 1));
    for i in 0..n {
        for j in 0..n {
            if i != j {
                integrals.push(masked_integral(&p.phases()[i], smoothed[j].values()));
            }
        }
    }
    Ok(integrals)
}

fn sorted_sum(mut values: Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    values.iter().sum()
}

/// Region-restricted interface energy of `(u_omega, partition)`:
///
/// `sqrt(pi/tau) [ integral u_omega (S - sum_i v_i^2)
///                 - integral u_omega sqrt(S) (G_{tau/2} * (sqrt(S) (1 - u_omega))) ]`
///
/// with `v_i = G_{tau/2} * u_i` and `S = sum_i v_i`. The region and the
/// partition's support may differ cell-wise; that mismatch is exactly what
/// the region update explores.
pub fn energy_tilde(u_omega: &IndicatorField, p: &Partition, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    if u_omega.spec() != p.spec() {
        return Err(Error::SpecMismatch);
    }
    let half = tau / 2.0;
    let cells = u_omega.spec().cells();

    let smoothed: Vec<ScalarField> = p
        .phases()
        .iter()
        .map(|u| gaussian_convolve_indicator(u, half))
        .collect::<Result<_>>()?;

    let mut interface_term = vec![0.0f64; cells]; // S - sum_i v_i^2
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

    // sqrt(S) * (1 - u_omega), smoothed once more.
    let outside_weighted: Vec<f64> = sqrt_s
        .iter()
        .zip(u_omega.values())
        .map(|(&r, &m)| if m == 1 { 0.0 } else { r })
        .collect();
    let outside_smoothed = crate::spectral::gaussian_convolve(
        &ScalarField::from_values_unchecked(u_omega.spec(), outside_weighted),
        half,
    )?;

    let boundary_product: Vec<f64> = sqrt_s
        .iter()
        .zip(outside_smoothed.values())
        .map(|(&r, &g)| r * g)
        .collect();

    let first = masked_integral(u_omega, &interface_term);
    let second = masked_integral(u_omega, &boundary_product);
    Ok((std::f64::consts::PI / tau).sqrt() * (first - second))
}

/// Isoperimetric ratio of a region: `4 pi V / P^2` in 2D and `36 pi V^2 /
/// P^3` in 3D, where `P` is the spectral perimeter estimate at time `tau`.
/// Both equal 1 exactly for the disc and the ball.
pub fn isoperimetric_ratio(u: &IndicatorField, tau: f64) -> Result<f64> {
    if u.count() == 0 {
        return Err(Error::EmptyField);
    }
    let per = perimeter_estimate(u, tau)?;
    let vol = u.volume();
    let pi = std::f64::consts::PI;
    Ok(match u.spec().dim() {
        2 => 4.0 * pi * vol / (per * per),
        _ => 36.0 * pi * vol * vol / (per * per * per),
    })
}

/// Arithmetic mean of entries `k - m + 1 ..= k` of a history, with 1-based
/// entry indexing.
pub fn averaged_energy(trace: &[f64], m: usize, k: usize) -> Result<f64> {
    if m == 0 || k < m {
        return Err(Error::History(format!(
            "window of {m} entries ending at entry {k} is empty"
        )));
    }
    if trace.len() < k {
        return Err(Error::History(format!(
            "history has {} entries, window ends at entry {k}",
            trace.len()
        )));
    }
    Ok(trace[k - m..k].iter().sum::<f64>() / m as f64)
}

/// Full diagnostic report for a region/partition pair.
pub fn report(u_omega: &IndicatorField, p: &Partition, tau: f64) -> Result<EnergyReport> {
    Ok(EnergyReport {
        e_tilde: energy_tilde(u_omega, p, tau)?,
        e_hat: energy_hat(p, tau)?,
        per_omega: perimeter_estimate(u_omega, tau)?,
        iso_ratio: isoperimetric_ratio(u_omega, tau)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    #[test]
    fn perimeter_of_empty_and_full_is_zero() {
        let spec = GridSpec::new(2, 64).unwrap();
        let tau = 2.0 * spec.dx();
        assert_eq!(
            perimeter_estimate(&IndicatorField::empty(spec), tau).unwrap(),
            0.0
        );
        let full = perimeter_estimate(&IndicatorField::full(spec), tau).unwrap();
        assert!(full.abs() < 1e-10, "full-domain perimeter {full:.3e}");
    }

    #[test]
    fn energy_hat_without_interfaces_is_zero() {
        let spec = GridSpec::new(2, 32).unwrap();
        let support = IndicatorField::from_fn(spec, |i| i < 100);
        let p = Partition::new(
            support.clone(),
            vec![support, IndicatorField::empty(spec)],
        )
        .unwrap();
        assert_eq!(energy_hat(&p, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn averaged_energy_examples() {
        assert_eq!(averaged_energy(&[3.0; 7], 4, 5).unwrap(), 3.0);
        assert_eq!(
            averaged_energy(&[1.0, 2.0, 3.0, 4.0, 5.0], 5, 5).unwrap(),
            3.0
        );
        assert_eq!(
            averaged_energy(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 5, 6).unwrap(),
            4.0
        );
        assert!(averaged_energy(&[1.0, 2.0], 5, 5).is_err());
        assert!(averaged_energy(&[1.0, 2.0], 1, 0).is_err());
    }

    #[test]
    fn rejects_nonpositive_tau() {
        let spec = GridSpec::new(2, 16).unwrap();
        let u = IndicatorField::from_fn(spec, |i| i < 8);
        assert!(perimeter_estimate(&u, 0.0).is_err());
        let p = Partition::new(u.clone(), vec![u.clone()]).unwrap();
        assert!(energy_hat(&p, -0.5).is_err());
        assert!(energy_tilde(&u, &p, 0.0).is_err());
    }

    #[test]
    fn iso_ratio_rejects_empty_region() {
        let spec = GridSpec::new(2, 16).unwrap();
        assert!(isoperimetric_ratio(&IndicatorField::empty(spec), 0.1).is_err());
    }

    #[test]
    fn heat_content_ratio_is_sqrt_pi() {
        let spec = GridSpec::new(2, 16).unwrap();
        let mut rng = crate::rng::SplitMix64::new(17);
        let labels: Vec<u8> = (0..spec.cells())
            .map(|_| rng.next_below(4) as u8) // 0 = outside, 1..=3 phases
            .collect();
        let p = Partition::from_labels(spec, &labels, 3).unwrap();
        let tau = 0.2;
        let hat = energy_hat(&p, tau).unwrap();
        let hc = heat_content(&p, tau).unwrap();
        let ratio = hat / hc;
        assert!((ratio - std::f64::consts::PI.sqrt()).abs() <= 1e-12);
    }

    #[test]
    fn energy_hat_is_permutation_invariant() {
        let spec = GridSpec::new(2, 16).unwrap();
        let mut rng = crate::rng::SplitMix64::new(23);
        let labels: Vec<u8> = (0..spec.cells())
            .map(|_| rng.next_below(4) as u8)
            .collect();
        let p = Partition::from_labels(spec, &labels, 3).unwrap();
        // Relabel phases 1,2,3 -> 3,1,2.
        let relabeled: Vec<u8> = labels
            .iter()
            .map(|&l| match l {
                0 => 0,
                1 => 3,
                2 => 1,
                _ => 2,
            })
            .collect();
        let q = Partition::from_labels(spec, &relabeled, 3).unwrap();
        let a = energy_hat(&p, 0.15).unwrap();
        let b = energy_hat(&q, 0.15).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn two_phase_decomposition() {
        let spec = GridSpec::new(2, 32).unwrap();
        let support = IndicatorField::from_fn(spec, |idx| {
            let [x, y, _] = spec.cell_center(idx);
            x * x + y * y < 4.0
        });
        let left = IndicatorField::from_fn(spec, |idx| {
            let [x, y, _] = spec.cell_center(idx);
            x * x + y * y < 4.0 && x < 0.0
        });
        let right = support.set_difference(&left).unwrap();
        let p = Partition::new(support, vec![left.clone(), right.clone()]).unwrap();
        let tau = 0.1;
        let generic = energy_hat(&p, tau).unwrap();
        let smoothed_right = gaussian_convolve_indicator(&right, tau).unwrap();
        let direct = 2.0
            * (std::f64::consts::PI / tau).sqrt()
            * masked_integral(&left, smoothed_right.values());
        assert!((generic - direct).abs() / direct.abs() <= 1e-12);
    }
}
