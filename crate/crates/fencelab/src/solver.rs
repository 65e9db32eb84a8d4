//! Outer iteration: alternate shortest-partition solves with
//! volume-preserving region updates.
//!
//! Three variants are provided. Method one recomputes the partition with
//! several independently seeded auction runs per iteration and keeps the
//! best, driving the region with the plain dominant function. Method two
//! runs the auction once per iteration and stabilizes the region update
//! with the proximal regularization term instead. Both decay the step
//! length `beta` by `gamma` whenever the averaged objective over a sliding
//! window stalls, and stop when `beta` falls below `beta_min` or the region
//! reaches a fixed point. The monotone variant only ever accepts iterates
//! that do not decrease the objective: it retries a rejected step with a
//! halved `beta`, and when `beta` collapses it re-solves the partition of
//! the current region several times to decide between "the partition was a
//! local minimizer" and "the region is final".
//!
//! Every run is deterministic for a fixed configuration and seed: auction
//! seeds are drawn from a cursor that advances by the number of runs
//! consumed, and all tie-breaking is canonical.

use crate::auction::{auction_dynamics, AuctionParams};
use crate::energy::{self, averaged_energy};
use crate::error::{Error, Result};
use crate::field::{IndicatorField, Partition};
use crate::threshold::{dominant_function, dominant_function_regularized, partial_update, threshold_volume};

/// Outer method selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    One,
    Two,
    Monotone,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::One => "one",
            Method::Two => "two",
            Method::Monotone => "monotone",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "one" => Ok(Method::One),
            "two" => Ok(Method::Two),
            "monotone" => Ok(Method::Monotone),
            other => Err(Error::InvalidConfig(format!("unknown method '{other}'"))),
        }
    }
}

/// Why a solve stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// `beta` fell to or below `beta_min`.
    BetaExhausted,
    /// Two consecutive regions were identical.
    RegionFixedPoint,
    /// Monotone method: no improving partition found after the retry budget.
    MonotoneAccept,
    /// Safety iteration cap hit.
    MaxIterations,
}

impl StopReason {
    pub fn name(&self) -> &'static str {
        match self {
            StopReason::BetaExhausted => "beta_exhausted",
            StopReason::RegionFixedPoint => "region_fixed_point",
            StopReason::MonotoneAccept => "monotone_accept",
            StopReason::MaxIterations => "max_iterations",
        }
    }
}

/// All solver tunables.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub method: Method,
    /// Interface time scale of the energies and dominant function.
    pub tau: f64,
    /// Time scale of the proximal regularization term (method two).
    pub tau_prime: f64,
    /// Proximal regularization weight (method two).
    pub lambda: f64,
    /// Volume proportions, positive and summing to 1.
    pub c: Vec<f64>,
    /// Initial step length.
    pub beta0: f64,
    /// Step-length decay factor.
    pub gamma: f64,
    /// Stop once `beta` is at or below this value.
    pub beta_min: f64,
    /// Sliding-window length of the averaged objective.
    pub avg_window: usize,
    /// Relative stall tolerance of the averaged objective.
    pub r_tol: f64,
    /// Auction repetitions per iteration (methods one and monotone).
    pub adm_repeats: usize,
    pub auction: AuctionParams,
    pub seed: u64,
    /// Safety cap on iterations (or trials, for the monotone method).
    pub max_iters: usize,
    /// Monotone method: step-length decay of rejected trials.
    pub gamma_mono: f64,
    /// Monotone method: trial step lengths below this trigger re-solving
    /// the partition.
    pub beta_floor: f64,
    /// Monotone method: auction repetitions of the re-solve check.
    pub p_check: usize,
}

impl SolverConfig {
    /// Baseline parameter set for 2D runs: interface time `2 dx`,
    /// regularization time `dx / 2`, auction schedule (1000, 1e-7, 4, 0.1),
    /// full initial step with halving decay down to 0.05, five-step
    /// averaging at 1e-4 stall tolerance, five auction repeats, and
    /// regularization weight 10.
    pub fn paper_2d(dx: f64) -> Self {
        Self {
            method: Method::One,
            tau: 2.0 * dx,
            tau_prime: 0.5 * dx,
            lambda: 10.0,
            c: vec![0.5, 0.5],
            beta0: 1.0,
            gamma: 0.5,
            beta_min: 0.05,
            avg_window: 5,
            r_tol: 1e-4,
            adm_repeats: 5,
            auction: AuctionParams {
                max_steps: 1000,
                eps_min: 1e-7,
                alpha: 4.0,
                eps0: 0.1,
            },
            seed: 1,
            max_iters: 1000,
            gamma_mono: 0.5,
            beta_floor: 1.0 / 64.0,
            p_check: 10,
        }
    }

    /// 3D variant: looser stall tolerance 5e-4 and three auction repeats.
    pub fn paper_3d(dx: f64) -> Self {
        Self {
            r_tol: 5e-4,
            adm_repeats: 3,
            ..Self::paper_2d(dx)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.auction.validate()?;
        if !(self.tau > 0.0) {
            return Err(Error::NonPositiveTau(self.tau));
        }
        if self.method == Method::Two && !(self.tau_prime > 0.0) {
            return Err(Error::NonPositiveTau(self.tau_prime));
        }
        if self.lambda < 0.0 {
            return Err(Error::InvalidConfig("lambda must be nonnegative".into()));
        }
        if self.c.is_empty() || self.c.iter().any(|&ci| !(ci > 0.0)) {
            return Err(Error::InvalidConfig(
                "proportions must be positive".into(),
            ));
        }
        let sum: f64 = self.c.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "proportions sum to {sum}, expected 1"
            )));
        }
        if !(0.0..=1.0).contains(&self.beta0) {
            return Err(Error::InvalidConfig("beta0 must lie in [0, 1]".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidConfig("gamma must lie in (0, 1)".into()));
        }
        if !(self.beta_min > 0.0 && self.beta_min < 1.0) {
            return Err(Error::InvalidConfig("beta_min must lie in (0, 1)".into()));
        }
        if self.avg_window == 0 {
            return Err(Error::InvalidConfig("averaging window must be >= 1".into()));
        }
        if !(self.r_tol > 0.0) {
            return Err(Error::InvalidConfig("r_tol must be positive".into()));
        }
        if self.adm_repeats == 0 {
            return Err(Error::InvalidConfig("adm repeats must be >= 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be >= 1".into()));
        }
        if !(self.gamma_mono > 0.0 && self.gamma_mono < 1.0) {
            return Err(Error::InvalidConfig("gamma_mono must lie in (0, 1)".into()));
        }
        if !(self.beta_floor > 0.0 && self.beta_floor <= 1.0) {
            return Err(Error::InvalidConfig("beta_floor must lie in (0, 1]".into()));
        }
        if self.p_check == 0 {
            return Err(Error::InvalidConfig("p_check must be >= 1".into()));
        }
        Ok(())
    }
}

/// One row of a solve trace.
#[derive(Debug, Clone, Copy)]
pub struct IterationRecord {
    pub k: usize,
    pub e_tilde: f64,
    pub e_hat: f64,
    /// Step length used to produce this iterate (`beta0` on row 0).
    pub beta: f64,
    /// Cells that changed relative to the previous iterate.
    pub changed_cells: usize,
    /// Auction runs consumed for this iterate.
    pub adm_runs: usize,
    /// Cell count of the region; constant across a run.
    pub region_count: usize,
}

/// Final state and full trace of a solve.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub region: IndicatorField,
    pub partition: Partition,
    pub trace: Vec<IterationRecord>,
    pub stop_reason: StopReason,
}

impl SolveResult {
    pub fn iterations(&self) -> usize {
        self.trace.last().map(|r| r.k).unwrap_or(0)
    }
}

/// Callback view of a freshly accepted iterate.
pub struct IterationView<'a> {
    pub record: &'a IterationRecord,
    pub region: &'a IndicatorField,
    pub partition: &'a Partition,
}

/// Best of `p` auction runs with seeds `base_seed + 1 ..= base_seed + p`,
/// judged by the region-restricted energy of `(support, candidate)`; ties
/// keep the earliest (lowest-seed) candidate. Returns the winner and its
/// energy. The runs are independent and may execute in parallel; the
/// selection is an ordered fold, so the result does not depend on timing.
pub fn best_of_p(
    support: &IndicatorField,
    cfg: &SolverConfig,
    base_seed: u64,
    p: usize,
) -> Result<(Partition, f64)> {
    use rayon::prelude::*;
    let candidates: Vec<(Partition, f64)> = (1..=p as u64)
        .into_par_iter()
        .map(|q| {
            let part = auction_dynamics(
                support,
                &cfg.c,
                cfg.tau,
                &cfg.auction,
                base_seed.wrapping_add(q),
            )?;
            let e = energy::energy_tilde(support, &part, cfg.tau)?;
            Ok((part, e))
        })
        .collect::<Result<_>>()?;
    Ok(argmin_by_energy(candidates))
}

/// Strictly-better selection keeps the first of equal candidates.
fn argmin_by_energy(candidates: Vec<(Partition, f64)>) -> (Partition, f64) {
    candidates
        .into_iter()
        .reduce(|best, next| if next.1 < best.1 { next } else { best })
        .expect("at least one candidate")
}

/// Step-length controller: once more than `avg_window` iterations have
/// passed, compare the sliding averages of the objective ending at entries
/// `k` and `k + 1` (1-based); a relative change below `r_tol` decays `beta`
/// by `gamma`.
pub fn beta_controller(
    trace: &[f64],
    avg_window: usize,
    r_tol: f64,
    beta: f64,
    gamma: f64,
    k: usize,
) -> f64 {
    if k <= avg_window || trace.len() < k + 1 {
        return beta;
    }
    let prev = averaged_energy(trace, avg_window, k).expect("window checked");
    let next = averaged_energy(trace, avg_window, k + 1).expect("window checked");
    if (next - prev).abs() < r_tol * next.abs() {
        gamma * beta
    } else {
        beta
    }
}

/// Per-run assertions that hold for every method on every iterate.
fn assert_invariants(region: &IndicatorField, partition: &Partition, region_cells: usize) {
    assert_eq!(region.count(), region_cells, "region volume drifted");
    assert_eq!(
        partition.support().count(),
        region_cells,
        "partition support volume drifted"
    );
    assert!(
        partition.support().values() == region.values(),
        "partition support departed from the region"
    );
}

/// Entry point: dispatches on the configured method.
pub fn solve(u0: &IndicatorField, cfg: &SolverConfig) -> Result<SolveResult> {
    solve_observed(u0, cfg, &mut |_| {})
}

/// As [`solve`], invoking `observer` after every accepted iterate.
pub fn solve_observed(
    u0: &IndicatorField,
    cfg: &SolverConfig,
    observer: &mut dyn FnMut(IterationView<'_>),
) -> Result<SolveResult> {
    cfg.validate()?;
    if u0.count() == 0 {
        return Err(Error::EmptyField);
    }
    match cfg.method {
        Method::One | Method::Two => stepped_method(u0, cfg, observer),
        Method::Monotone => monotone_method(u0, cfg, observer),
    }
}

/// Shared loop of methods one and two. Method two differs in using the
/// regularized dominant function and a single auction run per iteration.
fn stepped_method(
    u0: &IndicatorField,
    cfg: &SolverConfig,
    observer: &mut dyn FnMut(IterationView<'_>),
) -> Result<SolveResult> {
    let regularized = cfg.method == Method::Two;
    let p = if regularized { 1 } else { cfg.adm_repeats };
    let region_cells = u0.count();

    let mut seed_cursor = cfg.seed;
    let mut region = u0.clone();
    let (mut partition, e_tilde) = best_of_p(&region, cfg, seed_cursor, p)?;
    seed_cursor = seed_cursor.wrapping_add(p as u64);

    let mut energies = vec![e_tilde];
    let mut beta = cfg.beta0;
    let mut trace = vec![IterationRecord {
        k: 0,
        e_tilde,
        e_hat: energy::energy_hat(&partition, cfg.tau)?,
        beta,
        changed_cells: 0,
        adm_runs: p,
        region_count: region_cells,
    }];
    assert_invariants(&region, &partition, region_cells);
    observer(IterationView {
        record: &trace[0],
        region: &region,
        partition: &partition,
    });

    let mut k = 0usize;
    let stop_reason = loop {
        if beta <= cfg.beta_min {
            break StopReason::BetaExhausted;
        }
        if k >= cfg.max_iters {
            break StopReason::MaxIterations;
        }

        let phi = if regularized {
            dominant_function_regularized(&region, &partition, cfg.tau, cfg.lambda, cfg.tau_prime)?
        } else {
            dominant_function(&region, &partition, cfg.tau)?
        };
        let processed = threshold_volume(&phi, region_cells)?;
        let (next_region, sets) = partial_update(&region, &processed, &phi, beta)?;

        let (next_partition, next_e) = best_of_p(&next_region, cfg, seed_cursor, p)?;
        seed_cursor = seed_cursor.wrapping_add(p as u64);
        energies.push(next_e);

        let beta_used = beta;
        if k > cfg.avg_window {
            // Entry k+1 (1-based) of the history is the energy of iterate k.
            beta = beta_controller(&energies, cfg.avg_window, cfg.r_tol, beta, cfg.gamma, k + 1);
        }

        let converged = next_region.equal(&region)?;
        region = next_region;
        partition = next_partition;
        k += 1;

        trace.push(IterationRecord {
            k,
            e_tilde: next_e,
            e_hat: energy::energy_hat(&partition, cfg.tau)?,
            beta: beta_used,
            changed_cells: 2 * sets.k_cells,
            adm_runs: p,
            region_count: region_cells,
        });
        assert_invariants(&region, &partition, region_cells);
        observer(IterationView {
            record: trace.last().expect("just pushed"),
            region: &region,
            partition: &partition,
        });

        if converged {
            break StopReason::RegionFixedPoint;
        }
    };

    Ok(SolveResult {
        region,
        partition,
        trace,
        stop_reason,
    })
}

/// Objective-monotone variant built on method one's pieces.
///
/// From an accepted state, trial steps start at full step length and shrink
/// by `gamma_mono` after every rejection (a trial whose objective would
/// drop). Once the trial step length falls below `beta_floor`, the
/// partition of the current region is re-solved `p_check` times with fresh
/// seeds: finding a strictly shorter partition corrects the current
/// objective (possibly reverting the latest accepted step if the corrected
/// value invalidates it); finding none certifies the region and stops.
fn monotone_method(
    u0: &IndicatorField,
    cfg: &SolverConfig,
    observer: &mut dyn FnMut(IterationView<'_>),
) -> Result<SolveResult> {
    let p = cfg.adm_repeats;
    let region_cells = u0.count();
    let mut seed_cursor = cfg.seed;

    let mut region = u0.clone();
    let (mut partition, mut e_current) = best_of_p(&region, cfg, seed_cursor, p)?;
    seed_cursor = seed_cursor.wrapping_add(p as u64);

    // Stack of accepted predecessors, for the one-step revert.
    let mut previous: Vec<(IndicatorField, Partition, f64)> = Vec::new();
    let mut trace = vec![IterationRecord {
        k: 0,
        e_tilde: e_current,
        e_hat: energy::energy_hat(&partition, cfg.tau)?,
        beta: 1.0,
        changed_cells: 0,
        adm_runs: p,
        region_count: region_cells,
    }];
    assert_invariants(&region, &partition, region_cells);
    observer(IterationView {
        record: &trace[0],
        region: &region,
        partition: &partition,
    });

    let mut beta = 1.0f64;
    let mut adm_since_accept = 0usize;
    let mut trials = 0usize;
    let stop_reason = loop {
        if trials >= cfg.max_iters {
            break StopReason::MaxIterations;
        }
        trials += 1;

        if beta >= cfg.beta_floor {
            let phi = dominant_function(&region, &partition, cfg.tau)?;
            let processed = threshold_volume(&phi, region_cells)?;
            let (candidate_region, sets) = partial_update(&region, &processed, &phi, beta)?;
            let (candidate_partition, candidate_e) =
                best_of_p(&candidate_region, cfg, seed_cursor, p)?;
            seed_cursor = seed_cursor.wrapping_add(p as u64);
            adm_since_accept += p;

            if candidate_e >= e_current {
                previous.push((region.clone(), partition.clone(), e_current));
                region = candidate_region;
                partition = candidate_partition;
                e_current = candidate_e;
                trace.push(IterationRecord {
                    k: trace.len(),
                    e_tilde: e_current,
                    e_hat: energy::energy_hat(&partition, cfg.tau)?,
                    beta,
                    changed_cells: 2 * sets.k_cells,
                    adm_runs: adm_since_accept,
                    region_count: region_cells,
                });
                assert_invariants(&region, &partition, region_cells);
                observer(IterationView {
                    record: trace.last().expect("just pushed"),
                    region: &region,
                    partition: &partition,
                });
                adm_since_accept = 0;
                beta = 1.0;
            } else {
                beta *= cfg.gamma_mono;
            }
            continue;
        }

        // Step length collapsed: decide between a bad partition and a
        // finished region by re-solving the partition of the current region.
        let mut improved: Option<(Partition, f64)> = None;
        for q in 1..=cfg.p_check as u64 {
            let candidate = auction_dynamics(
                &region,
                &cfg.c,
                cfg.tau,
                &cfg.auction,
                seed_cursor.wrapping_add(q),
            )?;
            let e = energy::energy_tilde(&region, &candidate, cfg.tau)?;
            let better_than_current = e < e_current;
            let better_than_found = improved.as_ref().map_or(true, |(_, be)| e < *be);
            if better_than_current && better_than_found {
                improved = Some((candidate, e));
            }
        }
        seed_cursor = seed_cursor.wrapping_add(cfg.p_check as u64);
        adm_since_accept += cfg.p_check;

        match improved {
            None => break StopReason::MonotoneAccept,
            Some((better_partition, better_e)) => {
                partition = better_partition;
                e_current = better_e;
                let last = trace.last_mut().expect("trace never empty");
                last.e_tilde = e_current;
                last.e_hat = energy::energy_hat(&partition, cfg.tau)?;

                // The corrected objective may invalidate the latest accepted
                // step; if so, take that step back and continue from the
                // predecessor.
                if let Some((_, _, prev_e)) = previous.last() {
                    if e_current < *prev_e {
                        let (prev_region, prev_partition, prev_energy) =
                            previous.pop().expect("nonempty");
                        region = prev_region;
                        partition = prev_partition;
                        e_current = prev_energy;
                        trace.pop();
                    }
                }
                beta = 1.0;
            }
        }
    };

    Ok(SolveResult {
        region,
        partition,
        trace,
        stop_reason,
    })
}
