//! Volume-constrained shortest partitions of a fixed region.
//!
//! Cells of the region bid for phase membership: the assignment-problem
//! coefficient of phase `i` at cell `x` is `a_i(x) = 1 - sum_{j != i}
//! (G_tau * u_j)(x)`, so maximizing the total assigned coefficient under
//! exact per-phase cell counts minimizes the heat-content interface energy.
//! The inner loop is a membership auction: unassigned cells bid their value
//! margin plus `eps` for their best phase, full phases evict their
//! lowest-bid member, and prices only rise. An outer loop recomputes the
//! coefficients from the new partition and rescales `eps` geometrically
//! from `eps0` down to `eps_min / n`, warm-starting prices across rounds.
//!
//! Everything is deterministic: unassigned cells are processed in canonical
//! cell order, best/second phases break ties toward lower index, and
//! evictions break bid ties toward canonical order. The bidding itself is
//! inherently sequential and runs single-threaded; only the coefficient
//! convolutions parallelize.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::field::{IndicatorField, Partition, ScalarField};
use crate::rng::SplitMix64;
use crate::spectral::gaussian_convolve_indicator;

/// Stopping parameters of the auction outer loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuctionParams {
    /// Maximum number of outer coefficient-recomputation steps.
    pub max_steps: usize,
    /// Terminal bid increment; the inner scaling stops once `eps` falls
    /// below `eps_min / n`.
    pub eps_min: f64,
    /// Geometric scaling divisor applied to `eps` between rounds.
    pub alpha: f64,
    /// Initial bid increment.
    pub eps0: f64,
}

impl AuctionParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_steps == 0 {
            return Err(Error::InvalidConfig("max_steps must be >= 1".into()));
        }
        if !(self.eps_min > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "eps_min must be positive, got {}",
                self.eps_min
            )));
        }
        if !(self.alpha > 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must exceed 1, got {}",
                self.alpha
            )));
        }
        if self.eps0 < self.eps_min {
            return Err(Error::InvalidConfig(format!(
                "eps0 ({}) must be at least eps_min ({})",
                self.eps0, self.eps_min
            )));
        }
        Ok(())
    }
}

/// One price per phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceVector(pub Vec<f64>);

/// Per-phase assignment coefficients `a_i = 1 - sum_{j != i} G_tau * u_j`.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    phases: Vec<ScalarField>,
}

impl CoefficientField {
    /// Wraps externally supplied per-phase coefficients (synthetic
    /// assignment instances, tests).
    pub fn from_phases(phases: Vec<ScalarField>) -> Self {
        Self { phases }
    }

    pub fn n(&self) -> usize {
        self.phases.len()
    }

    pub fn phase(&self, i: usize) -> &ScalarField {
        &self.phases[i]
    }

    pub fn phases(&self) -> &[ScalarField] {
        &self.phases
    }
}

/// Integer cell-count target per phase.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeTargets(pub Vec<usize>);

impl VolumeTargets {
    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }
}

/// Discretizes volume proportions into integer cell counts that sum exactly
/// to `active_cells`: floor shares first, then the remainder goes to the
/// largest fractional parts, ties toward lower phase index. Every phase
/// receives at least one cell.
pub fn volume_targets(c: &[f64], active_cells: usize) -> Result<VolumeTargets> {
    let n = c.len();
    if n == 0 {
        return Err(Error::InvalidConfig("no proportions given".into()));
    }
    if c.iter().any(|&ci| !(ci > 0.0)) {
        return Err(Error::InvalidConfig(
            "all proportions must be positive".into(),
        ));
    }
    let sum: f64 = c.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidConfig(format!(
            "proportions sum to {sum}, expected 1"
        )));
    }
    if active_cells < n {
        return Err(Error::Infeasible(format!(
            "{active_cells} active cells cannot host {n} phases"
        )));
    }

    let mut targets: Vec<usize> = c
        .iter()
        .map(|&ci| (ci * active_cells as f64).floor() as usize)
        .collect();
    let assigned: usize = targets.iter().sum();
    let mut remainders: Vec<(usize, f64)> = c
        .iter()
        .enumerate()
        .map(|(i, &ci)| (i, ci * active_cells as f64 - targets[i] as f64))
        .collect();
    remainders.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    for &(i, _) in remainders.iter().take(active_cells - assigned) {
        targets[i] += 1;
    }

    // Lift any zero target by taking a cell from the currently largest one.
    loop {
        let Some(zero) = targets.iter().position(|&t| t == 0) else {
            break;
        };
        let donor = (0..targets.len())
            .max_by(|&a, &b| targets[a].cmp(&targets[b]).then(b.cmp(&a)))
            .expect("nonempty");
        if targets[donor] <= 1 {
            return Err(Error::Infeasible(
                "cannot give every phase at least one cell".into(),
            ));
        }
        targets[donor] -= 1;
        targets[zero] += 1;
    }

    debug_assert_eq!(targets.iter().sum::<usize>(), active_cells);
    Ok(VolumeTargets(targets))
}

/// Random partition of the support with exact per-phase counts: the active
/// cells are shuffled once and cut into consecutive blocks.
pub fn random_partition(
    support: &IndicatorField,
    targets: &VolumeTargets,
    seed: u64,
) -> Result<Partition> {
    if targets.total() != support.count() {
        return Err(Error::Infeasible(format!(
            "targets sum to {}, support has {} cells",
            targets.total(),
            support.count()
        )));
    }
    let mut cells = support.active_cells();
    let mut rng = SplitMix64::new(seed);
    rng.shuffle(&mut cells);

    let spec = support.spec();
    let mut labels = vec![0u8; spec.cells()];
    let mut start = 0usize;
    for (i, &t) in targets.0.iter().enumerate() {
        for &cell in &cells[start..start + t] {
            labels[cell] = (i + 1) as u8;
        }
        start += t;
    }
    Partition::from_labels(spec, &labels, targets.n())
}

/// Assignment coefficients of a partition at time `tau`.
pub fn compute_coefficients(p: &Partition, tau: f64) -> Result<CoefficientField> {
    if !(tau > 0.0) {
        return Err(Error::NonPositiveTau(tau));
    }
    let total = gaussian_convolve_indicator(p.support(), tau)?;
    compute_coefficients_with_total(p, tau, &total)
}

/// Coefficients with the smoothed support supplied by the caller, so that
/// repeated solves over a fixed region smooth it only once. The last
/// phase's convolution comes from the mass identity `G * u_n = G * support
/// - sum_{j < n} G * u_j`, saving one transform per step.
fn compute_coefficients_with_total(
    p: &Partition,
    tau: f64,
    total: &ScalarField,
) -> Result<CoefficientField> {
    let n = p.n();
    let cells = p.spec().cells();
    let mut smoothed: Vec<Vec<f64>> = p.phases()[..n - 1]
        .iter()
        .map(|u| gaussian_convolve_indicator(u, tau).map(|s| s.values().to_vec()))
        .collect::<Result<_>>()?;
    let mut last = total.values().to_vec();
    for s in &smoothed {
        for (l, &v) in last.iter_mut().zip(s) {
            *l -= v;
        }
    }
    smoothed.push(last);

    let phases = smoothed
        .into_iter()
        .map(|s| {
            let values: Vec<f64> = (0..cells)
                .map(|idx| 1.0 - (total.values()[idx] - s[idx]))
                .collect();
            ScalarField::from_values_unchecked(p.spec(), values)
        })
        .collect();
    Ok(CoefficientField { phases })
}

const UNASSIGNED: u32 = u32::MAX;

/// Min-heap entry ordered by (bid ascending, cell ascending); `Ord` is
/// inverted so `BinaryHeap::pop` yields the smallest bid.
#[derive(Debug, Clone, Copy, PartialEq)]
struct MemberBid {
    bid: f64,
    cell: u32,
}

impl Eq for MemberBid {}

impl PartialOrd for MemberBid {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MemberBid {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .bid
            .total_cmp(&self.bid)
            .then(other.cell.cmp(&self.cell))
    }
}

/// Sequential auction state over the compacted active cells.
struct AuctionState {
    /// Per active cell: owning phase or UNASSIGNED.
    assigned: Vec<u32>,
    /// Per active cell: the bid it was admitted with.
    stored_bid: Vec<f64>,
    /// Per phase: member count, lazily-cleaned min-bid heap.
    count: Vec<usize>,
    heaps: Vec<BinaryHeap<MemberBid>>,
    unassigned: usize,
}

impl AuctionState {
    fn new(active: usize, n: usize) -> Self {
        Self {
            assigned: vec![UNASSIGNED; active],
            stored_bid: vec![0.0; active],
            count: vec![0; n],
            heaps: (0..n).map(|_| BinaryHeap::new()).collect(),
            unassigned: active,
        }
    }

    /// Smallest valid member bid of a phase; stale heap entries are dropped.
    fn min_member_bid(&mut self, phase: usize) -> MemberBid {
        loop {
            let entry = *self.heaps[phase]
                .peek()
                .expect("phase with members has heap entries");
            let valid = self.assigned[entry.cell as usize] == phase as u32
                && self.stored_bid[entry.cell as usize] == entry.bid;
            if valid {
                return entry;
            }
            self.heaps[phase].pop();
        }
    }

    fn admit(&mut self, cell: usize, phase: usize, bid: f64) {
        self.assigned[cell] = phase as u32;
        self.stored_bid[cell] = bid;
        self.heaps[phase].push(MemberBid {
            bid,
            cell: cell as u32,
        });
        self.unassigned -= 1;
    }
}

/// One membership auction at fixed bid increment `eps`.
///
/// Starts from everything unassigned with the given prices, and ends with
/// every active cell assigned and per-phase counts equal to the targets.
/// Returns the final partition and prices.
pub fn membership_auction(
    eps: f64,
    targets: &VolumeTargets,
    coeff: &CoefficientField,
    p0: &PriceVector,
    support: &IndicatorField,
) -> Result<(Partition, PriceVector)> {
    if !(eps > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "bid increment must be positive, got {eps}"
        )));
    }
    let n = targets.n();
    if coeff.n() != n || p0.0.len() != n {
        return Err(Error::InvalidConfig(
            "phase counts of targets, coefficients and prices disagree".into(),
        ));
    }
    let active = support.active_cells();
    if targets.total() != active.len() {
        return Err(Error::Infeasible(format!(
            "targets sum to {}, support has {} cells",
            targets.total(),
            active.len()
        )));
    }

    // Compact the coefficients onto the active cells.
    let a: Vec<Vec<f64>> = (0..n)
        .map(|i| active.iter().map(|&c| coeff.phase(i).values()[c]).collect())
        .collect();
    let mut price = p0.0.clone();

    if n == 1 {
        // Degenerate case: no second-best phase exists, so every cell is
        // admitted directly with bid a_1 + eps and the price settles at the
        // minimum member bid once the single phase is full.
        let min_a = a[0].iter().copied().fold(f64::INFINITY, f64::min);
        price[0] = min_a + eps;
        let labels = labels_from(support, &active, &vec![0u32; active.len()]);
        let partition = Partition::from_labels(support.spec(), &labels, 1)?;
        return Ok((partition, PriceVector(price)));
    }

    let mut state = AuctionState::new(active.len(), n);
    let mut guard: u64 = 0;
    let guard_limit: u64 = ticket_guard_limit(active.len(), n, eps);

    while state.unassigned > 0 {
        for cell in 0..active.len() {
            if state.assigned[cell] != UNASSIGNED {
                continue;
            }
            guard += 1;
            if guard > guard_limit {
                return Err(Error::Internal(
                    "membership auction failed to terminate".into(),
                ));
            }

            // Best and second-best phase by net value, ties to lower index.
            let mut best_i = 0usize;
            let mut best_v = f64::NEG_INFINITY;
            let mut second_v = f64::NEG_INFINITY;
            for i in 0..n {
                let v = a[i][cell] - price[i];
                if v > best_v {
                    second_v = best_v;
                    best_v = v;
                    best_i = i;
                } else if v > second_v {
                    second_v = v;
                }
            }
            let bid = price[best_i] + eps + best_v - second_v;

            if state.count[best_i] == targets.0[best_i] {
                // Phase is full: evict the lowest-bid member, admit the
                // bidder, and raise the price to the new minimum bid.
                let victim = state.min_member_bid(best_i);
                state.heaps[best_i].pop();
                state.assigned[victim.cell as usize] = UNASSIGNED;
                state.unassigned += 1;
                state.admit(cell, best_i, bid);
                price[best_i] = state.min_member_bid(best_i).bid;
                debug_assert_eq!(state.count[best_i], targets.0[best_i]);
            } else {
                state.admit(cell, best_i, bid);
                state.count[best_i] += 1;
                if state.count[best_i] == targets.0[best_i] {
                    price[best_i] = state.min_member_bid(best_i).bid;
                }
            }
            debug_assert_eq!(
                state.count.iter().sum::<usize>(),
                active.len() - state.unassigned
            );
        }
    }
    debug_assert_eq!(&state.count, &targets.0);

    let labels = labels_from(support, &active, &state.assigned);
    let partition = Partition::from_labels(support.spec(), &labels, n)?;
    Ok((partition, PriceVector(price)))
}

fn labels_from(support: &IndicatorField, active: &[usize], assigned: &[u32]) -> Vec<u8> {
    let mut labels = vec![0u8; support.spec().cells()];
    for (slot, &cell) in active.iter().enumerate() {
        labels[cell] = (assigned[slot] + 1) as u8;
    }
    labels
}

/// Shortest volume-constrained partition of `support` by auction dynamics
/// with eps-scaling. Deterministic for a fixed seed.
pub fn auction_dynamics(
    support: &IndicatorField,
    c: &[f64],
    tau: f64,
    params: &AuctionParams,
    seed: u64,
) -> Result<Partition> {
    params.validate()?;
    if support.count() == 0 {
        return Err(Error::EmptyField);
    }
    let targets = volume_targets(c, support.count())?;
    let n = targets.n();
    let eps_bar = params.eps_min / n as f64;

    let mut partition = random_partition(support, &targets, seed)?;
    let total = gaussian_convolve_indicator(support, tau)?;
    for _ in 0..params.max_steps {
        let coeff = compute_coefficients_with_total(&partition, tau, &total)?;
        let mut price = PriceVector(vec![0.0; n]);
        let mut eps = params.eps0;
        let mut output: Option<Partition> = None;
        while eps >= eps_bar {
            let (out, new_price) = membership_auction(eps, &targets, &coeff, &price, support)?;
            price = new_price;
            eps /= params.alpha;
            if eps < eps_bar {
                output = Some(out);
            }
        }
        let next = output.expect("eps0 >= eps_min >= eps_bar, so at least one round ran");
        let converged = next.same_cells(&partition);
        partition = next;
        if converged {
            break;
        }
    }
    debug_assert_eq!(partition.counts(), targets.0);
    Ok(partition)
}

/// Loose upper bound on bid events before something must be wrong: each bid
/// raises a price by at least eps and the coefficient range is bounded.
fn ticket_guard_limit(active: usize, n: usize, eps: f64) -> u64 {
    let range = 2.0 * n as f64 + 4.0;
    let per_cell = (range / eps).ceil().max(16.0);
    ((active as f64 + 1.0) * n as f64 * per_cell * 8.0) as u64
}
