//! Allocation policy: decile cutoffs over the distribution of (absolute)
//! predicted returns, per-bin realized price-difference sums, and the
//! buy-only-in-profitable-bins allocation rule.
//!
//! Bins are 1-based. Bin 1 is the sell region (predicted return below the
//! first cutoff, which is pinned at zero); bins 2..n cover successive
//! half-open intervals `[Q_j, Q_{j+1})` of the cutoff vector. Bin identity
//! is positional and stays stable as cutoffs are refreshed day by day.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::floor_units;

/// Per-bin purchase quantity. `Sell` marks the liquidation bin; `Units(0)`
/// means "do nothing" for predictions landing in that bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Allocation {
    Sell,
    Units(u64),
}

impl Allocation {
    pub fn units(&self) -> u64 {
        match self {
            Allocation::Sell => 0,
            Allocation::Units(u) => *u,
        }
    }
}

impl std::fmt::Display for Allocation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Allocation::Sell => write!(f, "SELL"),
            Allocation::Units(u) => write!(f, "{u}"),
        }
    }
}

/// Tuning for cutoff construction and policy adaptation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolicyConfig {
    /// Percentile fractions for the interior cutoffs (first six deciles).
    pub decile_fractions: Vec<f64>,
    /// Minimum per-bin price-difference sum required before allocating.
    pub epsilon: f64,
    /// Units purchased in a buy bin; usually set from capital at period start.
    pub a_max: u64,
    /// Predicted returns seeded into the growing cutoff window before the
    /// evaluation start.
    pub bootstrap_steps: usize,
    pub quantile_method: QuantileMethod,
    /// Build cutoffs from |r| (the default) or from raw predicted returns.
    pub return_transform: ReturnTransform,
    /// Refresh cutoffs every day from the growing return history.
    pub adapt_cutoffs: bool,
    /// Re-evaluate a bin's allocation when its delta crosses epsilon.
    pub adapt_allocations: bool,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            decile_fractions: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6],
            epsilon: 0.0,
            a_max: 1,
            bootstrap_steps: 120,
            quantile_method: QuantileMethod::NearestRank,
            return_transform: ReturnTransform::Absolute,
            adapt_cutoffs: true,
            adapt_allocations: true,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.decile_fractions.is_empty() {
            return Err(Error::Config("no cutoff fractions".into()));
        }
        let increasing = self
            .decile_fractions
            .windows(2)
            .all(|p| p[1] > p[0]);
        if !increasing
            || self.decile_fractions.iter().any(|f| !(0.0..1.0).contains(f) || *f <= 0.0)
        {
            return Err(Error::Config(
                "cutoff fractions must be strictly increasing within (0, 1)".into(),
            ));
        }
        if self.epsilon < 0.0 {
            return Err(Error::Config("epsilon must be non-negative".into()));
        }
        if self.a_max == 0 {
            return Err(Error::Config("a_max must be positive".into()));
        }
        Ok(())
    }

    /// Bin count implied by the fractions (one sell bin + interior bins +
    /// the open-ended top bin).
    pub fn bin_count(&self) -> usize {
        self.decile_fractions.len() + 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantileMethod {
    /// Type-1 / nearest-rank: exactly reproducible, no interpolation.
    NearestRank,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReturnTransform {
    Absolute,
    Raw,
}

/// Nearest-rank (type-1) empirical quantile: the `ceil(p*n)`-th smallest.
pub fn nearest_rank(sorted: &[f64], fraction: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let n = sorted.len() as f64;
    let rank = (fraction * n).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

/// Cutoff vector Q with Q_1 = 0. `merged` is set when ties in the return
/// distribution produced non-strict cutoffs; the duplicate values stay in
/// place (classification then simply never reaches the collapsed bins).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffSet {
    pub q: Vec<f64>,
    pub merged: bool,
}

impl CutoffSet {
    /// Number of bins the cutoffs induce.
    pub fn bin_count(&self) -> usize {
        self.q.len() + 1
    }

    /// Strictly increasing cutoffs with duplicates removed, for display.
    pub fn deduped(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::with_capacity(self.q.len());
        for &v in &self.q {
            if out.last().map_or(true, |last| v > *last) {
                out.push(v);
            }
        }
        out
    }
}

/// Builds Q from the history of predicted returns: Q_1 = 0 and one cutoff
/// per configured fraction of the (absolute) return distribution.
///
/// Fewer than 10 samples are refused; bins would be statistically
/// meaningless.
pub fn compute_cutoffs(predicted_returns: &[f64], config: &PolicyConfig) -> Result<CutoffSet> {
    config.validate()?;
    if predicted_returns.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "{} predicted returns; need at least 10 for cutoffs",
            predicted_returns.len()
        )));
    }
    let mut values: Vec<f64> = match config.return_transform {
        ReturnTransform::Absolute => predicted_returns.iter().map(|r| r.abs()).collect(),
        // Raw-return reading: negative deciles clamp to the sell boundary.
        ReturnTransform::Raw => predicted_returns.iter().map(|r| r.max(0.0)).collect(),
    };
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite returns"));
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("predicted returns".into()));
    }

    let mut q = Vec::with_capacity(config.decile_fractions.len() + 1);
    q.push(0.0);
    for &fraction in &config.decile_fractions {
        q.push(nearest_rank(&values, fraction));
    }
    let merged = q.windows(2).any(|p| p[1] <= p[0]);
    Ok(CutoffSet { q, merged })
}

/// Def.-2 classification: bin 1 below Q_1, half-open interior intervals
/// (lower-inclusive), top bin at or above the last cutoff.
pub fn classify(r_hat: f64, cutoffs: &CutoffSet) -> usize {
    let q = &cutoffs.q;
    if r_hat < q[0] {
        return 1;
    }
    for j in 1..q.len() {
        if r_hat < q[j] {
            return j + 1;
        }
    }
    q.len() + 1
}

/// Running per-bin sums of realized price differences over completed
/// buy-sell cycles, and cycle counts. Index 1 (the sell bin) stays unused.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinStats {
    delta: Vec<f64>,
    count: Vec<u64>,
}

impl BinStats {
    pub fn new(bin_count: usize) -> BinStats {
        BinStats {
            delta: vec![0.0; bin_count],
            count: vec![0; bin_count],
        }
    }

    pub fn bin_count(&self) -> usize {
        self.delta.len()
    }

    /// Sum of (sell − buy) price differences for cycles entered in `bin`.
    pub fn delta(&self, bin: usize) -> f64 {
        self.delta[bin - 1]
    }

    pub fn cycle_count(&self, bin: usize) -> u64 {
        self.count[bin - 1]
    }
}

/// Eq.-11 rule: allocate `a_max` to every bin whose delta exceeds epsilon.
pub fn optimal_allocations(stats: &BinStats, config: &PolicyConfig) -> Vec<Allocation> {
    let mut out = Vec::with_capacity(stats.bin_count());
    out.push(Allocation::Sell);
    for bin in 2..=stats.bin_count() {
        if stats.delta(bin) > config.epsilon {
            out.push(Allocation::Units(config.a_max));
        } else {
            out.push(Allocation::Units(0));
        }
    }
    out
}

/// Records a completed buy-sell cycle entered in `entry_bin`. Returns true
/// when the update moved the bin's delta across the epsilon threshold (so
/// its allocation needs re-evaluation).
pub fn record_trade_outcome(
    stats: &mut BinStats,
    entry_bin: usize,
    y_buy: f64,
    y_sell: f64,
    epsilon: f64,
) -> Result<bool> {
    if entry_bin <= 1 || entry_bin > stats.bin_count() {
        return Err(Error::Config(format!(
            "cycle cannot be entered in bin {entry_bin}"
        )));
    }
    let idx = entry_bin - 1;
    let before = stats.delta[idx] > epsilon;
    stats.delta[idx] += y_sell - y_buy;
    stats.count[idx] += 1;
    let after = stats.delta[idx] > epsilon;
    Ok(before != after)
}

/// The policy state a backtest owns: cutoffs, allocations, per-bin stats
/// and the growing predicted-return history behind the cutoffs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationPolicy {
    pub cutoffs: CutoffSet,
    pub allocations: Vec<Allocation>,
    pub stats: BinStats,
    /// Growing |r| history feeding `compute_cutoffs`.
    pub return_history: Vec<f64>,
}

impl AllocationPolicy {
    pub fn new(
        cutoffs: CutoffSet,
        allocations: Vec<Allocation>,
        stats: BinStats,
        return_history: Vec<f64>,
    ) -> Result<AllocationPolicy> {
        let n = cutoffs.bin_count();
        if allocations.len() != n || stats.bin_count() != n {
            return Err(Error::Config(format!(
                "policy shape mismatch: {} cutoff bins, {} allocations, {} stat bins",
                n,
                allocations.len(),
                stats.bin_count()
            )));
        }
        if allocations[0] != Allocation::Sell
            || allocations[1..].iter().any(|a| *a == Allocation::Sell)
        {
            return Err(Error::Config(
                "exactly the first bin must be the sell bin".into(),
            ));
        }
        Ok(AllocationPolicy {
            cutoffs,
            allocations,
            stats,
            return_history,
        })
    }

    /// Fixed two-bin policy `Q=[0], A=[SELL, units]`: the directional
    /// up-down strategy as a special case.
    pub fn up_down(units: u64) -> AllocationPolicy {
        AllocationPolicy {
            cutoffs: CutoffSet {
                q: vec![0.0],
                merged: false,
            },
            allocations: vec![Allocation::Sell, Allocation::Units(units)],
            stats: BinStats::new(2),
            return_history: Vec::new(),
        }
    }

    pub fn bin_count(&self) -> usize {
        self.cutoffs.bin_count()
    }

    pub fn classify(&self, r_hat: f64) -> usize {
        classify(r_hat, &self.cutoffs)
    }

    /// Appends a new predicted return and refreshes Q on the grown history.
    pub fn update_cutoffs(&mut self, new_r_hat: f64, config: &PolicyConfig) -> Result<()> {
        self.return_history.push(new_r_hat);
        self.cutoffs = compute_cutoffs(&self.return_history, config)?;
        Ok(())
    }
}

/// Maximum whole units purchasable with `capital` at `unit_price`.
pub fn compute_a_max(capital: f64, unit_price: f64) -> Result<u64> {
    if !(unit_price.is_finite() && unit_price > 0.0) {
        return Err(Error::Config(format!("non-positive unit price {unit_price}")));
    }
    if !(capital.is_finite() && capital > 0.0) {
        return Err(Error::Config(format!("non-positive capital {capital}")));
    }
    Ok(floor_units(capital, unit_price))
}

/// One row of a policy snapshot, mirroring the cutoff/delta table layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotRow {
    pub bin: usize,
    pub lower: f64,
    /// None for the open-ended top bin.
    pub upper: Option<f64>,
    pub delta: f64,
    pub cycles: u64,
    pub allocation: Allocation,
}

/// Tabular view of the policy at a point in time.
pub fn snapshot(policy: &AllocationPolicy) -> Vec<SnapshotRow> {
    let n = policy.bin_count();
    let q = &policy.cutoffs.q;
    (1..=n)
        .map(|bin| SnapshotRow {
            bin,
            lower: if bin == 1 { f64::NEG_INFINITY } else { q[bin - 2] },
            upper: if bin == 1 {
                Some(q[0])
            } else if bin == n {
                None
            } else {
                Some(q[bin - 1])
            },
            delta: if bin == 1 { 0.0 } else { policy.stats.delta(bin) },
            cycles: if bin == 1 { 0 } else { policy.stats.cycle_count(bin) },
            allocation: policy.allocations[bin - 1],
        })
        .collect()
}
