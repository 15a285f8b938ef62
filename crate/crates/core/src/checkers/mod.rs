//! Executable checks of mechanism properties.
//!
//! Every checker returns a [`PropertyReport`]. A `Violated` verdict always carries a
//! witness that can be re-checked from raw instance data; when several witnesses
//! exist the first one in a fixed enumeration order is reported, so results do not
//! depend on evaluation order.

mod basic;
mod ic;
mod nt;
mod payments;

pub use basic::{check_ir, check_npt, check_structural_po};
pub use ic::{check_ic_bruteforce, check_wmon, ReportPair};
pub use nt::{
    check_nt_indivisible, nt_trade, search_nt_divisible, verify_nt_witness, NtTrade, DEFAULT_NT_CAP,
};
pub use payments::{
    check_pi, check_vm, find_critical_valuations, CriticalValuationProfile, Segment,
};

use serde::Serialize;
use std::collections::BTreeMap;

use crate::error::Result;
use crate::model::{AgentType, Outcome, SingleDimInstance, Utility};

/// Slack for definitional inequalities.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Slack for payment reconstruction, which is limited by the valuation sweep.
pub const DEFAULT_PI_TOL: f64 = 1e-6;
/// Default number of misreport grid points.
pub const DEFAULT_GRID_POINTS: usize = 50;

/// A deterministic direct mechanism on single-dimensional instances.
pub trait Mechanism {
    fn name(&self) -> &str;
    fn run(&self, instance: &SingleDimInstance) -> Result<Outcome>;
}

/// Wraps a closure as a [`Mechanism`]; handy for test stubs.
pub struct FnMechanism<F> {
    name: String,
    f: F,
}

impl<F> FnMechanism<F>
where
    F: Fn(&SingleDimInstance) -> Result<Outcome>,
{
    pub fn new(name: impl Into<String>, f: F) -> Self {
        Self { name: name.into(), f }
    }
}

impl<F> Mechanism for FnMechanism<F>
where
    F: Fn(&SingleDimInstance) -> Result<Outcome>,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn run(&self, instance: &SingleDimInstance) -> Result<Outcome> {
        (self.f)(instance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Violated,
    Inconclusive,
}

/// Evidence for a `Violated` verdict. Indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// An agent whose utility is negative (or `-inf`).
    Agent { agent: usize, utility: Utility, payment: f64, budget: f64 },
    /// Payments sum below zero.
    Auctioneer { revenue: f64 },
    NegativePayment { agent: usize, payment: f64 },
    /// An item that is not fully allocated.
    UnallocatedItem { item: usize, allocated: f64 },
    /// A no-trade violation.
    Trade(NtTrade),
    /// `winner` holds something while the higher-valuation `agent` keeps budget.
    UnspentBudget { winner: usize, agent: usize, payment: f64, budget: f64 },
    /// Aggregate quality dropped when the report went up.
    Monotonicity { agent: usize, v_low: f64, v_high: f64, quality_low: f64, quality_high: f64 },
    /// Payment differs from the one implied by the critical valuations.
    PaymentMismatch { agent: usize, valuation: f64, payment: f64, reconstructed: f64 },
    /// The weak-monotonicity inequality fails for this pair of reports.
    WeakMonotonicity {
        agent: usize,
        report: Vec<f64>,
        alternative: Vec<f64>,
        allocation_report: Vec<f64>,
        allocation_alternative: Vec<f64>,
        lhs: f64,
        rhs: f64,
    },
    /// A profitable misreport.
    Deviation { agent: usize, report: AgentType, truthful: Utility, deviating: Utility, gain: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub property: String,
    pub verdict: Verdict,
    pub witness: Option<Witness>,
    /// Search parameters actually used (tolerances, grid sizes, caps).
    pub params: BTreeMap<String, f64>,
    pub note: Option<String>,
}

impl PropertyReport {
    pub(crate) fn new(property: &str) -> Self {
        Self {
            property: property.to_string(),
            verdict: Verdict::Holds,
            witness: None,
            params: BTreeMap::new(),
            note: None,
        }
    }

    pub(crate) fn param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub(crate) fn violated(mut self, witness: Witness) -> Self {
        self.verdict = Verdict::Violated;
        self.witness = Some(witness);
        self
    }

    pub(crate) fn inconclusive(mut self, note: impl Into<String>) -> Self {
        self.verdict = Verdict::Inconclusive;
        self.note = Some(note.into());
        self
    }

    pub(crate) fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn holds(&self) -> bool {
        self.verdict == Verdict::Holds
    }

    pub fn is_violated(&self) -> bool {
        self.verdict == Verdict::Violated
    }
}

/// `points` values spaced geometrically over `(0, upper]`, ending exactly at
/// `upper`, with ratio `upper^(1/points)`-style spacing starting at `upper * 1e-3`.
pub fn geometric_grid(upper: f64, points: usize) -> Vec<f64> {
    if points == 0 || upper.is_nan() || upper <= 0.0 {
        return Vec::new();
    }
    if points == 1 {
        return vec![upper];
    }
    let lower = upper * 1e-3;
    let ratio = (upper / lower).powf(1.0 / (points - 1) as f64);
    let mut grid: Vec<f64> = (0..points).map(|k| lower * ratio.powi(k as i32)).collect();
    grid[points - 1] = upper;
    grid
}

/// Default misreport grid for an instance: geometric over `(0, 2 * max v]`.
pub fn default_grid(instance: &SingleDimInstance, points: usize) -> Vec<f64> {
    let vmax = instance.valuations().iter().copied().fold(0.0, f64::max);
    geometric_grid(2.0 * vmax, points)
}
