//! Instances, allocations, outcomes and the quasi-linear budgeted utility.
//!
//! Three instance shapes are supported:
//!
//! * [`SingleItemInstance`]: one divisible item, scalar valuations.
//! * [`SingleDimInstance`]: heterogeneous items with qualities `alpha_j`; agent `i`
//!   values item `j` at `alpha_j * v_i`.
//! * [`MultiDimInstance`]: an arbitrary nonnegative valuation matrix.
//!
//! Each shape has a strict constructor (`new`) that enforces the ordering and
//! positivity assumptions of the model, and a relaxed one (`reported`) that accepts
//! any finite nonnegative report. Mechanisms and checkers operate on reported
//! profiles, since misreports routinely break the truthful ordering.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

use crate::error::{AuctionError, Result};

/// Column-sum slack used by feasibility checks.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Utility on the extended real line: finite, or `-inf` once a payment exceeds the budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Utility {
    NegInfinity,
    Finite(f64),
}

impl Utility {
    pub fn is_neg_infinity(self) -> bool {
        matches!(self, Utility::NegInfinity)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Utility::Finite(u) => Some(u),
            Utility::NegInfinity => None,
        }
    }

    /// `self - other`; `None` when both are `-inf` (the difference is undefined and
    /// never counts as a gain).
    pub fn gain_over(self, other: Utility) -> Option<f64> {
        match (self, other) {
            (Utility::Finite(a), Utility::Finite(b)) => Some(a - b),
            (Utility::Finite(_), Utility::NegInfinity) => Some(f64::INFINITY),
            (Utility::NegInfinity, Utility::Finite(_)) => Some(f64::NEG_INFINITY),
            (Utility::NegInfinity, Utility::NegInfinity) => None,
        }
    }
}

impl PartialOrd for Utility {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Utility::NegInfinity, Utility::NegInfinity) => Some(Ordering::Equal),
            (Utility::NegInfinity, Utility::Finite(_)) => Some(Ordering::Less),
            (Utility::Finite(_), Utility::NegInfinity) => Some(Ordering::Greater),
            (Utility::Finite(a), Utility::Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl fmt::Display for Utility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Utility::NegInfinity => write!(f, "-inf"),
            Utility::Finite(u) => write!(f, "{u}"),
        }
    }
}

/// Valuation component of an agent type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Valuation {
    Scalar(f64),
    Vector(Vec<f64>),
}

/// An agent's type: valuation plus budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentType {
    pub valuation: Valuation,
    pub budget: f64,
}

/// Anything that can price a bundle for an agent and knows the agent's budget.
pub trait Valuations {
    fn num_agents(&self) -> usize;
    fn num_items(&self) -> usize;
    fn budget(&self, agent: usize) -> f64;
    /// Value of allocation row `row` (fractions per item) to `agent`.
    fn bundle_value(&self, agent: usize, row: &[f64]) -> f64;
}

fn check_finite_nonneg(what: &str, xs: &[f64]) -> Result<()> {
    for (i, &x) in xs.iter().enumerate() {
        if !x.is_finite() || x < 0.0 {
            return Err(AuctionError::invalid(format!(
                "{what}[{i}] = {x} must be finite and nonnegative"
            )));
        }
    }
    Ok(())
}

fn check_positive(what: &str, xs: &[f64]) -> Result<()> {
    for (i, &x) in xs.iter().enumerate() {
        if !(x.is_finite() && x > 0.0) {
            return Err(AuctionError::invalid(format!(
                "{what}[{i}] = {x} must be finite and strictly positive"
            )));
        }
    }
    Ok(())
}

fn check_strictly_decreasing(what: &str, xs: &[f64]) -> Result<()> {
    for (k, w) in xs.windows(2).enumerate() {
        if w[0] <= w[1] {
            return Err(AuctionError::invalid(format!(
                "{what} must be strictly decreasing: {what}[{k}] = {} <= {what}[{}] = {}",
                w[0],
                k + 1,
                w[1]
            )));
        }
    }
    Ok(())
}

/// One divisible item, `n` agents with scalar valuations (money per unit) and budgets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleItemInstance {
    budgets: Vec<f64>,
    valuations: Vec<f64>,
}

impl SingleItemInstance {
    /// Strict constructor: `n >= 2`, positive budgets and valuations, pairwise distinct
    /// valuations.
    pub fn new(budgets: Vec<f64>, valuations: Vec<f64>) -> Result<Self> {
        let inst = Self::reported(budgets, valuations)?;
        if inst.num_agents() < 2 {
            return Err(AuctionError::invalid("need at least two agents"));
        }
        check_positive("budgets", &inst.budgets)?;
        check_positive("valuations", &inst.valuations)?;
        let mut sorted = inst.valuations.clone();
        sorted.sort_by(f64::total_cmp);
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(AuctionError::invalid(format!(
                "valuations must be pairwise distinct; {} appears twice",
                w[0]
            )));
        }
        Ok(inst)
    }

    /// Relaxed constructor for reported profiles: equal lengths, finite and nonnegative.
    pub fn reported(budgets: Vec<f64>, valuations: Vec<f64>) -> Result<Self> {
        if budgets.len() != valuations.len() {
            return Err(AuctionError::invalid(format!(
                "{} budgets but {} valuations",
                budgets.len(),
                valuations.len()
            )));
        }
        check_finite_nonneg("budgets", &budgets)?;
        check_finite_nonneg("valuations", &valuations)?;
        Ok(Self { budgets, valuations })
    }

    pub fn budgets(&self) -> &[f64] {
        &self.budgets
    }

    pub fn valuations(&self) -> &[f64] {
        &self.valuations
    }

    pub fn num_agents(&self) -> usize {
        self.budgets.len()
    }
}

impl Valuations for SingleItemInstance {
    fn num_agents(&self) -> usize {
        self.budgets.len()
    }

    fn num_items(&self) -> usize {
        1
    }

    fn budget(&self, agent: usize) -> f64 {
        self.budgets[agent]
    }

    fn bundle_value(&self, agent: usize, row: &[f64]) -> f64 {
        row[0] * self.valuations[agent]
    }
}

/// Heterogeneous items with qualities `alphas` (strictly decreasing, positive) and
/// scalar per-quality valuations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleDimInstance {
    alphas: Vec<f64>,
    valuations: Vec<f64>,
    budgets: Vec<f64>,
}

impl SingleDimInstance {
    /// Strict constructor: qualities and valuations strictly decreasing and positive,
    /// budgets nonnegative.
    pub fn new(alphas: Vec<f64>, valuations: Vec<f64>, budgets: Vec<f64>) -> Result<Self> {
        let inst = Self::reported(alphas, valuations, budgets)?;
        check_positive("valuations", &inst.valuations)?;
        check_strictly_decreasing("valuations", &inst.valuations)?;
        Ok(inst)
    }

    /// Relaxed constructor for reported profiles. Qualities are public and keep their
    /// strict ordering; valuations may be in any order.
    pub fn reported(alphas: Vec<f64>, valuations: Vec<f64>, budgets: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(AuctionError::invalid("need at least one item"));
        }
        if valuations.is_empty() {
            return Err(AuctionError::invalid("need at least one agent"));
        }
        if budgets.len() != valuations.len() {
            return Err(AuctionError::invalid(format!(
                "{} budgets but {} valuations",
                budgets.len(),
                valuations.len()
            )));
        }
        check_positive("alphas", &alphas)?;
        check_strictly_decreasing("alphas", &alphas)?;
        check_finite_nonneg("valuations", &valuations)?;
        check_finite_nonneg("budgets", &budgets)?;
        Ok(Self { alphas, valuations, budgets })
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn valuations(&self) -> &[f64] {
        &self.valuations
    }

    pub fn budgets(&self) -> &[f64] {
        &self.budgets
    }

    pub fn num_agents(&self) -> usize {
        self.valuations.len()
    }

    pub fn num_items(&self) -> usize {
        self.alphas.len()
    }

    pub fn agent_type(&self, agent: usize) -> AgentType {
        AgentType {
            valuation: Valuation::Scalar(self.valuations[agent]),
            budget: self.budgets[agent],
        }
    }

    /// The reported profile obtained when `agent` reports `report` and everyone else
    /// keeps their entries.
    pub fn with_report(&self, agent: usize, report: &AgentType) -> Result<Self> {
        let Valuation::Scalar(v) = report.valuation else {
            return Err(AuctionError::invalid(
                "single-dimensional reports carry a scalar valuation",
            ));
        };
        let mut valuations = self.valuations.clone();
        let mut budgets = self.budgets.clone();
        valuations[agent] = v;
        budgets[agent] = report.budget;
        Self::reported(self.alphas.clone(), valuations, budgets)
    }

    /// Shorthand for [`with_report`](Self::with_report) with the budget unchanged.
    pub fn with_valuation(&self, agent: usize, v: f64) -> Result<Self> {
        self.with_report(
            agent,
            &AgentType { valuation: Valuation::Scalar(v), budget: self.budgets[agent] },
        )
    }
}

impl Valuations for SingleDimInstance {
    fn num_agents(&self) -> usize {
        self.valuations.len()
    }

    fn num_items(&self) -> usize {
        self.alphas.len()
    }

    fn budget(&self, agent: usize) -> f64 {
        self.budgets[agent]
    }

    /// Items receiving the same fraction are summed together first, so a row holding
    /// one constant fraction `c` evaluates to `c * (v_i * sum(alpha))`, bit-for-bit the
    /// value of `c` units of the reduced single item.
    fn bundle_value(&self, agent: usize, row: &[f64]) -> f64 {
        let v = self.valuations[agent];
        let mut groups: Vec<(f64, f64)> = Vec::new();
        for (&x, &a) in row.iter().zip(&self.alphas) {
            match groups.iter_mut().find(|(c, _)| c.to_bits() == x.to_bits()) {
                Some((_, sum)) => *sum += a,
                None => groups.push((x, 0.0 + a)),
            }
        }
        groups.into_iter().fold(0.0, |acc, (c, quality)| acc + c * (v * quality))
    }
}

/// Arbitrary additive valuations `v[i][j] >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiDimInstance {
    valuations: Vec<Vec<f64>>,
    budgets: Vec<f64>,
}

impl MultiDimInstance {
    pub fn new(valuations: Vec<Vec<f64>>, budgets: Vec<f64>) -> Result<Self> {
        if valuations.len() != budgets.len() {
            return Err(AuctionError::invalid(format!(
                "{} valuation rows but {} budgets",
                valuations.len(),
                budgets.len()
            )));
        }
        let m = valuations.first().map_or(0, Vec::len);
        if m == 0 {
            return Err(AuctionError::invalid("need at least one agent and one item"));
        }
        for (i, row) in valuations.iter().enumerate() {
            if row.len() != m {
                return Err(AuctionError::invalid(format!(
                    "valuation row {i} has {} entries, expected {m}",
                    row.len()
                )));
            }
            check_finite_nonneg(&format!("valuations[{i}]"), row)?;
        }
        check_finite_nonneg("budgets", &budgets)?;
        Ok(Self { valuations, budgets })
    }

    pub fn valuations(&self) -> &[Vec<f64>] {
        &self.valuations
    }

    pub fn budgets(&self) -> &[f64] {
        &self.budgets
    }

    pub fn value(&self, agent: usize, item: usize) -> f64 {
        self.valuations[agent][item]
    }

    pub fn agent_type(&self, agent: usize) -> AgentType {
        AgentType {
            valuation: Valuation::Vector(self.valuations[agent].clone()),
            budget: self.budgets[agent],
        }
    }

    pub fn with_report(&self, agent: usize, report: &[f64]) -> Result<Self> {
        let mut valuations = self.valuations.clone();
        valuations[agent] = report.to_vec();
        Self::new(valuations, self.budgets.clone())
    }
}

impl Valuations for MultiDimInstance {
    fn num_agents(&self) -> usize {
        self.valuations.len()
    }

    fn num_items(&self) -> usize {
        self.valuations[0].len()
    }

    fn budget(&self, agent: usize) -> f64 {
        self.budgets[agent]
    }

    fn bundle_value(&self, agent: usize, row: &[f64]) -> f64 {
        row.iter().zip(&self.valuations[agent]).map(|(x, v)| x * v).sum()
    }
}

/// Allocation matrix `rows[i][j]`: fraction of item `j` held by agent `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    rows: Vec<Vec<f64>>,
    divisible: bool,
}

impl Allocation {
    /// Only the shape is checked here; feasibility is [`validate_allocation`]'s job.
    pub fn new(rows: Vec<Vec<f64>>, divisible: bool) -> Result<Self> {
        let m = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != m) {
            return Err(AuctionError::invalid(format!(
                "allocation row {i} has {} entries, expected {m}",
                rows[i].len()
            )));
        }
        Ok(Self { rows, divisible })
    }

    pub fn zeros(agents: usize, items: usize, divisible: bool) -> Self {
        Self { rows: vec![vec![0.0; items]; agents], divisible }
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, agent: usize) -> &[f64] {
        &self.rows[agent]
    }

    pub fn get(&self, agent: usize, item: usize) -> f64 {
        self.rows[agent][item]
    }

    pub fn set(&mut self, agent: usize, item: usize, value: f64) {
        self.rows[agent][item] = value;
    }

    pub fn is_divisible(&self) -> bool {
        self.divisible
    }

    pub fn num_agents(&self) -> usize {
        self.rows.len()
    }

    pub fn num_items(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn column_sum(&self, item: usize) -> f64 {
        self.rows.iter().map(|r| r[item]).sum()
    }
}

/// Allocation plus payments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub allocation: Allocation,
    pub payments: Vec<f64>,
}

impl Outcome {
    pub fn new(allocation: Allocation, payments: Vec<f64>) -> Result<Self> {
        if allocation.num_agents() != payments.len() {
            return Err(AuctionError::invalid(format!(
                "allocation has {} agents but {} payments",
                allocation.num_agents(),
                payments.len()
            )));
        }
        Ok(Self { allocation, payments })
    }

    pub fn empty(agents: usize, items: usize, divisible: bool) -> Self {
        Self {
            allocation: Allocation::zeros(agents, items, divisible),
            payments: vec![0.0; agents],
        }
    }

    pub fn num_agents(&self) -> usize {
        self.payments.len()
    }

    pub fn revenue(&self) -> f64 {
        self.payments.iter().sum()
    }
}

/// First feasibility violation found by [`validate_allocation`]. Indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AllocationViolation {
    OutOfRange { agent: usize, item: usize, value: f64 },
    FractionalEntry { agent: usize, item: usize, value: f64 },
    OverAllocated { item: usize, sum: f64 },
}

impl fmt::Display for AllocationViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::OutOfRange { agent, item, value } => {
                write!(f, "x[{agent}][{item}] = {value} outside [0, 1]")
            }
            Self::FractionalEntry { agent, item, value } => {
                write!(f, "indivisible allocation has fractional x[{agent}][{item}] = {value}")
            }
            Self::OverAllocated { item, sum } => {
                write!(f, "item {item} allocated {sum} > 1")
            }
        }
    }
}

/// Checks entry ranges, integrality (indivisible only) and column sums, in that order.
pub fn validate_allocation(allocation: &Allocation) -> std::result::Result<(), AllocationViolation> {
    for (agent, row) in allocation.rows().iter().enumerate() {
        for (item, &value) in row.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(AllocationViolation::OutOfRange { agent, item, value });
            }
            if !allocation.is_divisible() && value != 0.0 && value != 1.0 {
                return Err(AllocationViolation::FractionalEntry { agent, item, value });
            }
        }
    }
    for item in 0..allocation.num_items() {
        let sum = allocation.column_sum(item);
        if sum > 1.0 + FEASIBILITY_TOL {
            return Err(AllocationViolation::OverAllocated { item, sum });
        }
    }
    Ok(())
}

/// `sum_j x_j * alpha_j`.
pub fn aggregate_quality(row: &[f64], alphas: &[f64]) -> Result<f64> {
    if row.len() != alphas.len() {
        return Err(AuctionError::invalid(format!(
            "allocation row has {} entries but there are {} qualities",
            row.len(),
            alphas.len()
        )));
    }
    Ok(row.iter().zip(alphas).map(|(x, a)| x * a).sum())
}

/// Budgeted quasi-linear utility of `agent` under `outcome`, evaluated with the true
/// types in `instance`.
pub fn utility<I: Valuations + ?Sized>(instance: &I, outcome: &Outcome, agent: usize) -> Result<Utility> {
    check_dimensions(instance, outcome)?;
    if agent >= instance.num_agents() {
        return Err(AuctionError::invalid(format!(
            "agent {agent} out of range (n = {})",
            instance.num_agents()
        )));
    }
    let payment = outcome.payments[agent];
    if payment > instance.budget(agent) {
        return Ok(Utility::NegInfinity);
    }
    Ok(Utility::Finite(
        instance.bundle_value(agent, outcome.allocation.row(agent)) - payment,
    ))
}

pub(crate) fn check_dimensions<I: Valuations + ?Sized>(instance: &I, outcome: &Outcome) -> Result<()> {
    let (n, m) = (instance.num_agents(), instance.num_items());
    let alloc = &outcome.allocation;
    if alloc.num_agents() != n || outcome.payments.len() != n || (n > 0 && alloc.num_items() != m) {
        return Err(AuctionError::invalid(format!(
            "outcome is {}x{} with {} payments, instance is {n}x{m}",
            alloc.num_agents(),
            alloc.num_items(),
            outcome.payments.len()
        )));
    }
    Ok(())
}
