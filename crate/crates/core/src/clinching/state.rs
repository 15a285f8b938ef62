//! Live state of the adaptive clinching auction and its three transitions.

use serde::Serialize;
use std::collections::BTreeSet;

use crate::error::{AuctionError, Result};
use crate::model::{Allocation, Outcome, SingleItemInstance};

/// Relative slack in the clinching-set test `D - b_i/p <= S`.
pub const CLINCH_TOL: f64 = 1e-9;

/// Exit-time clinches at or below this many units are treated as rounding noise.
const MIN_GAP: f64 = 1e-12;

/// Aggregate demand of the active agents at the current price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Demand {
    Finite(f64),
    Unbounded,
}

impl Demand {
    pub fn exceeds(self, supply: f64) -> bool {
        match self {
            Demand::Unbounded => true,
            Demand::Finite(d) => d > supply,
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Demand::Finite(d) => d,
            Demand::Unbounded => f64::INFINITY,
        }
    }
}

/// What ended a stretch of continuous clinching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    /// The richest non-clinching agent's budget was reached; it starts clinching.
    NewClincher,
    /// The price reached the lowest active valuation.
    ValuationExit,
}

/// Next break point of the continuous process while the clinching set is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BreakPoint {
    pub price: f64,
    pub supply: f64,
    /// Common remaining budget of every clinching agent at `price`.
    pub budget: f64,
    pub trigger: Trigger,
}

/// State of one clinching run. Agent indices refer to the originating instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuctionState {
    pub valuations: Vec<f64>,
    pub initial_budgets: Vec<f64>,
    pub budgets: Vec<f64>,
    pub allocated: Vec<f64>,
    pub price: f64,
    pub supply: f64,
    pub demand: Demand,
    pub active: BTreeSet<usize>,
    pub exiting: BTreeSet<usize>,
    pub clinching: BTreeSet<usize>,
}

impl AuctionState {
    /// Price 0, full supply, unbounded demand. Agents with zero budget or zero
    /// valuation never become active.
    pub fn new(instance: &SingleItemInstance) -> Self {
        let budgets = instance.budgets().to_vec();
        let valuations = instance.valuations().to_vec();
        let active: BTreeSet<usize> = (0..budgets.len())
            .filter(|&i| budgets[i] > 0.0 && valuations[i] > 0.0)
            .collect();
        let demand = if active.is_empty() { Demand::Finite(0.0) } else { Demand::Unbounded };
        Self {
            allocated: vec![0.0; budgets.len()],
            initial_budgets: budgets.clone(),
            budgets,
            valuations,
            price: 0.0,
            supply: 1.0,
            demand,
            active,
            exiting: BTreeSet::new(),
            clinching: BTreeSet::new(),
        }
    }

    /// Demand of the active agents other than `agent`.
    pub fn others_demand(&self, agent: usize) -> f64 {
        let others: f64 = self.active.iter().filter(|&&j| j != agent).map(|&j| self.budgets[j]).sum();
        if others == 0.0 {
            0.0
        } else {
            others / self.price
        }
    }

    fn clinch_slack(&self) -> f64 {
        CLINCH_TOL * self.supply.max(1.0)
    }

    fn refresh_demand(&mut self) {
        let total: f64 = self.active.iter().map(|&i| self.budgets[i]).sum();
        self.demand = if self.active.is_empty() || total == 0.0 {
            Demand::Finite(0.0)
        } else if self.price > 0.0 {
            Demand::Finite(total / self.price)
        } else {
            Demand::Unbounded
        };
    }

    fn refresh_clinching(&mut self) {
        if self.price <= 0.0 {
            self.clinching.clear();
            return;
        }
        let slack = self.clinch_slack();
        self.clinching = self
            .active
            .iter()
            .copied()
            .filter(|&i| self.others_demand(i) <= self.supply + slack)
            .collect();
    }

    /// Moves every active agent whose valuation is at or below the price into the
    /// exiting set.
    fn refresh_exits(&mut self) {
        let p = self.price;
        let leaving: Vec<usize> = self.active.iter().copied().filter(|&i| self.valuations[i] <= p).collect();
        for i in leaving {
            self.active.remove(&i);
            self.exiting.insert(i);
        }
    }

    fn min_active_valuation(&self) -> f64 {
        self.active.iter().map(|&i| self.valuations[i]).fold(f64::INFINITY, f64::min)
    }

    /// Break point reached when the current clinching set keeps clinching
    /// continuously. Requires a nonempty clinching set and a positive price.
    pub fn next_break_point(&self) -> Result<BreakPoint> {
        let k = self.clinching.len();
        if k == 0 {
            return Err(AuctionError::internal("break point requested with no clinching agent"));
        }
        if self.price <= 0.0 {
            return Err(AuctionError::internal("clinching agents at price 0"));
        }
        let p = self.price;
        let s = self.supply;
        let lead = self.clinching.iter().map(|&i| self.budgets[i]).fold(f64::NEG_INFINITY, f64::max);
        let rest = self.active.iter().filter(|i| !self.clinching.contains(i));
        let (rest_sum, rest_max) =
            rest.fold((0.0, 0.0_f64), |(s, m), &i| (s + self.budgets[i], m.max(self.budgets[i])));

        // Price at which the richest non-clinching agent's budget is reached.
        let candidate = if k == 1 {
            if rest_sum == 0.0 {
                f64::INFINITY
            } else {
                p * ((lead - rest_max).max(0.0) / rest_sum).exp()
            }
        } else {
            let denom = (k - 1) as f64 * rest_max + rest_sum;
            if denom == 0.0 {
                f64::INFINITY
            } else {
                p * (p * s / denom).max(1.0).powf(1.0 / (k - 1) as f64)
            }
        };
        let cap = self.min_active_valuation();
        let (price, trigger) = if candidate < cap {
            (candidate, Trigger::NewClincher)
        } else {
            (cap, Trigger::ValuationExit)
        };
        let ratio = p / price;
        let supply = s * ratio.powi(k as i32);
        let budget = if k == 1 {
            lead - (price / p).ln() * rest_sum
        } else {
            (p * s * ratio.powi(k as i32 - 1) - rest_sum) / (k - 1) as f64
        };
        let budget = match trigger {
            Trigger::NewClincher => rest_max,
            Trigger::ValuationExit => budget.max(rest_max),
        };
        Ok(BreakPoint { price, supply, budget, trigger })
    }

    /// One step of the continuous process with no exiting agents: either jump the
    /// price to the first point where someone could clinch (empty clinching set), or
    /// clinch continuously up to the next break point.
    pub fn continuous_clinching(&mut self) -> Result<()> {
        if !self.exiting.is_empty() {
            return Err(AuctionError::internal("continuous clinching with exiting agents"));
        }
        if self.clinching.is_empty() {
            let total: f64 = self.active.iter().map(|&i| self.budgets[i]).sum();
            let richest = self.active.iter().map(|&i| self.budgets[i]).fold(0.0, f64::max);
            let quiet_until =
                if self.supply > 0.0 { (total - richest) / self.supply } else { f64::INFINITY };
            self.price = self.price.max(quiet_until.min(self.min_active_valuation()));
        } else {
            let bp = self.next_break_point()?;
            let share = (self.supply - bp.supply) / self.clinching.len() as f64;
            for &i in &self.clinching {
                self.allocated[i] += share;
                self.budgets[i] = bp.budget;
            }
            self.price = bp.price;
            self.supply = bp.supply;
        }
        if !self.price.is_finite() {
            return Err(AuctionError::internal("price diverged"));
        }
        self.refresh_exits();
        self.refresh_demand();
        self.refresh_clinching();
        Ok(())
    }

    /// Resolves a discrete drop in demand caused by exits at the current price.
    ///
    /// Every active agent clinches `max(0, S - others' demand)` at the current price,
    /// richest first, until no positive gap remains. A clinch by `i` lowers supply and
    /// `i`'s own demand by the same amount, so the gaps of the other agents are
    /// unaffected and a single pass normally suffices.
    pub fn handle_exiting(&mut self) -> Result<()> {
        if self.exiting.is_empty() {
            return Err(AuctionError::internal("exit handling with no exiting agents"));
        }
        if self.price <= 0.0 {
            return Err(AuctionError::internal("exit at price 0"));
        }
        let mut order: Vec<usize> = self.active.iter().copied().collect();
        order.sort_by(|&a, &b| self.budgets[b].total_cmp(&self.budgets[a]).then(a.cmp(&b)));
        for _pass in 0..=order.len() + 1 {
            let mut largest = 0.0_f64;
            for &i in &order {
                let gap = self.supply - self.others_demand(i);
                if gap > MIN_GAP {
                    let gap = gap.min(self.supply);
                    self.allocated[i] += gap;
                    self.budgets[i] = (self.budgets[i] - gap * self.price).max(0.0);
                    self.supply = (self.supply - gap).max(0.0);
                    largest = largest.max(gap);
                }
            }
            if largest <= self.clinch_slack() {
                break;
            }
        }
        self.exiting.clear();
        self.refresh_demand();
        self.refresh_clinching();
        Ok(())
    }

    /// Sells every active agent what it can afford at the current price, then offers
    /// the remainder to exiting agents, richest first (lower index on ties).
    pub fn final_sale(&mut self) -> Result<()> {
        if self.demand.exceeds(self.supply) {
            return Err(AuctionError::internal("final sale while the item is overdemanded"));
        }
        if self.price <= 0.0 {
            if self.active.iter().any(|&i| self.budgets[i] > 0.0) {
                return Err(AuctionError::internal("final sale at price 0 with positive demand"));
            }
            return Ok(());
        }
        self.supply = (self.supply - self.demand.value()).max(0.0);
        for &i in &self.active {
            self.allocated[i] += self.budgets[i] / self.price;
            self.budgets[i] = 0.0;
        }
        let mut order: Vec<usize> = self.exiting.iter().copied().collect();
        order.sort_by(|&a, &b| self.budgets[b].total_cmp(&self.budgets[a]).then(a.cmp(&b)));
        for i in order {
            let amount = (self.budgets[i] / self.price).min(self.supply);
            self.allocated[i] += amount;
            self.budgets[i] = (self.budgets[i] - amount * self.price).max(0.0);
            self.supply = (self.supply - amount).max(0.0);
        }
        self.demand = Demand::Finite(0.0);
        Ok(())
    }

    /// Current allocation and payments (initial minus remaining budget).
    pub fn outcome(&self) -> Outcome {
        // accumulated clinches can overshoot 1 by an ulp
        let rows = self.allocated.iter().map(|&x| vec![x.clamp(0.0, 1.0)]).collect();
        let payments = self
            .initial_budgets
            .iter()
            .zip(&self.budgets)
            .map(|(b0, b)| b0 - b)
            .collect();
        Outcome { allocation: Allocation::new(rows, true).expect("one column per agent"), payments }
    }

    /// `sum_i x_i + S`; equals 1 up to rounding.
    pub fn mass(&self) -> f64 {
        self.allocated.iter().sum::<f64>() + self.supply
    }
}
