//! Heterogeneous items with qualities, reduced to a single divisible item.
//!
//! Agent `i` values the single item at `v_i * sum(alpha)`. Running the clinching
//! auction on that item and giving every agent the same fraction of every item
//! preserves utilities exactly; the randomized variant draws one winner for the whole
//! bundle.

use crate::bridge::randomize_single_winner;
use crate::checkers::Mechanism;
use crate::clinching::run_clinching;
use crate::error::{AuctionError, Result};
use crate::model::{validate_allocation, Allocation, Outcome, SingleDimInstance, SingleItemInstance};

/// Sum of qualities, accumulated left to right (the same order the single-dimensional
/// bundle value uses, which keeps lifted utilities bit-identical).
pub fn total_quality(alphas: &[f64]) -> f64 {
    alphas.iter().fold(0.0, |acc, &a| acc + a)
}

/// Single-item instance with valuations `v_i * sum(alpha)` and the same budgets.
pub fn reduce(instance: &SingleDimInstance) -> Result<SingleItemInstance> {
    let q = total_quality(instance.alphas());
    let valuations = instance.valuations().iter().map(|&v| v * q).collect();
    SingleItemInstance::reported(instance.budgets().to_vec(), valuations)
}

fn single_column(outcome: &Outcome) -> Result<Vec<f64>> {
    let alloc = &outcome.allocation;
    if alloc.num_agents() > 0 && alloc.num_items() != 1 {
        return Err(AuctionError::invalid(format!(
            "expected a single-item outcome, got {} items",
            alloc.num_items()
        )));
    }
    validate_allocation(alloc).map_err(|v| AuctionError::invalid(v.to_string()))?;
    Ok(alloc.rows().iter().map(|r| r[0]).collect())
}

/// Every agent receives its single-item fraction of each of the `m` items.
pub fn lift_divisible(outcome: &Outcome, m: usize) -> Result<Outcome> {
    let column = single_column(outcome)?;
    let rows = column.iter().map(|&x| vec![x; m]).collect();
    Outcome::new(Allocation::new(rows, true)?, outcome.payments.clone())
}

/// The single-item winner (if any) receives all `m` items.
pub fn lift_indivisible(outcome: &Outcome, m: usize) -> Result<Outcome> {
    let column = single_column(outcome)?;
    if let Some((i, x)) = column.iter().enumerate().find(|(_, &x)| x != 0.0 && x != 1.0) {
        return Err(AuctionError::invalid(format!("fractional single-item allocation x[{i}] = {x}")));
    }
    let rows = column.iter().map(|&x| vec![x; m]).collect();
    Outcome::new(Allocation::new(rows, false)?, outcome.payments.clone())
}

/// Deterministic divisible mechanism: reduce, run the clinching auction, lift.
pub fn run_hetero_divisible(instance: &SingleDimInstance) -> Result<Outcome> {
    let single = run_clinching(&reduce(instance)?)?;
    lift_divisible(&single, instance.num_items())
}

/// One sample of the randomized indivisible mechanism: the divisible single-item
/// outcome is turned into a lottery over a single winner, who gets every item.
/// Payments are the divisible ones, so they do not depend on the seed.
pub fn run_hetero_indivisible_randomized(instance: &SingleDimInstance, seed: u64) -> Result<Outcome> {
    let single = run_clinching(&reduce(instance)?)?;
    let drawn = randomize_single_winner(&single, seed)?;
    lift_indivisible(&drawn, instance.num_items())
}

/// [`run_hetero_divisible`] as a [`Mechanism`].
#[derive(Debug, Clone, Copy, Default)]
pub struct HeteroDivisible;

impl Mechanism for HeteroDivisible {
    fn name(&self) -> &str {
        "hetero-div"
    }

    fn run(&self, instance: &SingleDimInstance) -> Result<Outcome> {
        run_hetero_divisible(instance)
    }
}

/// The single-item clinching auction seen as a single-dimensional mechanism with one
/// item of quality 1.
#[derive(Debug, Clone, Copy, Default)]
pub struct Clinching;

impl Mechanism for Clinching {
    fn name(&self) -> &str {
        "clinching"
    }

    fn run(&self, instance: &SingleDimInstance) -> Result<Outcome> {
        if instance.alphas() != [1.0] {
            return Err(AuctionError::invalid("clinching runs on one item of quality 1"));
        }
        run_clinching(&SingleItemInstance::reported(
            instance.budgets().to_vec(),
            instance.valuations().to_vec(),
        )?)
    }
}

/// Views a single-item instance as a single-dimensional one with `alpha = [1]`.
pub fn as_single_dim(instance: &SingleItemInstance) -> Result<SingleDimInstance> {
    SingleDimInstance::reported(vec![1.0], instance.valuations().to_vec(), instance.budgets().to_vec())
}
