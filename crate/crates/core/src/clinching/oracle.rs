//! Brute-force discretization of the clinching process on a geometric price grid.
//!
//! Shares no code with the closed-form break-point solver: the price is raised by a
//! factor `1 + epsilon` per step (stopping exactly on valuations), and at every step
//! each active agent clinches whatever the others' demand leaves uncovered.

use crate::error::{AuctionError, Result};
use crate::model::{Allocation, Outcome, SingleItemInstance};

pub fn epsilon_oracle(instance: &SingleItemInstance, epsilon: f64) -> Result<Outcome> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(AuctionError::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    let n = instance.num_agents();
    let v = instance.valuations();
    let mut budget = instance.budgets().to_vec();
    let mut x = vec![0.0; n];
    let mut supply = 1.0_f64;
    let mut active: Vec<usize> = (0..n).filter(|&i| budget[i] > 0.0 && v[i] > 0.0).collect();

    if active.len() == 1 {
        x[active[0]] = 1.0;
        return finish(instance, x, budget);
    }
    if active.is_empty() {
        return finish(instance, x, budget);
    }

    // Nobody can clinch while every agent's competitors demand more than the whole
    // item, i.e. below min_i sum_{j != i} b_j. Start safely under that.
    let total: f64 = active.iter().map(|&i| budget[i]).sum();
    let first_clinch = active.iter().map(|&i| total - budget[i]).fold(f64::INFINITY, f64::min);
    let lowest_v = active.iter().map(|&i| v[i]).fold(f64::INFINITY, f64::min);
    let mut price = 0.5 * first_clinch.min(lowest_v);

    let mut gaps = vec![0.0; n];
    loop {
        let stepped = price * (1.0 + epsilon);
        let next_v = active.iter().map(|&i| v[i]).filter(|&vi| vi > price).fold(f64::INFINITY, f64::min);
        price = stepped.min(next_v);

        let mut exiting: Vec<usize> = active.iter().copied().filter(|&i| v[i] <= price).collect();
        active.retain(|&i| v[i] > price);

        let total: f64 = active.iter().map(|&i| budget[i]).sum();
        if total / price <= supply {
            supply -= total / price;
            for &i in &active {
                x[i] += budget[i] / price;
                budget[i] = 0.0;
            }
            exiting.sort_by(|&a, &b| budget[b].total_cmp(&budget[a]).then(a.cmp(&b)));
            for i in exiting {
                let amount = (budget[i] / price).min(supply).max(0.0);
                x[i] += amount;
                budget[i] -= amount * price;
                supply -= amount;
            }
            break;
        }

        for &i in &active {
            gaps[i] = (supply - (total - budget[i]) / price).max(0.0);
        }
        for &i in &active {
            let g = gaps[i];
            if g > 0.0 {
                x[i] += g;
                budget[i] = (budget[i] - g * price).max(0.0);
                supply -= g;
            }
        }
        if supply <= 0.0 || active.len() <= 1 {
            break;
        }
    }
    finish(instance, x, budget)
}

fn finish(instance: &SingleItemInstance, x: Vec<f64>, budget: Vec<f64>) -> Result<Outcome> {
    let payments = instance.budgets().iter().zip(&budget).map(|(b0, b)| b0 - b).collect();
    let rows = x.into_iter().map(|xi| vec![xi]).collect();
    Outcome::new(Allocation::new(rows, true)?, payments)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonpositive_epsilon() {
        let inst = SingleItemInstance::new(vec![1.0, 1.0], vec![2.0, 1.0]).unwrap();
        assert!(epsilon_oracle(&inst, 0.0).is_err());
        assert!(epsilon_oracle(&inst, -1.0).is_err());
    }

    #[test]
    fn matches_rich_bidder_closed_form() {
        let inst = SingleItemInstance::new(vec![100.0, 3.0], vec![10.0, 5.0]).unwrap();
        let out = epsilon_oracle(&inst, 1e-6).unwrap();
        let expected = 3.0 + 3.0 * (5.0_f64 / 3.0).ln();
        assert!((out.payments[0] - expected).abs() < 1e-3, "{}", out.payments[0]);
        assert!((out.allocation.get(0, 0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lone_survivor_with_tiny_budget_buys_budget_over_price() {
        // Agent 1 clinches until it exits at 0.5; agent 0 can then afford only
        // 0.01 / 0.5 units.
        let inst = SingleItemInstance::new(vec![0.01, 5.0], vec![10.0, 0.5]).unwrap();
        let out = epsilon_oracle(&inst, 1e-6).unwrap();
        assert!((out.allocation.get(0, 0) - 0.02).abs() < 1e-6);
        assert!((out.payments[0] - 0.01).abs() < 1e-12);
        assert!((out.allocation.column_sum(0) - 1.0).abs() < 1e-9);
    }
}
