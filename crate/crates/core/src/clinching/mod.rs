//! Adaptive clinching auction for one divisible item under public budgets.
//!
//! The price rises from zero. An agent *clinches* whenever the demand of the other
//! active agents falls below the remaining supply, buying the difference at the
//! current price. Between break points the clinching set is fixed and the process has
//! a closed form, so the run jumps from break point to break point instead of
//! simulating the price path. [`epsilon_oracle`] is the brute-force discretization
//! of the same process, used to cross-check the closed forms.

mod oracle;
mod state;

pub use oracle::epsilon_oracle;
pub use state::{AuctionState, BreakPoint, Demand, Trigger, CLINCH_TOL};

use crate::error::{AuctionError, Result};
use crate::model::{Outcome, SingleItemInstance};

/// Runs the auction on a strictly valid instance (`n >= 2`, positive budgets and
/// valuations, pairwise distinct valuations).
pub fn clinching_auction(instance: &SingleItemInstance) -> Result<Outcome> {
    let strict = SingleItemInstance::new(instance.budgets().to_vec(), instance.valuations().to_vec())?;
    run_clinching(&strict)
}

/// Runs the auction on any reported profile. Zero-budget and zero-valuation agents
/// are left out (allocated nothing, charged nothing); equal valuations exit together.
pub fn run_clinching(instance: &SingleItemInstance) -> Result<Outcome> {
    Ok(drive(instance, None)?.outcome())
}

/// Like [`run_clinching`] but also returns the state after every transition.
pub fn clinching_trace(instance: &SingleItemInstance) -> Result<(Outcome, Vec<AuctionState>)> {
    let mut trace = Vec::new();
    let state = drive(instance, Some(&mut trace))?;
    Ok((state.outcome(), trace))
}

fn drive(instance: &SingleItemInstance, mut trace: Option<&mut Vec<AuctionState>>) -> Result<AuctionState> {
    let mut state = AuctionState::new(instance);
    let mut record = |s: &AuctionState| {
        if let Some(t) = trace.as_deref_mut() {
            t.push(s.clone());
        }
    };
    record(&state);

    // A lone participant faces no competing demand and clinches everything at price 0.
    if state.active.len() == 1 {
        let i = *state.active.iter().next().expect("one active agent");
        state.allocated[i] = state.supply;
        state.supply = 0.0;
        state.demand = Demand::Finite(0.0);
        record(&state);
        return Ok(state);
    }

    let n = instance.num_agents();
    let guard = 4 * n * n;
    let mut iterations = 0;
    while state.demand.exceeds(state.supply) {
        iterations += 1;
        if iterations > guard {
            return Err(AuctionError::internal(format!(
                "clinching loop exceeded {guard} iterations at price {}",
                state.price
            )));
        }
        if state.exiting.is_empty() {
            state.continuous_clinching()?;
        } else {
            state.handle_exiting()?;
        }
        record(&state);
    }
    state.final_sale()?;
    record(&state);
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn accumulated_fraction_stays_in_unit_interval() {
        // Found by the property suite: the sole winner used to end at 1 + 2^-52.
        let a = 1.6604596498623592;
        let v = [8.825600956092748, 6.9474837873484905, 6.535204028875291, 2.5431700745707975, 0.05];
        let b = vec![9.602355630941073, 0.11333650509814569, 0.971759011359258, 0.01, 0.01];
        let inst = SingleItemInstance::new(b, v.iter().map(|x| x * a).collect()).unwrap();
        let out = run_clinching(&inst).unwrap();
        assert!(crate::model::validate_allocation(&out.allocation).is_ok(), "{out:?}");
    }

    fn set(xs: &[usize]) -> BTreeSet<usize> {
        xs.iter().copied().collect()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn rich_bidder_closed_form() {
        let inst = SingleItemInstance::new(vec![100.0, 3.0], vec![10.0, 5.0]).unwrap();
        let out = clinching_auction(&inst).unwrap();
        let expected = 3.0 + 3.0 * (5.0_f64 / 3.0).ln();
        assert!(close(out.allocation.get(0, 0), 1.0, 1e-12));
        assert_eq!(out.allocation.get(1, 0), 0.0);
        assert!(close(out.payments[0], expected, 1e-9), "{}", out.payments[0]);
        assert_eq!(out.payments[1], 0.0);
    }

    #[test]
    fn equal_budgets_two_clinchers() {
        let inst = SingleItemInstance::new(vec![0.5, 0.5], vec![3.0, 2.0]).unwrap();
        let out = clinching_auction(&inst).unwrap();
        assert!(close(out.allocation.get(0, 0), 17.0 / 32.0, 1e-12));
        assert!(close(out.allocation.get(1, 0), 15.0 / 32.0, 1e-12));
        assert!(close(out.payments[0], 0.5, 1e-12));
        assert!(close(out.payments[1], 0.375, 1e-12));
    }

    #[test]
    fn empty_clinching_set_jumps_to_first_clinch_price() {
        let inst = SingleItemInstance::new(vec![100.0, 3.0], vec![10.0, 5.0]).unwrap();
        let mut s = AuctionState::new(&inst);
        s.continuous_clinching().unwrap();
        assert_eq!(s.price, 3.0);
        assert_eq!(s.clinching, set(&[0]));
        assert!(close(s.demand.value(), 103.0 / 3.0, 1e-12));
        assert!(s.exiting.is_empty());
    }

    #[test]
    fn single_clincher_break_point() {
        let inst = SingleItemInstance::new(vec![100.0, 3.0], vec![10.0, 5.0]).unwrap();
        let mut s = AuctionState::new(&inst);
        s.continuous_clinching().unwrap();
        let bp = s.next_break_point().unwrap();
        assert_eq!(bp.trigger, Trigger::ValuationExit);
        assert_eq!(bp.price, 5.0);
        assert!(close(bp.supply, 0.6, 1e-15));
        assert!(close(bp.budget, 100.0 - 3.0 * (5.0_f64 / 3.0).ln(), 1e-12));
        s.continuous_clinching().unwrap();
        assert!(close(s.allocated[0], 0.4, 1e-15));
        assert_eq!(s.exiting, set(&[1]));
        assert_eq!(s.active, set(&[0]));
    }

    #[test]
    fn two_clinchers_break_point() {
        let inst = SingleItemInstance::new(vec![0.5, 0.5], vec![3.0, 2.0]).unwrap();
        let mut s = AuctionState::new(&inst);
        s.continuous_clinching().unwrap();
        assert_eq!(s.price, 0.5);
        assert_eq!(s.clinching, set(&[0, 1]));
        let bp = s.next_break_point().unwrap();
        assert_eq!(bp.price, 2.0);
        assert!(close(bp.supply, 1.0 / 16.0, 1e-15));
        assert!(close(bp.budget, 0.125, 1e-15));
        s.continuous_clinching().unwrap();
        assert!(close(s.allocated[0], 15.0 / 32.0, 1e-15));
        assert!(close(s.allocated[1], 15.0 / 32.0, 1e-15));
        assert_eq!(s.exiting, set(&[1]));
    }

    #[test]
    fn exit_absorbed_by_single_clincher() {
        let inst = SingleItemInstance::new(vec![100.0, 3.0], vec![10.0, 5.0]).unwrap();
        let mut s = AuctionState::new(&inst);
        s.continuous_clinching().unwrap();
        s.continuous_clinching().unwrap();
        let b_before = s.budgets[0];
        s.handle_exiting().unwrap();
        assert!(close(s.allocated[0], 1.0, 1e-12));
        assert!(close(s.budgets[0], b_before - 3.0, 1e-12));
        assert!(close(s.supply, 0.0, 1e-12));
        assert_eq!(s.clinching, set(&[0]));
        assert!(s.exiting.is_empty());
    }

    #[test]
    fn exit_without_gaps_only_clears_exiting() {
        // Three rich agents at price 1 with supply 1; the poor one leaves and the
        // other two still demand 10 units each.
        let inst = SingleItemInstance::new(vec![10.0, 10.0, 0.1], vec![5.0, 4.0, 1.0]).unwrap();
        let mut s = AuctionState::new(&inst);
        s.price = 1.0;
        s.active = set(&[0, 1]);
        s.exiting = set(&[2]);
        s.demand = Demand::Finite(20.0);
        s.handle_exiting().unwrap();
        assert_eq!(s.allocated, vec![0.0, 0.0, 0.0]);
        assert!(s.exiting.is_empty());
        assert!(s.clinching.is_empty());
    }

    #[test]
    fn exit_with_empty_clinching_set_sells_gap() {
        let inst = SingleItemInstance::new(vec![50.0, 1.0], vec![10.0, 2.0]).unwrap();
        let mut s = AuctionState::new(&inst);
        s.price = 2.0;
        s.active = set(&[0]);
        s.exiting = set(&[1]);
        s.demand = Demand::Finite(25.0);
        s.handle_exiting().unwrap();
        assert!(close(s.allocated[0], 1.0, 1e-15));
        assert!(close(s.budgets[0], 48.0, 1e-12));
        assert_eq!(s.supply, 0.0);
    }

    #[test]
    fn final_sale_exact_clearing() {
        let inst = SingleItemInstance::new(vec![2.0, 1.0], vec![10.0, 5.0]).unwrap();
        let mut s = AuctionState::new(&inst);
        s.price = 5.0;
        s.active = set(&[0]);
        s.supply = 0.4;
        s.allocated = vec![0.6, 0.0];
        s.budgets = vec![2.0, 1.0];
        s.demand = Demand::Finite(0.4);
        s.final_sale().unwrap();
        assert!(close(s.allocated[0], 1.0, 1e-15));
        assert_eq!(s.budgets[0], 0.0);
    }

    #[test]
    fn final_sale_with_nothing_left() {
        let inst = SingleItemInstance::new(vec![2.0, 1.0], vec![10.0, 5.0]).unwrap();
        let mut s = AuctionState::new(&inst);
        s.price = 5.0;
        s.active.clear();
        s.exiting = set(&[1]);
        s.supply = 0.0;
        s.allocated = vec![1.0, 0.0];
        s.demand = Demand::Finite(0.0);
        let before = s.clone();
        s.final_sale().unwrap();
        assert_eq!(s.allocated, before.allocated);
        assert_eq!(s.budgets, before.budgets);
    }

    #[test]
    fn final_sale_leftover_goes_to_exiting() {
        let inst = SingleItemInstance::new(vec![1.0, 2.0], vec![10.0, 5.0]).unwrap();
        let mut s = AuctionState::new(&inst);
        s.price = 5.0;
        s.active = set(&[0]);
        s.exiting = set(&[1]);
        s.demand = Demand::Finite(0.2);
        s.final_sale().unwrap();
        assert!(close(s.allocated[0], 0.2, 1e-15));
        assert!(close(s.allocated[1], 0.4, 1e-15));
        assert!(close(s.budgets[1], 0.0, 1e-15));
        assert!(close(s.supply, 0.4, 1e-15));
    }

    #[test]
    fn final_sale_refuses_overdemand() {
        let inst = SingleItemInstance::new(vec![1.0, 2.0], vec![10.0, 5.0]).unwrap();
        let s = AuctionState::new(&inst);
        assert!(matches!(s.clone().final_sale(), Err(AuctionError::Internal(_))));
    }

    #[test]
    fn break_point_needs_clinchers_and_price() {
        let inst = SingleItemInstance::new(vec![1.0, 2.0], vec![10.0, 5.0]).unwrap();
        let mut s = AuctionState::new(&inst);
        assert!(s.next_break_point().is_err());
        s.clinching = set(&[1]);
        assert!(matches!(s.next_break_point(), Err(AuctionError::Internal(_))));
    }

    #[test]
    fn strict_entry_rejects_ties() {
        let inst = SingleItemInstance::reported(vec![1.0, 2.0], vec![5.0, 5.0]).unwrap();
        assert!(matches!(clinching_auction(&inst), Err(AuctionError::InvalidInput(_))));
        let out = run_clinching(&inst).unwrap();
        assert!(close(out.allocation.column_sum(0), 1.0, 1e-12));
    }

    #[test]
    fn zero_valuation_agent_is_skipped() {
        let inst = SingleItemInstance::reported(vec![1.0, 2.0, 3.0], vec![0.0, 5.0, 4.0]).unwrap();
        let out = run_clinching(&inst).unwrap();
        assert_eq!(out.allocation.get(0, 0), 0.0);
        assert_eq!(out.payments[0], 0.0);
        assert!(close(out.allocation.column_sum(0), 1.0, 1e-12));
    }

    #[test]
    fn lone_participant_gets_item_free() {
        let inst = SingleItemInstance::reported(vec![1.0, 2.0], vec![0.0, 5.0]).unwrap();
        let out = run_clinching(&inst).unwrap();
        assert_eq!(out.allocation.get(1, 0), 1.0);
        assert_eq!(out.payments, vec![0.0, 0.0]);
    }

    #[test]
    fn trace_prices_rise_and_mass_is_conserved() {
        let inst = SingleItemInstance::new(vec![0.4, 0.3, 0.9, 0.2], vec![10.0, 5.0, 2.0, 7.0]).unwrap();
        let (_, trace) = clinching_trace(&inst).unwrap();
        for w in trace.windows(2) {
            assert!(w[1].price >= w[0].price);
            assert!(w[1].supply <= w[0].supply + 1e-15);
        }
        for s in &trace {
            assert!(close(s.mass(), 1.0, 1e-9));
            assert!(s.active.is_disjoint(&s.exiting));
            assert!(s.clinching.is_subset(&s.active));
        }
    }
}
