//! Individual rationality, no positive transfers, and the structural sufficient
//! condition for Pareto optimality.

use super::{PropertyReport, Witness};
use crate::error::Result;
use crate::model::{check_dimensions, utility, Outcome, SingleDimInstance, Utility, Valuations};

/// Every agent's utility is at least `-tol` and payments sum to at least `-tol`.
pub fn check_ir<I: Valuations + ?Sized>(instance: &I, outcome: &Outcome, tol: f64) -> Result<PropertyReport> {
    check_dimensions(instance, outcome)?;
    let report = PropertyReport::new("ir").param("tol", tol);
    for agent in 0..instance.num_agents() {
        let u = utility(instance, outcome, agent)?;
        let bad = match u {
            Utility::NegInfinity => true,
            Utility::Finite(x) => x < -tol,
        };
        if bad {
            return Ok(report.violated(Witness::Agent {
                agent,
                utility: u,
                payment: outcome.payments[agent],
                budget: instance.budget(agent),
            }));
        }
    }
    let revenue = outcome.revenue();
    if revenue < -tol {
        return Ok(report.violated(Witness::Auctioneer { revenue }));
    }
    Ok(report)
}

/// Every payment is at least `-tol`.
pub fn check_npt(outcome: &Outcome, tol: f64) -> PropertyReport {
    let report = PropertyReport::new("npt").param("tol", tol);
    match outcome.payments.iter().position(|&p| p < -tol) {
        Some(agent) => report.violated(Witness::NegativePayment { agent, payment: outcome.payments[agent] }),
        None => report,
    }
}

/// (a) every item is fully allocated, and (b) whenever agent `i` holds something,
/// every agent with a strictly higher valuation has spent its budget (within `tol`).
///
/// Sufficient for Pareto optimality, not necessary: a violation only means this
/// certificate is unavailable.
pub fn check_structural_po(instance: &SingleDimInstance, outcome: &Outcome, tol: f64) -> Result<PropertyReport> {
    check_dimensions(instance, outcome)?;
    let report = PropertyReport::new("po_structural").param("tol", tol);
    let alloc = &outcome.allocation;
    for item in 0..instance.num_items() {
        let allocated = alloc.column_sum(item);
        if (allocated - 1.0).abs() > tol {
            return Ok(unproven(report.violated(Witness::UnallocatedItem { item, allocated })));
        }
    }
    let v = instance.valuations();
    let b = instance.budgets();
    for winner in 0..instance.num_agents() {
        if alloc.row(winner).iter().sum::<f64>() <= 0.0 {
            continue;
        }
        for agent in 0..instance.num_agents() {
            let payment = outcome.payments[agent];
            if v[agent] > v[winner] && payment < b[agent] - tol {
                return Ok(unproven(report.violated(Witness::UnspentBudget {
                    winner,
                    agent,
                    payment,
                    budget: b[agent],
                })));
            }
        }
    }
    Ok(report)
}

fn unproven(report: PropertyReport) -> PropertyReport {
    report.with_note("sufficient condition failed; Pareto optimality is not decided")
}

#[cfg(test)]
mod tests {
    use super::super::Verdict;
    use super::*;
    use crate::hetero::run_hetero_divisible;
    use crate::model::Allocation;

    fn outcome(rows: Vec<Vec<f64>>, payments: Vec<f64>) -> Outcome {
        Outcome::new(Allocation::new(rows, true).unwrap(), payments).unwrap()
    }

    fn inst() -> SingleDimInstance {
        SingleDimInstance::new(vec![2.0, 1.0], vec![1.5, 1.0], vec![3.0, 10.0]).unwrap()
    }

    #[test]
    fn ir_examples() {
        let zero = Outcome::empty(2, 2, true);
        assert!(check_ir(&inst(), &zero, 1e-9).unwrap().holds());
        let over = outcome(vec![vec![1.0, 1.0], vec![0.0, 0.0]], vec![4.0, 0.0]);
        let r = check_ir(&inst(), &over, 1e-9).unwrap();
        assert!(matches!(r.witness, Some(Witness::Agent { agent: 0, utility: Utility::NegInfinity, .. })));
        let paid = outcome(vec![vec![0.0, 0.0], vec![0.0, 0.0]], vec![-1.0, -1.0]);
        let r = check_ir(&inst(), &paid, 1e-9).unwrap();
        assert_eq!(r.witness, Some(Witness::Auctioneer { revenue: -2.0 }));
    }

    #[test]
    fn npt_examples() {
        assert!(check_npt(&Outcome::empty(2, 1, true), 1e-9).holds());
        let r = check_npt(&outcome(vec![vec![0.0], vec![0.0]], vec![1.0, -0.5]), 1e-9);
        assert_eq!(r.witness, Some(Witness::NegativePayment { agent: 1, payment: -0.5 }));
    }

    #[test]
    fn structural_po_examples() {
        let i = SingleDimInstance::new(vec![2.0, 1.0], vec![10.0, 5.0], vec![100.0, 3.0]).unwrap();
        let out = run_hetero_divisible(&i).unwrap();
        assert!(check_structural_po(&i, &out, 1e-9).unwrap().holds());

        let partial = outcome(vec![vec![1.0, 0.0], vec![0.0, 0.0]], vec![3.0, 0.0]);
        let r = check_structural_po(&inst(), &partial, 1e-9).unwrap();
        assert_eq!(r.witness, Some(Witness::UnallocatedItem { item: 1, allocated: 0.0 }));
        assert!(r.note.is_some());

        let low_wins = outcome(vec![vec![0.0, 0.0], vec![1.0, 1.0]], vec![0.0, 0.0]);
        let r = check_structural_po(&inst(), &low_wins, 1e-9).unwrap();
        assert_eq!(r.verdict, Verdict::Violated);
        assert_eq!(r.witness, Some(Witness::UnspentBudget { winner: 1, agent: 0, payment: 0.0, budget: 3.0 }));
    }
}
